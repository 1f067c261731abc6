//! Deep-ensemble baseline on the toy classification data: member
//! disagreement (epistemic) and expected entropy (aleatoric) under growing
//! input noise.
//!
//! cargo run --release --example ensemble_baseline

use luq::toy::{
    ensemble_scores, gen_classification_data, perturb, EnsembleModel, Head, MlpTrainConfig, Perturbation, Targets,
    ToyClassificationSpec,
};

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

fn main() -> luq::Result<()> {
    let spec = ToyClassificationSpec::default();
    let (x, y) = gen_classification_data(&spec)?;
    let n_classes = *y.iter().max().unwrap() as usize + 1;
    let cfg = MlpTrainConfig { max_epochs: 300, ..MlpTrainConfig::classification() };
    let (ensemble, logs) = EnsembleModel::train(&x, Targets::Classes(&y), Head::Classification { n_classes }, &cfg, 5)?;
    for (i, log) in logs.iter().enumerate() {
        println!("member {i}: {} epochs, final loss {:.4}", log.losses.len(), log.losses.last().unwrap());
    }
    let (test, _) = gen_classification_data(&spec.with_seed(spec.seed + 1000))?;
    for sigma in [0.0, 0.5, 1.0, 2.0, 4.0] {
        let noisy = perturb(&test, Perturbation::GaussianNoise { sigma }, 7)?;
        let s = ensemble_scores(&ensemble, &noisy)?;
        println!("noise sigma {sigma}: mean epistemic {:.4}, mean aleatoric {:.4}", mean(&s.epistemic), mean(&s.aleatoric));
    }
    let rotated = perturb(&test, Perturbation::Rotate2d { degrees: 45.0 }, 0)?;
    let s = ensemble_scores(&ensemble, &rotated)?;
    println!("rotated 45 degrees: mean epistemic {:.4}", mean(&s.epistemic));
    let (far, _) = gen_classification_data(&spec.shifted(8.0).with_seed(spec.seed + 2000))?;
    let s = ensemble_scores(&ensemble, &far)?;
    println!("shifted by 8: mean epistemic {:.4}", mean(&s.epistemic));
    Ok(())
}
