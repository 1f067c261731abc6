//! Toy classification: fit the lab, then report OOD AUROC for a far shift and
//! a noise sweep, plus the aleatoric calibration curve.
//!
//! cargo run --release --example toy_classification -- [seed]

use luq::metrics::{auroc, calibration_curve, ScoredBinarySet};
use luq::toy::{gen_classification_data, perturb, ClassificationLab, ClassificationLabConfig, Perturbation};

fn main() -> luq::Result<()> {
    let seed = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(0);
    let lab = ClassificationLab::fit(&ClassificationLabConfig::default().with_seed(seed))?;
    let (x, y) = lab.test_data(seed + 1000)?;
    println!("test accuracy {:.4}", lab.accuracy(&x, &y));
    let base = lab.score(&x)?;

    let (far, _) = gen_classification_data(&lab.config.data.shifted(8.0).with_seed(seed + 2000))?;
    let s = lab.score(&far)?;
    println!("far shift auroc {:.4}", auroc(&ScoredBinarySet::from_groups(&s.epistemic, &base.epistemic)?)?);
    for sigma in [0.5, 1.0, 2.0, 4.0] {
        let noisy = perturb(&x, Perturbation::GaussianNoise { sigma }, seed + 3000)?;
        let s = lab.score(&noisy)?;
        println!("noise sigma {sigma}: auroc {:.4}", auroc(&ScoredBinarySet::from_groups(&s.epistemic, &base.epistemic)?)?);
    }

    let correct: Vec<bool> = lab.model.predict_classes(&x).iter().zip(&y).map(|(p, l)| p == l).collect();
    let curve = calibration_curve(&base.aleatoric, &correct, 10.0)?;
    for (p, a) in curve.percentiles.iter().zip(&curve.accuracy) {
        println!("lowest {p:>5.1}% aleatoric: accuracy {a:.4}");
    }
    Ok(())
}
