//! Class-conditional GMMs on three 2-D clusters. Points near a cluster get
//! low epistemic scores, points between clusters get high aleatoric scores,
//! and far-away points get high epistemic scores.
//!
//! cargo run --release --example gmm_scoring

use luq::density::{fit_class_conditional, EmOptions};
use luq::engine::score_classification;
use luq::priors::fit_categorical;
use luq::FeatureMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

fn main() -> luq::Result<()> {
    let centres = [[0.0, 0.0], [4.0, 0.0], [2.0, 3.5]];
    let noise = Normal::new(0.0, 0.7).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut rows = Vec::new();
    let mut labels = Vec::new();
    for i in 0..600 {
        let c = i % 3;
        rows.push([centres[c][0] + noise.sample(&mut rng), centres[c][1] + noise.sample(&mut rng)]);
        labels.push(c as u32);
    }
    let x = FeatureMatrix::from_rows(&rows)?;
    let opts = EmOptions { n_components: 2, ..EmOptions::default() };
    let (model, fits) = fit_class_conditional(&x, &labels, &opts)?;
    for f in &fits {
        println!("class {}: {} rows, {} components, final log-likelihood {:.3}", f.class, f.count, f.n_components, f.final_log_likelihood);
    }
    let prior = fit_categorical(&labels, None, 1.0)?;

    println!("{:>16} {:>10} {:>10}  posterior", "point", "epistemic", "aleatoric");
    for z in [[0.0, 0.0], [4.0, 0.0], [2.0, 0.0], [2.0, 1.2], [10.0, 10.0], [-8.0, 3.0]] {
        let s = score_classification(&model, &prior, &z)?;
        let post: Vec<String> = s.posterior.iter().map(|p| format!("{p:.3}")).collect();
        println!("{:>16} {:>10.3} {:>10.3}  [{}]", format!("({}, {})", z[0], z[1]), s.epistemic, s.aleatoric, post.join(", "));
    }
    Ok(())
}
