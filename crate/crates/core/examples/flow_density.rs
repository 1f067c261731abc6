//! Conditional flow for z | y: trains on z = (y, y²) plus noise and prints the
//! regression scores with the posterior over y for a few latent points.
//!
//! cargo run --release --example flow_density

use luq::density::{flow_train, FlowTrainConfig};
use luq::engine::{confidence_region, score_regression, SupportGrid};
use luq::priors::OutputPrior;
use luq::Matrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

fn main() -> luq::Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let noise = Normal::new(0.0, 0.05).unwrap();
    let n = 2000;
    let ys: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
    let mut z = Vec::with_capacity(2 * n);
    for &y in &ys {
        z.push(y + noise.sample(&mut rng));
        z.push(y * y + noise.sample(&mut rng));
    }
    let z = Matrix::from_vec(n, 2, z)?;
    let c = Matrix::from_vec(n, 1, ys)?;
    let cfg = FlowTrainConfig { max_epochs: 150, batch_size: 256, ..FlowTrainConfig::default() };
    let (flow, log) = flow_train(&z, &c, &cfg)?;
    println!("epochs {}, best epoch {}, best validation nll {:.3}", log.epochs.len() - 1, log.best_epoch, log.best_val_nll);

    let prior = OutputPrior::uniform(-1.5, 1.5)?;
    let grid = SupportGrid::new(-1.5, 1.5, 600)?;
    for point in [[0.5, 0.25], [-0.8, 0.64], [0.0, 0.0], [0.0, 0.8], [3.0, -2.0]] {
        let s = score_regression(&flow, &prior, &grid, &point)?;
        let mean = s.posterior.mean();
        let band = confidence_region(&s.posterior, mean, 0.5)?;
        println!(
            "z=({:+.2}, {:+.2})  epistemic {:>8.3}  aleatoric {:>7.3}  posterior mean {:+.3}  50% region [{:+.3}, {:+.3}]",
            point[0], point[1], s.epistemic, s.aleatoric, mean, band.lower, band.upper
        );
    }
    Ok(())
}
