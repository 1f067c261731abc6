//! Posterior over a 1-D output on an equidistant grid and the confidence
//! regions that hold a given share of its mass, for a Gaussian likelihood.
//!
//! cargo run --release --example confidence_region

use luq::engine::{confidence_region, score_regression, ConditionalDensity, SupportGrid};
use luq::priors::OutputPrior;

/// `z | y ~ N(y, σ²)`.
struct Shift {
    sigma: f64,
}

impl ConditionalDensity for Shift {
    fn dim(&self) -> usize {
        1
    }

    fn log_prob_conditions(&self, z: &[f64], ys: &[f64]) -> luq::Result<Vec<f64>> {
        let c = -self.sigma.ln() - 0.5 * (2.0 * std::f64::consts::PI).ln();
        Ok(ys.iter().map(|y| c - 0.5 * ((z[0] - y) / self.sigma).powi(2)).collect())
    }
}

fn main() -> luq::Result<()> {
    let prior = OutputPrior::uniform(-10.0, 10.0)?;
    let grid = SupportGrid::new(-10.0, 10.0, 1000)?;
    for sigma in [0.25, 0.5, 1.0] {
        let s = score_regression(&Shift { sigma }, &prior, &grid, &[1.0])?;
        println!("sigma {sigma}: epistemic {:.4}, aleatoric {:.4}", s.epistemic, s.aleatoric);
        for mass in [0.2, 0.5, 0.9] {
            let r = confidence_region(&s.posterior, 1.0, mass)?;
            println!("  {:>3.0}% region [{:+.3}, {:+.3}]", mass * 100.0, r.lower, r.upper);
        }
    }
    Ok(())
}
