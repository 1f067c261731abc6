//! Output priors: label counting, uniform, beta prime by moment matching and
//! a histogram fallback.
//!
//! cargo run --release --example priors

use luq::priors::{betaprime_fit_mom, fit_categorical, fit_histogram, OutputPrior};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Gamma};

fn main() -> luq::Result<()> {
    let labels = [0, 0, 0, 1, 1, 2, 0, 1, 0, 0];
    let counted = fit_categorical(&labels, Some(&[0, 1, 2, 3]), 1.0)?;
    for c in 0..4 {
        println!("class {c}: prior {:.3}", counted.log_mass(c)?.exp());
    }

    let uniform = OutputPrior::uniform(-10.0, 10.0)?;
    println!("uniform [-10, 10]: log density {:.6}", uniform.log_density(0.0)?);

    // depth-like positive targets drawn as a ratio of gamma variables
    let (a, b) = (31.76, 3.07);
    let ga = Gamma::new(a, 1.0).unwrap();
    let gb = Gamma::new(b, 1.0).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let samples: Vec<f64> = (0..50_000).map(|_| ga.sample(&mut rng) / gb.sample(&mut rng)).collect();
    let fitted = betaprime_fit_mom(&samples)?;
    println!("beta prime fit from samples of ({a}, {b}): {fitted:?}");
    if let Some((lo, hi)) = fitted.grid_range(1e-6) {
        println!("grid range at tail mass 1e-6: [{lo:.3}, {hi:.3}]");
    }
    for y in [5.0, 15.0, 40.0] {
        println!("  log p({y}) = {:.4}", fitted.log_density(y)?);
    }

    // explicit weights are used as given; an empty bin has zero density
    let hist = OutputPrior::histogram(vec![0.0, 1.0, 2.0, 4.0], &[10.0, 0.0, 30.0])?;
    // fitted histograms add a pseudo-count to every bin
    let fitted_hist = fit_histogram(&[0.2, 0.4, 0.5, 2.5, 3.0, 3.5, 3.9], 4)?;
    for y in [0.5, 1.5, 3.0] {
        println!(
            "log p({y}): explicit histogram {:.4}, fitted histogram {:.4}",
            hist.log_density(y)?,
            fitted_hist.log_density(y)?
        );
    }
    Ok(())
}
