//! Detection and calibration metrics on synthetic scores.
//!
//! cargo run --release --example ood_metrics

use luq::metrics::{
    auroc, average_precision, calibration_curve, fpr_at_tpr, rmse_below_uncertainty, roc_points, ScoredBinarySet,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

fn main() -> luq::Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let inlier = Normal::new(0.0, 1.0).unwrap();
    for shift in [0.0, 1.0, 2.0, 4.0] {
        let outlier = Normal::new(shift, 1.0).unwrap();
        let pos: Vec<f64> = (0..2000).map(|_| outlier.sample(&mut rng)).collect();
        let neg: Vec<f64> = (0..2000).map(|_| inlier.sample(&mut rng)).collect();
        let set = ScoredBinarySet::from_groups(&pos, &neg)?;
        println!(
            "shift {shift}: auroc {:.4}  ap {:.4}  fpr95 {:.4}  roc points {}",
            auroc(&set)?,
            average_precision(&set)?,
            fpr_at_tpr(&set, 0.95)?,
            roc_points(&set)?.len()
        );
    }

    // errors grow with the uncertainty, so low-uncertainty subsets do better
    let u: Vec<f64> = (0..1000).map(|_| rng.random_range(0.0..1.0)).collect();
    let correct: Vec<bool> = u.iter().map(|&v| rng.random_range(0.0..1.0) > 0.5 * v).collect();
    let curve = calibration_curve(&u, &correct, 20.0)?;
    for (p, a) in curve.percentiles.iter().zip(&curve.accuracy) {
        println!("most certain {p:>5.1}%: accuracy {a:.3}");
    }
    let errors: Vec<f64> = u.iter().map(|&v| v * Normal::new(0.0, 1.0).unwrap().sample(&mut rng)).collect();
    let thresholds = [0.25, 0.5, 0.75, 1.0];
    for (t, r) in thresholds.iter().zip(rmse_below_uncertainty(&errors, &u, &thresholds)?) {
        println!("uncertainty <= {t}: rmse {}", r.map_or("n/a".into(), |v| format!("{v:.4}")));
    }
    Ok(())
}
