//! Toy regression with a gap in the training inputs: prints the mean
//! epistemic score inside and outside the gap and the band coverage.
//!
//! cargo run --release --example toy_regression -- [seed]

use std::time::Instant;

use luq::toy::{run_regression, RegressionExperimentConfig};

fn main() -> luq::Result<()> {
    let seed = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(0);
    let start = Instant::now();
    let run = run_regression(&RegressionExperimentConfig::default().with_seed(seed))?;
    let e = &run.eval;
    println!("seed                 {seed}");
    println!("mlp epochs           {}", run.mlp_log.losses.len());
    println!("train rmse           {:.4}", run.train_rmse);
    println!("flow best epoch      {} of {}", run.flow_log.best_epoch, run.flow_log.epochs.len() - 1);
    println!("flow best val nll    {:.3}", run.flow_log.best_val_nll);
    println!("epistemic gap        {:.3}", e.gap_mean_epistemic());
    println!("epistemic train      {:.3}", e.train_mean_epistemic());
    println!("band coverage        {:.3}", e.band_coverage());
    println!("elapsed              {:.1?}", start.elapsed());
    for i in (0..e.x.len()).step_by(25) {
        println!(
            "x={:+.3} f={:+.3} pred={:+.3} band=[{:+.3}, {:+.3}] epi={:.2} ale={:.2}",
            e.x[i], e.f_true[i], e.prediction[i], e.lower[i], e.upper[i], e.epistemic[i], e.aleatoric[i]
        );
    }
    Ok(())
}
