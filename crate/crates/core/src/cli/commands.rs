//! Command implementations behind [`super::execute`].

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use clap::ValueEnum;

use crate::density::{
    fit_class_conditional, flow_train, ClassId, CovarianceMode, EmOptions, FlowTrainConfig,
};
use crate::engine::{score_classification_rows, score_regression_rows, SupportGrid};
use crate::error::Error;
use crate::features::FeatureMatrix;
use crate::io::{read_csv, read_numeric, write_csv, write_matrix, Cell, CsvTable, LatentDensity, LinePlot, ModelFile, RunConfig};
use crate::linalg::{pca_fit, sample_covariance, Matrix};
use crate::metrics::{
    auroc, average_precision, calibration_curve, fpr_at_tpr, percentile, rmse_below_uncertainty, roc_points,
    ScoredBinarySet,
};
use crate::priors::{betaprime_fit_mom, fit_categorical, fit_histogram, OutputPrior};
use crate::toy::{
    perturb, run_regression, ClassificationLab, ClassificationLabConfig, Perturbation, RegressionExperimentConfig,
};

use super::{
    pick, pick_opt, require, CliError, CliResult, CovarianceArg, EvalArgs, EvalMode, FitArgs, ModelKind, PcaArgs,
    ScoreArgs, ToyArgs, ToyKind,
};

const DEFAULT_GRID: usize = 1000;
const GRID_TAIL: f64 = 1e-6;

/// Prior requested on the command line.
#[derive(Debug, Clone, Copy, PartialEq)]
enum PriorSpec {
    Counts,
    Uniform(f64, f64),
    BetaPrimeFit,
    BetaPrime(f64, f64),
    Histogram(usize),
}

impl FromStr for PriorSpec {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let parts: Vec<&str> = s.trim().split(':').collect();
        let num = |p: &str| p.parse::<f64>().map_err(|_| format!("bad number `{p}` in prior `{s}`"));
        match parts.as_slice() {
            ["counts"] => Ok(Self::Counts),
            ["uniform", lo, hi] => Ok(Self::Uniform(num(lo)?, num(hi)?)),
            ["betaprime"] => Ok(Self::BetaPrimeFit),
            ["betaprime", a, b] => Ok(Self::BetaPrime(num(a)?, num(b)?)),
            ["histogram", bins] => bins
                .parse()
                .map(Self::Histogram)
                .map_err(|_| format!("bad bin count in prior `{s}`")),
            _ => Err(format!(
                "unknown prior `{s}`; expected counts, uniform:LO:HI, betaprime, betaprime:A:B or histogram:BINS"
            )),
        }
    }
}

impl PriorSpec {
    /// A prior that needs no data.
    fn fixed(self) -> CliResult<OutputPrior> {
        match self {
            Self::Uniform(lo, hi) => OutputPrior::uniform(lo, hi).map_err(usage),
            Self::BetaPrime(a, b) => OutputPrior::beta_prime(a, b).map_err(usage),
            other => Err(CliError::Usage(format!("prior {other:?} must be fitted to predictions"))),
        }
    }

    fn fit_values(self, values: &[f64]) -> CliResult<OutputPrior> {
        match self {
            Self::Counts => Err(CliError::Usage("the counts prior applies to class predictions (gmm)".into())),
            Self::BetaPrimeFit => Ok(betaprime_fit_mom(values)?),
            Self::Histogram(bins) => Ok(fit_histogram(values, bins)?),
            fixed => fixed.fixed(),
        }
    }
}

fn usage(e: impl std::fmt::Display) -> CliError {
    CliError::Usage(e.to_string())
}

fn data(path: &Path, message: impl std::fmt::Display) -> CliError {
    CliError::Data(format!("{}: {message}", path.display()))
}

fn io_context(path: &Path) -> impl Fn(Error) -> CliError + '_ {
    move |e| match e {
        Error::Io(io) => data(path, io),
        other => CliError::from(other),
    }
}

/// Enum flag with a config fallback.
fn enum_opt<T: ValueEnum>(cli: Option<T>, cfg: &RunConfig, key: &str) -> CliResult<Option<T>> {
    match cli {
        Some(v) => Ok(Some(v)),
        None => cfg
            .get_str(key)
            .map(|s| T::from_str(s, true).map_err(|_| CliError::Usage(format!("invalid {key} `{s}`"))))
            .transpose(),
    }
}

fn parse_option<T: FromStr>(raw: Option<String>, key: &str) -> CliResult<Option<T>> {
    raw.map(|s| s.parse::<T>().map_err(|_| CliError::Usage(format!("invalid --{key} `{s}`"))))
        .transpose()
}

fn parse_range(s: &str, key: &str) -> CliResult<(f64, f64)> {
    let bad = || CliError::Usage(format!("--{key} expects LO:HI, got `{s}`"));
    let (lo, hi) = s.split_once(':').ok_or_else(bad)?;
    Ok((lo.trim().parse().map_err(|_| bad())?, hi.trim().parse().map_err(|_| bad())?))
}

fn load_matrix(path: &Path) -> CliResult<Matrix> {
    read_numeric(path).map_err(io_context(path))
}

fn load_features(path: &Path) -> CliResult<FeatureMatrix> {
    let m = load_matrix(path)?;
    if m.rows() == 0 {
        return Err(data(path, "no rows"));
    }
    if let Some(pos) = m.data().iter().position(|v| !v.is_finite()) {
        let cols = m.cols().max(1);
        return Err(data(path, format!("row {}: column {} is not finite", pos / cols, pos % cols)));
    }
    Ok(FeatureMatrix::new(m)?.with_source(path.display().to_string()))
}

/// One value per row; a single-column matrix or CSV.
fn load_column(path: &Path, rows: usize) -> CliResult<Vec<f64>> {
    let m = load_matrix(path)?;
    if m.cols() != 1 {
        return Err(data(path, format!("expected one column, found {}", m.cols())));
    }
    if m.rows() != rows {
        return Err(data(path, format!("{} rows, but the features have {rows}", m.rows())));
    }
    if let Some(i) = m.data().iter().position(|v| !v.is_finite()) {
        return Err(data(path, format!("row {i}: value is not finite")));
    }
    Ok(m.into_data())
}

fn to_class_ids(values: &[f64], path: &Path) -> CliResult<Vec<ClassId>> {
    values
        .iter()
        .enumerate()
        .map(|(i, &v)| {
            if v >= 0.0 && v <= ClassId::MAX as f64 && v.fract() == 0.0 {
                Ok(v as ClassId)
            } else {
                Err(data(path, format!("row {i}: `{v}` is not a class id")))
            }
        })
        .collect()
}

fn create_dir(dir: &Path) -> CliResult<()> {
    fs::create_dir_all(dir).map_err(|e| data(dir, format!("cannot create output directory: {e}")))
}

fn write_table(path: &Path, header: &[&str], rows: &[Vec<Cell>]) -> CliResult<()> {
    write_csv(path, header, rows).map_err(io_context(path))
}

fn write_text(path: &Path, text: &str) -> CliResult<()> {
    fs::write(path, text).map_err(|e| data(path, e))
}

/// Writes the table to `path`, or to `out` when no path is given.
fn emit_table(path: Option<&Path>, header: &[&str], rows: &[Vec<Cell>], out: &mut dyn Write) -> CliResult<()> {
    match path {
        Some(p) => write_table(p, header, rows),
        None => out
            .write_all(crate::io::csv_string(header, rows).as_bytes())
            .map_err(|e| CliError::Data(format!("cannot write output: {e}"))),
    }
}

fn say(out: &mut dyn Write, key: &str, value: impl std::fmt::Display) -> CliResult<()> {
    writeln!(out, "{key}={value}").map_err(|e| CliError::Data(format!("cannot write output: {e}")))
}

pub fn fit(a: &FitArgs, cfg: &RunConfig, out: &mut dyn Write) -> CliResult<()> {
    let features_path: PathBuf = require(a.features.clone(), cfg, "features")?;
    let preds_path: PathBuf = require(a.predictions.clone(), cfg, "predictions")?;
    let kind: ModelKind = enum_opt(a.model, cfg, "model")?.ok_or_else(|| CliError::Usage("missing --model".into()))?;
    let out_path: PathBuf = require(a.out.clone(), cfg, "out")?;
    let seed = pick(a.seed, cfg, "seed", 0u64)?;
    let pca_dim: Option<usize> = pick_opt(a.pca, cfg, "pca")?;
    let whiten = a.whiten || pick(None, cfg, "whiten", false)?;
    let prior_spec: Option<PriorSpec> = parse_option(pick_opt(a.prior.clone(), cfg, "prior")?, "prior")?;

    let raw = load_features(&features_path)?;
    let preds = load_column(&preds_path, raw.rows())?;
    let pca = match pca_dim {
        Some(k) => Some(pca_fit(&raw, k, whiten)?),
        None => None,
    };
    let z = match &pca {
        Some(p) => p.transform(&raw)?,
        None => raw.clone(),
    };

    say(out, "model", format!("{kind:?}").to_lowercase())?;
    say(out, "rows", z.rows())?;
    say(out, "input_dim", raw.cols())?;
    say(out, "latent_dim", z.cols())?;

    let (density, prior) = match kind {
        ModelKind::Gmm => {
            let labels = to_class_ids(&preds, &preds_path)?;
            let covariance = enum_opt(a.covariance, cfg, "covariance")?.unwrap_or(CovarianceArg::Full);
            let defaults = EmOptions::default();
            let opts = EmOptions {
                n_components: pick(a.components, cfg, "components", 1)?,
                max_iter: pick(a.max_iter, cfg, "max_iter", defaults.max_iter)?,
                tol: pick(a.tol, cfg, "tol", defaults.tol)?,
                cov_reg: pick(a.cov_reg, cfg, "cov_reg", defaults.cov_reg)?,
                covariance_mode: match covariance {
                    CovarianceArg::Full => CovarianceMode::FullPerComponent,
                    CovarianceArg::Tied => CovarianceMode::TiedAcrossComponents,
                },
                seed,
            };
            let (gmms, summary) = fit_class_conditional(&z, &labels, &opts).map_err(|e| match e {
                Error::ClassTooSmall { .. } => data(&preds_path, e),
                other => CliError::from(other),
            })?;
            let prior = match prior_spec.unwrap_or(PriorSpec::Counts) {
                PriorSpec::Counts => fit_categorical(&labels, Some(&gmms.classes()), 1.0)?,
                other => return Err(CliError::Usage(format!("prior {other:?} does not apply to class predictions"))),
            };
            for s in &summary {
                say(out, &format!("class.{}.count", s.class), s.count)?;
                say(out, &format!("class.{}.components", s.class), s.n_components)?;
                say(out, &format!("class.{}.final_nll", s.class), -s.final_log_likelihood)?;
            }
            (LatentDensity::ClassGmms(gmms), prior)
        }
        ModelKind::Flow => {
            let defaults = FlowTrainConfig::default();
            let mut tc = FlowTrainConfig {
                learning_rate: pick(a.learning_rate, cfg, "learning_rate", defaults.learning_rate)?,
                weight_decay: pick(a.weight_decay, cfg, "weight_decay", defaults.weight_decay)?,
                batch_size: pick(a.batch_size, cfg, "batch_size", defaults.batch_size)?,
                max_epochs: pick(a.epochs, cfg, "epochs", defaults.max_epochs)?,
                patience: pick(a.patience, cfg, "patience", defaults.patience)?,
                seed,
                ..defaults
            };
            tc.arch.hidden = pick(a.hidden, cfg, "hidden", tc.arch.hidden)?;
            tc.arch.n_layers = pick(a.flow_layers, cfg, "flow_layers", tc.arch.n_layers)?;
            let prior = prior_spec
                .unwrap_or(PriorSpec::Uniform(-10.0, 10.0))
                .fit_values(&preds)?;
            let cond = Matrix::from_vec(preds.len(), 1, preds)?;
            let (flow, log) = flow_train(z.matrix(), &cond, &tc)?;
            say(out, "epochs_run", log.epochs.len().saturating_sub(1))?;
            say(out, "max_epochs", tc.max_epochs)?;
            say(out, "best_epoch", log.best_epoch)?;
            say(out, "best_val_nll", log.best_val_nll)?;
            say(out, "stopped_early", log.stopped_early)?;
            (LatentDensity::Flow(flow), prior)
        }
    };
    let model = ModelFile::new(pca, density, prior)?;
    model.save(&out_path).map_err(io_context(&out_path))?;
    say(out, "out", out_path.display())
}

pub fn score(a: &ScoreArgs, cfg: &RunConfig, out: &mut dyn Write) -> CliResult<()> {
    let model_path: PathBuf = require(a.model.clone(), cfg, "model")?;
    let features_path: PathBuf = require(a.features.clone(), cfg, "features")?;
    let out_path: Option<PathBuf> = pick_opt(a.out.clone(), cfg, "out")?;
    let grid_points = pick(a.grid, cfg, "grid", DEFAULT_GRID)?;

    let model = ModelFile::load(&model_path).map_err(io_context(&model_path))?;
    let raw = load_features(&features_path)?;
    if raw.cols() != model.input_dim() {
        return Err(data(
            &features_path,
            format!("features have {} columns but the model expects {}", raw.cols(), model.input_dim()),
        ));
    }
    let z = match &model.pca {
        Some(p) => p.transform(&raw)?,
        None => raw,
    };
    let (epistemic, aleatoric) = match &model.density {
        LatentDensity::ClassGmms(d) => {
            let s = score_classification_rows(d, &model.prior, z.matrix(), false)?;
            (s.epistemic, s.aleatoric)
        }
        LatentDensity::Flow(f) => {
            let (lo, hi) = model.prior.grid_range(GRID_TAIL).ok_or_else(|| {
                CliError::Data(format!("{}: prior has no bounded grid range", model_path.display()))
            })?;
            let grid = SupportGrid::new(lo, hi, grid_points).map_err(usage)?;
            let s = score_regression_rows(f, &model.prior, &grid, z.matrix())?;
            s.iter().map(|r| (r.epistemic, r.aleatoric)).unzip()
        }
    };
    let rows: Vec<Vec<Cell>> = epistemic
        .iter()
        .zip(&aleatoric)
        .enumerate()
        .map(|(i, (&e, &al))| vec![i.into(), e.into(), al.into()])
        .collect();
    emit_table(out_path.as_deref(), &["index", "epistemic_nats", "aleatoric_nats"], &rows, out)?;
    if let Some(p) = out_path {
        say(out, "rows", rows.len())?;
        say(out, "out", p.display())?;
    }
    Ok(())
}

fn table_column(t: &CsvTable, name: &str, path: &Path) -> CliResult<Vec<f64>> {
    t.column(name)
        .ok_or_else(|| data(path, format!("missing column `{name}`")))
}

fn finite_column(t: &CsvTable, name: &str, path: &Path) -> CliResult<Vec<f64>> {
    let v = table_column(t, name, path)?;
    match v.iter().position(|x| !x.is_finite()) {
        Some(i) => Err(data(path, format!("row {i}: column `{name}` is not finite"))),
        None => Ok(v),
    }
}

fn load_table(path: &Path) -> CliResult<CsvTable> {
    let t = read_csv(path).map_err(io_context(path))?;
    if t.rows.is_empty() {
        return Err(data(path, "no rows"));
    }
    Ok(t)
}

fn render_plot(path: &Path, plot: LinePlot) -> CliResult<()> {
    write_text(path, &plot.render())
}

pub fn eval(a: &EvalArgs, cfg: &RunConfig, out: &mut dyn Write) -> CliResult<()> {
    let mode: EvalMode = enum_opt(a.mode, cfg, "mode")?.ok_or_else(|| CliError::Usage("missing --mode".into()))?;
    let input: PathBuf = require(a.input.clone(), cfg, "input")?;
    let out_path: Option<PathBuf> = pick_opt(a.out.clone(), cfg, "out")?;
    let plot: Option<PathBuf> = pick_opt(a.plot.clone(), cfg, "plot")?;
    let default_column = if mode == EvalMode::Ood { "epistemic_nats" } else { "aleatoric_nats" };
    let column: String = pick(a.column.clone(), cfg, "column", default_column.to_string())?;
    let table = load_table(&input)?;

    match mode {
        EvalMode::Ood => {
            let shifted: PathBuf = require(a.shifted.clone(), cfg, "shifted")?;
            let tpr = pick(a.tpr, cfg, "tpr", 0.95)?;
            if !(tpr > 0.0 && tpr <= 1.0) {
                return Err(CliError::Usage(format!("--tpr must lie in (0, 1], got {tpr}")));
            }
            let neg = finite_column(&table, &column, &input)?;
            let pos = finite_column(&load_table(&shifted)?, &column, &shifted)?;
            let set = ScoredBinarySet::from_groups(&pos, &neg)?;
            let fpr_name = if tpr == 0.95 { "fpr95".to_string() } else { format!("fpr_at_tpr_{tpr}") };
            let metrics = [
                ("auroc", auroc(&set)?),
                ("ap", average_precision(&set)?),
                (fpr_name.as_str(), fpr_at_tpr(&set, tpr)?),
            ];
            let rows: Vec<Vec<Cell>> = metrics.iter().map(|(k, v)| vec![(*k).into(), (*v).into()]).collect();
            emit_table(out_path.as_deref(), &["metric", "value"], &rows, out)?;
            if out_path.is_some() {
                for (k, v) in &metrics {
                    say(out, k, v)?;
                }
            }
            if let Some(plot) = plot {
                let roc = roc_points(&set)?;
                let roc_path = plot.with_extension("csv");
                let rows: Vec<Vec<Cell>> = roc.iter().map(|&(f, t)| vec![f.into(), t.into()]).collect();
                write_table(&roc_path, &["fpr", "tpr"], &rows)?;
                let (f, t): (Vec<f64>, Vec<f64>) = roc.into_iter().unzip();
                render_plot(
                    &plot,
                    LinePlot::new("ROC", "false positive rate", "true positive rate").line(&column, &f, &t, "#1f77b4"),
                )?;
            }
        }
        EvalMode::Calibration => {
            let correct_col: String = pick(a.correct_column.clone(), cfg, "correct_column", "correct".to_string())?;
            let step = pick(a.step, cfg, "step", 10.0)?;
            let unc = finite_column(&table, &column, &input)?;
            let correct = table_column(&table, &correct_col, &input)?
                .iter()
                .enumerate()
                .map(|(i, &v)| match v {
                    1.0 => Ok(true),
                    0.0 => Ok(false),
                    _ => Err(data(&input, format!("row {i}: `{correct_col}` must be 0 or 1, got {v}"))),
                })
                .collect::<CliResult<Vec<bool>>>()?;
            let curve = calibration_curve(&unc, &correct, step).map_err(|e| match e {
                Error::InvalidArgument(m) => CliError::Usage(m),
                other => CliError::from(other),
            })?;
            let rows: Vec<Vec<Cell>> = (0..curve.percentiles.len())
                .map(|i| {
                    vec![
                        curve.percentiles[i].into(),
                        curve.thresholds[i].into(),
                        curve.accuracy[i].into(),
                        curve.counts[i].into(),
                    ]
                })
                .collect();
            emit_table(out_path.as_deref(), &["percentile", "threshold", "accuracy", "count"], &rows, out)?;
            if let Some(plot) = plot {
                render_plot(
                    &plot,
                    LinePlot::new("Calibration", "uncertainty percentile", "accuracy").line(
                        "accuracy",
                        &curve.percentiles,
                        &curve.accuracy,
                        "#1f77b4",
                    ),
                )?;
            }
        }
        EvalMode::Rmse => {
            let error_col: String = pick(a.error_column.clone(), cfg, "error_column", "error".to_string())?;
            let unc = finite_column(&table, &column, &input)?;
            let errors = finite_column(&table, &error_col, &input)?;
            let thresholds: Vec<f64> = match pick_opt::<String>(a.thresholds.clone(), cfg, "thresholds")? {
                Some(list) => list
                    .split(',')
                    .map(|s| s.trim().parse().map_err(|_| CliError::Usage(format!("bad threshold `{s}`"))))
                    .collect::<CliResult<_>>()?,
                None => {
                    let step = pick(a.step, cfg, "step", 10.0)?;
                    if !(step > 0.0 && step <= 100.0) {
                        return Err(CliError::Usage(format!("--step must lie in (0, 100], got {step}")));
                    }
                    let mut sorted = unc.clone();
                    sorted.sort_by(f64::total_cmp);
                    let n = (100.0 / step).ceil() as usize;
                    (1..=n).map(|k| percentile(&sorted, (k as f64 * step).min(100.0))).collect()
                }
            };
            let rmse = rmse_below_uncertainty(&errors, &unc, &thresholds)?;
            let rows: Vec<Vec<Cell>> = thresholds
                .iter()
                .zip(&rmse)
                .map(|(&t, r)| {
                    let count = unc.iter().filter(|&&u| u <= t).count();
                    vec![t.into(), count.into(), r.unwrap_or(f64::NAN).into()]
                })
                .collect();
            emit_table(out_path.as_deref(), &["threshold", "count", "rmse"], &rows, out)?;
            if let Some(plot) = plot {
                let (t, r): (Vec<f64>, Vec<f64>) = thresholds
                    .iter()
                    .zip(&rmse)
                    .filter_map(|(&t, r)| r.map(|r| (t, r)))
                    .unzip();
                render_plot(
                    &plot,
                    LinePlot::new("RMSE below uncertainty", "uncertainty threshold", "RMSE").line("rmse", &t, &r, "#1f77b4"),
                )?;
            }
        }
    }
    Ok(())
}

pub fn toy(a: &ToyArgs, cfg: &RunConfig, out: &mut dyn Write) -> CliResult<()> {
    let dir: PathBuf = require(a.out.clone(), cfg, "out")?;
    let seed = pick(a.seed, cfg, "seed", 0u64)?;
    match a.kind {
        ToyKind::Regression => toy_regression(a, cfg, seed, &dir, out),
        ToyKind::Classification => toy_classification(a, cfg, seed, &dir, out),
    }
}

fn toy_regression(a: &ToyArgs, cfg: &RunConfig, seed: u64, dir: &Path, out: &mut dyn Write) -> CliResult<()> {
    let mut rc = RegressionExperimentConfig::default().with_seed(seed);
    rc.mass = pick(a.mass, cfg, "mass", rc.mass)?;
    if !(rc.mass > 0.0 && rc.mass < 1.0) {
        return Err(CliError::Usage(format!("--mass must lie in (0, 1), got {}", rc.mass)));
    }
    rc.grid_points = pick(a.grid, cfg, "grid", rc.grid_points)?;
    rc.eval_points = pick(a.eval_points, cfg, "eval_points", rc.eval_points)?;
    rc.data.n_train = pick(a.n_train, cfg, "n_train", rc.data.n_train)?;
    rc.data.noise_sigma = pick(a.noise, cfg, "noise", rc.data.noise_sigma)?;
    rc.mlp.max_epochs = pick(a.epochs, cfg, "epochs", rc.mlp.max_epochs)?;
    rc.pca_dim = pick_opt(a.pca, cfg, "pca")?;
    if let Some(g) = pick_opt::<String>(a.gap.clone(), cfg, "gap")? {
        rc.data.gap = parse_range(&g, "gap")?;
    }
    if let Some(p) = parse_option::<PriorSpec>(pick_opt(a.prior.clone(), cfg, "prior")?, "prior")? {
        rc.prior = p.fixed()?;
    }
    rc.data.validate().map_err(usage)?;
    rc.grid().map_err(usage)?;

    create_dir(dir)?;
    let run = run_regression(&rc)?;
    let ev = &run.eval;

    let train: Vec<Vec<Cell>> = (0..run.y_train.len())
        .map(|i| vec![run.x_train.row(i)[0].into(), run.y_train[i].into()])
        .collect();
    write_table(&dir.join("train.csv"), &["x", "y"], &train)?;
    write_mlp_log(dir, &run.mlp_log.losses)?;
    let latents_path = dir.join("latents.luq");
    write_matrix(&latents_path, run.latents.matrix()).map_err(io_context(&latents_path))?;
    let flow_rows: Vec<Vec<Cell>> = run
        .flow_log
        .epochs
        .iter()
        .map(|r| vec![r.epoch.into(), r.train_nll.into(), r.val_nll.into()])
        .collect();
    write_table(&dir.join("flow_log.csv"), &["epoch", "train_nll", "val_nll"], &flow_rows)?;
    let model_path = dir.join("model.luqm");
    ModelFile::new(run.pca.clone(), LatentDensity::Flow(run.flow.clone()), rc.prior.clone())?
        .save(&model_path)
        .map_err(io_context(&model_path))?;

    let scores: Vec<Vec<Cell>> = (0..ev.x.len())
        .map(|i| {
            vec![
                i.into(),
                ev.x[i].into(),
                ev.f_true[i].into(),
                ev.prediction[i].into(),
                ev.epistemic[i].into(),
                ev.aleatoric[i].into(),
                ev.lower[i].into(),
                ev.upper[i].into(),
                (ev.in_gap[i] as usize).into(),
            ]
        })
        .collect();
    write_table(
        &dir.join("scores.csv"),
        &["index", "x", "f_true", "prediction", "epistemic_nats", "aleatoric_nats", "lower", "upper", "in_gap"],
        &scores,
    )?;

    let metrics = [
        ("train_rmse", run.train_rmse),
        ("gap_mean_epistemic", ev.gap_mean_epistemic()),
        ("train_mean_epistemic", ev.train_mean_epistemic()),
        ("band_coverage", ev.band_coverage()),
        ("mass", rc.mass),
        ("mlp_epochs", run.mlp_log.losses.len() as f64),
        ("flow_best_epoch", run.flow_log.best_epoch as f64),
        ("flow_best_val_nll", run.flow_log.best_val_nll),
    ];
    write_metrics(dir, &metrics)?;

    let (g0, g1) = rc.data.gap;
    render_plot(
        &dir.join("regression.svg"),
        LinePlot::new("Prediction and confidence band", "x", "y")
            .span(g0, g1)
            .band(&format!("{:.0}% band", rc.mass * 100.0), &ev.x, &ev.lower, &ev.upper, "#9ecae1")
            .line("f(x)", &ev.x, &ev.f_true, "#333333")
            .line("prediction", &ev.x, &ev.prediction, "#d62728"),
    )?;
    render_plot(
        &dir.join("epistemic.svg"),
        LinePlot::new("Epistemic uncertainty", "x", "nats")
            .span(g0, g1)
            .line("epistemic", &ev.x, &ev.epistemic, "#1f77b4"),
    )?;

    for (k, v) in &metrics {
        say(out, k, v)?;
    }
    say(out, "out", dir.display())
}

fn write_mlp_log(dir: &Path, losses: &[f64]) -> CliResult<()> {
    let rows: Vec<Vec<Cell>> = losses.iter().enumerate().map(|(e, &l)| vec![e.into(), l.into()]).collect();
    write_table(&dir.join("mlp_loss.csv"), &["epoch", "loss"], &rows)
}

fn write_metrics(dir: &Path, metrics: &[(&str, f64)]) -> CliResult<()> {
    let rows: Vec<Vec<Cell>> = metrics.iter().map(|(k, v)| vec![(*k).into(), (*v).into()]).collect();
    write_table(&dir.join("metrics.csv"), &["metric", "value"], &rows)
}

fn toy_classification(a: &ToyArgs, cfg: &RunConfig, seed: u64, dir: &Path, out: &mut dyn Write) -> CliResult<()> {
    let mut lc = ClassificationLabConfig::default().with_seed(seed);
    lc.data.sigma = pick(a.sigma, cfg, "sigma", lc.data.sigma)?;
    lc.data.n_per_class = pick(a.n_train, cfg, "n_train", lc.data.n_per_class)?;
    lc.mlp.max_epochs = pick(a.epochs, cfg, "epochs", lc.mlp.max_epochs)?;
    lc.em.n_components = pick(a.components, cfg, "components", lc.em.n_components)?;
    let shift = pick(a.shift, cfg, "shift", 8.0)?;
    let noise: Option<f64> = pick_opt(a.noise, cfg, "noise")?;
    let step = 10.0;

    create_dir(dir)?;
    let lab = ClassificationLab::fit(&lc)?;

    let train: Vec<Vec<Cell>> = (0..lab.y_train.len())
        .map(|i| {
            let r = lab.x_train.row(i);
            vec![r[0].into(), r[1].into(), (lab.y_train[i] as usize).into()]
        })
        .collect();
    write_table(&dir.join("train.csv"), &["x0", "x1", "label"], &train)?;
    write_mlp_log(dir, &lab.mlp_log.losses)?;
    let latents_path = dir.join("latents.luq");
    write_matrix(&latents_path, lab.latents(&lab.x_train)?.matrix()).map_err(io_context(&latents_path))?;
    let predicted = lab.model.predict_classes(&lab.x_train);
    let pred_rows: Vec<Vec<Cell>> = predicted.iter().map(|&c| vec![(c as usize).into()]).collect();
    write_table(&dir.join("predictions.csv"), &["prediction"], &pred_rows)?;
    let model_path = dir.join("model.luqm");
    ModelFile::new(None, LatentDensity::ClassGmms(lab.density.clone()), lab.prior.clone())?
        .save(&model_path)
        .map_err(io_context(&model_path))?;

    let (x_test, y_test) = lab.test_data(seed.wrapping_add(1000))?;
    let test_scores = score_set(&lab, dir, "scores_test.csv", &x_test, &y_test)?;
    let (x_shift, y_shift) = crate::toy::gen_classification_data(&lc.data.shifted(shift).with_seed(seed.wrapping_add(2000)))?;
    let shift_scores = score_set(&lab, dir, "scores_shifted.csv", &x_shift, &y_shift)?;

    let set = ScoredBinarySet::from_groups(&shift_scores.0, &test_scores.0)?;
    let mut metrics = vec![
        ("train_accuracy", lab.accuracy(&lab.x_train, &lab.y_train)),
        ("test_accuracy", lab.accuracy(&x_test, &y_test)),
        ("shifted_auroc", auroc(&set)?),
        ("shifted_ap", average_precision(&set)?),
        ("shifted_fpr95", fpr_at_tpr(&set, 0.95)?),
    ];
    if let Some(sigma) = noise {
        let x_noisy = perturb(&x_test, Perturbation::GaussianNoise { sigma }, seed.wrapping_add(3000))?;
        let noisy = score_set(&lab, dir, "scores_noisy.csv", &x_noisy, &y_test)?;
        let set = ScoredBinarySet::from_groups(&noisy.0, &test_scores.0)?;
        metrics.push(("noisy_auroc", auroc(&set)?));
        metrics.push(("noisy_ap", average_precision(&set)?));
        metrics.push(("noisy_fpr95", fpr_at_tpr(&set, 0.95)?));
    }
    write_metrics(dir, &metrics)?;

    let curve = calibration_curve(&test_scores.1, &test_scores.2, step)?;
    let rows: Vec<Vec<Cell>> = (0..curve.percentiles.len())
        .map(|i| {
            vec![
                curve.percentiles[i].into(),
                curve.thresholds[i].into(),
                curve.accuracy[i].into(),
                curve.counts[i].into(),
            ]
        })
        .collect();
    write_table(&dir.join("calibration.csv"), &["percentile", "threshold", "accuracy", "count"], &rows)?;
    render_plot(
        &dir.join("calibration.svg"),
        LinePlot::new("Accuracy below aleatoric percentile", "percentile", "accuracy").line(
            "accuracy",
            &curve.percentiles,
            &curve.accuracy,
            "#1f77b4",
        ),
    )?;
    let roc = roc_points(&set)?;
    let roc_rows: Vec<Vec<Cell>> = roc.iter().map(|&(f, t)| vec![f.into(), t.into()]).collect();
    write_table(&dir.join("roc_shifted.csv"), &["fpr", "tpr"], &roc_rows)?;
    let (f, t): (Vec<f64>, Vec<f64>) = roc.into_iter().unzip();
    render_plot(
        &dir.join("roc_shifted.svg"),
        LinePlot::new("Shifted vs test, epistemic", "false positive rate", "true positive rate")
            .line("epistemic", &f, &t, "#1f77b4"),
    )?;

    for (k, v) in &metrics {
        say(out, k, v)?;
    }
    say(out, "out", dir.display())
}

/// Scores `x`, writes the per-sample table and returns
/// (epistemic, aleatoric, correct).
fn score_set(
    lab: &ClassificationLab,
    dir: &Path,
    name: &str,
    x: &Matrix,
    labels: &[ClassId],
) -> CliResult<(Vec<f64>, Vec<f64>, Vec<bool>)> {
    let s = lab.score(x)?;
    let pred = lab.model.predict_classes(x);
    let correct: Vec<bool> = pred.iter().zip(labels).map(|(p, l)| p == l).collect();
    let rows: Vec<Vec<Cell>> = (0..labels.len())
        .map(|i| {
            vec![
                i.into(),
                s.epistemic[i].into(),
                s.aleatoric[i].into(),
                (pred[i] as usize).into(),
                (labels[i] as usize).into(),
                (correct[i] as usize).into(),
            ]
        })
        .collect();
    write_table(
        &dir.join(name),
        &["index", "epistemic_nats", "aleatoric_nats", "prediction", "label", "correct"],
        &rows,
    )?;
    Ok((s.epistemic, s.aleatoric, correct))
}

pub fn pca(a: &PcaArgs, cfg: &RunConfig, out: &mut dyn Write) -> CliResult<()> {
    let features_path: PathBuf = require(a.features.clone(), cfg, "features")?;
    let k: usize = require(a.pca, cfg, "pca")?;
    let out_path: PathBuf = require(a.out.clone(), cfg, "out")?;
    let eig_path: Option<PathBuf> = pick_opt(a.eigenvalues.clone(), cfg, "eigenvalues")?;
    let whiten = a.whiten || pick(None, cfg, "whiten", false)?;

    let x = load_features(&features_path)?;
    let model = pca_fit(&x, k, whiten).map_err(|e| match e {
        Error::InvalidArgument(m) => CliError::Usage(m),
        other => CliError::from(other),
    })?;
    let reduced = model.transform(&x)?;
    write_matrix(&out_path, reduced.matrix()).map_err(io_context(&out_path))?;

    let n = x.rows() as f64;
    let mean: Vec<f64> = x.matrix().column_sums().iter().map(|s| s / n).collect();
    let cov = sample_covariance(x.matrix(), &mean);
    let total: f64 = (0..cov.rows()).map(|i| cov.row(i)[i]).sum();
    let kept: f64 = model.eigenvalues.iter().sum();

    if let Some(p) = &eig_path {
        let rows: Vec<Vec<Cell>> = model
            .eigenvalues
            .iter()
            .enumerate()
            .map(|(i, &v)| vec![i.into(), v.into()])
            .collect();
        write_table(p, &["index", "eigenvalue"], &rows)?;
    }
    say(out, "rows", x.rows())?;
    say(out, "input_dim", x.cols())?;
    say(out, "out_dim", model.out_dim())?;
    say(out, "explained_variance", if total > 0.0 { kept / total } else { 0.0 })?;
    say(out, "out", out_path.display())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn prior_specs_parse() {
        assert_eq!("counts".parse::<PriorSpec>().unwrap(), PriorSpec::Counts);
        assert_eq!("uniform:-10:10".parse::<PriorSpec>().unwrap(), PriorSpec::Uniform(-10.0, 10.0));
        assert_eq!("betaprime".parse::<PriorSpec>().unwrap(), PriorSpec::BetaPrimeFit);
        assert_eq!("betaprime:2:3".parse::<PriorSpec>().unwrap(), PriorSpec::BetaPrime(2.0, 3.0));
        assert_eq!("histogram:20".parse::<PriorSpec>().unwrap(), PriorSpec::Histogram(20));
        assert!("uniform:a:1".parse::<PriorSpec>().is_err());
        assert!("gamma".parse::<PriorSpec>().is_err());
    }

    #[test]
    fn class_ids_must_be_integers() {
        let p = Path::new("p.csv");
        assert_eq!(to_class_ids(&[0.0, 3.0], p).unwrap(), vec![0, 3]);
        let err = to_class_ids(&[0.0, 1.5], p).unwrap_err();
        assert!(err.to_string().contains("row 1"), "{err}");
        assert!(to_class_ids(&[-1.0], p).is_err());
    }

    #[test]
    fn ranges_parse() {
        assert_eq!(parse_range("-0.25:0.25", "gap").unwrap(), (-0.25, 0.25));
        assert!(parse_range("0.25", "gap").is_err());
    }
}
