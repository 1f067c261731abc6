//! The `luq` command line: `fit`, `score`, `eval`, `toy` and `pca`.
//!
//! Every flag may also be given in a `--config` file (`key = value`, long
//! flag names); command-line values win. Exit codes: 0 success, 2 usage
//! error, 3 data error.

mod commands;

use std::ffi::OsString;
use std::fmt;
use std::io::Write;
use std::path::PathBuf;
use std::str::FromStr;

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::error::Error;
use crate::io::RunConfig;

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_DATA: i32 = 3;

/// Failure of a command, split by exit code.
#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Data(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Usage(_) => EXIT_USAGE,
            Self::Data(_) => EXIT_DATA,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Usage(m) => write!(f, "usage error: {m}"),
            Self::Data(m) => write!(f, "data error: {m}"),
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        match e {
            Error::Config { .. } | Error::BadKind(_) => Self::Usage(e.to_string()),
            other => Self::Data(other.to_string()),
        }
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;

#[derive(Debug, Parser)]
#[command(name = "luq", version, about = "Latent-density uncertainty scores for trained networks")]
pub struct Cli {
    /// Read flag values from a `key = value` file; explicit flags win.
    #[arg(long, global = true, value_name = "PATH")]
    pub config: Option<PathBuf>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Fit a latent density and output prior, write a model file.
    Fit(FitArgs),
    /// Score features with a fitted model, write a CSV.
    Score(ScoreArgs),
    /// Evaluate scores: OOD metrics, calibration or RMSE curves.
    Eval(EvalArgs),
    /// Run a toy study end to end and write all artifacts.
    Toy(ToyArgs),
    /// Reduce features with PCA.
    Pca(PcaArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModelKind {
    Gmm,
    Flow,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum CovarianceArg {
    Full,
    Tied,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum EvalMode {
    Ood,
    Calibration,
    Rmse,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ToyKind {
    Regression,
    Classification,
}

#[derive(Debug, Args)]
pub struct FitArgs {
    /// Latent features: matrix file or CSV, one row per sample.
    #[arg(long)]
    pub features: Option<PathBuf>,
    /// Network predictions: class ids (gmm) or values (flow), one per row.
    #[arg(long)]
    pub predictions: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub model: Option<ModelKind>,
    /// `counts`, `uniform:LO:HI`, `betaprime`, `betaprime:A:B` or `histogram:BINS`.
    #[arg(long)]
    pub prior: Option<String>,
    /// Mixture components per class.
    #[arg(long)]
    pub components: Option<usize>,
    #[arg(long, value_enum)]
    pub covariance: Option<CovarianceArg>,
    #[arg(long)]
    pub cov_reg: Option<f64>,
    #[arg(long)]
    pub max_iter: Option<usize>,
    #[arg(long)]
    pub tol: Option<f64>,
    /// Reduce features to this many principal components first.
    #[arg(long)]
    pub pca: Option<usize>,
    /// Scale principal components to unit variance.
    #[arg(long)]
    pub whiten: bool,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub epochs: Option<usize>,
    #[arg(long)]
    pub learning_rate: Option<f64>,
    #[arg(long)]
    pub weight_decay: Option<f64>,
    #[arg(long)]
    pub batch_size: Option<usize>,
    #[arg(long)]
    pub patience: Option<usize>,
    /// Hidden width of the flow subnetworks.
    #[arg(long)]
    pub hidden: Option<usize>,
    #[arg(long)]
    pub flow_layers: Option<usize>,
    /// Model file to write.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ScoreArgs {
    #[arg(long)]
    pub model: Option<PathBuf>,
    #[arg(long)]
    pub features: Option<PathBuf>,
    /// Support points for integrating over continuous outputs.
    #[arg(long)]
    pub grid: Option<usize>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    #[arg(long, value_enum)]
    pub mode: Option<EvalMode>,
    /// Scores of in-distribution samples (ood) or the per-sample table
    /// (calibration, rmse).
    #[arg(long)]
    pub input: Option<PathBuf>,
    /// Scores of shifted samples (ood mode).
    #[arg(long)]
    pub shifted: Option<PathBuf>,
    /// Score column; defaults to `epistemic_nats` (ood) or `aleatoric_nats`.
    #[arg(long)]
    pub column: Option<String>,
    /// 0/1 correctness column (calibration mode), default `correct`.
    #[arg(long)]
    pub correct_column: Option<String>,
    /// Error column (rmse mode), default `error`.
    #[arg(long)]
    pub error_column: Option<String>,
    /// TPR for the FPR metric.
    #[arg(long)]
    pub tpr: Option<f64>,
    /// Percentile step of the calibration curve.
    #[arg(long)]
    pub step: Option<f64>,
    /// Comma-separated uncertainty thresholds (rmse mode); default: the
    /// percentiles of the uncertainty column.
    #[arg(long, allow_hyphen_values = true)]
    pub thresholds: Option<String>,
    /// Also render the emitted table as SVG.
    #[arg(long)]
    pub plot: Option<PathBuf>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ToyArgs {
    #[arg(value_enum)]
    pub kind: ToyKind,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Posterior mass of the regression confidence band.
    #[arg(long)]
    pub mass: Option<f64>,
    #[arg(long)]
    pub grid: Option<usize>,
    /// `uniform:LO:HI` prior over regression outputs.
    #[arg(long)]
    pub prior: Option<String>,
    #[arg(long)]
    pub n_train: Option<usize>,
    #[arg(long)]
    pub noise: Option<f64>,
    /// Gap in the regression inputs as `LO:HI`.
    #[arg(long, allow_hyphen_values = true)]
    pub gap: Option<String>,
    #[arg(long)]
    pub eval_points: Option<usize>,
    #[arg(long)]
    pub epochs: Option<usize>,
    /// Mixture components per class (classification).
    #[arg(long)]
    pub components: Option<usize>,
    /// Blob standard deviation (classification).
    #[arg(long)]
    pub sigma: Option<f64>,
    /// Offset of the shifted test blobs (classification).
    #[arg(long, allow_negative_numbers = true)]
    pub shift: Option<f64>,
    #[arg(long)]
    pub pca: Option<usize>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct PcaArgs {
    #[arg(long)]
    pub features: Option<PathBuf>,
    /// Number of components to keep.
    #[arg(long)]
    pub pca: Option<usize>,
    /// Scale principal components to unit variance.
    #[arg(long)]
    pub whiten: bool,
    /// Reduced feature matrix to write.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Optional CSV of the kept eigenvalues.
    #[arg(long)]
    pub eigenvalues: Option<PathBuf>,
}

/// Resolves a flag: explicit value, then config file, then `default`.
pub(crate) fn pick<T: FromStr>(cli: Option<T>, cfg: &RunConfig, key: &str, default: T) -> CliResult<T> {
    pick_opt(cli, cfg, key).map(|v| v.unwrap_or(default))
}

/// A flag without default; missing everywhere is a usage error.
pub(crate) fn require<T: FromStr>(cli: Option<T>, cfg: &RunConfig, key: &str) -> CliResult<T> {
    pick_opt(cli, cfg, key)?.ok_or_else(|| CliError::Usage(format!("missing --{}", key.replace('_', "-"))))
}

pub(crate) fn pick_opt<T: FromStr>(cli: Option<T>, cfg: &RunConfig, key: &str) -> CliResult<Option<T>> {
    match cli {
        Some(v) => Ok(Some(v)),
        None => cfg.get(key).map_err(CliError::from),
    }
}

/// Parses `args` (including the program name) and runs the command, writing
/// summaries to `out` and diagnostics to standard error. Returns the exit code.
pub fn run<I, T>(args: I, out: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    match execute(&cli, out) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("luq: {e}");
            e.exit_code()
        }
    }
}

pub fn execute(cli: &Cli, out: &mut dyn Write) -> CliResult<()> {
    let cfg = match &cli.config {
        Some(p) => RunConfig::load(p).map_err(|e| match e {
            Error::Io(io) => CliError::Usage(format!("cannot read config {}: {io}", p.display())),
            other => CliError::from(other),
        })?,
        None => RunConfig::default(),
    };
    match &cli.command {
        Command::Fit(a) => commands::fit(a, &cfg, out),
        Command::Score(a) => commands::score(a, &cfg, out),
        Command::Eval(a) => commands::eval(a, &cfg, out),
        Command::Toy(a) => commands::toy(a, &cfg, out),
        Command::Pca(a) => commands::pca(a, &cfg, out),
    }
}
