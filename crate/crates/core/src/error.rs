//! Error type shared by every module of the crate.

use std::io;

use thiserror::Error;

/// Result alias used throughout the crate.
pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("matrix is not positive definite (pivot {pivot} at index {index})")]
    NotPositiveDefinite { index: usize, pivot: f64 },

    #[error("input is empty")]
    EmptyInput,

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimMismatch { expected: usize, got: usize },

    #[error("too few samples: need at least {needed}, got {got}")]
    TooFewSamples { needed: usize, got: usize },

    #[error("mixture component {component} collapsed and could not be re-seeded")]
    DegenerateComponent { component: usize },

    #[error("class {class} has only {count} samples")]
    ClassTooSmall { class: u32, count: usize },

    #[error("no density fitted for class {0}")]
    MissingClassDensity(u32),

    #[error("training diverged at epoch {epoch}: loss is not finite")]
    Diverged { epoch: usize },

    #[error("beta-prime moment inversion failed: {0}")]
    MomentInversionFailed(String),

    #[error("requested mass {target} exceeds posterior mass {available} on the grid")]
    MassUnreachable { target: f64, available: f64 },

    #[error("layer index {index} out of range (model has {hidden} hidden layers)")]
    BadLayerIndex { index: usize, hidden: usize },

    #[error("perturbation not applicable: {0}")]
    BadKind(String),

    #[error("ranking metric needs both positive and negative samples")]
    OneClassOnly,

    #[error("probabilities sum to {sum}, not 1")]
    NotNormalized { sum: f64 },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("{path}: {message} (byte offset {offset})")]
    Format {
        path: String,
        offset: u64,
        message: String,
    },

    #[error("{path}: {message}")]
    Data { path: String, message: String },

    #[error("config line {line}: {message}")]
    Config { line: usize, message: String },

    #[error(transparent)]
    Io(#[from] io::Error),
}
