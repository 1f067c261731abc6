//! Epistemic and aleatoric uncertainty of a trained network, read off the
//! density of its latent representations.
//!
//! Fit an output-conditional density `p(z | ŷ)` and an output prior `p(ŷ)` on
//! training-set features, then score a new latent vector `z` with
//!
//! * epistemic uncertainty `−log p(z) = −log ∫ p(z | ŷ) p(ŷ) dŷ`, and
//! * aleatoric uncertainty `h(ŷ | z)`, the entropy of the Bayes posterior.
//!
//! Classification uses one Gaussian mixture per predicted class
//! ([`density::gmm`]); regression uses a conditional normalizing flow
//! ([`density::flow`]) integrated over a support grid ([`engine`]).
//! [`toy`] reproduces the small regression/classification studies end to end,
//! [`metrics`] holds the evaluation measures and [`io`] the file formats used
//! by the `luq` binary.

pub mod cli;
pub mod density;
pub mod engine;
pub mod error;
pub mod features;
pub mod io;
pub mod linalg;
pub mod metrics;
pub mod nn;
pub mod parallel;
pub mod priors;
pub mod toy;

pub use error::{Error, Result};
pub use features::FeatureMatrix;
pub use linalg::Matrix;
