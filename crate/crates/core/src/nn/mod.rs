//! Small dense networks with hand-written reverse-mode gradients.

mod adam;
mod mlp;

pub use adam::Adam;
pub use mlp::{Mlp, MlpCache, MlpGrads};
