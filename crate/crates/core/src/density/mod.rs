//! Density models for latent representations: per-class Gaussian mixtures
//! for discrete outputs and conditional normalizing flows for continuous ones.

pub mod flow;
pub mod gmm;
pub mod train;

pub use flow::{ConditionalFlow, CouplingLayer, FlowArch, FlowGrads};
pub use gmm::{
    em_fit, fit_class_conditional, fit_class_conditional_with, ClassConditionalGmm, ClassFitSummary,
    ClassId, CovarianceMode, EmFit, EmOptions, GaussianComponent, Gmm, SmallClassPolicy,
};
pub use train::{flow_train, EpochRecord, FlowTrainConfig, TrainLog};
