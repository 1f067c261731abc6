//! Desk-scale studies: a 1-D regression target with a gap in the training
//! data and a 2-D blob classifier, plus perturbations and an ensemble
//! baseline.

pub mod data;
pub mod ensemble;
pub mod experiment;
pub mod model;
pub mod perturb;

pub use data::{gen_classification_data, gen_regression_data, toy_function, ToyClassificationSpec, ToyRegressionSpec};
pub use ensemble::{ensemble_scores, mutual_information, EnsembleModel, EnsembleScores};
pub use experiment::{
    run_regression, ClassificationLab, ClassificationLabConfig, RegressionEval, RegressionExperimentConfig,
    RegressionRun,
};
pub use model::{latent_extract, mlp_train, softmax_rows, Head, MlpModel, MlpTrainConfig, MlpTrainLog, Targets};
pub use perturb::{perturb, Perturbation};
