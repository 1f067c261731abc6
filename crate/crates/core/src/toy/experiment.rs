//! End-to-end toy studies: train an MLP, extract latents, fit the latent
//! density and score inputs.

use crate::density::{
    fit_class_conditional_with, flow_train, ClassConditionalGmm, ClassFitSummary, ClassId, ConditionalFlow, EmOptions,
    FlowTrainConfig, SmallClassPolicy, TrainLog,
};
use crate::engine::{confidence_region, score_classification_rows, score_regression_rows, SupportGrid, UncertaintyScores};
use crate::error::{Error, Result};
use crate::features::FeatureMatrix;
use crate::linalg::{pca_fit, Matrix, PcaModel};
use crate::priors::{fit_categorical, OutputPrior};

use super::data::{gen_classification_data, gen_regression_data, toy_function, ToyClassificationSpec, ToyRegressionSpec};
use super::model::{latent_extract, mlp_train, Head, MlpModel, MlpTrainConfig, MlpTrainLog, Targets};

#[derive(Debug, Clone, PartialEq)]
pub struct RegressionExperimentConfig {
    pub data: ToyRegressionSpec,
    pub mlp: MlpTrainConfig,
    pub flow: FlowTrainConfig,
    pub prior: OutputPrior,
    pub grid_points: usize,
    /// Posterior mass of the confidence band.
    pub mass: f64,
    /// Evaluation inputs, equidistant over the input range.
    pub eval_points: usize,
    /// Hidden layer to read latents from; `None` means the last one.
    pub latent_layer: Option<usize>,
    /// Optional PCA reduction of the latents before density fitting.
    pub pca_dim: Option<usize>,
}

impl Default for RegressionExperimentConfig {
    fn default() -> Self {
        Self {
            data: ToyRegressionSpec::default(),
            mlp: MlpTrainConfig::default(),
            flow: FlowTrainConfig {
                batch_size: usize::MAX,
                ..FlowTrainConfig::default()
            },
            prior: OutputPrior::uniform(-10.0, 10.0).expect("valid bounds"),
            grid_points: 1000,
            mass: 0.2,
            eval_points: 401,
            latent_layer: None,
            pca_dim: None,
        }
    }
}

impl RegressionExperimentConfig {
    /// Uses `seed` for data, network and flow.
    pub fn with_seed(mut self, seed: u64) -> Self {
        self.data.seed = seed;
        self.mlp.seed = seed;
        self.flow.seed = seed;
        self
    }

    pub fn grid(&self) -> Result<SupportGrid> {
        let (lo, hi) = self.prior.grid_range(1e-6).ok_or_else(|| {
            Error::InvalidArgument("regression prior needs a bounded grid range".into())
        })?;
        SupportGrid::new(lo, hi, self.grid_points)
    }
}

/// Per-input results over the evaluation range.
#[derive(Debug, Clone, PartialEq)]
pub struct RegressionEval {
    pub x: Vec<f64>,
    pub f_true: Vec<f64>,
    pub prediction: Vec<f64>,
    pub epistemic: Vec<f64>,
    pub aleatoric: Vec<f64>,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    pub in_gap: Vec<bool>,
}

impl RegressionEval {
    fn mean_where(values: &[f64], mask: impl Fn(usize) -> bool) -> f64 {
        let (s, n) = values
            .iter()
            .enumerate()
            .filter(|(i, _)| mask(*i))
            .fold((0.0, 0usize), |(s, n), (_, v)| (s + v, n + 1));
        s / n as f64
    }

    /// Mean epistemic score inside the gap.
    pub fn gap_mean_epistemic(&self) -> f64 {
        Self::mean_where(&self.epistemic, |i| self.in_gap[i])
    }

    /// Mean epistemic score over the training region.
    pub fn train_mean_epistemic(&self) -> f64 {
        Self::mean_where(&self.epistemic, |i| !self.in_gap[i])
    }

    /// Fraction of training-region inputs whose band contains `f(x)`.
    pub fn band_coverage(&self) -> f64 {
        let hits: Vec<f64> = (0..self.x.len())
            .map(|i| (self.lower[i] <= self.f_true[i] && self.f_true[i] <= self.upper[i]) as u8 as f64)
            .collect();
        Self::mean_where(&hits, |i| !self.in_gap[i])
    }
}

#[derive(Debug, Clone)]
pub struct RegressionRun {
    pub x_train: Matrix,
    pub y_train: Vec<f64>,
    pub model: MlpModel,
    pub mlp_log: MlpTrainLog,
    pub latent_layer: usize,
    pub latents: FeatureMatrix,
    pub pca: Option<PcaModel>,
    pub flow: ConditionalFlow,
    pub flow_log: TrainLog,
    pub train_rmse: f64,
    pub eval: RegressionEval,
}

fn rmse(a: &[f64], b: &[f64]) -> f64 {
    (a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>() / a.len() as f64).sqrt()
}

/// Latents of `x`, PCA-reduced when a model is given.
fn project(model: &MlpModel, layer: usize, pca: Option<&PcaModel>, x: &Matrix) -> Result<FeatureMatrix> {
    let z = latent_extract(model, layer, x)?;
    match pca {
        Some(p) => p.transform(&z),
        None => Ok(z),
    }
}

/// Toy regression: data with a gap, MLP, conditional flow on the latents
/// given the MLP prediction, scores and confidence band over the input range.
pub fn run_regression(cfg: &RegressionExperimentConfig) -> Result<RegressionRun> {
    let (x_train, y_train) = gen_regression_data(&cfg.data)?;
    let (model, mlp_log) = mlp_train(&x_train, Targets::Values(&y_train), Head::Regression, &cfg.mlp)?;
    let pred_train = model.predict_values(&x_train);
    let train_rmse = rmse(&pred_train, &y_train);

    let layer = cfg.latent_layer.unwrap_or(model.hidden_layers() - 1);
    let raw = latent_extract(&model, layer, &x_train)?;
    let pca = match cfg.pca_dim {
        Some(k) => Some(pca_fit(&raw, k, false)?),
        None => None,
    };
    let latents = match &pca {
        Some(p) => p.transform(&raw)?,
        None => raw,
    };
    let cond = Matrix::from_vec(pred_train.len(), 1, pred_train)?;
    let (flow, flow_log) = flow_train(latents.matrix(), &cond, &cfg.flow)?;

    let (lo, hi) = cfg.data.x_range;
    let n_eval = cfg.eval_points.max(2);
    let xs: Vec<f64> = (0..n_eval)
        .map(|i| lo + (hi - lo) * i as f64 / (n_eval - 1) as f64)
        .collect();
    let x_eval = Matrix::from_vec(n_eval, 1, xs.clone())?;
    let prediction = model.predict_values(&x_eval);
    let z_eval = project(&model, layer, pca.as_ref(), &x_eval)?;
    let grid = cfg.grid()?;
    let scores = score_regression_rows(&flow, &cfg.prior, &grid, z_eval.matrix())?;

    let mut eval = RegressionEval {
        f_true: xs.iter().map(|&x| toy_function(x)).collect(),
        in_gap: xs.iter().map(|&x| cfg.data.in_gap(x)).collect(),
        x: xs,
        prediction,
        epistemic: Vec::with_capacity(n_eval),
        aleatoric: Vec::with_capacity(n_eval),
        lower: Vec::with_capacity(n_eval),
        upper: Vec::with_capacity(n_eval),
    };
    for (s, &pred) in scores.iter().zip(&eval.prediction) {
        let start = pred.clamp(grid.lo(), grid.hi());
        let band = confidence_region(&s.posterior, start, cfg.mass)?;
        eval.epistemic.push(s.epistemic);
        eval.aleatoric.push(s.aleatoric);
        eval.lower.push(band.lower);
        eval.upper.push(band.upper);
    }
    Ok(RegressionRun {
        x_train,
        y_train,
        model,
        mlp_log,
        latent_layer: layer,
        latents,
        pca,
        flow,
        flow_log,
        train_rmse,
        eval,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClassificationLabConfig {
    pub data: ToyClassificationSpec,
    pub mlp: MlpTrainConfig,
    pub em: EmOptions,
    /// Hidden layer to read latents from; `None` means the last one.
    pub latent_layer: Option<usize>,
}

impl Default for ClassificationLabConfig {
    fn default() -> Self {
        Self {
            data: ToyClassificationSpec::default(),
            mlp: MlpTrainConfig::classification(),
            em: EmOptions::default(),
            latent_layer: None,
        }
    }
}

impl ClassificationLabConfig {
    pub fn with_seed(mut self, seed: u64) -> Self {
        self.data.seed = seed;
        self.mlp.seed = seed;
        self.em.seed = seed;
        self
    }
}

/// Trained blob classifier with per-class latent GMMs and a prior counted
/// from its own predictions on the training set.
#[derive(Debug, Clone)]
pub struct ClassificationLab {
    pub config: ClassificationLabConfig,
    pub x_train: Matrix,
    pub y_train: Vec<ClassId>,
    pub model: MlpModel,
    pub mlp_log: MlpTrainLog,
    pub latent_layer: usize,
    pub density: ClassConditionalGmm,
    pub fit_summary: Vec<ClassFitSummary>,
    pub prior: OutputPrior,
}

impl ClassificationLab {
    pub fn fit(cfg: &ClassificationLabConfig) -> Result<Self> {
        let (x_train, y_train) = gen_classification_data(&cfg.data)?;
        let head = Head::Classification {
            n_classes: cfg.data.n_classes(),
        };
        let (model, mlp_log) = mlp_train(&x_train, Targets::Classes(&y_train), head, &cfg.mlp)?;
        let layer = cfg.latent_layer.unwrap_or(model.hidden_layers() - 1);
        let z = latent_extract(&model, layer, &x_train)?;
        let predicted = model.predict_classes(&x_train);
        let (density, fit_summary) = fit_class_conditional_with(&z, &predicted, &cfg.em, SmallClassPolicy::Shrink)?;
        let seen = density.classes();
        let prior = fit_categorical(&predicted, Some(&seen), 1.0)?;
        Ok(Self {
            config: cfg.clone(),
            x_train,
            y_train,
            model,
            mlp_log,
            latent_layer: layer,
            density,
            fit_summary,
            prior,
        })
    }

    pub fn latents(&self, x: &Matrix) -> Result<FeatureMatrix> {
        latent_extract(&self.model, self.latent_layer, x)
    }

    pub fn score(&self, x: &Matrix) -> Result<UncertaintyScores> {
        let z = self.latents(x)?;
        score_classification_rows(&self.density, &self.prior, z.matrix(), false)
    }

    /// Fresh test draw from the training distribution.
    pub fn test_data(&self, seed: u64) -> Result<(Matrix, Vec<ClassId>)> {
        gen_classification_data(&self.config.data.with_seed(seed))
    }

    pub fn accuracy(&self, x: &Matrix, labels: &[ClassId]) -> f64 {
        let pred = self.model.predict_classes(x);
        pred.iter().zip(labels).filter(|(a, b)| a == b).count() as f64 / labels.len() as f64
    }
}
