//! Small MLPs with a regression or softmax head, trained full batch with Adam.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::density::ClassId;
use crate::error::{Error, Result};
use crate::features::FeatureMatrix;
use crate::linalg::Matrix;
use crate::nn::{Adam, Mlp, MlpGrads};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Head {
    /// Identity output, mean squared error.
    Regression,
    /// Softmax over `n_classes` logits, cross-entropy.
    Classification { n_classes: usize },
}

/// Training targets matching a [`Head`].
#[derive(Debug, Clone, Copy)]
pub enum Targets<'a> {
    Values(&'a [f64]),
    Classes(&'a [ClassId]),
}

#[derive(Debug, Clone, PartialEq)]
pub struct MlpModel {
    pub net: Mlp,
    pub head: Head,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MlpTrainConfig {
    pub hidden: usize,
    pub hidden_layers: usize,
    pub learning_rate: f64,
    pub max_epochs: usize,
    /// Training stops once the lowest loss so far improved by less than this
    /// over the last `window` epochs.
    pub min_improvement: f64,
    pub window: usize,
    pub seed: u64,
}

impl Default for MlpTrainConfig {
    /// 4 hidden layers of 50 units, Adam at 1e-3, up to 5000 full-batch epochs.
    fn default() -> Self {
        Self {
            hidden: 50,
            hidden_layers: 4,
            learning_rate: 1e-3,
            max_epochs: 5000,
            min_improvement: 1e-7,
            window: 100,
            seed: 0,
        }
    }
}

impl MlpTrainConfig {
    /// Narrower and shorter setup used for the 2-D blob classifier.
    pub fn classification() -> Self {
        Self {
            hidden: 32,
            hidden_layers: 2,
            max_epochs: 1000,
            ..Self::default()
        }
    }

    pub fn with_seed(&self, seed: u64) -> Self {
        Self { seed, ..self.clone() }
    }

    pub fn layer_dims(&self, input_dim: usize, output_dim: usize) -> Vec<usize> {
        let mut dims = vec![input_dim];
        dims.extend(std::iter::repeat(self.hidden).take(self.hidden_layers));
        dims.push(output_dim);
        dims
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MlpTrainLog {
    /// Full-batch loss before each update.
    pub losses: Vec<f64>,
    pub converged: bool,
}

impl MlpTrainLog {
    pub fn final_loss(&self) -> f64 {
        *self.losses.last().expect("at least one epoch")
    }
}

/// Row-wise softmax.
pub fn softmax_rows(logits: &Matrix) -> Matrix {
    let mut out = logits.clone();
    for r in 0..out.rows() {
        let row = out.row_mut(r);
        let max = row.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let mut sum = 0.0;
        for v in row.iter_mut() {
            *v = (*v - max).exp();
            sum += *v;
        }
        row.iter_mut().for_each(|v| *v /= sum);
    }
    out
}

impl MlpModel {
    pub fn new(net: Mlp, head: Head) -> Result<Self> {
        let out = match head {
            Head::Regression => 1,
            Head::Classification { n_classes } => n_classes,
        };
        if net.output_dim() != out {
            return Err(Error::DimMismatch {
                expected: out,
                got: net.output_dim(),
            });
        }
        Ok(Self { net, head })
    }

    pub fn input_dim(&self) -> usize {
        self.net.input_dim()
    }

    pub fn hidden_layers(&self) -> usize {
        self.net.n_layers() - 1
    }

    /// Raw network outputs: predictions for regression, logits otherwise.
    pub fn forward(&self, x: &Matrix) -> Matrix {
        self.net.forward(x)
    }

    /// Scalar predictions of a regression model.
    pub fn predict_values(&self, x: &Matrix) -> Vec<f64> {
        self.forward(x).into_data()
    }

    /// Class probabilities of a classification model.
    pub fn predict_proba(&self, x: &Matrix) -> Matrix {
        softmax_rows(&self.forward(x))
    }

    /// Arg-max class of each row (first index on ties).
    pub fn predict_classes(&self, x: &Matrix) -> Vec<ClassId> {
        let logits = self.forward(x);
        logits
            .row_iter()
            .map(|row| {
                let mut best = 0;
                for (k, &v) in row.iter().enumerate() {
                    if v > row[best] {
                        best = k;
                    }
                }
                best as ClassId
            })
            .collect()
    }

    /// Mean loss and its gradients with respect to all parameters.
    pub fn loss_and_grads(&self, x: &Matrix, targets: Targets) -> Result<(f64, MlpGrads)> {
        let n = x.rows();
        if n == 0 {
            return Err(Error::EmptyInput);
        }
        let (out, cache) = self.net.forward_cached(x);
        let mut d_out = Matrix::zeros(n, out.cols());
        let loss = match (self.head, targets) {
            (Head::Regression, Targets::Values(y)) => {
                check_len(n, y.len())?;
                let mut sum = 0.0;
                for i in 0..n {
                    let e = out[(i, 0)] - y[i];
                    sum += e * e;
                    d_out.row_mut(i)[0] = 2.0 * e / n as f64;
                }
                sum / n as f64
            }
            (Head::Classification { n_classes }, Targets::Classes(labels)) => {
                check_len(n, labels.len())?;
                let probs = softmax_rows(&out);
                let mut sum = 0.0;
                for i in 0..n {
                    let k = labels[i] as usize;
                    if k >= n_classes {
                        return Err(Error::InvalidArgument(format!(
                            "label {k} out of range for {n_classes} classes"
                        )));
                    }
                    let row = out.row(i);
                    let max = row.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
                    let lse = max + row.iter().map(|v| (v - max).exp()).sum::<f64>().ln();
                    sum += lse - row[k];
                    let d = d_out.row_mut(i);
                    for (j, dj) in d.iter_mut().enumerate() {
                        *dj = (probs[(i, j)] - if j == k { 1.0 } else { 0.0 }) / n as f64;
                    }
                }
                sum / n as f64
            }
            _ => {
                return Err(Error::InvalidArgument(
                    "targets do not match the model head".into(),
                ))
            }
        };
        let mut grads = MlpGrads::zeros_like(&self.net);
        self.net.backward(&cache, &d_out, &mut grads, false);
        Ok((loss, grads))
    }
}

fn check_len(expected: usize, got: usize) -> Result<()> {
    if expected != got {
        return Err(Error::DimMismatch { expected, got });
    }
    Ok(())
}

/// Trains a Glorot-initialized MLP full batch until the loss stops improving
/// or `max_epochs` is reached.
pub fn mlp_train(x: &Matrix, targets: Targets, head: Head, cfg: &MlpTrainConfig) -> Result<(MlpModel, MlpTrainLog)> {
    if x.rows() == 0 {
        return Err(Error::EmptyInput);
    }
    if cfg.window == 0 || cfg.max_epochs == 0 {
        return Err(Error::InvalidArgument("window and max_epochs must be positive".into()));
    }
    let out_dim = match head {
        Head::Regression => 1,
        Head::Classification { n_classes } => n_classes,
    };
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let net = Mlp::glorot(&cfg.layer_dims(x.cols(), out_dim), &mut rng)?;
    let mut model = MlpModel::new(net, head)?;
    let mut opt = Adam::new(cfg.learning_rate, 0.0);
    let mut losses = Vec::with_capacity(cfg.max_epochs);
    // running minimum, so a single loss spike does not end training
    let mut best: Vec<f64> = Vec::with_capacity(cfg.max_epochs);
    let mut converged = false;
    for epoch in 0..cfg.max_epochs {
        let (loss, grads) = model.loss_and_grads(x, targets)?;
        if !loss.is_finite() {
            return Err(Error::Diverged { epoch });
        }
        losses.push(loss);
        best.push(best.last().map_or(loss, |&b: &f64| b.min(loss)));
        if epoch >= cfg.window && best[epoch - cfg.window] - best[epoch] < cfg.min_improvement {
            converged = true;
            break;
        }
        opt.step(model.net.params_mut(), grads.slices());
    }
    if !model.net.is_finite() {
        return Err(Error::Diverged { epoch: losses.len() });
    }
    Ok((model, MlpTrainLog { losses, converged }))
}

/// Post-activation outputs of hidden layer `layer_index`, one row per input.
pub fn latent_extract(m: &MlpModel, layer_index: usize, inputs: &Matrix) -> Result<FeatureMatrix> {
    let h = m.net.hidden_activations(inputs, layer_index)?;
    Ok(FeatureMatrix::new(h)?.with_layer(format!("hidden{layer_index}")))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn latent_shapes() {
        let cfg = MlpTrainConfig::default();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let m = MlpModel::new(Mlp::glorot(&cfg.layer_dims(1, 1), &mut rng).unwrap(), Head::Regression).unwrap();
        let x = Matrix::from_rows(&[[0.3], [0.3]]).unwrap();
        let z = latent_extract(&m, 3, &x).unwrap();
        assert_eq!(z.cols(), 50);
        assert_eq!(z.row(0), z.row(1));
        assert!(matches!(latent_extract(&m, 4, &x), Err(Error::BadLayerIndex { .. })));

        let zero = MlpModel::new(Mlp::zeros(&cfg.layer_dims(1, 1)).unwrap(), Head::Regression).unwrap();
        assert!(latent_extract(&zero, 2, &x).unwrap().data().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn constant_target_is_learned() {
        let x = Matrix::from_vec(20, 1, (0..20).map(|i| i as f64 / 10.0 - 1.0).collect()).unwrap();
        let y = vec![0.7; 20];
        let cfg = MlpTrainConfig {
            hidden: 8,
            hidden_layers: 2,
            learning_rate: 1e-2,
            ..Default::default()
        };
        let (m, log) = mlp_train(&x, Targets::Values(&y), Head::Regression, &cfg).unwrap();
        let rmse = m
            .predict_values(&x)
            .iter()
            .map(|p| (p - 0.7).powi(2))
            .sum::<f64>()
            / 20.0;
        let rmse = rmse.sqrt();
        assert!(rmse < 1e-3, "rmse {rmse}, {} epochs", log.losses.len());
    }

    #[test]
    fn mismatched_targets_rejected() {
        let m = MlpModel::new(Mlp::zeros(&[1, 3, 2]).unwrap(), Head::Classification { n_classes: 2 }).unwrap();
        let x = Matrix::zeros(2, 1);
        assert!(m.loss_and_grads(&x, Targets::Values(&[0.0, 1.0])).is_err());
        assert!(m.loss_and_grads(&x, Targets::Classes(&[0, 2])).is_err());
        let (loss, _) = m.loss_and_grads(&x, Targets::Classes(&[0, 1])).unwrap();
        assert!((loss - 2.0_f64.ln()).abs() < 1e-15);
    }
}
