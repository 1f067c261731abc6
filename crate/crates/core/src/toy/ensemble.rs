//! Deep-ensemble baseline: disagreement between independently trained MLPs.

use rayon::prelude::*;

use super::model::{mlp_train, Head, MlpModel, MlpTrainConfig, MlpTrainLog, Targets};
use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::parallel;

#[derive(Debug, Clone, PartialEq)]
pub struct EnsembleModel {
    members: Vec<MlpModel>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EnsembleScores {
    pub epistemic: Vec<f64>,
    pub aleatoric: Vec<f64>,
    /// Mean member prediction (regression) or averaged class probabilities
    /// flattened row-major (classification).
    pub mean_prediction: Vec<f64>,
}

impl EnsembleModel {
    /// Members must share one architecture and head.
    pub fn new(members: Vec<MlpModel>) -> Result<Self> {
        if members.len() < 2 {
            return Err(Error::TooFewSamples {
                needed: 2,
                got: members.len(),
            });
        }
        let (dims, head) = (members[0].net.dims(), members[0].head);
        if members.iter().any(|m| m.net.dims() != dims || m.head != head) {
            return Err(Error::InvalidArgument(
                "ensemble members must share one architecture".into(),
            ));
        }
        Ok(Self { members })
    }

    /// Trains `n_members` models with seeds `cfg.seed, cfg.seed + 1, ...`.
    pub fn train(
        x: &Matrix,
        targets: Targets,
        head: Head,
        cfg: &MlpTrainConfig,
        n_members: usize,
    ) -> Result<(Self, Vec<MlpTrainLog>)> {
        let trained: Vec<Result<(MlpModel, MlpTrainLog)>> = parallel::install(|| {
            (0..n_members as u64)
                .into_par_iter()
                .map(|k| mlp_train(x, targets, head, &cfg.with_seed(cfg.seed.wrapping_add(k))))
                .collect()
        });
        let mut members = Vec::with_capacity(n_members);
        let mut logs = Vec::with_capacity(n_members);
        for t in trained {
            let (m, log) = t?;
            members.push(m);
            logs.push(log);
        }
        Ok((Self::new(members)?, logs))
    }

    pub fn members(&self) -> &[MlpModel] {
        &self.members
    }

    pub fn head(&self) -> Head {
        self.members[0].head
    }
}

/// Entropy in nats of each probability row, `0 log 0 = 0`.
fn row_entropy(p: &[f64]) -> f64 {
    p.iter().filter(|&&q| q > 0.0).map(|&q| -q * q.ln()).sum()
}

/// Mutual-information split of member class probabilities for one input:
/// returns `(epistemic, aleatoric)` with epistemic = H(mean) − mean H and
/// aleatoric = mean H.
pub fn mutual_information(member_probs: &[Vec<f64>]) -> (f64, f64) {
    let m = member_probs.len() as f64;
    let k = member_probs[0].len();
    let mut mean = vec![0.0; k];
    for p in member_probs {
        for (a, b) in mean.iter_mut().zip(p) {
            *a += b / m;
        }
    }
    let aleatoric = member_probs.iter().map(|p| row_entropy(p)).sum::<f64>() / m;
    let total = row_entropy(&mean);
    ((total - aleatoric).max(0.0), aleatoric)
}

/// Classification: mutual information and expected member entropy.
/// Regression: variance of member predictions; aleatoric is 0 since the
/// members carry no noise model.
pub fn ensemble_scores(e: &EnsembleModel, inputs: &Matrix) -> Result<EnsembleScores> {
    let n = inputs.rows();
    match e.head() {
        Head::Regression => {
            let preds: Vec<Vec<f64>> = e.members.iter().map(|m| m.predict_values(inputs)).collect();
            let m = preds.len() as f64;
            let mut epistemic = Vec::with_capacity(n);
            let mut mean_prediction = Vec::with_capacity(n);
            for i in 0..n {
                let mean = preds.iter().map(|p| p[i]).sum::<f64>() / m;
                let var = preds.iter().map(|p| (p[i] - mean).powi(2)).sum::<f64>() / m;
                epistemic.push(var);
                mean_prediction.push(mean);
            }
            Ok(EnsembleScores {
                epistemic,
                aleatoric: vec![0.0; n],
                mean_prediction,
            })
        }
        Head::Classification { n_classes } => {
            let probs: Vec<Matrix> = e.members.iter().map(|m| m.predict_proba(inputs)).collect();
            let mut out = EnsembleScores {
                epistemic: Vec::with_capacity(n),
                aleatoric: Vec::with_capacity(n),
                mean_prediction: Vec::with_capacity(n * n_classes),
            };
            for i in 0..n {
                let rows: Vec<Vec<f64>> = probs.iter().map(|p| p.row(i).to_vec()).collect();
                let (epi, ale) = mutual_information(&rows);
                out.epistemic.push(epi);
                out.aleatoric.push(ale);
                for k in 0..n_classes {
                    out.mean_prediction.push(rows.iter().map(|r| r[k]).sum::<f64>() / rows.len() as f64);
                }
            }
            Ok(out)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::Mlp;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn disagreeing_one_hot_members() {
        let (epi, ale) = mutual_information(&[vec![1.0, 0.0], vec![0.0, 1.0]]);
        assert!((epi - 2.0_f64.ln()).abs() < 1e-15);
        assert_eq!(ale, 0.0);
    }

    #[test]
    fn identical_members_have_no_epistemic() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let net = Mlp::glorot(&[2, 8, 3], &mut rng).unwrap();
        let m = MlpModel::new(net, Head::Classification { n_classes: 3 }).unwrap();
        let e = EnsembleModel::new(vec![m.clone(), m]).unwrap();
        let x = Matrix::from_rows(&[[0.3, -1.0], [2.0, 0.5]]).unwrap();
        let s = ensemble_scores(&e, &x).unwrap();
        for (i, &epi) in s.epistemic.iter().enumerate() {
            assert!(epi.abs() < 1e-12);
            let mean = &s.mean_prediction[3 * i..3 * i + 3];
            assert!((epi + s.aleatoric[i] - row_entropy(mean)).abs() < 1e-12);
        }

        let net = Mlp::glorot(&[1, 8, 1], &mut rng).unwrap();
        let r = MlpModel::new(net, Head::Regression).unwrap();
        let e = EnsembleModel::new(vec![r.clone(), r.clone(), r]).unwrap();
        let s = ensemble_scores(&e, &Matrix::from_rows(&[[0.1], [0.9]]).unwrap()).unwrap();
        assert!(s.epistemic.iter().all(|&v| v.abs() < 1e-24));
    }

    #[test]
    fn single_member_rejected() {
        let m = MlpModel::new(Mlp::zeros(&[1, 2, 1]).unwrap(), Head::Regression).unwrap();
        assert!(EnsembleModel::new(vec![m]).is_err());
    }
}
