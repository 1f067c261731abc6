use log::warn;

use super::{column_means, gemm, sample_covariance, symmetric_eigen, Matrix};
use crate::error::{Error, Result};
use crate::features::FeatureMatrix;

/// Eigenvalues below this fraction of the largest are treated as zero rank.
const RANK_TOL: f64 = 1e-12;
/// Floor used when whitening directions with zero variance.
const WHITEN_FLOOR: f64 = 1e-12;

/// Principal-component projection fitted on training features.
#[derive(Debug, Clone, PartialEq)]
pub struct PcaModel {
    pub mean: Vec<f64>,
    /// `input_dim × out_dim`, orthonormal columns.
    pub basis: Matrix,
    /// Covariance eigenvalues of the kept directions, non-increasing.
    pub eigenvalues: Vec<f64>,
    /// Scale projections to unit variance.
    pub whiten: bool,
}

impl PcaModel {
    pub fn input_dim(&self) -> usize {
        self.basis.rows()
    }

    pub fn out_dim(&self) -> usize {
        self.basis.cols()
    }

    pub fn transform(&self, x: &FeatureMatrix) -> Result<FeatureMatrix> {
        pca_transform(self, x)
    }

    /// Maps projected rows back to the input space.
    pub fn inverse_transform(&self, y: &Matrix) -> Result<Matrix> {
        if y.cols() != self.out_dim() {
            return Err(Error::DimMismatch {
                expected: self.out_dim(),
                got: y.cols(),
            });
        }
        let mut y = y.clone();
        if self.whiten {
            for r in 0..y.rows() {
                for (v, &ev) in y.row_mut(r).iter_mut().zip(&self.eigenvalues) {
                    *v *= ev.max(WHITEN_FLOOR).sqrt();
                }
            }
        }
        let mut out = Matrix::zeros(y.rows(), self.input_dim());
        gemm(1.0, &y, false, &self.basis, true, 0.0, &mut out);
        out.add_row_vector(&self.mean);
        Ok(out)
    }
}

/// Fits the top `out_dim` principal directions of `x`.
///
/// When `out_dim` exceeds the numerical rank the trailing eigenvalues are
/// kept as zeros (with a warning) so downstream density fits can regularize.
pub fn pca_fit(x: &FeatureMatrix, out_dim: usize, whiten: bool) -> Result<PcaModel> {
    let n = x.rows();
    let d = x.cols();
    if n < 2 {
        return Err(Error::TooFewSamples { needed: 2, got: n });
    }
    if out_dim == 0 || out_dim > n.min(d) {
        return Err(Error::InvalidArgument(format!(
            "PCA output dimension {out_dim} must be in 1..={}",
            n.min(d)
        )));
    }
    let mean = column_means(x);
    let cov = sample_covariance(x, &mean);
    let eig = symmetric_eigen(&cov)?;

    let top = eig.values.first().copied().unwrap_or(0.0).max(0.0);
    let mut eigenvalues: Vec<f64> = eig.values[..out_dim].to_vec();
    let rank = eig.values.iter().filter(|&&v| v > RANK_TOL * top).count();
    if out_dim > rank {
        warn!("PCA: requested {out_dim} components but numerical rank is {rank}; padding with zero eigenvalues");
    }
    for v in eigenvalues.iter_mut() {
        if *v <= RANK_TOL * top {
            *v = 0.0;
        }
    }
    let all: Vec<usize> = (0..out_dim).collect();
    let basis = eig.vectors.select_cols(&all);
    Ok(PcaModel {
        mean,
        basis,
        eigenvalues,
        whiten,
    })
}

/// Projects rows onto the fitted basis: `(x − mean)·basis`.
pub fn pca_transform(p: &PcaModel, x: &FeatureMatrix) -> Result<FeatureMatrix> {
    if x.cols() != p.input_dim() {
        return Err(Error::DimMismatch {
            expected: p.input_dim(),
            got: x.cols(),
        });
    }
    let mut centered = x.matrix().clone();
    for r in 0..centered.rows() {
        for (v, m) in centered.row_mut(r).iter_mut().zip(&p.mean) {
            *v -= m;
        }
    }
    let mut out = Matrix::zeros(x.rows(), p.out_dim());
    gemm(1.0, &centered, false, &p.basis, false, 0.0, &mut out);
    if p.whiten {
        let scale: Vec<f64> = p
            .eigenvalues
            .iter()
            .map(|&ev| 1.0 / ev.max(WHITEN_FLOOR).sqrt())
            .collect();
        for r in 0..out.rows() {
            for (v, s) in out.row_mut(r).iter_mut().zip(&scale) {
                *v *= s;
            }
        }
    }
    Ok(x.with_matrix(out))
}
