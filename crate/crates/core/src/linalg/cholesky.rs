use super::Matrix;
use crate::error::{Error, Result};

const SYMMETRY_TOL: f64 = 1e-9;

/// Lower-triangular factor `L` with `L·Lᵀ = M` for a symmetric positive
/// definite `M`.
#[derive(Debug, Clone, PartialEq)]
pub struct CholeskyFactor {
    lower: Matrix,
}

impl CholeskyFactor {
    /// Wraps an existing lower-triangular matrix, checking the factor invariants.
    pub fn from_lower(lower: Matrix) -> Result<Self> {
        if !lower.is_square() {
            return Err(Error::DimMismatch {
                expected: lower.rows(),
                got: lower.cols(),
            });
        }
        let n = lower.rows();
        for i in 0..n {
            let d = lower[(i, i)];
            if !(d > 0.0) || !d.is_finite() {
                return Err(Error::NotPositiveDefinite { index: i, pivot: d });
            }
            for j in (i + 1)..n {
                if lower[(i, j)] != 0.0 {
                    return Err(Error::InvalidArgument(format!(
                        "factor has non-zero upper entry at ({i}, {j})"
                    )));
                }
            }
        }
        Ok(Self { lower })
    }

    pub fn dim(&self) -> usize {
        self.lower.rows()
    }

    pub fn lower(&self) -> &Matrix {
        &self.lower
    }

    /// `log det M = 2·Σ log Lᵢᵢ`.
    pub fn log_det(&self) -> f64 {
        2.0 * (0..self.dim()).map(|i| self.lower[(i, i)].ln()).sum::<f64>()
    }

    /// Solves `L·x = b` by forward substitution, in place.
    pub fn solve_lower_inplace(&self, b: &mut [f64]) {
        let n = self.dim();
        debug_assert_eq!(b.len(), n);
        for i in 0..n {
            let row = self.lower.row(i);
            let mut s = b[i];
            for j in 0..i {
                s -= row[j] * b[j];
            }
            b[i] = s / row[i];
        }
    }

    /// Squared Mahalanobis norm `‖L⁻¹ v‖²`.
    pub fn mahalanobis_sq(&self, v: &[f64]) -> f64 {
        let mut w = v.to_vec();
        self.solve_lower_inplace(&mut w);
        w.iter().map(|x| x * x).sum()
    }

    /// Recomputes `L·Lᵀ`.
    pub fn reconstruct(&self) -> Matrix {
        let n = self.dim();
        let mut out = Matrix::zeros(n, n);
        for i in 0..n {
            for j in 0..=i {
                let s: f64 = (0..=j)
                    .map(|k| self.lower[(i, k)] * self.lower[(j, k)])
                    .sum();
                out[(i, j)] = s;
                out[(j, i)] = s;
            }
        }
        out
    }
}

/// Cholesky–Banachiewicz factorization of a symmetric positive definite matrix.
pub fn cholesky(m: &Matrix) -> Result<CholeskyFactor> {
    if !m.is_square() {
        return Err(Error::DimMismatch {
            expected: m.rows(),
            got: m.cols(),
        });
    }
    let scale = m.data().iter().fold(1.0_f64, |a, v| a.max(v.abs()));
    if m.asymmetry() > SYMMETRY_TOL * scale {
        return Err(Error::InvalidArgument("matrix is not symmetric".into()));
    }
    let n = m.rows();
    let mut l = Matrix::zeros(n, n);
    for i in 0..n {
        for j in 0..=i {
            let mut s = m[(i, j)];
            for k in 0..j {
                s -= l[(i, k)] * l[(j, k)];
            }
            if i == j {
                if !(s > 0.0) || !s.is_finite() {
                    return Err(Error::NotPositiveDefinite { index: i, pivot: s });
                }
                l[(i, i)] = s.sqrt();
            } else {
                l[(i, j)] = s / l[(j, j)];
            }
        }
    }
    Ok(CholeskyFactor { lower: l })
}

/// Convenience wrapper around [`CholeskyFactor::log_det`].
pub fn log_det(f: &CholeskyFactor) -> f64 {
    f.log_det()
}
