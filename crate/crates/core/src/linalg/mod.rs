//! Dense linear algebra: matrices, Cholesky factors, log-sum-exp and PCA.

mod cholesky;
mod eigen;
mod matrix;
mod pca;

pub use cholesky::{cholesky, log_det, CholeskyFactor};
pub use eigen::{symmetric_eigen, SymmetricEigen};
pub(crate) use matrix::gemm;
pub use matrix::Matrix;
pub use pca::{pca_fit, pca_transform, PcaModel};

use crate::error::{Error, Result};

/// `log Σ exp(vᵢ)`, shifted by the maximum so that large magnitudes do not
/// overflow. Returns `-inf` when every entry is `-inf`.
pub fn logsumexp(v: &[f64]) -> Result<f64> {
    if v.is_empty() {
        return Err(Error::EmptyInput);
    }
    Ok(logsumexp_unchecked(v))
}

pub(crate) fn logsumexp_unchecked(v: &[f64]) -> f64 {
    let max = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY || max.is_nan() {
        return max;
    }
    if max == f64::INFINITY {
        return f64::INFINITY;
    }
    let s: f64 = v.iter().map(|&x| (x - max).exp()).sum();
    max + s.ln()
}

/// Sample mean of each column.
pub fn column_means(x: &Matrix) -> Vec<f64> {
    let n = x.rows() as f64;
    x.column_sums().into_iter().map(|s| s / n).collect()
}

/// Sample covariance with denominator `n - 1` (zero matrix for a single row).
pub fn sample_covariance(x: &Matrix, mean: &[f64]) -> Matrix {
    let d = x.cols();
    let n = x.rows();
    let mut centered = x.clone();
    for r in 0..n {
        for (v, m) in centered.row_mut(r).iter_mut().zip(mean) {
            *v -= m;
        }
    }
    let mut cov = Matrix::zeros(d, d);
    if n < 2 {
        return cov;
    }
    gemm(
        1.0 / (n - 1) as f64,
        &centered,
        true,
        &centered,
        false,
        0.0,
        &mut cov,
    );
    symmetrize(&mut cov);
    cov
}

/// Copies the lower triangle onto the upper one.
pub(crate) fn symmetrize(m: &mut Matrix) {
    for i in 0..m.rows() {
        for j in 0..i {
            m[(j, i)] = m[(i, j)];
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    #[test]
    fn logsumexp_examples() {
        assert_eq!(logsumexp(&[-5.0]).unwrap(), -5.0);
        assert_abs_diff_eq!(logsumexp(&[0.0, 0.0]).unwrap(), 2.0_f64.ln(), epsilon = 1e-15);
        assert_abs_diff_eq!(
            logsumexp(&[-1000.0, -1001.0]).unwrap(),
            -999.686738,
            epsilon = 1e-6
        );
        let analytic = -1000.0 + (1.0 + (-1.0_f64).exp()).ln();
        assert_abs_diff_eq!(logsumexp(&[-1000.0, -1001.0]).unwrap(), analytic, epsilon = 1e-12);
    }

    #[test]
    fn logsumexp_edge_cases() {
        assert!(matches!(logsumexp(&[]), Err(Error::EmptyInput)));
        assert_eq!(logsumexp(&[f64::NEG_INFINITY, 1.0]).unwrap(), 1.0);
        assert_eq!(
            logsumexp(&[f64::NEG_INFINITY, f64::NEG_INFINITY]).unwrap(),
            f64::NEG_INFINITY
        );
    }

    #[test]
    fn covariance_uses_unbiased_denominator() {
        let x = Matrix::from_rows(&[[1.0], [3.0]]).unwrap();
        let cov = sample_covariance(&x, &column_means(&x));
        assert_abs_diff_eq!(cov[(0, 0)], 2.0, epsilon = 1e-15);
    }

    proptest! {
        #[test]
        fn logsumexp_shift_invariance(
            v in prop::collection::vec(-700.0..700.0f64, 1..20),
            c in -300.0..300.0f64,
        ) {
            let shifted: Vec<f64> = v.iter().map(|x| x + c).collect();
            let a = logsumexp(&shifted).unwrap();
            let b = logsumexp(&v).unwrap() + c;
            prop_assert!((a - b).abs() <= 1e-12 * a.abs().max(1.0));
        }
    }
}
