//! Validated dependence structures for small dimensions: correlation
//! matrices stored by their upper triangle and Cholesky factors of full
//! covariance matrices. Everything here targets d ≤ 6, so dense row-major
//! `Vec<f64>` storage and textbook factorizations are the right tool.

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};

/// Pivot floor for the Cholesky positive-definiteness check. Chosen so that
/// correlations as extreme as 1 − 1e-9 remain admissible.
pub const PD_PIVOT_THRESHOLD: f64 = 1e-12;

/// Cholesky factorization of a symmetric matrix given row-major.
///
/// Returns the lower factor L (row-major, upper part zeroed) or the index and
/// value of the first pivot at or below `threshold`.
pub(crate) fn cholesky_lower(dim: usize, a: &[f64], threshold: f64) -> Result<Vec<f64>> {
    debug_assert_eq!(a.len(), dim * dim);
    let mut l = vec![0.0; dim * dim];
    for i in 0..dim {
        for j in 0..=i {
            let mut s = a[i * dim + j];
            for m in 0..j {
                s -= l[i * dim + m] * l[j * dim + m];
            }
            if i == j {
                if s <= threshold {
                    return Err(Error::NotPositiveDefinite {
                        index: i,
                        value: s,
                        threshold,
                    });
                }
                l[i * dim + i] = s.sqrt();
            } else {
                l[i * dim + j] = s / l[j * dim + j];
            }
        }
    }
    Ok(l)
}

/// Solve L·x = b in place for lower-triangular L.
pub(crate) fn solve_lower(dim: usize, l: &[f64], b: &mut [f64]) {
    for i in 0..dim {
        let mut s = b[i];
        for j in 0..i {
            s -= l[i * dim + j] * b[j];
        }
        b[i] = s / l[i * dim + i];
    }
}

/// Solve Lᵀ·x = b in place for lower-triangular L.
pub(crate) fn solve_lower_transpose(dim: usize, l: &[f64], b: &mut [f64]) {
    for i in (0..dim).rev() {
        let mut s = b[i];
        for j in i + 1..dim {
            s -= l[j * dim + i] * b[j];
        }
        b[i] = s / l[i * dim + i];
    }
}

/// Inverse of a symmetric positive-definite matrix via its Cholesky factor.
pub(crate) fn spd_inverse(dim: usize, a: &[f64]) -> Result<Vec<f64>> {
    let l = cholesky_lower(dim, a, PD_PIVOT_THRESHOLD)?;
    let mut inv = vec![0.0; dim * dim];
    for col in 0..dim {
        let mut e = vec![0.0; dim];
        e[col] = 1.0;
        solve_lower(dim, &l, &mut e);
        solve_lower_transpose(dim, &l, &mut e);
        for row in 0..dim {
            inv[row * dim + col] = e[row];
        }
    }
    // Symmetrize away round-off so downstream sign checks are stable.
    for i in 0..dim {
        for j in 0..i {
            let v = 0.5 * (inv[i * dim + j] + inv[j * dim + i]);
            inv[i * dim + j] = v;
            inv[j * dim + i] = v;
        }
    }
    Ok(inv)
}

/// Correlation matrix for one mixture component, stored as its strict upper
/// triangle in row-major order (1,2), (1,3), …, (d−1,d).
///
/// Construction validates positive definiteness, so every held value is
/// usable as-is by the integration engine and the density evaluations.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrelationMatrix {
    dim: usize,
    offdiag: Vec<f64>,
}

impl CorrelationMatrix {
    /// Validate and wrap an upper-triangle vector of correlations.
    pub fn new(dim: usize, offdiag: Vec<f64>) -> Result<Self> {
        if dim < 1 {
            return Err(Error::InvalidArgument("dimension must be ≥ 1".into()));
        }
        let expect = dim * (dim - 1) / 2;
        if offdiag.len() != expect {
            return Err(Error::InvalidArgument(format!(
                "need {expect} off-diagonal entries for dim {dim}, got {}",
                offdiag.len()
            )));
        }
        for (idx, &r) in offdiag.iter().enumerate() {
            if !r.is_finite() || !(-1.0..=1.0).contains(&r) {
                return Err(Error::InvalidArgument(format!(
                    "correlation entry {idx} out of range: {r}"
                )));
            }
        }
        let m = Self { dim, offdiag };
        // PD check: factorization must succeed with all pivots above the floor.
        cholesky_lower(dim, &m.dense(), PD_PIVOT_THRESHOLD)?;
        Ok(m)
    }

    /// Identity correlation (independence).
    pub fn identity(dim: usize) -> Self {
        Self::new(dim, vec![0.0; dim * (dim - 1) / 2]).expect("identity is PD")
    }

    /// Exchangeable correlation with a common off-diagonal value.
    pub fn exchangeable(dim: usize, rho: f64) -> Result<Self> {
        Self::new(dim, vec![rho; dim * (dim - 1) / 2])
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn offdiag(&self) -> &[f64] {
        &self.offdiag
    }

    /// Entry (i, j) with zero-based indices.
    pub fn get(&self, i: usize, j: usize) -> f64 {
        debug_assert!(i < self.dim && j < self.dim);
        if i == j {
            return 1.0;
        }
        let (a, b) = if i < j { (i, j) } else { (j, i) };
        // Row-major upper triangle offset for row a, column b.
        let idx = a * self.dim - a * (a + 1) / 2 + (b - a - 1);
        self.offdiag[idx]
    }

    /// Dense row-major copy.
    pub fn dense(&self) -> Vec<f64> {
        let d = self.dim;
        let mut a = vec![0.0; d * d];
        for i in 0..d {
            for j in 0..d {
                a[i * d + j] = self.get(i, j);
            }
        }
        a
    }

    /// Lower Cholesky factor of the correlation matrix.
    pub fn cholesky(&self) -> Vec<f64> {
        cholesky_lower(self.dim, &self.dense(), PD_PIVOT_THRESHOLD)
            .expect("validated at construction")
    }

    /// The submatrix restricted to `keep` (strictly increasing indices).
    pub fn submatrix(&self, keep: &[usize]) -> Result<Self> {
        let m = keep.len();
        let mut off = Vec::with_capacity(m * (m - 1) / 2);
        for a in 0..m {
            for b in a + 1..m {
                off.push(self.get(keep[a], keep[b]));
            }
        }
        Self::new(m, off)
    }

    /// Inverse (precision) matrix, dense row-major.
    pub fn inverse(&self) -> Vec<f64> {
        spd_inverse(self.dim, &self.dense()).expect("validated at construction")
    }
}

/// Cholesky factor of a covariance matrix Σ = L·Lᵀ with its log-determinant.
#[derive(Debug, Clone)]
pub struct CovarianceFactor {
    dim: usize,
    lower: Vec<f64>,
    log_det: f64,
}

impl CovarianceFactor {
    /// Factor a dense symmetric covariance matrix.
    pub fn from_covariance(dim: usize, sigma: &[f64]) -> Result<Self> {
        if sigma.len() != dim * dim {
            return Err(Error::InvalidArgument(format!(
                "covariance must be {dim}×{dim}"
            )));
        }
        let lower = cholesky_lower(dim, sigma, PD_PIVOT_THRESHOLD)?;
        Ok(Self::from_lower(dim, lower))
    }

    /// Build Σ = D·R·D from per-coordinate scales and a correlation matrix.
    /// The factor is then L = D·L_R, which avoids forming Σ at all.
    pub fn from_scales_and_corr(scales: &[f64], corr: &CorrelationMatrix) -> Result<Self> {
        let dim = corr.dim();
        if scales.len() != dim {
            return Err(Error::InvalidArgument(
                "scales length must match correlation dimension".into(),
            ));
        }
        if scales.iter().any(|&s| !s.is_finite() || s <= 0.0) {
            return Err(Error::InvalidArgument(
                "scales must be finite and strictly positive".into(),
            ));
        }
        let mut lower = corr.cholesky();
        for i in 0..dim {
            for j in 0..=i {
                lower[i * dim + j] *= scales[i];
            }
        }
        Ok(Self::from_lower(dim, lower))
    }

    fn from_lower(dim: usize, lower: Vec<f64>) -> Self {
        let log_det = 2.0 * (0..dim).map(|i| lower[i * dim + i].ln()).sum::<f64>();
        Self {
            dim,
            lower,
            log_det,
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn log_det(&self) -> f64 {
        self.log_det
    }

    pub fn lower(&self) -> &[f64] {
        &self.lower
    }

    /// ‖L⁻¹·(x − mean)‖², the Mahalanobis quadratic form.
    pub fn quad_form(&self, x: &[f64], mean: &[f64]) -> f64 {
        debug_assert_eq!(x.len(), self.dim);
        debug_assert_eq!(mean.len(), self.dim);
        let mut v: Vec<f64> = x.iter().zip(mean).map(|(a, b)| a - b).collect();
        solve_lower(self.dim, &self.lower, &mut v);
        v.iter().map(|t| t * t).sum()
    }

    /// Reconstruct Σ (row-major), mainly for validation and reporting.
    pub fn reconstruct(&self) -> Vec<f64> {
        let d = self.dim;
        let mut s = vec![0.0; d * d];
        for i in 0..d {
            for j in 0..d {
                let mut acc = 0.0;
                for m in 0..=i.min(j) {
                    acc += self.lower[i * d + m] * self.lower[j * d + m];
                }
                s[i * d + j] = acc;
            }
        }
        s
    }
}
