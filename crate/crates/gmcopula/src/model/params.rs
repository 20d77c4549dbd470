//! Mixture parameter containers and validation.
//!
//! A [`MixtureParameters`] value is always well formed: validation happens at
//! construction, so downstream code (density evaluation, simulation, fitting)
//! never re-checks invariants. Unvalidated optimizer output lives in
//! [`ThetaCandidate`] until it passes [`ThetaCandidate::validate`].

use crate::error::{Error, Result};
use crate::numerics::{CorrelationMatrix, CovarianceFactor};

/// Largest f64 strictly below one. Copula samples are clamped into the open
/// interval with this as the upper end.
pub const ONE_MINUS_EPS: f64 = 1.0 - f64::EPSILON / 2.0;

/// Raw parameter pieces before validation.
///
/// `corr_offdiag[j]` holds the strict upper triangle of component `j`'s
/// correlation matrix in row-major order, matching
/// [`CorrelationMatrix::offdiag`].
#[derive(Debug, Clone, PartialEq)]
pub struct ThetaCandidate {
    pub weights: Vec<f64>,
    pub means: Vec<Vec<f64>>,
    pub scales: Vec<Vec<f64>>,
    pub corr_offdiag: Vec<Vec<f64>>,
}

/// First failed constraint, by name, for diagnostics and optimizer rejection.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConstraintViolation {
    /// Short identifier of the violated constraint, e.g. `"mean ordering"`.
    pub constraint: String,
    /// Human-readable detail.
    pub detail: String,
}

impl std::fmt::Display for ConstraintViolation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}: {}", self.constraint, self.detail)
    }
}

fn violation(constraint: &str, detail: String) -> ConstraintViolation {
    ConstraintViolation {
        constraint: constraint.to_string(),
        detail,
    }
}

impl ThetaCandidate {
    /// Checks every model constraint and returns the validated parameters.
    ///
    /// Constraints, in check order:
    /// - consistent dimensions, with `d >= 2` and `k >= 1`;
    /// - weights finite, nonnegative, first weight strictly positive, summing
    ///   to one within `1e-12`;
    /// - reference mean exactly zero and reference scale exactly one;
    /// - all scales finite and strictly positive, all means finite;
    /// - first mean coordinates strictly increasing across components;
    /// - every correlation matrix symmetric positive definite.
    pub fn validate(&self) -> std::result::Result<MixtureParameters, ConstraintViolation> {
        let k = self.weights.len();
        if k == 0 {
            return Err(violation("dimensions", "no mixture components".into()));
        }
        if self.means.len() != k || self.scales.len() != k || self.corr_offdiag.len() != k {
            return Err(violation(
                "dimensions",
                format!(
                    "component counts disagree: {} weights, {} means, {} scales, {} correlations",
                    k,
                    self.means.len(),
                    self.scales.len(),
                    self.corr_offdiag.len()
                ),
            ));
        }
        let d = self.means[0].len();
        if d < 2 {
            return Err(violation(
                "dimensions",
                format!("dimension must be at least 2, got {d}"),
            ));
        }
        let tri = d * (d - 1) / 2;
        for j in 0..k {
            if self.means[j].len() != d || self.scales[j].len() != d {
                return Err(violation(
                    "dimensions",
                    format!("component {j} has inconsistent dimension"),
                ));
            }
            if self.corr_offdiag[j].len() != tri {
                return Err(violation(
                    "dimensions",
                    format!(
                        "component {j} correlation needs {tri} off-diagonal entries, got {}",
                        self.corr_offdiag[j].len()
                    ),
                ));
            }
        }

        let mut sum = 0.0;
        for (j, &p) in self.weights.iter().enumerate() {
            if !p.is_finite() || p < 0.0 || p > 1.0 {
                return Err(violation(
                    "weights",
                    format!("weight {j} is {p}, outside [0, 1]"),
                ));
            }
            sum += p;
        }
        if self.weights[0] <= 0.0 {
            return Err(violation(
                "weights",
                "first component weight must be strictly positive".into(),
            ));
        }
        if (sum - 1.0).abs() > 1e-12 {
            return Err(violation("weights", format!("weights sum to {sum}, not 1")));
        }

        if self.means[0].iter().any(|&m| m != 0.0) {
            return Err(violation(
                "reference mean",
                "first component mean must be exactly zero".into(),
            ));
        }
        if self.scales[0][0] != 1.0 {
            return Err(violation(
                "reference scale",
                format!(
                    "first coordinate scale of component 1 must be exactly 1, got {}",
                    self.scales[0][0]
                ),
            ));
        }

        for j in 0..k {
            for (i, &s) in self.scales[j].iter().enumerate() {
                if !s.is_finite() || s <= 0.0 {
                    return Err(violation(
                        "scale positivity",
                        format!("scale ({j}, {i}) is {s}"),
                    ));
                }
            }
            if self.means[j].iter().any(|m| !m.is_finite()) {
                return Err(violation(
                    "mean finiteness",
                    format!("component {j} mean has a non-finite entry"),
                ));
            }
        }

        for j in 1..k {
            if self.means[j][0] <= self.means[j - 1][0] {
                return Err(violation(
                    "mean ordering",
                    format!(
                        "first mean coordinates must be strictly increasing: component {} has {} after {}",
                        j,
                        self.means[j][0],
                        self.means[j - 1][0]
                    ),
                ));
            }
        }

        let mut correlations = Vec::with_capacity(k);
        for j in 0..k {
            match CorrelationMatrix::new(d, self.corr_offdiag[j].clone()) {
                Ok(c) => correlations.push(c),
                Err(e) => {
                    return Err(violation(
                        "positive definiteness",
                        format!("component {j} correlation rejected: {e}"),
                    ));
                }
            }
        }

        let mut factors = Vec::with_capacity(k);
        for j in 0..k {
            // PD of the correlation plus positive scales guarantees this succeeds.
            let f = CovarianceFactor::from_scales_and_corr(&self.scales[j], &correlations[j])
                .map_err(|e| violation("positive definiteness", e.to_string()))?;
            factors.push(f);
        }

        Ok(MixtureParameters {
            weights: self.weights.clone(),
            means: self.means.clone(),
            scales: self.scales.clone(),
            correlations,
            factors,
        })
    }
}

/// Validated parameters of a Gaussian mixture copula.
///
/// Identifiability conventions baked into validation: the first component is
/// the reference (zero mean, unit first scale) and components are ordered by
/// the first coordinate of their means.
#[derive(Debug, Clone)]
pub struct MixtureParameters {
    weights: Vec<f64>,
    means: Vec<Vec<f64>>,
    scales: Vec<Vec<f64>>,
    correlations: Vec<CorrelationMatrix>,
    factors: Vec<CovarianceFactor>,
}

impl MixtureParameters {
    /// Validates and builds mixture parameters from raw pieces.
    pub fn new(
        weights: Vec<f64>,
        means: Vec<Vec<f64>>,
        scales: Vec<Vec<f64>>,
        corr_offdiag: Vec<Vec<f64>>,
    ) -> Result<Self> {
        let candidate = ThetaCandidate {
            weights,
            means,
            scales,
            corr_offdiag,
        };
        candidate
            .validate()
            .map_err(|v| Error::Constraint(v.to_string()))
    }

    /// Number of mixture components `k`.
    pub fn components(&self) -> usize {
        self.weights.len()
    }

    /// Dimension `d`.
    pub fn dim(&self) -> usize {
        self.means[0].len()
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn mean(&self, j: usize) -> &[f64] {
        &self.means[j]
    }

    pub fn scales(&self, j: usize) -> &[f64] {
        &self.scales[j]
    }

    pub fn correlation(&self, j: usize) -> &CorrelationMatrix {
        &self.correlations[j]
    }

    /// Cholesky factor of component `j`'s covariance.
    pub fn factor(&self, j: usize) -> &CovarianceFactor {
        &self.factors[j]
    }

    /// The raw pieces, for reparameterization and serialization.
    pub fn to_candidate(&self) -> ThetaCandidate {
        ThetaCandidate {
            weights: self.weights.clone(),
            means: self.means.clone(),
            scales: self.scales.clone(),
            corr_offdiag: self
                .correlations
                .iter()
                .map(|c| c.offdiag().to_vec())
                .collect(),
        }
    }

    /// True when all components share one mean vector up to the ordering
    /// convention being trivial, i.e. `k == 1`.
    pub fn is_single_component(&self) -> bool {
        self.weights.len() == 1
    }
}

/// A matrix of pseudo-observations on the copula scale, row major.
///
/// Every entry lies strictly inside `(0, 1)`.
#[derive(Debug, Clone, PartialEq)]
pub struct CopulaSample {
    n: usize,
    d: usize,
    data: Vec<f64>,
}

impl CopulaSample {
    /// Builds a sample from row-major data, rejecting entries outside `(0, 1)`.
    pub fn new(n: usize, d: usize, data: Vec<f64>) -> Result<Self> {
        if n == 0 || d < 2 {
            return Err(Error::Data(format!(
                "copula sample needs n >= 1 rows and d >= 2 columns, got n = {n}, d = {d}"
            )));
        }
        if data.len() != n * d {
            return Err(Error::Data(format!(
                "copula sample data length {} does not match {n} x {d}",
                data.len()
            )));
        }
        for (idx, &u) in data.iter().enumerate() {
            if !(u > 0.0 && u < 1.0) {
                return Err(Error::Data(format!(
                    "copula sample entry at row {}, column {} is {u}, outside (0, 1)",
                    idx / d + 1,
                    idx % d + 1
                )));
            }
        }
        Ok(Self { n, d, data })
    }

    pub fn rows(&self) -> usize {
        self.n
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn row(&self, t: usize) -> &[f64] {
        &self.data[t * self.d..(t + 1) * self.d]
    }

    pub fn get(&self, t: usize, i: usize) -> f64 {
        self.data[t * self.d + i]
    }

    /// Copies column `i` out of the row-major storage.
    pub fn column(&self, i: usize) -> Vec<f64> {
        (0..self.n).map(|t| self.get(t, i)).collect()
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }
}
