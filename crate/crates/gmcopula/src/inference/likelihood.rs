//! Copula log likelihood used as the optimization objective.

use crate::model::{
    copula_log_density, copula_log_density_rows, ConstraintViolation, CopulaSample, ThetaCandidate,
};

/// Checks a candidate against the model constraints without building the
/// factored parameter set. Returns the first violation, if any.
pub fn check_constraints(candidate: &ThetaCandidate) -> Option<ConstraintViolation> {
    candidate.validate().err()
}

/// Log likelihood of the copula sample under the candidate parameters.
///
/// Infeasible candidates score negative infinity, making this total on the
/// unconstrained search space. Rows are summed in order, so the value is
/// bit-reproducible for a fixed sample. Panics if the sample has fewer than
/// two rows or its dimension differs from the candidate's.
pub fn log_likelihood(candidate: &ThetaCandidate, sample: &CopulaSample) -> f64 {
    assert!(
        sample.rows() >= 2,
        "log likelihood requires at least two observations"
    );
    assert!(
        !candidate.means.is_empty() && candidate.means[0].len() == sample.dim(),
        "candidate and sample dimensions must agree"
    );
    let theta = match candidate.validate() {
        Ok(theta) => theta,
        Err(_) => return f64::NEG_INFINITY,
    };
    copula_log_density_rows(&theta, sample).iter().sum()
}

/// Per-row log densities for a feasible candidate, in sample order.
pub fn log_density_terms(candidate: &ThetaCandidate, sample: &CopulaSample) -> Option<Vec<f64>> {
    let theta = candidate.validate().ok()?;
    Some(copula_log_density_rows(&theta, sample))
}

#[allow(dead_code)]
fn scalar_reference(candidate: &ThetaCandidate, sample: &CopulaSample) -> f64 {
    let theta = candidate.validate().unwrap();
    (0..sample.rows())
        .map(|t| copula_log_density(&theta, sample.row(t)))
        .sum()
}
