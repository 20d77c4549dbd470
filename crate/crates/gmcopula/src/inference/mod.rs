//! Constrained maximum-likelihood inference: the copula log likelihood with
//! its infeasibility sentinel, the unconstrained reparameterization, a
//! derivative-free optimizer, multi-start fitting, and AIC comparison.

mod fit;
mod likelihood;
mod neldermead;
mod reparam;

pub use fit::{
    aic, aic_value, compare, fit, pairwise_initialize, ComparisonRow, FitOptions, FitResult,
    InitStrategy, WEIGHT_COLLAPSE_THRESHOLD,
};
pub use likelihood::{check_constraints, log_density_terms, log_likelihood};
pub use neldermead::{minimize, SimplexOutcome};
pub use reparam::{count_parameters, pack, unpack};
