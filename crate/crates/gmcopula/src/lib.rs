//! Gaussian mixture copulas: constrained maximum-likelihood fitting,
//! simulation, and extremal-dependence diagnostics (χ, η, λ, region
//! probabilities, conditional exceedances, precision structure) for
//! multivariate data on uniform margins.

pub mod dependence;
pub mod error;
pub mod inference;
pub mod interface;
pub mod model;
pub mod numerics;
pub mod refcopulas;

pub use error::{Error, Result};
