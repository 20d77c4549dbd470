//! The Gaussian mixture copula model: validated parameters, marginal and
//! joint distribution functions, the copula density, and seeded simulation.

mod joint;
mod margins;
mod params;
mod simulate;

pub use joint::{
    copula_joint_cdf, copula_joint_survivor, copula_log_density, copula_log_density_rows,
    joint_cdf, joint_log_pdf, joint_survivor, U_CLIP,
};
pub use margins::{
    marginal_cdf, marginal_log_pdf, marginal_pdf, marginal_quantile, marginal_quantile_batch,
    marginal_survivor,
};
pub use params::{
    ConstraintViolation, CopulaSample, MixtureParameters, ThetaCandidate, ONE_MINUS_EPS,
};
pub use simulate::simulate;
