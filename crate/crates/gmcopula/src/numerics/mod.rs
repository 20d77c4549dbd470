//! Gaussian primitives and the orthant-probability integration engine.

mod linalg;
mod mvn;
mod normal;

pub use linalg::{CorrelationMatrix, CovarianceFactor, PD_PIVOT_THRESHOLD};
pub use mvn::{
    mvn_cdf, mvn_cdf_with, mvn_log_pdf, mvn_survivor, mvn_survivor_with, IntegrationConfig,
    IntegrationResult, DEFAULT_INTEGRATION_SEED, DEFAULT_TARGET_ABS_ERR, MIN_TARGET_ABS_ERR,
    PROB_FLOOR,
};
pub use normal::{
    bvn_pdf, std_normal_cdf, std_normal_log_pdf, std_normal_pdf, std_normal_quantile,
    std_normal_survivor,
};
