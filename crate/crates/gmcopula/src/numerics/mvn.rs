//! Multivariate normal orthant probabilities for d ≤ 6.
//!
//! The CDF/survivor integrals use the separation-of-variables transform to
//! the unit cube and a Kronecker (root-prime) low-discrepancy sequence with
//! R independent random shifts. The spread of the R shift means gives a
//! standard error, so each call carries its own accuracy estimate and is
//! bit-reproducible for a fixed seed.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::linalg::{cholesky_lower, CorrelationMatrix, CovarianceFactor, PD_PIVOT_THRESHOLD};
use super::normal::{std_normal_cdf, std_normal_quantile};
use crate::error::{Error, Result};

/// Default absolute accuracy requested from the integration engine.
pub const DEFAULT_TARGET_ABS_ERR: f64 = 1e-6;

/// Tightest admissible accuracy request.
pub const MIN_TARGET_ABS_ERR: f64 = 1e-8;

/// Seed used by the convenience wrappers that do not take one explicitly.
pub const DEFAULT_INTEGRATION_SEED: u64 = 0x6d76_6e63;

/// Probabilities are clamped to this floor before any logarithm so that
/// integration round-off never produces −∞ through a slightly negative value.
pub const PROB_FLOOR: f64 = 1e-300;

const SHIFTS: usize = 12;
const FIRST_ROUND_POINTS: usize = 128;
const MAX_POINTS_PER_SHIFT: usize = 1 << 19;

// Square roots of the first five primes generate the Kronecker sequence;
// enough for integration dimension d − 1 ≤ 5.
const SQRT_PRIMES: [f64; 5] = [
    1.414_213_562_373_095_1,
    1.732_050_807_568_877_2,
    2.236_067_977_499_79,
    2.645_751_311_064_590_7,
    3.316_624_790_355_399_8,
];

/// Outcome of one orthant-probability integration.
#[derive(Debug, Clone, Copy)]
pub struct IntegrationResult {
    /// Estimated probability, clamped to [0, 1].
    pub value: f64,
    /// Conservative absolute error estimate (three standard errors of the
    /// randomized-shift means; zero for exact closed-form cases).
    pub std_error: f64,
    /// Number of integrand evaluations consumed.
    pub evaluations: u64,
    /// False when the point budget ran out before std_error met the target.
    pub converged: bool,
}

impl IntegrationResult {
    fn exact(value: f64) -> Self {
        Self {
            value,
            std_error: 0.0,
            evaluations: 0,
            converged: true,
        }
    }

    /// Value clamped away from zero for use inside logarithms.
    pub fn value_for_log(&self) -> f64 {
        self.value.max(PROB_FLOOR)
    }
}

/// Accuracy and reproducibility settings for one integration call.
#[derive(Debug, Clone, Copy)]
pub struct IntegrationConfig {
    pub target_abs_err: f64,
    pub seed: u64,
}

impl Default for IntegrationConfig {
    fn default() -> Self {
        Self {
            target_abs_err: DEFAULT_TARGET_ABS_ERR,
            seed: DEFAULT_INTEGRATION_SEED,
        }
    }
}

impl IntegrationConfig {
    pub fn with_target(target_abs_err: f64) -> Self {
        Self {
            target_abs_err,
            ..Self::default()
        }
    }
}

/// P(Z_i ≤ upper_i ∀i) for Z ~ N(0, corr), with the default seed.
pub fn mvn_cdf(
    upper: &[f64],
    corr: &CorrelationMatrix,
    target_abs_err: f64,
) -> Result<IntegrationResult> {
    mvn_cdf_with(
        upper,
        corr,
        IntegrationConfig {
            target_abs_err,
            seed: DEFAULT_INTEGRATION_SEED,
        },
    )
}

/// P(Z_i > lower_i ∀i) = mvn_cdf(−lower) by central symmetry.
pub fn mvn_survivor(
    lower: &[f64],
    corr: &CorrelationMatrix,
    target_abs_err: f64,
) -> Result<IntegrationResult> {
    mvn_survivor_with(
        lower,
        corr,
        IntegrationConfig {
            target_abs_err,
            seed: DEFAULT_INTEGRATION_SEED,
        },
    )
}

/// [`mvn_cdf`] with explicit seed control.
pub fn mvn_cdf_with(
    upper: &[f64],
    corr: &CorrelationMatrix,
    cfg: IntegrationConfig,
) -> Result<IntegrationResult> {
    let d = corr.dim();
    if upper.len() != d {
        return Err(Error::InvalidArgument(format!(
            "upper has length {}, correlation dimension is {d}",
            upper.len()
        )));
    }
    if d > 6 {
        return Err(Error::InvalidArgument(
            "integration supports dimension ≤ 6".into(),
        ));
    }
    if !(cfg.target_abs_err >= MIN_TARGET_ABS_ERR) {
        return Err(Error::InvalidArgument(format!(
            "target_abs_err must be ≥ {MIN_TARGET_ABS_ERR:e}, got {}",
            cfg.target_abs_err
        )));
    }
    if upper.iter().any(|x| x.is_nan()) {
        return Err(Error::InvalidArgument("upper limit is NaN".into()));
    }
    if upper.iter().any(|&x| x == f64::NEG_INFINITY) {
        return Ok(IntegrationResult::exact(0.0));
    }
    // +∞ limits impose no restriction; integrate over the rest.
    let kept: Vec<usize> = (0..d).filter(|&i| upper[i].is_finite()).collect();
    match kept.len() {
        0 => Ok(IntegrationResult::exact(1.0)),
        1 => Ok(IntegrationResult {
            value: std_normal_cdf(upper[kept[0]]),
            std_error: 0.0,
            evaluations: 1,
            converged: true,
        }),
        _ => {
            // Most restrictive variable first; improves the transform's
            // conditioning without changing the value.
            let mut order = kept;
            order.sort_by(|&a, &b| upper[a].total_cmp(&upper[b]));
            let b: Vec<f64> = order.iter().map(|&i| upper[i]).collect();
            let sub = corr.submatrix(&order)?;
            let lower = cholesky_lower(sub.dim(), &sub.dense(), PD_PIVOT_THRESHOLD)?;
            Ok(integrate_orthant(&b, sub.dim(), &lower, cfg))
        }
    }
}

/// [`mvn_survivor`] with explicit seed control.
pub fn mvn_survivor_with(
    lower: &[f64],
    corr: &CorrelationMatrix,
    cfg: IntegrationConfig,
) -> Result<IntegrationResult> {
    let negated: Vec<f64> = lower.iter().map(|x| -x).collect();
    mvn_cdf_with(&negated, corr, cfg)
}

/// Log-density of N(mean, Σ) evaluated through the covariance factor.
///
/// Panics if the point or mean dimension differs from the factor's.
pub fn mvn_log_pdf(x: &[f64], mean: &[f64], factor: &CovarianceFactor) -> f64 {
    const LN_2PI: f64 = 1.837_877_066_409_345_3;
    let d = factor.dim();
    assert!(
        x.len() == d && mean.len() == d,
        "point, mean and factor dimensions must agree"
    );
    -0.5 * (d as f64 * LN_2PI + factor.log_det() + factor.quad_form(x, mean))
}

/// Genz separation-of-variables integrand for P(Z ≤ b) with Cholesky factor
/// `l` of the (sorted) correlation matrix. `w` has length m − 1.
fn sov_integrand(b: &[f64], m: usize, l: &[f64], w: &[f64], y: &mut [f64]) -> f64 {
    const TINY: f64 = 1e-300;
    let mut e = std_normal_cdf(b[0] / l[0]);
    let mut prod = e;
    for i in 1..m {
        let t = (w[i - 1] * e).clamp(TINY, 1.0 - 1e-16);
        y[i - 1] = std_normal_quantile(t);
        let mut s = b[i];
        for j in 0..i {
            s -= l[i * m + j] * y[j];
        }
        e = std_normal_cdf(s / l[i * m + i]);
        prod *= e;
        if prod < TINY {
            return 0.0;
        }
    }
    prod
}

fn integrate_orthant(b: &[f64], m: usize, l: &[f64], cfg: IntegrationConfig) -> IntegrationResult {
    let dim_w = m - 1;
    // Independent uniform shifts, one block per replicate, all derived from
    // the caller's seed so the whole call is reproducible.
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let shifts: Vec<Vec<f64>> = (0..SHIFTS)
        .map(|_| (0..dim_w).map(|_| rng.gen::<f64>()).collect())
        .collect();

    let alpha: Vec<f64> = (0..dim_w).map(|j| SQRT_PRIMES[j].fract()).collect();
    let mut sums = [0.0f64; SHIFTS];
    let mut points_done = 0usize;
    let mut round = FIRST_ROUND_POINTS;
    let mut evaluations = 0u64;
    let mut y = vec![0.0; dim_w];
    let mut w = vec![0.0; dim_w];

    loop {
        for (r, shift) in shifts.iter().enumerate() {
            let mut acc = 0.0;
            for k in points_done + 1..=points_done + round {
                // Antithetic pair of the shifted Kronecker point.
                for j in 0..dim_w {
                    w[j] = (k as f64 * alpha[j] + shift[j]).fract();
                }
                let f1 = sov_integrand(b, m, l, &w, &mut y);
                for j in 0..dim_w {
                    w[j] = 1.0 - w[j];
                }
                let f2 = sov_integrand(b, m, l, &w, &mut y);
                acc += 0.5 * (f1 + f2);
            }
            sums[r] += acc;
            evaluations += 2 * round as u64;
        }
        points_done += round;

        let n = points_done as f64;
        let means: Vec<f64> = sums.iter().map(|s| s / n).collect();
        let grand = means.iter().sum::<f64>() / SHIFTS as f64;
        let var = means.iter().map(|v| (v - grand) * (v - grand)).sum::<f64>()
            / (SHIFTS as f64 * (SHIFTS as f64 - 1.0));
        let std_error = 3.0 * var.sqrt();

        if std_error <= cfg.target_abs_err || points_done >= MAX_POINTS_PER_SHIFT {
            return IntegrationResult {
                value: grand.clamp(0.0, 1.0),
                std_error,
                evaluations,
                converged: std_error <= cfg.target_abs_err,
            };
        }
        round = points_done; // double the sample each round
    }
}
