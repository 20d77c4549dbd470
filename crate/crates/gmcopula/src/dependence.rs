//! Extremal-dependence diagnostics: the tail-dependence coefficient χ_D(r),
//! the residual-dependence coefficient η_D(r), the ray exponent λ_D(w, r),
//! joint-extreme region probabilities in exponential margins, conditional
//! exceedances, bootstrap confidence bands, theoretical limits, and
//! precision-matrix structure reports.
//!
//! Model quantities integrate the fitted copula's joint survivor; empirical
//! quantities count sample rows. Both are exposed on a common curve type so
//! they can be plotted against each other.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::model::{
    copula_joint_cdf, copula_joint_survivor, CopulaSample, MixtureParameters, ONE_MINUS_EPS, U_CLIP,
};
use crate::numerics::{
    mvn_survivor_with, CorrelationMatrix, IntegrationConfig, IntegrationResult, MIN_TARGET_ABS_ERR,
};

/// Default flagging threshold for near-zero precision entries.
pub const DEFAULT_NEAR_ZERO_THRESHOLD: f64 = 0.1;

/// Default bootstrap replicate count.
pub const DEFAULT_BOOTSTRAP_B: usize = 250;

/// Default bootstrap confidence level.
pub const DEFAULT_CONFIDENCE: f64 = 0.95;

/// Where a dependence curve's estimates come from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CurveSource {
    /// Evaluated from fitted model parameters.
    Model,
    /// Counted from a data sample.
    Empirical,
    /// A known reference value (theoretical curve).
    True,
}

impl CurveSource {
    /// Lowercase label used in serialized output.
    pub fn label(self) -> &'static str {
        match self {
            CurveSource::Model => "model",
            CurveSource::Empirical => "empirical",
            CurveSource::True => "true",
        }
    }
}

/// Which tail summary an estimator computes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TailEstimator {
    /// The tail-dependence coefficient χ_D(r).
    Chi,
    /// The residual-dependence coefficient η_D(r).
    Eta,
}

/// A dependence summary evaluated on a grid of levels, with optional
/// bootstrap bands. `None` estimates mark levels where the quantity is
/// undefined (empty empirical region, underflowed survivor).
#[derive(Debug, Clone, PartialEq)]
pub struct DependenceCurve {
    /// Strictly increasing levels in (0, 1).
    pub levels: Vec<f64>,
    /// Point estimate per level.
    pub estimates: Vec<Option<f64>>,
    /// Lower bootstrap bound per level, where available.
    pub band_lo: Vec<Option<f64>>,
    /// Upper bootstrap bound per level, where available.
    pub band_hi: Vec<Option<f64>>,
    /// Provenance of the estimates.
    pub source: CurveSource,
    /// Bootstrap replicates excluded per level for being undefined.
    pub excluded: Vec<usize>,
    /// Set when the band was built from fewer than 50 replicates.
    pub low_replicates: bool,
}

impl DependenceCurve {
    /// A bandless curve from levels and estimates.
    pub fn new(levels: Vec<f64>, estimates: Vec<Option<f64>>, source: CurveSource) -> Result<Self> {
        validate_levels(&levels)?;
        if estimates.len() != levels.len() {
            return Err(Error::InvalidArgument(format!(
                "{} estimates for {} levels",
                estimates.len(),
                levels.len()
            )));
        }
        let n = levels.len();
        Ok(Self {
            levels,
            estimates,
            band_lo: vec![None; n],
            band_hi: vec![None; n],
            source,
            excluded: vec![0; n],
            low_replicates: false,
        })
    }
}

fn validate_levels(levels: &[f64]) -> Result<()> {
    if levels.is_empty() {
        return Err(Error::InvalidArgument("level grid is empty".into()));
    }
    for &r in levels {
        if !(r > 0.0 && r < 1.0) {
            return Err(Error::InvalidArgument(format!("level {r} outside (0, 1)")));
        }
    }
    for pair in levels.windows(2) {
        if pair[1] <= pair[0] {
            return Err(Error::InvalidArgument(format!(
                "levels must be strictly increasing, got {} then {}",
                pair[0], pair[1]
            )));
        }
    }
    Ok(())
}

/// Nonnegative ray weights on the simplex (entries sum to 1).
#[derive(Debug, Clone, PartialEq)]
pub struct RayWeights {
    w: Vec<f64>,
}

impl RayWeights {
    /// Validate and wrap a weight vector.
    pub fn new(w: Vec<f64>) -> Result<Self> {
        if w.len() < 2 {
            return Err(Error::InvalidArgument(
                "ray weights need at least two entries".into(),
            ));
        }
        for &x in &w {
            if !x.is_finite() || x < 0.0 {
                return Err(Error::InvalidArgument(format!(
                    "ray weight {x} must be finite and nonnegative"
                )));
            }
        }
        let sum: f64 = w.iter().sum();
        if (sum - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidArgument(format!(
                "ray weights sum to {sum}, expected 1"
            )));
        }
        Ok(Self { w })
    }

    /// The equal-weight ray 1_d/d.
    pub fn equal(d: usize) -> Self {
        Self::new(vec![1.0 / d as f64; d]).expect("equal weights lie on the simplex")
    }

    pub fn dim(&self) -> usize {
        self.w.len()
    }

    pub fn weights(&self) -> &[f64] {
        &self.w
    }
}

/// The default level grid: 99 equispaced points on [0.01, 0.99] plus a tail
/// refinement at {0.995, 0.999, 0.9999}.
pub fn default_r_grid() -> Vec<f64> {
    let mut grid: Vec<f64> = (1..=99).map(|i| i as f64 / 100.0).collect();
    grid.extend([0.995, 0.999, 0.9999]);
    grid
}

fn check_level(r: f64) -> Result<()> {
    if !(r > 0.0 && r < 1.0) {
        return Err(Error::InvalidArgument(format!("level {r} outside (0, 1)")));
    }
    Ok(())
}

/// Joint survivor with a second, tighter pass when the first estimate is so
/// small that the requested absolute error would swamp it. Keeps the relative
/// error of deep-tail survivor values near one percent, which the χ/η/λ
/// ratios need at extreme levels.
fn refined_survivor(
    theta: &MixtureParameters,
    levels: &[f64],
    config: IntegrationConfig,
) -> Result<IntegrationResult> {
    let first = copula_joint_survivor(theta, levels, config)?;
    if first.value > 0.0 && first.value < 100.0 * config.target_abs_err {
        let tighter = IntegrationConfig {
            target_abs_err: (first.value / 100.0).max(MIN_TARGET_ABS_ERR),
            ..config
        };
        return copula_joint_survivor(theta, levels, tighter);
    }
    Ok(first)
}

/// Model tail-dependence coefficient χ_D(r): the joint survivor on the
/// diagonal at level r, scaled by the marginal exceedance 1 − r.
pub fn chi_model(theta: &MixtureParameters, r: f64) -> Result<f64> {
    chi_model_with(theta, r, IntegrationConfig::default())
}

/// [`chi_model`] with explicit integration settings.
pub fn chi_model_with(theta: &MixtureParameters, r: f64, config: IntegrationConfig) -> Result<f64> {
    check_level(r)?;
    let s = refined_survivor(theta, &vec![r; theta.dim()], config)?;
    Ok((s.value / (1.0 - r)).clamp(0.0, 1.0))
}

/// Model residual-dependence coefficient η_D(r): log(1−r) over the log joint
/// survivor on the diagonal. `None` when the survivor underflows to zero.
pub fn eta_model(theta: &MixtureParameters, r: f64) -> Result<Option<f64>> {
    eta_model_with(theta, r, IntegrationConfig::default())
}

/// [`eta_model`] with explicit integration settings.
pub fn eta_model_with(
    theta: &MixtureParameters,
    r: f64,
    config: IntegrationConfig,
) -> Result<Option<f64>> {
    check_level(r)?;
    let s = refined_survivor(theta, &vec![r; theta.dim()], config)?;
    if s.value <= 0.0 || s.value >= 1.0 {
        return Ok(None);
    }
    Ok(Some(((1.0 - r).ln() / s.value.ln()).clamp(0.0, 1.0)))
}

/// Model ray exponent λ_D(w, r) relative to anchor coordinate `t`: the joint
/// survivor at componentwise levels 1 − (1−r)^{w_i/w_t}, log-scaled by the
/// anchor weight. `None` when the survivor underflows to zero.
pub fn lambda_model(
    theta: &MixtureParameters,
    w: &RayWeights,
    r: f64,
    t: usize,
) -> Result<Option<f64>> {
    lambda_model_with(theta, w, r, t, IntegrationConfig::default())
}

/// [`lambda_model`] with explicit integration settings.
pub fn lambda_model_with(
    theta: &MixtureParameters,
    w: &RayWeights,
    r: f64,
    t: usize,
    config: IntegrationConfig,
) -> Result<Option<f64>> {
    check_level(r)?;
    if w.dim() != theta.dim() {
        return Err(Error::InvalidArgument(format!(
            "ray has {} entries for a {}-dimensional model",
            w.dim(),
            theta.dim()
        )));
    }
    if t >= w.dim() {
        return Err(Error::InvalidArgument(format!(
            "anchor index {t} out of range for dimension {}",
            w.dim()
        )));
    }
    let wt = w.weights()[t];
    if wt <= 0.0 {
        return Err(Error::InvalidArgument(
            "anchor coordinate must have strictly positive weight".into(),
        ));
    }
    let levels: Vec<f64> = w
        .weights()
        .iter()
        .map(|&wi| {
            if wi == wt {
                // exact so the equal-ray bridge to η shares its survivor call
                r
            } else {
                (1.0 - (1.0 - r).powf(wi / wt)).clamp(U_CLIP, ONE_MINUS_EPS)
            }
        })
        .collect();
    let s = refined_survivor(theta, &levels, config)?;
    if s.value <= 0.0 || s.value >= 1.0 {
        return Ok(None);
    }
    Ok(Some(wt * s.value.ln() / (1.0 - r).ln()))
}

/// Empirical χ_D(r): the proportion of rows with every coordinate strictly
/// above r, scaled by 1 − r.
pub fn chi_empirical(sample: &CopulaSample, r: f64) -> Result<f64> {
    check_level(r)?;
    Ok(joint_exceedance_share(sample, r) / (1.0 - r))
}

/// Empirical η_D(r). `None` when no row exceeds the level on every
/// coordinate (or every row does), which leaves the estimator undefined.
pub fn eta_empirical(sample: &CopulaSample, r: f64) -> Result<Option<f64>> {
    check_level(r)?;
    let share = joint_exceedance_share(sample, r);
    if share <= 0.0 || share >= 1.0 {
        return Ok(None);
    }
    Ok(Some(((1.0 - r).ln() / share.ln()).clamp(0.0, 1.0)))
}

fn joint_exceedance_share(sample: &CopulaSample, r: f64) -> f64 {
    let n = sample.rows();
    let mut count = 0usize;
    for t in 0..n {
        if sample.row(t).iter().all(|&u| u > r) {
            count += 1;
        }
    }
    count as f64 / n as f64
}

/// Percentile with linear interpolation on a sorted slice, p in [0, 1].
fn percentile(sorted: &[f64], p: f64) -> f64 {
    debug_assert!(!sorted.is_empty());
    if sorted.len() == 1 {
        return sorted[0];
    }
    let h = p * (sorted.len() - 1) as f64;
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

/// Pointwise bootstrap band for an empirical tail estimator.
///
/// Draws `b` resamples of the rows with replacement, evaluates the estimator
/// on each at every level, and takes empirical percentiles across the
/// defined replicate values. Undefined replicates are excluded per level and
/// counted in `excluded`. Deterministic for a fixed seed: each replicate
/// draws from its own stream and the merge order is the replicate index.
pub fn bootstrap_band(
    sample: &CopulaSample,
    estimator: TailEstimator,
    levels: &[f64],
    b: usize,
    confidence: f64,
    seed: u64,
) -> Result<DependenceCurve> {
    validate_levels(levels)?;
    if b < 1 {
        return Err(Error::InvalidArgument(
            "bootstrap needs at least one replicate".into(),
        ));
    }
    if !(confidence > 0.0 && confidence < 1.0) {
        return Err(Error::InvalidArgument(format!(
            "confidence {confidence} outside (0, 1)"
        )));
    }
    let low_replicates = b < 50;
    if low_replicates {
        log::warn!("bootstrap with only {b} replicates; bands will be unstable");
    }

    let n = sample.rows();
    let d = sample.dim();
    let evaluate = |s: &CopulaSample, r: f64| -> Option<f64> {
        match estimator {
            TailEstimator::Chi => chi_empirical(s, r).ok(),
            TailEstimator::Eta => eta_empirical(s, r).ok().flatten(),
        }
    };

    let estimates: Vec<Option<f64>> = levels.iter().map(|&r| evaluate(sample, r)).collect();

    let replicate_values: Vec<Vec<Option<f64>>> = (0..b)
        .into_par_iter()
        .map(|rep| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(rep as u64);
            let mut data = Vec::with_capacity(n * d);
            for _ in 0..n {
                let t = rng.gen_range(0..n);
                data.extend_from_slice(sample.row(t));
            }
            let resample = CopulaSample::new(n, d, data).expect("resampled rows stay valid");
            levels.iter().map(|&r| evaluate(&resample, r)).collect()
        })
        .collect();

    let alpha = 1.0 - confidence;
    let mut band_lo = Vec::with_capacity(levels.len());
    let mut band_hi = Vec::with_capacity(levels.len());
    let mut excluded = Vec::with_capacity(levels.len());
    for li in 0..levels.len() {
        let mut defined: Vec<f64> = replicate_values.iter().filter_map(|rep| rep[li]).collect();
        excluded.push(b - defined.len());
        if defined.is_empty() {
            band_lo.push(None);
            band_hi.push(None);
            continue;
        }
        defined.sort_by(f64::total_cmp);
        band_lo.push(Some(percentile(&defined, alpha / 2.0)));
        band_hi.push(Some(percentile(&defined, 1.0 - alpha / 2.0)));
    }

    Ok(DependenceCurve {
        levels: levels.to_vec(),
        estimates,
        band_lo,
        band_hi,
        source: CurveSource::Empirical,
        excluded,
        low_replicates,
    })
}

/// Model curve over a level grid (no bands).
pub fn model_curve(
    theta: &MixtureParameters,
    estimator: TailEstimator,
    levels: &[f64],
    config: IntegrationConfig,
) -> Result<DependenceCurve> {
    validate_levels(levels)?;
    let estimates = levels
        .iter()
        .map(|&r| match estimator {
            TailEstimator::Chi => chi_model_with(theta, r, config).map(Some),
            TailEstimator::Eta => eta_model_with(theta, r, config),
        })
        .collect::<Result<Vec<Option<f64>>>>()?;
    DependenceCurve::new(levels.to_vec(), estimates, CurveSource::Model)
}

/// Threshold pair (a, b) bounding the joint-extreme region A_w in standard
/// exponential margins for d=2: the coordinate with the larger weight is held
/// at uE and the other is scaled down by the weight ratio.
pub fn aw_thresholds(w: f64, u_e: f64) -> Result<(f64, f64)> {
    if !(w > 0.0 && w < 1.0) {
        return Err(Error::InvalidArgument(format!(
            "ray weight {w} outside (0, 1)"
        )));
    }
    if !u_e.is_finite() || u_e <= 0.0 {
        return Err(Error::InvalidArgument(format!(
            "exponential threshold {u_e} must be positive"
        )));
    }
    Ok(if w > 0.5 {
        (u_e, ((1.0 - w) / w) * u_e)
    } else {
        ((w / (1.0 - w)) * u_e, u_e)
    })
}

/// Exponential-margin CDF value for a threshold x.
fn exp_margin(x: f64) -> f64 {
    (1.0 - (-x).exp()).clamp(U_CLIP, ONE_MINUS_EPS)
}

/// Model probability of the joint-extreme region A_w given that at least one
/// exponential-margin coordinate exceeds uE (d=2). `None` when the
/// conditioning probability falls below 1e-12.
pub fn aw_probability_model(theta: &MixtureParameters, w: f64, u_e: f64) -> Result<Option<f64>> {
    aw_probability_model_with(theta, w, u_e, IntegrationConfig::default())
}

/// [`aw_probability_model`] with explicit integration settings.
pub fn aw_probability_model_with(
    theta: &MixtureParameters,
    w: f64,
    u_e: f64,
    config: IntegrationConfig,
) -> Result<Option<f64>> {
    if theta.dim() != 2 {
        return Err(Error::InvalidArgument(
            "joint-extreme region probabilities are defined for dimension 2".into(),
        ));
    }
    let (a, b) = aw_thresholds(w, u_e)?;
    let numerator = refined_survivor(theta, &[exp_margin(a), exp_margin(b)], config)?;
    let diag = exp_margin(u_e);
    let denominator = 1.0 - copula_joint_cdf(theta, &[diag, diag], config)?.value;
    if denominator < 1e-12 {
        return Ok(None);
    }
    Ok(Some((numerator.value / denominator).clamp(0.0, 1.0)))
}

/// Empirical counterpart of [`aw_probability_model`]: counts rows after the
/// same exponential-to-uniform threshold mapping.
pub fn aw_probability_empirical(sample: &CopulaSample, w: f64, u_e: f64) -> Result<Option<f64>> {
    if sample.dim() != 2 {
        return Err(Error::InvalidArgument(
            "joint-extreme region probabilities are defined for dimension 2".into(),
        ));
    }
    let (a, b) = aw_thresholds(w, u_e)?;
    let (ua, ub) = (exp_margin(a), exp_margin(b));
    let diag = exp_margin(u_e);
    let mut joint = 0usize;
    let mut any = 0usize;
    for t in 0..sample.rows() {
        let row = sample.row(t);
        if row[0] > ua && row[1] > ub {
            joint += 1;
        }
        if row[0] > diag || row[1] > diag {
            any += 1;
        }
    }
    if any == 0 {
        return Ok(None);
    }
    Ok(Some(joint as f64 / any as f64))
}

/// Probability that every non-conditioning coordinate exceeds v given that
/// coordinate `cond_index` exceeds u.
pub fn conditional_exceedance(
    theta: &MixtureParameters,
    cond_index: usize,
    u: f64,
    v: f64,
) -> Result<f64> {
    conditional_exceedance_with(theta, cond_index, u, v, IntegrationConfig::default())
}

/// [`conditional_exceedance`] with explicit integration settings.
pub fn conditional_exceedance_with(
    theta: &MixtureParameters,
    cond_index: usize,
    u: f64,
    v: f64,
    config: IntegrationConfig,
) -> Result<f64> {
    check_level(u)?;
    check_level(v)?;
    if cond_index >= theta.dim() {
        return Err(Error::InvalidArgument(format!(
            "conditioning index {cond_index} out of range for dimension {}",
            theta.dim()
        )));
    }
    let mut levels = vec![v; theta.dim()];
    levels[cond_index] = u;
    let s = refined_survivor(theta, &levels, config)?;
    Ok((s.value / (1.0 - u)).clamp(0.0, 1.0))
}

/// The Gaussian-copula limit of η_D: the reciprocal all-ones quadratic form
/// of the precision matrix.
pub fn gaussian_eta_limit(corr: &CorrelationMatrix) -> f64 {
    let total: f64 = corr.inverse().iter().sum();
    debug_assert!(total > 0.0, "precision mass must be positive");
    1.0 / total
}

/// The diagonal χ limit of the sub-asymptotic construction: twice the
/// centered orthant survivor probability of the correlation matrix.
pub fn construction_chi_limit(corr: &CorrelationMatrix) -> Result<f64> {
    construction_chi_limit_with(corr, IntegrationConfig::default())
}

/// [`construction_chi_limit`] with explicit integration settings.
pub fn construction_chi_limit_with(
    corr: &CorrelationMatrix,
    config: IntegrationConfig,
) -> Result<f64> {
    let zeros = vec![0.0; corr.dim()];
    let orthant = mvn_survivor_with(&zeros, corr, config)?;
    Ok((2.0 * orthant.value).clamp(0.0, 1.0))
}

/// One off-diagonal precision entry of a component's correlation matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct PrecisionEntry {
    /// Component index.
    pub component: usize,
    /// Row coordinate (zero-based, i < j).
    pub i: usize,
    /// Column coordinate.
    pub j: usize,
    /// Precision-matrix entry.
    pub value: f64,
    /// Whether |value| falls below the near-zero threshold, marking the
    /// coordinate pair as a conditional-independence candidate.
    pub near_zero: bool,
}

/// Off-diagonal precision entries of every component's correlation matrix,
/// with near-zero flags.
pub fn precision_report(theta: &MixtureParameters, threshold: f64) -> Vec<PrecisionEntry> {
    let d = theta.dim();
    let mut entries = Vec::with_capacity(theta.components() * d * (d - 1) / 2);
    for j in 0..theta.components() {
        let inv = theta.correlation(j).inverse();
        for a in 0..d {
            for b in a + 1..d {
                let value = inv[a * d + b];
                entries.push(PrecisionEntry {
                    component: j,
                    i: a,
                    j: b,
                    value,
                    near_zero: value.abs() < threshold,
                });
            }
        }
    }
    entries
}
