//! Multi-start maximum-likelihood fitting and AIC model comparison.

use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::likelihood::log_likelihood;
use super::neldermead::minimize;
use super::reparam::{count_parameters, pack, unpack};
use crate::error::{Error, Result};
use crate::model::{CopulaSample, MixtureParameters, ThetaCandidate};
use crate::numerics::{std_normal_quantile, CorrelationMatrix};

/// A fitted weight at or below this is reported as a collapsed component.
pub const WEIGHT_COLLAPSE_THRESHOLD: f64 = 1e-4;

/// Restart jitter scale and initial simplex edge, in packed coordinates.
const JITTER_SCALE: f64 = 0.25;

/// How the optimization center is chosen.
#[derive(Debug, Clone)]
pub enum InitStrategy {
    /// Moment-based start from normal scores, sliced along the first margin.
    Random,
    /// Assemble a start from all bivariate fits (requires dimension ≥ 3).
    Pairwise,
    /// Start from the given parameters.
    Provided(MixtureParameters),
}

/// Configuration for [`fit`].
#[derive(Debug, Clone)]
pub struct FitOptions {
    /// Number of mixture components to fit.
    pub k: usize,
    /// Fit the pairwise-exchangeable submodel.
    pub exchangeable: bool,
    /// Objective-evaluation budget per restart; `None` means 20000 per
    /// packed coordinate. Must be at least 100 when given.
    pub max_evals: Option<usize>,
    /// Relative objective tolerance for convergence.
    pub rel_tol: f64,
    /// Number of jittered restarts.
    pub n_starts: usize,
    /// Seed for the restart jitter streams.
    pub seed: u64,
    /// Center of the restart cloud.
    pub init: InitStrategy,
}

impl FitOptions {
    /// Defaults for a `k`-component fit: non-exchangeable, automatic budget,
    /// tolerance 1e-8, five restarts, moment-based initialization.
    pub fn new(k: usize) -> Self {
        Self {
            k,
            exchangeable: false,
            max_evals: None,
            rel_tol: 1e-8,
            n_starts: 5,
            seed: 0,
            init: InitStrategy::Random,
        }
    }
}

/// Outcome of a maximum-likelihood fit.
#[derive(Debug, Clone)]
pub struct FitResult {
    /// The estimate, satisfying every model constraint.
    pub theta_hat: MixtureParameters,
    /// Maximized copula log likelihood.
    pub log_likelihood: f64,
    /// Akaike information criterion, `2·n_params − 2·log_likelihood`.
    pub aic: f64,
    /// Free parameter count of the fitted model.
    pub n_params: usize,
    /// Whether the best restart met the refresh convergence criterion.
    pub converged: bool,
    /// Objective evaluations summed over all restarts.
    pub evaluations: usize,
    /// Wall-clock time of the whole fit.
    pub elapsed_seconds: f64,
    /// Set when any fitted weight collapsed to the threshold, meaning the
    /// effective component count is lower than requested.
    pub reduced: bool,
}

/// AIC from a parameter count and a log likelihood.
pub fn aic_value(n_params: usize, log_likelihood: f64) -> f64 {
    2.0 * n_params as f64 - 2.0 * log_likelihood
}

/// AIC of a fit result (recomputed from its fields).
pub fn aic(result: &FitResult) -> f64 {
    aic_value(result.n_params, result.log_likelihood)
}

/// One row of an AIC comparison table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonRow {
    /// Component count of the fit.
    pub k: usize,
    /// Free parameter count.
    pub n_params: usize,
    /// Maximized log likelihood.
    pub log_likelihood: f64,
    /// Akaike information criterion.
    pub aic: f64,
    /// AIC difference relative to the single-component fit, when one is
    /// present among the compared fits.
    pub delta_vs_k1: Option<f64>,
}

/// Ranks fits by ascending AIC, reporting differences against the
/// single-component fit when the list contains one.
pub fn compare(fits: &[FitResult]) -> Vec<ComparisonRow> {
    let baseline = fits
        .iter()
        .find(|f| f.theta_hat.is_single_component())
        .map(|f| f.aic);
    let mut rows: Vec<ComparisonRow> = fits
        .iter()
        .map(|f| ComparisonRow {
            k: f.theta_hat.components(),
            n_params: f.n_params,
            log_likelihood: f.log_likelihood,
            aic: f.aic,
            delta_vs_k1: baseline.map(|b| f.aic - b),
        })
        .collect();
    rows.sort_by(|a, b| a.aic.total_cmp(&b.aic));
    rows
}

/// Maximum-likelihood fit of the mixture copula to a uniform-margin sample.
///
/// Runs `n_starts` simplex searches in packed coordinates from jittered
/// copies of the initialization center (the first restart is unjittered) and
/// keeps the best. Restarts evaluate in parallel; the outcome is
/// bit-reproducible for fixed options because each restart draws jitter from
/// its own seeded stream and ties break on restart index.
pub fn fit(sample: &CopulaSample, options: &FitOptions) -> Result<FitResult> {
    let started = Instant::now();
    let d = sample.dim();
    let k = options.k;
    if options.n_starts < 1 {
        return Err(Error::InvalidArgument("n_starts must be at least 1".into()));
    }
    if !(options.rel_tol > 0.0) {
        return Err(Error::InvalidArgument(
            "rel_tol must be strictly positive".into(),
        ));
    }
    if sample.rows() < 2 {
        return Err(Error::InvalidArgument(
            "fitting requires at least two observations".into(),
        ));
    }
    let m = count_parameters(d, k, options.exchangeable)?;
    let max_evals = match options.max_evals {
        Some(v) if v < 100 => {
            return Err(Error::InvalidArgument(
                "optimizer budget must be at least 100 evaluations".into(),
            ))
        }
        Some(v) => v,
        None => 20_000 * m,
    };
    if sample.rows() < 10 * m {
        log::warn!(
            "fitting {m} parameters to {} observations; estimates may be unstable",
            sample.rows()
        );
    }

    let mut center_candidate = match &options.init {
        InitStrategy::Random => moment_initialize(sample, k)?,
        InitStrategy::Pairwise => pairwise_initialize(sample, k)?.to_candidate(),
        InitStrategy::Provided(theta) => {
            if theta.dim() != d {
                return Err(Error::InvalidArgument(format!(
                    "initializer dimension {} does not match sample dimension {d}",
                    theta.dim()
                )));
            }
            if theta.components() != k {
                return Err(Error::InvalidArgument(format!(
                    "initializer has {} components but the fit requests {k}",
                    theta.components()
                )));
            }
            theta.to_candidate()
        }
    };
    if options.exchangeable {
        center_candidate = collapse_exchangeable(center_candidate);
    }
    let center = pack(&center_candidate, options.exchangeable);
    debug_assert_eq!(center.len(), m);

    let exchangeable = options.exchangeable;
    let objective = |coords: &[f64]| -> f64 {
        match unpack(coords, d, k, exchangeable) {
            Ok(candidate) => -log_likelihood(&candidate, sample),
            Err(_) => f64::INFINITY,
        }
    };

    let outcomes: Vec<_> = (0..options.n_starts)
        .into_par_iter()
        .map(|s| {
            let mut x0 = center.clone();
            if s > 0 {
                let mut rng = ChaCha8Rng::seed_from_u64(options.seed);
                rng.set_stream(s as u64);
                for x in &mut x0 {
                    *x += JITTER_SCALE * rng.gen_range(-1.0..1.0);
                }
            }
            minimize(
                |c: &[f64]| objective(c),
                &x0,
                JITTER_SCALE,
                options.rel_tol,
                max_evals,
            )
        })
        .collect();

    let evaluations: usize = outcomes.iter().map(|o| o.evaluations).sum();
    let best = outcomes
        .into_iter()
        .enumerate()
        .min_by(|a, b| a.1.f.total_cmp(&b.1.f).then(a.0.cmp(&b.0)))
        .map(|(_, o)| o)
        .expect("n_starts >= 1");
    if !best.f.is_finite() {
        return Err(Error::Numerical(
            "every optimizer start was infeasible; the data may be degenerate".into(),
        ));
    }

    let candidate = unpack(&best.x, d, k, exchangeable)?;
    let theta_hat = candidate
        .validate()
        .map_err(|v| Error::Constraint(v.to_string()))?;
    let ll = -best.f;
    let reduced = theta_hat
        .weights()
        .iter()
        .any(|&p| p <= WEIGHT_COLLAPSE_THRESHOLD);
    Ok(FitResult {
        theta_hat,
        log_likelihood: ll,
        aic: aic_value(m, ll),
        n_params: m,
        converged: best.converged,
        evaluations,
        elapsed_seconds: started.elapsed().as_secs_f64(),
        reduced,
    })
}

/// Builds a d-dimensional starting point from all bivariate fits.
///
/// Each coordinate pair is fitted with the target component count; shared
/// marginal parameters are averaged across the pairs containing them
/// (components matched by rank) and pairwise correlation estimates populate
/// each component's matrix directly. Assembled matrices that fail positive
/// definiteness are shrunk toward independence until they pass.
pub fn pairwise_initialize(sample: &CopulaSample, k: usize) -> Result<MixtureParameters> {
    let d = sample.dim();
    let n = sample.rows();
    if d < 3 {
        return Err(Error::InvalidArgument(
            "pairwise initialization requires dimension at least 3".into(),
        ));
    }
    let m2 = count_parameters(2, k, false)?;

    let pairs: Vec<(usize, usize)> = (0..d)
        .flat_map(|a| (a + 1..d).map(move |b| (a, b)))
        .collect();
    let fits = pairs
        .par_iter()
        .map(|&(a, b)| {
            let mut data = Vec::with_capacity(2 * n);
            for t in 0..n {
                data.push(sample.get(t, a));
                data.push(sample.get(t, b));
            }
            let pair_sample = CopulaSample::new(n, 2, data)?;
            let opts = FitOptions {
                max_evals: Some(4_000 * m2),
                rel_tol: 1e-6,
                n_starts: 2,
                seed: ((a as u64) << 32) | b as u64,
                ..FitOptions::new(k)
            };
            fit(&pair_sample, &opts)
        })
        .collect::<Result<Vec<FitResult>>>()?;

    let tri = d * (d - 1) / 2;
    let per_coord = (d - 1) as f64;
    let mut weights = vec![0.0; k];
    let mut means = vec![vec![0.0; d]; k];
    let mut log_scales = vec![vec![0.0; d]; k];
    let mut corrs = vec![vec![0.0; tri]; k];
    for (&(a, b), fr) in pairs.iter().zip(&fits) {
        let theta = &fr.theta_hat;
        let idx = a * d - a * (a + 1) / 2 + (b - a - 1);
        for j in 0..k {
            weights[j] += theta.weights()[j];
            means[j][a] += theta.mean(j)[0];
            means[j][b] += theta.mean(j)[1];
            log_scales[j][a] += theta.scales(j)[0].ln();
            log_scales[j][b] += theta.scales(j)[1].ln();
            corrs[j][idx] = theta.correlation(j).offdiag()[0];
        }
    }
    let total_weight: f64 = weights.iter().sum();
    for w in &mut weights {
        *w /= total_weight;
    }
    let mut scales = vec![vec![0.0; d]; k];
    for j in 0..k {
        for i in 0..d {
            means[j][i] /= per_coord;
            scales[j][i] = (log_scales[j][i] / per_coord).exp();
        }
    }

    // re-anchor the reference component after averaging
    let base = means[0].clone();
    let c0 = scales[0][0];
    for j in 0..k {
        for i in 0..d {
            means[j][i] -= base[i];
        }
        means[j][0] /= c0;
        scales[j][0] /= c0;
    }
    means[0] = vec![0.0; d];
    scales[0][0] = 1.0;
    for j in 1..k {
        if means[j][0] <= means[j - 1][0] {
            means[j][0] = means[j - 1][0] + 0.1;
        }
    }
    for r in &mut corrs {
        for v in r.iter_mut() {
            *v = v.clamp(-0.99, 0.99);
        }
        shrink_to_pd(d, r)?;
    }

    let candidate = ThetaCandidate {
        weights,
        means,
        scales,
        corr_offdiag: corrs,
    };
    candidate
        .validate()
        .map_err(|v| Error::Constraint(v.to_string()))
}

/// Moment-based start: normal scores sliced into k blocks along the first
/// margin, with block moments re-anchored to the reference constraints.
fn moment_initialize(sample: &CopulaSample, k: usize) -> Result<ThetaCandidate> {
    let n = sample.rows();
    let d = sample.dim();
    if n < k {
        return Err(Error::InvalidArgument(format!(
            "cannot initialize {k} components from {n} observations"
        )));
    }
    let mut scores = vec![0.0; n * d];
    for t in 0..n {
        for i in 0..d {
            scores[t * d + i] = std_normal_quantile(sample.get(t, i));
        }
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| scores[a * d].total_cmp(&scores[b * d]));

    let tri = d * (d - 1) / 2;
    let mut means = Vec::with_capacity(k);
    let mut sds = Vec::with_capacity(k);
    let mut corrs = Vec::with_capacity(k);
    for j in 0..k {
        let rows = &order[j * n / k..(j + 1) * n / k];
        let len = rows.len() as f64;
        let mut m = vec![0.0; d];
        for &t in rows {
            for i in 0..d {
                m[i] += scores[t * d + i];
            }
        }
        for v in &mut m {
            *v /= len;
        }
        let mut s = vec![0.0; d];
        for &t in rows {
            for i in 0..d {
                s[i] += (scores[t * d + i] - m[i]).powi(2);
            }
        }
        for v in &mut s {
            *v = (*v / len).sqrt().max(0.05);
        }
        let mut r = Vec::with_capacity(tri);
        for a in 0..d {
            for b in a + 1..d {
                let mut c = 0.0;
                for &t in rows {
                    c += (scores[t * d + a] - m[a]) * (scores[t * d + b] - m[b]);
                }
                r.push((c / (len * s[a] * s[b])).clamp(-0.95, 0.95));
            }
        }
        means.push(m);
        sds.push(s);
        corrs.push(r);
    }

    let base = means[0].clone();
    let c0 = sds[0][0];
    for j in 0..k {
        for i in 0..d {
            means[j][i] -= base[i];
        }
        means[j][0] /= c0;
        sds[j][0] /= c0;
    }
    means[0] = vec![0.0; d];
    sds[0][0] = 1.0;
    for j in 1..k {
        if means[j][0] <= means[j - 1][0] {
            means[j][0] = means[j - 1][0] + 0.1;
        }
    }
    for r in &mut corrs {
        shrink_to_pd(d, r)?;
    }

    Ok(ThetaCandidate {
        weights: vec![1.0 / k as f64; k],
        means,
        scales: sds,
        corr_offdiag: corrs,
    })
}

/// Collapses a candidate onto the exchangeable submodel: per component, the
/// mean entries average to one shared value and the scales to one shared
/// (geometric mean) value; the reference component keeps mean 0 and scale 1.
fn collapse_exchangeable(c: ThetaCandidate) -> ThetaCandidate {
    let k = c.weights.len();
    let d = c.means[0].len();
    let mut means = Vec::with_capacity(k);
    let mut scales = Vec::with_capacity(k);
    means.push(vec![0.0; d]);
    scales.push(vec![1.0; d]);
    for j in 1..k {
        let m = c.means[j].iter().sum::<f64>() / d as f64;
        means.push(vec![m; d]);
        let ls = c.scales[j].iter().map(|s| s.max(1e-8).ln()).sum::<f64>() / d as f64;
        scales.push(vec![ls.exp(); d]);
    }
    for j in 1..k {
        if means[j][0] <= means[j - 1][0] {
            means[j] = vec![means[j - 1][0] + 0.1; d];
        }
    }
    ThetaCandidate {
        weights: c.weights,
        means,
        scales,
        corr_offdiag: c.corr_offdiag,
    }
}

/// Multiplies all correlations by 0.95 until the matrix passes the positive
/// definiteness check, returning the iteration count.
fn shrink_to_pd(dim: usize, offdiag: &mut [f64]) -> Result<usize> {
    for iter in 0..=200 {
        if CorrelationMatrix::new(dim, offdiag.to_vec()).is_ok() {
            return Ok(iter);
        }
        for r in offdiag.iter_mut() {
            *r *= 0.95;
        }
    }
    Err(Error::Numerical(
        "correlation shrinkage failed to produce a positive-definite matrix".into(),
    ))
}
