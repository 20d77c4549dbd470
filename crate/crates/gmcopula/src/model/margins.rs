//! Marginal distributions of the mixture: each coordinate is a univariate
//! Gaussian mixture, so CDF and density are closed-form sums while the
//! quantile needs a safeguarded Newton solve.

use super::params::MixtureParameters;
use crate::numerics::{std_normal_cdf, std_normal_log_pdf, std_normal_pdf, std_normal_survivor};

/// Marginal density of coordinate `i` at `y`.
///
/// Panics if `i` is out of range.
pub fn marginal_pdf(theta: &MixtureParameters, i: usize, y: f64) -> f64 {
    assert!(i < theta.dim(), "margin index {i} out of range");
    let mut f = 0.0;
    for j in 0..theta.components() {
        let p = theta.weights()[j];
        if p == 0.0 {
            continue;
        }
        let s = theta.scales(j)[i];
        f += p * std_normal_pdf((y - theta.mean(j)[i]) / s) / s;
    }
    f
}

/// Log marginal density of coordinate `i` at `y`, stable far into the tails.
pub fn marginal_log_pdf(theta: &MixtureParameters, i: usize, y: f64) -> f64 {
    assert!(i < theta.dim(), "margin index {i} out of range");
    let mut terms = Vec::with_capacity(theta.components());
    for j in 0..theta.components() {
        let p = theta.weights()[j];
        if p == 0.0 {
            continue;
        }
        let s = theta.scales(j)[i];
        terms.push(p.ln() + std_normal_log_pdf((y - theta.mean(j)[i]) / s) - s.ln());
    }
    log_sum_exp(&terms)
}

/// Marginal CDF of coordinate `i` at `y`. Tolerates infinite `y`.
pub fn marginal_cdf(theta: &MixtureParameters, i: usize, y: f64) -> f64 {
    assert!(i < theta.dim(), "margin index {i} out of range");
    let mut f = 0.0;
    for j in 0..theta.components() {
        let p = theta.weights()[j];
        if p == 0.0 {
            continue;
        }
        let s = theta.scales(j)[i];
        f += p * std_normal_cdf((y - theta.mean(j)[i]) / s);
    }
    f
}

/// Marginal survivor function of coordinate `i` at `y`, computed on the upper
/// tail directly so it stays accurate where `1 - F` would cancel.
pub fn marginal_survivor(theta: &MixtureParameters, i: usize, y: f64) -> f64 {
    assert!(i < theta.dim(), "margin index {i} out of range");
    let mut f = 0.0;
    for j in 0..theta.components() {
        let p = theta.weights()[j];
        if p == 0.0 {
            continue;
        }
        let s = theta.scales(j)[i];
        f += p * std_normal_survivor((y - theta.mean(j)[i]) / s);
    }
    f
}

/// Marginal quantile of coordinate `i` at probability `u`.
///
/// Panics if `u` is outside the open interval `(0, 1)` or `i` is out of
/// range. The result `y` satisfies `|F_i(y) - u| <= 1e-10`.
pub fn marginal_quantile(theta: &MixtureParameters, i: usize, u: f64) -> f64 {
    assert!(u > 0.0 && u < 1.0, "quantile level {u} outside (0, 1)");
    assert!(i < theta.dim(), "margin index {i} out of range");
    let (lo, hi) = bracket(theta, i, u, u);
    solve_quantile(theta, i, u, lo, hi, 0.5 * (lo + hi))
}

/// Marginal quantiles for many probabilities at once.
///
/// Sorts the levels and sweeps upward, warm-starting each solve from the
/// previous root; for the sorted batches produced by likelihood evaluation
/// this cuts the Newton work to a couple of iterations per level. Results
/// come back in input order and match [`marginal_quantile`] to within the
/// solver tolerance.
pub fn marginal_quantile_batch(theta: &MixtureParameters, i: usize, us: &[f64]) -> Vec<f64> {
    assert!(i < theta.dim(), "margin index {i} out of range");
    if us.is_empty() {
        return Vec::new();
    }
    for &u in us {
        assert!(u > 0.0 && u < 1.0, "quantile level {u} outside (0, 1)");
    }
    let mut order: Vec<usize> = (0..us.len()).collect();
    order.sort_by(|&a, &b| us[a].total_cmp(&us[b]));

    let u_min = us[order[0]];
    let u_max = us[order[us.len() - 1]];
    let (lo0, _) = bracket(theta, i, u_min, u_min);
    let (_, hi0) = bracket(theta, i, u_max, u_max);

    let mut out = vec![0.0; us.len()];
    let mut prev_x = lo0;
    let mut prev_u = 0.0;
    for &idx in &order {
        let u = us[idx];
        let x = if u == prev_u {
            prev_x
        } else {
            // monotone sweep: the previous root is a valid lower bound
            solve_quantile(theta, i, u, prev_x, hi0, prev_x)
        };
        out[idx] = x;
        prev_x = x;
        prev_u = u;
    }
    out
}

fn log_sum_exp(terms: &[f64]) -> f64 {
    let m = terms.iter().fold(f64::NEG_INFINITY, |a, &b| a.max(b));
    if !m.is_finite() {
        return m;
    }
    let s: f64 = terms.iter().map(|&t| (t - m).exp()).sum();
    m + s.ln()
}

/// Initial bracket containing the `u`-quantile: component means plus or minus
/// ten scales, widened geometrically until the CDF straddles both levels.
fn bracket(theta: &MixtureParameters, i: usize, u_lo: f64, u_hi: f64) -> (f64, f64) {
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for j in 0..theta.components() {
        let m = theta.mean(j)[i];
        let s = theta.scales(j)[i];
        lo = lo.min(m - 10.0 * s);
        hi = hi.max(m + 10.0 * s);
    }
    let mut span = hi - lo;
    let mut guard = 0;
    while marginal_cdf(theta, i, lo) > u_lo && guard < 200 {
        lo -= span;
        span *= 2.0;
        guard += 1;
    }
    span = hi - lo;
    guard = 0;
    while marginal_cdf(theta, i, hi) < u_hi && guard < 200 {
        hi += span;
        span *= 2.0;
        guard += 1;
    }
    (lo, hi)
}

/// Newton iteration with a bisection safeguard on a bracketing interval.
fn solve_quantile(
    theta: &MixtureParameters,
    i: usize,
    u: f64,
    mut lo: f64,
    mut hi: f64,
    start: f64,
) -> f64 {
    let mut x = start.clamp(lo, hi);
    for _ in 0..200 {
        let f = marginal_cdf(theta, i, x) - u;
        if f > 0.0 {
            hi = x;
        } else {
            lo = x;
        }
        if f.abs() <= 1e-12 {
            return x;
        }
        let dens = marginal_pdf(theta, i, x);
        let mut next = if dens > 0.0 { x - f / dens } else { f64::NAN };
        if !next.is_finite() || next <= lo || next >= hi {
            next = 0.5 * (lo + hi);
        }
        if (next - x).abs() <= 1e-15 * x.abs().max(1.0) {
            // stalled at floating point resolution; the residual is as small
            // as representable
            return next;
        }
        x = next;
    }
    x
}
