//! Joint distribution of the mixture and the implied copula: log density in
//! closed form, rectangle probabilities via quasi-Monte Carlo integration,
//! and the copula density obtained by dividing out the margins.

use super::margins::{marginal_log_pdf, marginal_quantile, marginal_quantile_batch};
use super::params::{CopulaSample, MixtureParameters};
use crate::error::Result;
use crate::numerics::{mvn_cdf_with, mvn_log_pdf, IntegrationConfig, IntegrationResult};
use rayon::prelude::*;

/// Lower clip bound applied to copula arguments before quantile inversion.
/// The upper bound is the mirror image `1 - U_CLIP`.
pub const U_CLIP: f64 = 1e-12;

/// Joint log density of the mixture at `y`.
///
/// Computed as a log-sum-exp over component Gaussian log densities, so it
/// stays finite far into the tails. Panics on dimension mismatch.
pub fn joint_log_pdf(theta: &MixtureParameters, y: &[f64]) -> f64 {
    assert_eq!(y.len(), theta.dim(), "point dimension mismatch");
    let mut best = f64::NEG_INFINITY;
    let mut terms = Vec::with_capacity(theta.components());
    for j in 0..theta.components() {
        let p = theta.weights()[j];
        if p == 0.0 {
            continue;
        }
        let lp = p.ln() + mvn_log_pdf(y, theta.mean(j), theta.factor(j));
        best = best.max(lp);
        terms.push(lp);
    }
    if !best.is_finite() {
        return f64::NEG_INFINITY;
    }
    let sum: f64 = terms.iter().map(|&t| (t - best).exp()).sum();
    best + sum.ln()
}

/// Joint CDF `P(Y <= y)`, a weight-combined sum of component orthant
/// probabilities. Entries of `y` may be infinite.
///
/// The returned standard error bounds the combined integration error; each
/// component is integrated to the configured target, so the total error is at
/// most `k` times it.
pub fn joint_cdf(
    theta: &MixtureParameters,
    y: &[f64],
    config: IntegrationConfig,
) -> Result<IntegrationResult> {
    assert_eq!(y.len(), theta.dim(), "point dimension mismatch");
    let d = theta.dim();
    let mut z = vec![0.0; d];
    let mut value = 0.0;
    let mut std_error = 0.0;
    let mut evaluations = 0u64;
    let mut converged = true;
    for j in 0..theta.components() {
        let p = theta.weights()[j];
        if p == 0.0 {
            continue;
        }
        for i in 0..d {
            z[i] = (y[i] - theta.mean(j)[i]) / theta.scales(j)[i];
        }
        let r = mvn_cdf_with(&z, theta.correlation(j), component_config(config, j))?;
        value += p * r.value;
        std_error += p * r.std_error;
        evaluations += r.evaluations;
        converged &= r.converged;
    }
    Ok(IntegrationResult {
        value: value.clamp(0.0, 1.0),
        std_error,
        evaluations,
        converged,
    })
}

/// Joint survivor `P(Y > y)` with the same error accounting as [`joint_cdf`].
pub fn joint_survivor(
    theta: &MixtureParameters,
    y: &[f64],
    config: IntegrationConfig,
) -> Result<IntegrationResult> {
    assert_eq!(y.len(), theta.dim(), "point dimension mismatch");
    let d = theta.dim();
    let mut z = vec![0.0; d];
    let mut value = 0.0;
    let mut std_error = 0.0;
    let mut evaluations = 0u64;
    let mut converged = true;
    for j in 0..theta.components() {
        let p = theta.weights()[j];
        if p == 0.0 {
            continue;
        }
        for i in 0..d {
            // P(Z > z) = P(-Z < -z) and -Z has the same correlation matrix
            z[i] = -(y[i] - theta.mean(j)[i]) / theta.scales(j)[i];
        }
        let r = mvn_cdf_with(&z, theta.correlation(j), component_config(config, j))?;
        value += p * r.value;
        std_error += p * r.std_error;
        evaluations += r.evaluations;
        converged &= r.converged;
    }
    Ok(IntegrationResult {
        value: value.clamp(0.0, 1.0),
        std_error,
        evaluations,
        converged,
    })
}

/// Log copula density at `u`.
///
/// Arguments are clipped into `[1e-12, 1 - 1e-12]` before marginal quantile
/// inversion, then the joint log density is evaluated at the resulting point
/// and the marginal log densities are subtracted. Panics on dimension
/// mismatch.
pub fn copula_log_density(theta: &MixtureParameters, u: &[f64]) -> f64 {
    assert_eq!(u.len(), theta.dim(), "point dimension mismatch");
    let d = theta.dim();
    let mut y = vec![0.0; d];
    let mut marg = 0.0;
    for i in 0..d {
        let ui = u[i].clamp(U_CLIP, 1.0 - U_CLIP);
        y[i] = marginal_quantile(theta, i, ui);
        marg += marginal_log_pdf(theta, i, y[i]);
    }
    joint_log_pdf(theta, &y) - marg
}

/// Log copula density for every row of a sample.
///
/// Quantile inversion runs once per margin over the whole column with a
/// sorted warm-started sweep, which is the dominant cost at likelihood-
/// evaluation volumes; rows then evaluate in parallel. The result is ordered
/// like the sample and is a pure function of its inputs.
pub fn copula_log_density_rows(theta: &MixtureParameters, sample: &CopulaSample) -> Vec<f64> {
    assert_eq!(sample.dim(), theta.dim(), "sample dimension mismatch");
    let n = sample.rows();
    let d = sample.dim();
    let mut quantiles = vec![0.0; n * d];
    let mut log_margs = vec![0.0; n * d];
    for i in 0..d {
        let col: Vec<f64> = (0..n)
            .map(|t| sample.get(t, i).clamp(U_CLIP, 1.0 - U_CLIP))
            .collect();
        let qs = marginal_quantile_batch(theta, i, &col);
        for t in 0..n {
            quantiles[t * d + i] = qs[t];
            log_margs[t * d + i] = marginal_log_pdf(theta, i, qs[t]);
        }
    }
    quantiles
        .par_chunks(d)
        .zip(log_margs.par_chunks(d))
        .map(|(y, lm)| joint_log_pdf(theta, y) - lm.iter().sum::<f64>())
        .collect()
}

/// Copula survivor `P(U > u)` at a point with entries in `(0, 1)`.
pub fn copula_joint_survivor(
    theta: &MixtureParameters,
    u: &[f64],
    config: IntegrationConfig,
) -> Result<IntegrationResult> {
    let y = invert_point(theta, u);
    joint_survivor(theta, &y, config)
}

/// Copula CDF `P(U <= u)` at a point with entries in `(0, 1)`.
pub fn copula_joint_cdf(
    theta: &MixtureParameters,
    u: &[f64],
    config: IntegrationConfig,
) -> Result<IntegrationResult> {
    let y = invert_point(theta, u);
    joint_cdf(theta, &y, config)
}

fn invert_point(theta: &MixtureParameters, u: &[f64]) -> Vec<f64> {
    assert_eq!(u.len(), theta.dim(), "point dimension mismatch");
    u.iter()
        .enumerate()
        .map(|(i, &ui)| {
            assert!(ui > 0.0 && ui < 1.0, "copula argument {ui} outside (0, 1)");
            marginal_quantile(theta, i, ui)
        })
        .collect()
}

/// Decorrelates the per-component integration streams while keeping them a
/// deterministic function of the configured seed.
fn component_config(config: IntegrationConfig, j: usize) -> IntegrationConfig {
    IntegrationConfig {
        seed: config
            .seed
            .wrapping_add((j as u64).wrapping_mul(0x9e37_79b9_7f4a_7c15)),
        ..config
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::margins::{marginal_cdf, marginal_quantile};
    use crate::model::params::ThetaCandidate;
    use crate::numerics::{mvn_survivor, CorrelationMatrix};
    use approx::assert_abs_diff_eq;

    fn bivariate_k2() -> MixtureParameters {
        ThetaCandidate {
            weights: vec![0.2, 0.8],
            means: vec![vec![0.0, 0.0], vec![2.0, 4.0]],
            scales: vec![vec![1.0, 0.61], vec![0.43, 0.72]],
            corr_offdiag: vec![vec![0.66], vec![0.57]],
        }
        .validate()
        .unwrap()
    }

    fn standard_k1(d: usize, rho: f64) -> MixtureParameters {
        ThetaCandidate {
            weights: vec![1.0],
            means: vec![vec![0.0; d]],
            scales: vec![vec![1.0; d]],
            corr_offdiag: vec![vec![rho; d * (d - 1) / 2]],
        }
        .validate()
        .unwrap()
    }

    const LOG_STD_NORMAL_AT_ZERO: f64 = -0.918_938_533_204_672_7;

    #[test]
    fn standard_log_pdf_at_origin() {
        for d in 2..=4 {
            let theta = standard_k1(d, 0.0);
            let y = vec![0.0; d];
            assert_abs_diff_eq!(
                joint_log_pdf(&theta, &y),
                d as f64 * LOG_STD_NORMAL_AT_ZERO,
                epsilon = 1e-8
            );
        }
    }

    #[test]
    fn zero_weight_component_is_inert() {
        let with_ghost = ThetaCandidate {
            weights: vec![1.0, 0.0],
            means: vec![vec![0.0, 0.0], vec![3.0, 1.0]],
            scales: vec![vec![1.0, 1.0], vec![2.0, 2.0]],
            corr_offdiag: vec![vec![0.3], vec![-0.4]],
        }
        .validate()
        .unwrap();
        let solo = standard_k1(2, 0.3);
        for &y in &[[0.0, 0.0], [1.2, -0.7], [-3.0, 2.0]] {
            assert_eq!(joint_log_pdf(&with_ghost, &y), joint_log_pdf(&solo, &y));
        }
    }

    #[test]
    fn mixture_log_pdf_matches_direct_sum() {
        let theta = bivariate_k2();
        let y = [1.0, 2.5];
        let mut direct = 0.0;
        for j in 0..2 {
            let p = theta.weights()[j];
            direct += p * mvn_log_pdf(&y, theta.mean(j), theta.factor(j)).exp();
        }
        assert_abs_diff_eq!(joint_log_pdf(&theta, &y), direct.ln(), epsilon = 1e-12);
    }

    #[test]
    fn joint_density_integrates_to_one() {
        let theta = bivariate_k2();
        // composite Simpson on [-12, 18]^2; the mixture mass outside is
        // far below the tolerance
        let n = 1200usize;
        let (a, b) = (-12.0, 18.0);
        let h = (b - a) / n as f64;
        let w1 = |idx: usize| -> f64 {
            if idx == 0 || idx == n {
                1.0
            } else if idx % 2 == 1 {
                4.0
            } else {
                2.0
            }
        };
        let mut total = 0.0;
        for r in 0..=n {
            let yr = a + h * r as f64;
            let mut row = 0.0;
            for c in 0..=n {
                let yc = a + h * c as f64;
                row += w1(c) * joint_log_pdf(&theta, &[yr, yc]).exp();
            }
            total += w1(r) * row;
        }
        total *= (h / 3.0) * (h / 3.0);
        assert_abs_diff_eq!(total, 1.0, epsilon = 1e-4);
    }

    #[test]
    fn independence_survivor_at_origin() {
        for d in 2..=3 {
            let theta = standard_k1(d, 0.0);
            let y = vec![0.0; d];
            let r = joint_survivor(&theta, &y, IntegrationConfig::default()).unwrap();
            assert_abs_diff_eq!(r.value, 0.5_f64.powi(d as i32), epsilon = 1e-5);
        }
    }

    #[test]
    fn survivor_drops_coordinates_at_minus_infinity() {
        let theta3 = standard_k1(3, 0.0);
        let theta2 = standard_k1(2, 0.0);
        let cfg = IntegrationConfig::default();
        let full = joint_survivor(&theta3, &[-50.0, 0.4, -0.8], cfg).unwrap();
        let reduced = joint_survivor(&theta2, &[0.4, -0.8], cfg).unwrap();
        assert_abs_diff_eq!(full.value, reduced.value, epsilon = 1e-6);

        let exact = joint_survivor(&theta3, &[f64::NEG_INFINITY, 0.4, -0.8], cfg).unwrap();
        assert_abs_diff_eq!(exact.value, reduced.value, epsilon = 1e-6);
    }

    #[test]
    fn equal_weight_survivor_averages_components() {
        let theta = ThetaCandidate {
            weights: vec![0.5, 0.5],
            means: vec![vec![0.0, 0.0], vec![1.0, 1.0]],
            scales: vec![vec![1.0, 2.0], vec![0.5, 1.5]],
            corr_offdiag: vec![vec![0.4], vec![-0.2]],
        }
        .validate()
        .unwrap();
        let y = [0.7, 0.9];
        let got = joint_survivor(&theta, &y, IntegrationConfig::default())
            .unwrap()
            .value;
        let mut expected = 0.0;
        for j in 0..2 {
            let z: Vec<f64> = (0..2)
                .map(|i| (y[i] - theta.mean(j)[i]) / theta.scales(j)[i])
                .collect();
            expected += 0.5 * mvn_survivor(&z, theta.correlation(j), 1e-7).unwrap().value;
        }
        assert_abs_diff_eq!(got, expected, epsilon = 1e-6);
    }

    #[test]
    fn cdf_at_origin_and_far_corner() {
        let theta = standard_k1(2, 0.0);
        let cfg = IntegrationConfig::default();
        let r = joint_cdf(&theta, &[0.0, 0.0], cfg).unwrap();
        assert_abs_diff_eq!(r.value, 0.25, epsilon = 1e-6);
        let hi = joint_cdf(&theta, &[50.0, 50.0], cfg).unwrap();
        assert_abs_diff_eq!(hi.value, 1.0, epsilon = 1e-6);
    }

    #[test]
    fn cdf_and_survivor_satisfy_inclusion_exclusion() {
        let theta = bivariate_k2();
        let cfg = IntegrationConfig::default();
        for &y in &[[0.5, 1.0], [2.0, 3.5], [-1.0, 4.0]] {
            let cdf = joint_cdf(&theta, &y, cfg).unwrap().value;
            let sur = joint_survivor(&theta, &y, cfg).unwrap().value;
            let f1 = marginal_cdf(&theta, 0, y[0]);
            let f2 = marginal_cdf(&theta, 1, y[1]);
            assert_abs_diff_eq!(sur, 1.0 - f1 - f2 + cdf, epsilon = 1e-5);
        }
    }

    #[test]
    fn independence_copula_density_is_flat() {
        let theta = standard_k1(2, 0.0);
        for &u in &[[0.5, 0.5], [0.1, 0.9], [0.73, 0.22]] {
            assert_abs_diff_eq!(copula_log_density(&theta, &u), 0.0, epsilon = 1e-8);
        }
    }

    #[test]
    fn gaussian_copula_density_at_median() {
        // at u = (1/2, 1/2) the quantiles are the means, where the log
        // copula density of a single Gaussian component is -log sqrt(1 - rho^2)
        for &rho in &[-0.6, 0.3, 0.66, 0.9] {
            let theta = standard_k1(2, rho);
            let expected = -0.5 * (1.0 - rho * rho).ln();
            assert_abs_diff_eq!(
                copula_log_density(&theta, &[0.5, 0.5]),
                expected,
                epsilon = 1e-8
            );
        }
    }

    #[test]
    fn copula_density_integrates_to_one() {
        // tensor tanh-sinh rule on (0, 1)^2; double-exponential decay of the
        // weights tames the corner behaviour of the copula density
        let theta = bivariate_k2();
        let h = 0.08;
        let kmax = 55i64;
        let mut nodes = Vec::new();
        for k in -kmax..=kmax {
            let t = h * k as f64;
            let s = std::f64::consts::FRAC_PI_2 * t.sinh();
            let u = 0.5 * (1.0 + s.tanh());
            let w = 0.5 * std::f64::consts::FRAC_PI_2 * t.cosh() / s.cosh().powi(2);
            if u > 0.0 && u < 1.0 && w > 1e-300 {
                nodes.push((u, w * h));
            }
        }
        let mut total = 0.0;
        for &(u1, w1) in &nodes {
            for &(u2, w2) in &nodes {
                total += w1 * w2 * copula_log_density(&theta, &[u1, u2]).exp();
            }
        }
        assert_abs_diff_eq!(total, 1.0, epsilon = 1e-3);
    }

    #[test]
    fn copula_rows_match_scalar_evaluation() {
        let theta = bivariate_k2();
        let data = vec![0.3, 0.7, 0.05, 0.95, 0.5, 0.5, 0.88, 0.12, 0.61, 0.33];
        let sample = CopulaSample::new(5, 2, data).unwrap();
        let rows = copula_log_density_rows(&theta, &sample);
        for t in 0..5 {
            assert_abs_diff_eq!(
                rows[t],
                copula_log_density(&theta, sample.row(t)),
                epsilon = 1e-9
            );
        }
    }

    #[test]
    fn copula_arguments_are_clipped_not_rejected() {
        let theta = bivariate_k2();
        let v = copula_log_density(&theta, &[0.0, 1.0]);
        assert!(v.is_finite());
        assert_eq!(v, copula_log_density(&theta, &[U_CLIP, 1.0 - U_CLIP]));
    }

    #[test]
    fn copula_survivor_for_independence() {
        let theta = standard_k1(2, 0.0);
        let cfg = IntegrationConfig::default();
        for &r in &[0.2, 0.5, 0.9] {
            let got = copula_joint_survivor(&theta, &[r, r], cfg).unwrap().value;
            assert_abs_diff_eq!(got, (1.0 - r) * (1.0 - r), epsilon = 1e-5);
        }
    }

    #[test]
    fn copula_survivor_orthant_value() {
        // P(U1 > 1/2, U2 > 1/2) for a Gaussian copula with rho = 0.5 is 1/3
        let theta = standard_k1(2, 0.5);
        let got = copula_joint_survivor(&theta, &[0.5, 0.5], IntegrationConfig::default())
            .unwrap()
            .value;
        assert_abs_diff_eq!(got, 1.0 / 3.0, epsilon = 1e-5);
    }

    #[test]
    fn copula_survivor_tends_to_one_at_lower_corner() {
        let theta = bivariate_k2();
        let got = copula_joint_survivor(&theta, &[1e-9, 1e-9], IntegrationConfig::default())
            .unwrap()
            .value;
        assert_abs_diff_eq!(got, 1.0, epsilon = 1e-5);
    }

    #[test]
    fn copula_cdf_survivor_duality() {
        let theta = bivariate_k2();
        let cfg = IntegrationConfig::default();
        for &u in &[[0.3, 0.6], [0.8, 0.2]] {
            let cdf = copula_joint_cdf(&theta, &u, cfg).unwrap().value;
            let sur = copula_joint_survivor(&theta, &u, cfg).unwrap().value;
            assert_abs_diff_eq!(sur, 1.0 - u[0] - u[1] + cdf, epsilon = 1e-5);
        }
    }

    #[test]
    fn mixed_difference_of_cdf_recovers_density() {
        let theta = bivariate_k2();
        let cfg = IntegrationConfig::with_target(1e-8);
        let (u, v) = (0.45, 0.6);
        let h = 0.015;
        let c = |a: f64, b: f64| copula_joint_cdf(&theta, &[a, b], cfg).unwrap().value;
        let numeric =
            (c(u + h, v + h) - c(u + h, v - h) - c(u - h, v + h) + c(u - h, v - h)) / (4.0 * h * h);
        let density = copula_log_density(&theta, &[u, v]).exp();
        assert_abs_diff_eq!(numeric, density, epsilon = 1e-3);
    }

    #[test]
    fn exchangeable_density_is_permutation_invariant() {
        // equal means and scales within each component plus exchangeable
        // correlations make the copula symmetric in its arguments
        let theta = ThetaCandidate {
            weights: vec![0.3, 0.7],
            means: vec![vec![0.0; 3], vec![2.0; 3]],
            scales: vec![vec![1.0; 3], vec![0.8; 3]],
            corr_offdiag: vec![vec![0.5; 3], vec![0.2; 3]],
        }
        .validate()
        .unwrap();
        let u = [0.2, 0.55, 0.85];
        let base = copula_log_density(&theta, &u);
        for perm in [[1usize, 0, 2], [2, 1, 0], [1, 2, 0]] {
            let pu: Vec<f64> = perm.iter().map(|&i| u[i]).collect();
            assert_abs_diff_eq!(copula_log_density(&theta, &pu), base, epsilon = 1e-8);
        }
    }

    #[test]
    fn survivor_error_budget_scales_with_components() {
        let theta = bivariate_k2();
        let cfg = IntegrationConfig::default();
        let r = joint_survivor(&theta, &[1.0, 2.0], cfg).unwrap();
        assert!(r.converged);
        assert!(r.std_error <= 2.0 * cfg.target_abs_err + 1e-15);
    }

    #[test]
    fn component_streams_are_decorrelated_but_deterministic() {
        let theta = bivariate_k2();
        let cfg = IntegrationConfig::default();
        let a = joint_survivor(&theta, &[1.0, 2.0], cfg).unwrap();
        let b = joint_survivor(&theta, &[1.0, 2.0], cfg).unwrap();
        assert_eq!(a.value.to_bits(), b.value.to_bits());
    }

    #[test]
    fn quantile_inversion_feeds_survivor() {
        // copula survivor at u equals joint survivor at the marginal quantiles
        let theta = bivariate_k2();
        let cfg = IntegrationConfig::default();
        let u = [0.35, 0.75];
        let y: Vec<f64> = (0..2).map(|i| marginal_quantile(&theta, i, u[i])).collect();
        let a = copula_joint_survivor(&theta, &u, cfg).unwrap().value;
        let b = joint_survivor(&theta, &y, cfg).unwrap().value;
        assert_eq!(a.to_bits(), b.to_bits());
    }

    #[test]
    fn correlation_submatrix_used_after_reduction() {
        // dropping via +infinity in the CDF keeps the remaining pair's
        // correlation intact
        let corr = CorrelationMatrix::new(3, vec![0.5, 0.3, -0.2]).unwrap();
        let theta = ThetaCandidate {
            weights: vec![1.0],
            means: vec![vec![0.0; 3]],
            scales: vec![vec![1.0; 3]],
            corr_offdiag: vec![corr.offdiag().to_vec()],
        }
        .validate()
        .unwrap();
        let cfg = IntegrationConfig::default();
        let reduced = joint_cdf(&theta, &[f64::INFINITY, 0.3, -0.4], cfg)
            .unwrap()
            .value;
        let pair = CorrelationMatrix::new(2, vec![-0.2]).unwrap();
        let direct = mvn_cdf_with(&[0.3, -0.4], &pair, cfg).unwrap().value;
        assert_abs_diff_eq!(reduced, direct, epsilon = 1e-6);
    }
}
