//! Seeded simulation from the copula: draw mixture vectors, push each
//! coordinate through its marginal CDF.

use super::margins::marginal_cdf;
use super::params::{CopulaSample, MixtureParameters, ONE_MINUS_EPS};
use crate::error::{Error, Result};
use crate::numerics::std_normal_quantile;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

/// Draws `n` rows from the copula of `theta`.
///
/// Each row uses its own counter-based stream of the seeded generator, so row
/// `t` is a pure function of `(seed, t)`: results are bit-reproducible, rows
/// can be generated in parallel, and a longer run extends a shorter one with
/// the same seed. Entries are clamped into the open interval `(0, 1)`.
pub fn simulate(theta: &MixtureParameters, n: usize, seed: u64) -> Result<CopulaSample> {
    if n == 0 {
        return Err(Error::InvalidArgument(
            "simulation needs at least one row".into(),
        ));
    }
    let d = theta.dim();
    let k = theta.components();
    let mut cumulative = vec![0.0; k];
    let mut acc = 0.0;
    for j in 0..k {
        acc += theta.weights()[j];
        cumulative[j] = acc;
    }

    let mut data = vec![0.0; n * d];
    data.par_chunks_mut(d).enumerate().for_each(|(t, row)| {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(t as u64);

        let v: f64 = rng.gen();
        let j = cumulative.iter().position(|&c| v < c).unwrap_or(k - 1);

        // z = mu_j + L_j * eps with L_j the covariance Cholesky factor;
        // normals come from quantile inversion to stay on one uniform stream
        let eps: Vec<f64> = (0..d)
            .map(|_| std_normal_quantile(rng.gen::<f64>().max(1e-300)))
            .collect();
        let lower = theta.factor(j).lower();
        for i in 0..d {
            let mut z = theta.mean(j)[i];
            for l in 0..=i {
                z += lower[i * d + l] * eps[l];
            }
            row[i] = marginal_cdf(theta, i, z).clamp(f64::MIN_POSITIVE, ONE_MINUS_EPS);
        }
    });

    CopulaSample::new(n, d, data)
}
