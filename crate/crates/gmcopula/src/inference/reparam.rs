//! Bijective map between constrained mixture parameters and unconstrained
//! optimizer coordinates.
//!
//! Layout (non-exchangeable), in order: stick-breaking weight logits,
//! log gaps between consecutive first mean coordinates, free mean entries,
//! log scales (all but the fixed reference scale), and Fisher-z transformed
//! correlations. The exchangeable layout collapses each component's mean and
//! scale vectors to one shared value apiece.

use crate::error::{Error, Result};
use crate::model::ThetaCandidate;

/// Coordinate count of the packed representation, which is also the free
/// parameter count of the model.
pub fn count_parameters(d: usize, k: usize, exchangeable: bool) -> Result<usize> {
    if d < 2 {
        return Err(Error::InvalidArgument(format!(
            "dimension must be at least 2, got {d}"
        )));
    }
    if k < 1 {
        return Err(Error::InvalidArgument(
            "component count must be at least 1".into(),
        ));
    }
    let tri = d * (d - 1) / 2;
    Ok(if exchangeable {
        // one shared mean and one shared scale per component, with the
        // reference component's pair fixed at (0, 1)
        3 * (k - 1) + k * tri
    } else {
        (k - 1) + (k - 1) * d + (k * d - 1) + k * tri
    })
}

/// Maps interior constrained parameters to unconstrained coordinates.
///
/// Defined on the interior: strictly positive weights and correlations
/// strictly inside (−1, 1). With `exchangeable` set, every component must
/// have equal mean entries and equal scale entries. Panics when those
/// structural requirements are not met.
pub fn pack(candidate: &ThetaCandidate, exchangeable: bool) -> Vec<f64> {
    let k = candidate.weights.len();
    let d = candidate.means[0].len();
    let mut coords = Vec::with_capacity(count_parameters(d, k, exchangeable).unwrap());

    // stick-breaking logits with centered offsets
    let mut remaining = 1.0;
    for j in 0..k - 1 {
        let p = candidate.weights[j];
        assert!(p > 0.0, "pack requires strictly positive weights");
        let v = (p / remaining).clamp(1e-300, 1.0 - 1e-15);
        coords.push((v / (1.0 - v)).ln() + ((k - 1 - j) as f64).ln());
        remaining -= p;
    }
    assert!(
        remaining > 0.0,
        "pack requires a strictly positive final weight"
    );

    // log gaps of the ordered first mean coordinates
    for j in 1..k {
        let gap = candidate.means[j][0] - candidate.means[j - 1][0];
        assert!(gap > 0.0, "pack requires strictly increasing first means");
        coords.push(gap.ln());
    }

    if exchangeable {
        for j in 1..k {
            let m = &candidate.means[j];
            assert!(
                m.iter().all(|&x| x == m[0]),
                "exchangeable pack requires equal mean entries per component"
            );
        }
        for (j, s) in candidate.scales.iter().enumerate() {
            assert!(
                s.iter().all(|&x| x == s[0]),
                "exchangeable pack requires equal scale entries per component"
            );
            if j > 0 {
                coords.push(s[0].ln());
            }
        }
    } else {
        // free mean entries, components 2..k, coordinates 2..d
        for j in 1..k {
            coords.extend_from_slice(&candidate.means[j][1..]);
        }
        // log scales, skipping the fixed (1,1) reference entry
        coords.extend(candidate.scales[0][1..].iter().map(|s| s.ln()));
        for j in 1..k {
            coords.extend(candidate.scales[j].iter().map(|s| s.ln()));
        }
    }

    for rho in &candidate.corr_offdiag {
        coords.extend(rho.iter().map(|r| r.atanh()));
    }
    coords
}

/// Maps unconstrained coordinates back to a parameter candidate.
///
/// Total on all of R^m: every output satisfies the simplex, reference,
/// ordering, and positivity constraints by construction; only positive
/// definiteness of the correlation matrices can still fail validation.
/// Errors if the coordinate count does not match `(d, k, exchangeable)`.
pub fn unpack(coords: &[f64], d: usize, k: usize, exchangeable: bool) -> Result<ThetaCandidate> {
    let expect = count_parameters(d, k, exchangeable)?;
    if coords.len() != expect {
        return Err(Error::InvalidArgument(format!(
            "expected {expect} coordinates for d = {d}, k = {k}, got {}",
            coords.len()
        )));
    }
    let mut pos = 0;
    let mut take = |m: usize| {
        let s = &coords[pos..pos + m];
        pos += m;
        s
    };

    let mut weights = Vec::with_capacity(k);
    let mut remaining = 1.0;
    for (j, &z) in take(k - 1).iter().enumerate() {
        // the offset makes the all-zero coordinate vector yield equal weights
        let v = sigmoid(z - ((k - 1 - j) as f64).ln()).clamp(1e-300, 1.0 - 1e-15);
        let p = v * remaining;
        weights.push(p);
        remaining -= p;
    }
    weights.push(remaining.max(1e-300));

    let mut first_means = Vec::with_capacity(k);
    first_means.push(0.0);
    for &g in take(k - 1) {
        // bounded so extreme coordinates cannot produce non-finite means
        let gap = g.clamp(-700.0, 700.0).exp().max(1e-300);
        first_means.push(first_means.last().unwrap() + gap);
    }

    let mut means = Vec::with_capacity(k);
    let mut scales = Vec::with_capacity(k);
    if exchangeable {
        for &m in &first_means {
            means.push(vec![m; d]);
        }
        scales.push(vec![1.0; d]);
        for &ls in take(k - 1) {
            scales.push(vec![ls.clamp(-700.0, 700.0).exp(); d]);
        }
    } else {
        means.push(vec![0.0; d]);
        for &m1 in first_means.iter().skip(1) {
            let mut m = Vec::with_capacity(d);
            m.push(m1);
            m.extend(take(d - 1).iter().map(|&x| x.clamp(-1e300, 1e300)));
            means.push(m);
        }
        let mut s0 = Vec::with_capacity(d);
        s0.push(1.0);
        s0.extend(take(d - 1).iter().map(|&x| x.clamp(-700.0, 700.0).exp()));
        scales.push(s0);
        for _ in 1..k {
            scales.push(
                take(d)
                    .iter()
                    .map(|&x| x.clamp(-700.0, 700.0).exp())
                    .collect(),
            );
        }
    }

    let tri = d * (d - 1) / 2;
    let mut corr_offdiag = Vec::with_capacity(k);
    for _ in 0..k {
        corr_offdiag.push(take(tri).iter().map(|&t| t.tanh()).collect());
    }
    debug_assert_eq!(pos, coords.len());

    Ok(ThetaCandidate {
        weights,
        means,
        scales,
        corr_offdiag,
    })
}

fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn bivariate_k2() -> ThetaCandidate {
        ThetaCandidate {
            weights: vec![0.2, 0.8],
            means: vec![vec![0.0, 0.0], vec![2.0, 4.0]],
            scales: vec![vec![1.0, 0.61], vec![0.43, 0.72]],
            corr_offdiag: vec![vec![0.66], vec![0.57]],
        }
    }

    #[test]
    fn parameter_counts_match_enumeration() {
        assert_eq!(count_parameters(5, 2, false).unwrap(), 35);
        assert_eq!(count_parameters(2, 2, false).unwrap(), 8);
        assert_eq!(count_parameters(2, 1, false).unwrap(), 2);
        assert_eq!(count_parameters(5, 2, true).unwrap(), 23);
        assert_eq!(count_parameters(3, 1, true).unwrap(), 3);
        assert!(count_parameters(1, 2, false).is_err());
        assert!(count_parameters(2, 0, false).is_err());
    }

    #[test]
    fn packed_length_matches_parameter_count() {
        let c = bivariate_k2();
        assert_eq!(pack(&c, false).len(), 8);
        let exch = ThetaCandidate {
            weights: vec![0.3, 0.7],
            means: vec![vec![0.0; 3], vec![2.0; 3]],
            scales: vec![vec![1.0; 3], vec![0.8; 3]],
            corr_offdiag: vec![vec![0.5, 0.4, 0.3], vec![0.2, 0.1, 0.0]],
        };
        assert_eq!(
            pack(&exch, true).len(),
            count_parameters(3, 2, true).unwrap()
        );
    }

    #[test]
    fn round_trip_on_reference_parameters() {
        let c = bivariate_k2();
        let coords = pack(&c, false);
        let back = unpack(&coords, 2, 2, false).unwrap();
        for (a, b) in c.weights.iter().zip(&back.weights) {
            assert_abs_diff_eq!(a, b, epsilon = 1e-10);
        }
        for j in 0..2 {
            for i in 0..2 {
                assert_abs_diff_eq!(c.means[j][i], back.means[j][i], epsilon = 1e-10);
                assert_abs_diff_eq!(c.scales[j][i], back.scales[j][i], epsilon = 1e-10);
            }
            assert_abs_diff_eq!(
                c.corr_offdiag[j][0],
                back.corr_offdiag[j][0],
                epsilon = 1e-10
            );
        }
    }

    #[test]
    fn coordinate_round_trip() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for &(d, k, exch) in &[(2, 2, false), (3, 3, false), (4, 2, true), (2, 1, false)] {
            let m = count_parameters(d, k, exch).unwrap();
            for _ in 0..20 {
                let coords: Vec<f64> = (0..m).map(|_| rng.gen_range(-2.0..2.0)).collect();
                let c = unpack(&coords, d, k, exch).unwrap();
                let back = pack(&c, exch);
                for (a, b) in coords.iter().zip(&back) {
                    assert_abs_diff_eq!(a, b, epsilon = 1e-10);
                }
            }
        }
    }

    #[test]
    fn zero_vector_is_a_sensible_origin() {
        let c = unpack(&vec![0.0; 8], 2, 2, false).unwrap();
        assert_abs_diff_eq!(c.weights[0], 0.5, epsilon = 1e-12);
        assert_abs_diff_eq!(c.weights[1], 0.5, epsilon = 1e-12);
        assert_eq!(c.means[0], vec![0.0, 0.0]);
        // unit gap on the first coordinate, free coordinates centered
        assert_eq!(c.means[1], vec![1.0, 0.0]);
        assert_eq!(c.scales[0], vec![1.0, 1.0]);
        assert_eq!(c.scales[1], vec![1.0, 1.0]);
        assert_eq!(c.corr_offdiag, vec![vec![0.0], vec![0.0]]);
        assert!(c.validate().is_ok());

        let m = count_parameters(5, 3, false).unwrap();
        let c = unpack(&vec![0.0; m], 5, 3, false).unwrap();
        for &p in &c.weights {
            assert_abs_diff_eq!(p, 1.0 / 3.0, epsilon = 1e-12);
        }
        assert_eq!(c.means[2][0], 2.0);
        assert!(c.validate().is_ok());
    }

    #[test]
    fn extreme_coordinates_only_break_positive_definiteness() {
        let mut rng = ChaCha8Rng::seed_from_u64(41);
        let m = count_parameters(3, 2, false).unwrap();
        for _ in 0..10_000 {
            let coords: Vec<f64> = (0..m).map(|_| rng.gen_range(-30.0..30.0)).collect();
            let c = unpack(&coords, 3, 2, false).unwrap();
            if let Err(v) = c.validate() {
                assert_eq!(
                    v.constraint, "positive definiteness",
                    "unexpected violation from unpack: {v}"
                );
            }
        }
    }

    #[test]
    fn wrong_coordinate_count_rejected() {
        assert!(unpack(&[0.0; 7], 2, 2, false).is_err());
        assert!(unpack(&[0.0; 9], 2, 2, false).is_err());
    }

    #[test]
    fn exchangeable_round_trip() {
        let c = ThetaCandidate {
            weights: vec![0.25, 0.75],
            means: vec![vec![0.0, 0.0], vec![3.0, 3.0]],
            scales: vec![vec![1.0, 1.0], vec![1.62, 1.62]],
            corr_offdiag: vec![vec![0.29], vec![0.2]],
        };
        let coords = pack(&c, true);
        assert_eq!(coords.len(), count_parameters(2, 2, true).unwrap());
        let back = unpack(&coords, 2, 2, true).unwrap();
        assert_abs_diff_eq!(back.weights[0], 0.25, epsilon = 1e-10);
        assert_abs_diff_eq!(back.means[1][1], 3.0, epsilon = 1e-10);
        assert_abs_diff_eq!(back.scales[1][0], 1.62, epsilon = 1e-10);
    }

    #[test]
    #[should_panic(expected = "strictly positive weights")]
    fn pack_rejects_boundary_weights() {
        let mut c = bivariate_k2();
        c.weights = vec![0.0, 1.0];
        pack(&c, false);
    }
}
