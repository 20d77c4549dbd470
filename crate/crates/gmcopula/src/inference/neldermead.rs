//! Derivative-free simplex minimizer.
//!
//! Classic Nelder-Mead with reflection 1, expansion 2, contraction 0.5 and
//! shrink 0.5. Objectives may return +inf (or NaN, treated as +inf) anywhere,
//! which is how constraint sentinels reach the optimizer. Convergence is
//! judged over a full simplex refresh: after the inner loop collapses, the
//! simplex is rebuilt at the incumbent with the initial step, and the search
//! stops once a refresh no longer improves the objective meaningfully.

const ALPHA: f64 = 1.0;
const GAMMA: f64 = 2.0;
const BETA: f64 = 0.5;
const SIGMA: f64 = 0.5;

/// Result of a simplex minimization.
#[derive(Debug, Clone)]
pub struct SimplexOutcome {
    /// Best point found.
    pub x: Vec<f64>,
    /// Objective value at `x`.
    pub f: f64,
    /// Number of objective evaluations consumed.
    pub evaluations: usize,
    /// Whether the refresh criterion was met within the budget.
    pub converged: bool,
}

struct Counted<F> {
    f: F,
    n: usize,
}

impl<F: FnMut(&[f64]) -> f64> Counted<F> {
    fn eval(&mut self, x: &[f64]) -> f64 {
        self.n += 1;
        let v = (self.f)(x);
        if v.is_nan() {
            f64::INFINITY
        } else {
            v
        }
    }
}

/// Minimizes `objective` starting from `x0` with an axis-aligned initial
/// simplex of edge `step`.
pub fn minimize<F: FnMut(&[f64]) -> f64>(
    objective: F,
    x0: &[f64],
    step: f64,
    rel_tol: f64,
    max_evals: usize,
) -> SimplexOutcome {
    assert!(!x0.is_empty(), "minimize requires at least one coordinate");
    assert!(step > 0.0, "initial step must be positive");
    assert!(rel_tol > 0.0, "tolerance must be positive");

    let mut counted = Counted { f: objective, n: 0 };
    let mut cur_x = x0.to_vec();
    let mut cur_f = f64::INFINITY;
    let mut converged = false;
    let mut first_pass = true;

    loop {
        let (bx, bf, exhausted) = inner_pass(&mut counted, &cur_x, step, rel_tol, max_evals);
        if first_pass {
            cur_x = bx;
            cur_f = bf;
            first_pass = false;
            // a search stuck at +inf cannot benefit from refreshing
            if exhausted || !cur_f.is_finite() {
                break;
            }
            continue;
        }
        let improvement = cur_f - bf;
        cur_x = bx;
        cur_f = bf;
        if exhausted || !cur_f.is_finite() {
            break;
        }
        if improvement < rel_tol * (cur_f.abs() + 1e-12) {
            converged = true;
            break;
        }
    }

    SimplexOutcome {
        x: cur_x,
        f: cur_f,
        evaluations: counted.n,
        converged,
    }
}

/// Runs the simplex from `anchor` until the vertex spread collapses or the
/// budget runs out. Returns the best vertex and an exhaustion flag.
fn inner_pass<F: FnMut(&[f64]) -> f64>(
    counted: &mut Counted<F>,
    anchor: &[f64],
    step: f64,
    rel_tol: f64,
    max_evals: usize,
) -> (Vec<f64>, f64, bool) {
    let dim = anchor.len();
    let mut verts: Vec<(Vec<f64>, f64)> = Vec::with_capacity(dim + 1);
    let fa = counted.eval(anchor);
    verts.push((anchor.to_vec(), fa));
    for i in 0..dim {
        let mut v = anchor.to_vec();
        v[i] += step;
        let fv = counted.eval(&v);
        verts.push((v, fv));
    }

    loop {
        verts.sort_by(|a, b| a.1.total_cmp(&b.1));
        let f_best = verts[0].1;
        let f_worst = verts[dim].1;
        // NaN spread means every vertex is +inf; treat as collapsed
        let spread = f_worst - f_best;
        if !(spread > rel_tol * (f_best.abs() + 1e-12)) {
            return (verts[0].0.clone(), f_best, false);
        }
        if counted.n >= max_evals {
            return (verts[0].0.clone(), f_best, true);
        }

        let mut centroid = vec![0.0; dim];
        for (v, _) in &verts[..dim] {
            for (c, &x) in centroid.iter_mut().zip(v) {
                *c += x;
            }
        }
        for c in &mut centroid {
            *c /= dim as f64;
        }
        let worst = verts[dim].0.clone();

        let reflected: Vec<f64> = centroid
            .iter()
            .zip(&worst)
            .map(|(&c, &w)| c + ALPHA * (c - w))
            .collect();
        let fr = counted.eval(&reflected);

        if fr < f_best {
            let expanded: Vec<f64> = centroid
                .iter()
                .zip(&worst)
                .map(|(&c, &w)| c + GAMMA * (c - w))
                .collect();
            let fe = counted.eval(&expanded);
            verts[dim] = if fe < fr {
                (expanded, fe)
            } else {
                (reflected, fr)
            };
        } else if fr < verts[dim - 1].1 {
            verts[dim] = (reflected, fr);
        } else {
            let outside = fr < f_worst;
            let toward = if outside { &reflected } else { &worst };
            let contracted: Vec<f64> = centroid
                .iter()
                .zip(toward)
                .map(|(&c, &t)| c + BETA * (t - c))
                .collect();
            let fc = counted.eval(&contracted);
            let accept = if outside { fc <= fr } else { fc < f_worst };
            if accept {
                verts[dim] = (contracted, fc);
            } else {
                let best = verts[0].0.clone();
                for (v, fv) in verts.iter_mut().skip(1) {
                    for (x, &b) in v.iter_mut().zip(&best) {
                        *x = b + SIGMA * (*x - b);
                    }
                    *fv = counted.eval(v);
                }
            }
        }
    }
}
