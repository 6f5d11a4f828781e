//! Box-penalized Nelder-Mead with restarts.

use super::OptConfig;

const REFLECT: f64 = 1.0;
const EXPAND: f64 = 2.0;
const CONTRACT: f64 = 0.5;
const SHRINK: f64 = 0.5;

#[derive(Debug, Clone, PartialEq)]
pub struct NmOutcome {
    pub argmin: Vec<f64>,
    pub min: f64,
    pub evals: usize,
    pub iterations: usize,
    pub converged: bool,
    /// Runs after the first one.
    pub restarts_used: usize,
}

struct Penalized<'a, F> {
    f: &'a F,
    bound: f64,
    evals: usize,
}

impl<F: Fn(&[f64]) -> f64> Penalized<'_, F> {
    fn eval(&mut self, x: &[f64]) -> f64 {
        if x.iter().any(|v| !(v.abs() <= self.bound)) {
            return f64::INFINITY;
        }
        self.evals += 1;
        let y = (self.f)(x);
        if y.is_nan() {
            f64::INFINITY
        } else {
            y
        }
    }
}

/// Minimizes `objective` over the box `[-pi_bounds, pi_bounds]^d`, points
/// outside the box score `+inf`. Stops when the simplex diameter drops
/// below `x_tol`, the value spread below `f_tol`, or after `max_iter`
/// iterations; then restarts from the best vertex up to `restarts - 1`
/// times while that still improves by more than `f_tol`.
pub fn nelder_mead<F>(objective: &F, start: &[f64], opt: &OptConfig) -> NmOutcome
where
    F: Fn(&[f64]) -> f64,
{
    let mut pen = Penalized {
        f: objective,
        bound: opt.pi_bounds,
        evals: 0,
    };
    let mut best = start.to_vec();
    let mut best_val = pen.eval(&best);
    let mut iterations = 0;
    let mut converged = false;
    let mut restarts_used = 0;

    for run in 0..opt.restarts.max(1) {
        if run > 0 {
            restarts_used += 1;
        }
        let (x, fx, iters, conv) = single_run(&mut pen, &best, best_val, opt);
        iterations += iters;
        let improvement = best_val - fx;
        if fx <= best_val {
            best = x;
            best_val = fx;
        }
        converged = conv;
        if run > 0 && !(improvement > opt.f_tol) {
            break;
        }
    }

    NmOutcome {
        argmin: best,
        min: best_val,
        evals: pen.evals,
        iterations,
        converged,
        restarts_used,
    }
}

fn single_run<F: Fn(&[f64]) -> f64>(
    pen: &mut Penalized<'_, F>,
    start: &[f64],
    f_start: f64,
    opt: &OptConfig,
) -> (Vec<f64>, f64, usize, bool) {
    let n = start.len();
    if n == 0 {
        return (Vec::new(), f_start, 0, true);
    }

    let mut simplex: Vec<(Vec<f64>, f64)> = Vec::with_capacity(n + 1);
    simplex.push((start.to_vec(), f_start));
    for i in 0..n {
        let mut v = start.to_vec();
        let h = opt.initial_step * start[i].abs().max(1.0);
        v[i] += h;
        if v[i].abs() > opt.pi_bounds {
            v[i] = start[i] - h;
        }
        let fv = pen.eval(&v);
        simplex.push((v, fv));
    }

    let mut iter = 0;
    let mut converged = false;
    while iter < opt.max_iter {
        simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
        if is_converged(&simplex, opt) {
            converged = true;
            break;
        }
        iter += 1;

        let centroid = centroid(&simplex[..n]);
        let worst = &simplex[n];
        let xr = affine(&centroid, &worst.0, REFLECT);
        let fr = pen.eval(&xr);

        if fr < simplex[0].1 {
            let xe = affine(&centroid, &worst.0, REFLECT * EXPAND);
            let fe = pen.eval(&xe);
            simplex[n] = if fe < fr { (xe, fe) } else { (xr, fr) };
        } else if fr < simplex[n - 1].1 {
            simplex[n] = (xr, fr);
        } else {
            // outside contraction when the reflection beats the worst point
            let (xc, fc) = if fr < worst.1 {
                let xc = affine(&centroid, &worst.0, REFLECT * CONTRACT);
                let fc = pen.eval(&xc);
                (xc, fc)
            } else {
                let xc = affine(&centroid, &worst.0, -CONTRACT);
                let fc = pen.eval(&xc);
                (xc, fc)
            };
            if fc < fr.min(worst.1) {
                simplex[n] = (xc, fc);
            } else {
                let x0 = simplex[0].0.clone();
                for vertex in simplex.iter_mut().skip(1) {
                    let xs: Vec<f64> = x0
                        .iter()
                        .zip(&vertex.0)
                        .map(|(a, b)| a + SHRINK * (b - a))
                        .collect();
                    let fs = pen.eval(&xs);
                    *vertex = (xs, fs);
                }
            }
        }
    }
    simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
    if !converged && is_converged(&simplex, opt) {
        converged = true;
    }
    let (x, fx) = simplex.swap_remove(0);
    (x, fx, iter, converged)
}

fn is_converged(simplex: &[(Vec<f64>, f64)], opt: &OptConfig) -> bool {
    let best = &simplex[0];
    if !best.1.is_finite() {
        return false;
    }
    let spread = simplex[simplex.len() - 1].1 - best.1;
    let diameter = simplex
        .iter()
        .skip(1)
        .flat_map(|(x, _)| x.iter().zip(&best.0).map(|(a, b)| (a - b).abs()))
        .fold(0.0, f64::max);
    diameter < opt.x_tol || spread < opt.f_tol
}

fn centroid(points: &[(Vec<f64>, f64)]) -> Vec<f64> {
    let n = points.len() as f64;
    let mut c = vec![0.0; points[0].0.len()];
    for (x, _) in points {
        for (ci, xi) in c.iter_mut().zip(x) {
            *ci += xi / n;
        }
    }
    c
}

/// `c + t (c - w)`.
fn affine(c: &[f64], w: &[f64], t: f64) -> Vec<f64> {
    c.iter().zip(w).map(|(ci, wi)| ci + t * (ci - wi)).collect()
}
