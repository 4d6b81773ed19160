//! Derivative-light optimizers over boxes.
//!
//! One-dimensional problems use a coarse grid, golden-section refinement in
//! the best cell and a Newton polish on finite-difference derivatives.
//! Higher-dimensional problems use Nelder–Mead restarted from a fixed lattice.
//! Non-finite objective values are treated as infeasible points.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Objective values closer than this are considered tied; ties go to the
/// lexicographically smallest point.
pub const TIE_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OptimOptions {
    /// Tolerance on the parameter.
    pub x_tol: f64,
    /// Tolerance on the objective value.
    pub f_tol: f64,
    /// Iteration cap per local search.
    pub max_iter: usize,
    /// Grid size for one-dimensional searches.
    pub grid_points: usize,
    /// Nelder–Mead restarts for multi-dimensional searches.
    pub restarts: usize,
    /// Bound on the projected finite-difference gradient for `converged`.
    pub grad_tol: f64,
}

impl Default for OptimOptions {
    fn default() -> Self {
        OptimOptions {
            x_tol: 1e-8,
            f_tol: 1e-10,
            max_iter: 500,
            grid_points: 25,
            restarts: 5,
            grad_tol: 1e-6,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OptimResult {
    pub x: Vec<f64>,
    pub value: f64,
    pub iterations: usize,
    /// The local search met its tolerances and the projected gradient at `x`
    /// is below `grad_tol`.
    pub converged: bool,
    /// Number of objective evaluations rejected as non-finite.
    pub rejected: usize,
}

fn better(v: f64, x: &[f64], best_v: f64, best_x: &[f64]) -> bool {
    if !v.is_finite() {
        return false;
    }
    if !best_v.is_finite() || v > best_v + TIE_TOL {
        return true;
    }
    v >= best_v - TIE_TOL && x.partial_cmp(best_x) == Some(std::cmp::Ordering::Less)
}

struct Counted<F> {
    f: F,
    rejected: std::cell::Cell<usize>,
    evals: std::cell::Cell<usize>,
}

impl<F: Fn(&[f64]) -> f64> Counted<F> {
    fn eval(&self, x: &[f64]) -> f64 {
        self.evals.set(self.evals.get() + 1);
        let v = (self.f)(x);
        if v.is_finite() {
            v
        } else {
            self.rejected.set(self.rejected.get() + 1);
            f64::NEG_INFINITY
        }
    }
}

fn check_bounds(bounds: &[(f64, f64)]) -> Result<()> {
    if bounds.is_empty() {
        return Err(Error::arg("optimization needs at least one coordinate"));
    }
    for &(a, b) in bounds {
        if !(a.is_finite() && b.is_finite() && a <= b) {
            return Err(Error::arg(format!("invalid search interval [{a}, {b}]")));
        }
    }
    Ok(())
}

/// Maximize `f` over the box `bounds`.
pub fn maximize(f: impl Fn(&[f64]) -> f64, bounds: &[(f64, f64)], opts: &OptimOptions) -> Result<OptimResult> {
    check_bounds(bounds)?;
    let c = Counted {
        f,
        rejected: Default::default(),
        evals: Default::default(),
    };
    let mut res = if bounds.len() == 1 {
        maximize_1d(&c, bounds[0], opts)
    } else {
        maximize_nd(&c, bounds, opts)
    };
    res.rejected = c.rejected.get();
    if !res.value.is_finite() {
        return Err(Error::Optimization {
            message: "objective is non-finite on the whole search box".into(),
            best_point: res.x,
            best_value: res.value,
        });
    }
    res.converged = res.converged && projected_gradient_norm(&c, &res.x, bounds) <= opts.grad_tol;
    Ok(res)
}

/// Minimize `f` over the box `bounds`.
pub fn minimize(f: impl Fn(&[f64]) -> f64, bounds: &[(f64, f64)], opts: &OptimOptions) -> Result<OptimResult> {
    let mut r = maximize(|x| -f(x), bounds, opts).map_err(|e| match e {
        Error::Optimization {
            message,
            best_point,
            best_value,
        } => Error::Optimization {
            message,
            best_point,
            best_value: -best_value,
        },
        other => other,
    })?;
    r.value = -r.value;
    Ok(r)
}

fn step_for(x: f64, a: f64, b: f64) -> f64 {
    (1e-5 * x.abs().max(1.0)).min(0.25 * (b - a)).max(1e-12)
}

/// Euclidean norm of the finite-difference gradient, ignoring components that
/// point out of the box at an active bound.
fn projected_gradient_norm<F: Fn(&[f64]) -> f64>(c: &Counted<F>, x: &[f64], bounds: &[(f64, f64)]) -> f64 {
    let f0 = c.eval(x);
    let mut sq = 0.0;
    for i in 0..x.len() {
        let (a, b) = bounds[i];
        let h = step_for(x[i], a, b);
        let mut up = x.to_vec();
        let mut dn = x.to_vec();
        up[i] = (x[i] + h).min(b);
        dn[i] = (x[i] - h).max(a);
        let (fu, fd) = (c.eval(&up), c.eval(&dn));
        let g = if fu.is_finite() && fd.is_finite() && up[i] > dn[i] {
            (fu - fd) / (up[i] - dn[i])
        } else if fu.is_finite() && up[i] > x[i] {
            (fu - f0) / (up[i] - x[i])
        } else if fd.is_finite() && dn[i] < x[i] {
            (f0 - fd) / (x[i] - dn[i])
        } else {
            0.0
        };
        let at_lo = x[i] - a <= h;
        let at_hi = b - x[i] <= h;
        // ascent direction blocked by the bound
        if (at_hi && g > 0.0) || (at_lo && g < 0.0) {
            continue;
        }
        sq += g * g;
    }
    sq.sqrt()
}

fn maximize_1d<F: Fn(&[f64]) -> f64>(c: &Counted<F>, (a, b): (f64, f64), opts: &OptimOptions) -> OptimResult {
    let f1 = |x: f64| c.eval(&[x]);
    let m = opts.grid_points.max(3);
    let grid: Vec<f64> = (0..m).map(|i| a + (b - a) * i as f64 / (m - 1) as f64).collect();
    let vals: Vec<f64> = grid.iter().map(|&x| f1(x)).collect();
    let mut ib = 0;
    for i in 1..m {
        if better(vals[i], &[grid[i]], vals[ib], &[grid[ib]]) {
            ib = i;
        }
    }
    if !vals[ib].is_finite() {
        return OptimResult {
            x: vec![grid[ib]],
            value: vals[ib],
            iterations: 0,
            converged: false,
            rejected: 0,
        };
    }
    let lo = grid[ib.saturating_sub(1)];
    let hi = grid[(ib + 1).min(m - 1)];
    // Coarse golden-section, then a Newton polish; fall back to a full
    // golden-section search when the polish does not settle.
    let coarse = OptimOptions {
        x_tol: 1e-3 * (hi - lo) / (lo.abs() + hi.abs()).max(1.0),
        ..*opts
    };
    let (mut x, mut fx, mut iters, _) = golden(&f1, lo, hi, &coarse);
    if fx < vals[ib] - TIE_TOL {
        x = grid[ib];
        fx = vals[ib];
    }
    let (xn, fxn, it, ok) = newton_polish(&f1, x, fx, (lo, hi), (a, b), opts);
    iters += it;
    let (x, fx, ok) = if ok {
        (xn, fxn, true)
    } else {
        let (xg, fg, it, okg) = golden(&f1, lo, hi, opts);
        iters += it;
        if fg >= fxn {
            (xg, fg, okg)
        } else {
            (xn, fxn, okg)
        }
    };
    OptimResult {
        x: vec![x],
        value: fx,
        iterations: iters,
        converged: ok,
        rejected: 0,
    }
}

/// Newton steps on central-difference derivatives, kept inside `bracket` and
/// accepted only while the objective does not decrease.
fn newton_polish(
    f1: &impl Fn(f64) -> f64,
    mut x: f64,
    mut fx: f64,
    bracket: (f64, f64),
    (a, b): (f64, f64),
    opts: &OptimOptions,
) -> (f64, f64, usize, bool) {
    let mut iters = 0;
    for _ in 0..8 {
        iters += 1;
        let h = step_for(x, a, b);
        if x - h < a || x + h > b {
            // optimum at the edge of the box
            let at_edge = (x - a).abs() <= h || (b - x).abs() <= h;
            return (x, fx, iters, at_edge);
        }
        let (fu, fd) = (f1(x + h), f1(x - h));
        if !(fu.is_finite() && fd.is_finite()) {
            break;
        }
        let g = (fu - fd) / (2.0 * h);
        let hess = (fu - 2.0 * fx + fd) / (h * h);
        if !(hess < 0.0) {
            break;
        }
        let xn = (x - g / hess).clamp(bracket.0, bracket.1);
        let fxn = f1(xn);
        if !(fxn.is_finite() && fxn >= fx - TIE_TOL * 1e-3) {
            break;
        }
        let done = (xn - x).abs() <= opts.x_tol * x.abs().max(1.0);
        if fxn >= fx {
            x = xn;
            fx = fxn;
        }
        if done {
            return (x, fx, iters, true);
        }
    }
    (x, fx, iters, false)
}

fn golden(f: &impl Fn(f64) -> f64, mut a: f64, mut b: f64, opts: &OptimOptions) -> (f64, f64, usize, bool) {
    let g = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - g * (b - a);
    let mut d = a + g * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    let mut it = 0;
    let mut ok = false;
    while it < opts.max_iter {
        it += 1;
        if (b - a) <= opts.x_tol * (a.abs() + b.abs()).max(1.0) * 0.5 {
            ok = true;
            break;
        }
        // ties favour the left cell
        if fc >= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - g * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + g * (b - a);
            fd = f(d);
        }
    }
    let x = 0.5 * (a + b);
    let fx = f(x);
    let (x, fx) = [(x, fx), (c, fc), (d, fd)]
        .into_iter()
        .fold((x, fx), |acc, (xi, fi)| if fi > acc.1 + TIE_TOL { (xi, fi) } else { acc });
    (x, fx, it, ok)
}

fn lattice_starts(bounds: &[(f64, f64)], count: usize) -> Vec<Vec<f64>> {
    let centre: Vec<f64> = bounds.iter().map(|&(a, b)| 0.5 * (a + b)).collect();
    let mut starts = vec![centre.clone()];
    for r in 1..count {
        let frac = if r <= 2 { 0.25 } else { 0.375 };
        let s: Vec<f64> = bounds
            .iter()
            .enumerate()
            .map(|(i, &(a, b))| {
                let sign = if (r + i) % 2 == 0 { 1.0 } else { -1.0 };
                centre[i] + sign * frac * (b - a)
            })
            .collect();
        starts.push(s);
    }
    starts
}

fn maximize_nd<F: Fn(&[f64]) -> f64>(c: &Counted<F>, bounds: &[(f64, f64)], opts: &OptimOptions) -> OptimResult {
    let inside = |x: &[f64]| x.iter().zip(bounds).all(|(&v, &(a, b))| v >= a && v <= b);
    let obj = |x: &[f64]| if inside(x) { c.eval(x) } else { f64::NEG_INFINITY };
    let mut best: Option<OptimResult> = None;
    let mut total_iter = 0;
    for start in lattice_starts(bounds, opts.restarts.max(1)) {
        let scale: Vec<f64> = bounds.iter().map(|&(a, b)| 0.1 * (b - a)).collect();
        let (mut x, mut v, mut it, mut ok) = nelder_mead(&obj, &start, &scale, opts);
        // one restart from the local optimum to escape simplex collapse
        if v.is_finite() {
            let small: Vec<f64> = scale.iter().map(|s| s * 0.01).collect();
            let (x2, v2, it2, ok2) = nelder_mead(&obj, &x, &small, opts);
            it += it2;
            if v2 >= v {
                x = x2;
                v = v2;
                ok = ok2;
            }
        }
        total_iter += it;
        let replace = match &best {
            None => true,
            Some(b) => better(v, &x, b.value, &b.x),
        };
        if replace {
            best = Some(OptimResult {
                x,
                value: v,
                iterations: 0,
                converged: ok,
                rejected: 0,
            });
        }
    }
    let mut best = best.expect("at least one start");
    best.iterations = total_iter;
    best
}

/// Nelder–Mead maximization from `start` with initial steps `scale`.
fn nelder_mead(
    f: &impl Fn(&[f64]) -> f64,
    start: &[f64],
    scale: &[f64],
    opts: &OptimOptions,
) -> (Vec<f64>, f64, usize, bool) {
    let d = start.len();
    let mut simplex: Vec<Vec<f64>> = vec![start.to_vec()];
    for i in 0..d {
        let mut p = start.to_vec();
        p[i] += scale[i];
        if !f(&p).is_finite() {
            p[i] = start[i] - scale[i];
        }
        simplex.push(p);
    }
    // minimize the negation internally
    let g = |x: &[f64]| {
        let v = f(x);
        if v.is_finite() {
            -v
        } else {
            f64::INFINITY
        }
    };
    let mut vals: Vec<f64> = simplex.iter().map(|p| g(p)).collect();
    let mut it = 0;
    let mut ok = false;
    while it < opts.max_iter {
        it += 1;
        let mut order: Vec<usize> = (0..=d).collect();
        order.sort_by(|&i, &j| vals[i].total_cmp(&vals[j]));
        simplex = order.iter().map(|&i| simplex[i].clone()).collect();
        vals = order.iter().map(|&i| vals[i]).collect();

        let size = simplex[1..]
            .iter()
            .map(|p| p.iter().zip(&simplex[0]).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max))
            .fold(0.0, f64::max);
        let spread = vals[d] - vals[0];
        if vals[0].is_finite() && size <= opts.x_tol * simplex[0].iter().fold(1.0f64, |m, v| m.max(v.abs())) && spread <= opts.f_tol {
            ok = true;
            break;
        }

        let centroid: Vec<f64> = (0..d).map(|k| simplex[..d].iter().map(|p| p[k]).sum::<f64>() / d as f64).collect();
        let along = |t: f64| -> Vec<f64> { (0..d).map(|k| centroid[k] + t * (simplex[d][k] - centroid[k])).collect() };
        let xr = along(-1.0);
        let fr = g(&xr);
        if fr < vals[0] {
            let xe = along(-2.0);
            let fe = g(&xe);
            if fe < fr {
                simplex[d] = xe;
                vals[d] = fe;
            } else {
                simplex[d] = xr;
                vals[d] = fr;
            }
        } else if fr < vals[d - 1] {
            simplex[d] = xr;
            vals[d] = fr;
        } else {
            let (xc, fc) = if fr < vals[d] {
                let x = along(-0.5);
                let v = g(&x);
                (x, v)
            } else {
                let x = along(0.5);
                let v = g(&x);
                (x, v)
            };
            if fc < vals[d].min(fr) {
                simplex[d] = xc;
                vals[d] = fc;
            } else {
                for i in 1..=d {
                    let p: Vec<f64> = (0..d).map(|k| simplex[0][k] + 0.5 * (simplex[i][k] - simplex[0][k])).collect();
                    vals[i] = g(&p);
                    simplex[i] = p;
                }
            }
        }
    }
    let ib = (0..=d).min_by(|&i, &j| vals[i].total_cmp(&vals[j])).unwrap_or(0);
    (simplex[ib].clone(), -vals[ib], it, ok)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn quadratic_1d() {
        let r = maximize(|x| -(x[0] - 0.3).powi(2), &[(-2.0, 2.0)], &OptimOptions::default()).unwrap();
        assert_abs_diff_eq!(r.x[0], 0.3, epsilon = 1e-8);
        assert!(r.converged);
    }

    #[test]
    fn boundary_optimum_is_converged() {
        let r = maximize(|x| x[0], &[(0.0, 1.0)], &OptimOptions::default()).unwrap();
        assert_abs_diff_eq!(r.x[0], 1.0, epsilon = 1e-8);
        assert!(r.converged);
    }

    #[test]
    fn rejects_non_finite() {
        let r = maximize(
            |x| if x[0] < 0.5 { f64::NAN } else { -(x[0] - 0.7).powi(2) },
            &[(0.0, 1.0)],
            &OptimOptions::default(),
        )
        .unwrap();
        assert_abs_diff_eq!(r.x[0], 0.7, epsilon = 1e-8);
        assert!(r.rejected > 0);
        let e = maximize(|_| f64::INFINITY, &[(0.0, 1.0)], &OptimOptions::default()).unwrap_err();
        assert!(matches!(e, Error::Optimization { .. }));
    }

    #[test]
    fn ties_prefer_smallest() {
        let r = maximize(|x| -(x[0] * x[0] - 1.0).powi(2), &[(-2.0, 2.0)], &OptimOptions::default()).unwrap();
        assert_abs_diff_eq!(r.x[0], -1.0, epsilon = 1e-7);
    }

    #[test]
    fn rosenbrock_2d() {
        let r = minimize(
            |x| (1.0 - x[0]).powi(2) + 100.0 * (x[1] - x[0] * x[0]).powi(2),
            &[(-2.0, 2.0), (-1.0, 3.0)],
            &OptimOptions::default(),
        )
        .unwrap();
        assert_abs_diff_eq!(r.x[0], 1.0, epsilon = 1e-5);
        assert_abs_diff_eq!(r.x[1], 1.0, epsilon = 1e-5);
    }

    #[test]
    fn constrained_2d() {
        // maximize on the simplex interior {x + y < 1}
        let r = maximize(
            |x| {
                if x[0] + x[1] >= 1.0 {
                    f64::NEG_INFINITY
                } else {
                    x[0].ln() + x[1].ln() + 2.0 * (1.0 - x[0] - x[1]).ln()
                }
            },
            &[(1e-9, 1.0), (1e-9, 1.0)],
            &OptimOptions::default(),
        )
        .unwrap();
        assert_abs_diff_eq!(r.x[0], 0.25, epsilon = 1e-6);
        assert_abs_diff_eq!(r.x[1], 0.25, epsilon = 1e-6);
        assert!(r.converged);
    }
}
