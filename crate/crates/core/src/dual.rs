//! Dual (variational) divergence criteria and minimum dual estimators.
//!
//! For a divergence `φ` and parameters `θ, α`,
//!
//! ```text
//! h(θ, α, x) = ∫ φ'(dP_θ/dP_α) dP_θ − φ^#((dP_θ/dP_α)(x))
//! ```
//!
//! and `φ(P_θ, P) = sup_α ∫ h(θ, α, ·) dP` whenever the supremum is attained
//! inside the model. Replacing `P` by a (weighted) empirical measure gives a
//! plug-in estimate of the divergence, and minimizing it over `θ` gives the
//! minimum dual estimator. With weights drawn from a law `W` and the
//! divergence `φ̃^W`, the estimator is the weighted-sampling MLE.

use std::cell::RefCell;

use serde::{Deserialize, Serialize};

use crate::divergence::{DivergenceSpec, FiniteMeasure, GAMMA_LIMIT_EPS};
use crate::error::{Error, Result};
use crate::models::ParametricModel;
use crate::optimize::{self, OptimOptions};
use crate::weights::{induced_divergence, WeightLaw};

type Trace = RefCell<Vec<(Vec<f64>, f64)>>;

/// `P_n^W = (1/n) Σ W_i δ_{x_i}`; plain empirical measure when all `W_i = 1`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeightedEmpiricalMeasure {
    points: Vec<f64>,
    weights: Vec<f64>,
}

impl WeightedEmpiricalMeasure {
    pub fn new(points: Vec<f64>, weights: Vec<f64>) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::arg("an empirical measure needs at least one point"));
        }
        if points.len() != weights.len() {
            return Err(Error::arg(format!(
                "{} points but {} weights",
                points.len(),
                weights.len()
            )));
        }
        if points.iter().chain(&weights).any(|v| !v.is_finite()) {
            return Err(Error::arg("points and weights must be finite"));
        }
        Ok(WeightedEmpiricalMeasure { points, weights })
    }

    /// Unit weights.
    pub fn plain(points: Vec<f64>) -> Result<Self> {
        let w = vec![1.0; points.len()];
        Self::new(points, w)
    }

    /// One point per atom with weight `k · mass`, so that integrals against
    /// the result equal integrals against `m`.
    pub fn from_finite(m: &FiniteMeasure) -> Result<Self> {
        let k = m.len() as f64;
        Self::new(m.support().to_vec(), m.masses().iter().map(|v| v * k).collect())
    }

    pub fn points(&self) -> &[f64] {
        &self.points
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// `(1/n) Σ W_i f(x_i)`.
    pub fn integrate(&self, f: impl Fn(f64) -> f64) -> f64 {
        self.points.iter().zip(&self.weights).map(|(&x, &w)| w * f(x)).sum::<f64>() / self.len() as f64
    }

    /// `(1/n) Σ W_i`.
    pub fn total_mass(&self) -> f64 {
        self.weights.iter().sum::<f64>() / self.len() as f64
    }

    /// Merge repeated points, summing their weights; integrals are unchanged
    /// up to rounding. Used to speed up categorical criteria.
    fn compressed(&self) -> (Vec<f64>, Vec<f64>) {
        let mut pairs: Vec<(f64, f64)> = self.points.iter().copied().zip(self.weights.iter().copied()).collect();
        pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
        let n = self.len() as f64;
        let mut xs: Vec<f64> = Vec::new();
        let mut ws: Vec<f64> = Vec::new();
        for (x, w) in pairs {
            match xs.last() {
                Some(&last) if last == x => *ws.last_mut().expect("paired") += w / n,
                _ => {
                    xs.push(x);
                    ws.push(w / n);
                }
            }
        }
        (xs, ws)
    }
}

/// Attach i.i.d. weights from `law` to `points`.
pub fn build_weighted_empirical(points: &[f64], law: &WeightLaw, seed: u64) -> Result<WeightedEmpiricalMeasure> {
    let w = crate::weights::sample_weights(law, points.len().max(1), seed)?;
    WeightedEmpiricalMeasure::new(points.to_vec(), w)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DualOptions {
    pub optim: OptimOptions,
    /// Half-width of the default search box around the pilot estimate.
    pub half_width: f64,
    /// Explicit search box; overrides the pilot-centred default.
    pub search_box: Option<Vec<(f64, f64)>>,
    /// Quadrature tolerance for criteria without closed forms.
    pub tol: f64,
    /// Record the inner evaluations at the reported θ.
    pub trace: bool,
    /// How often the default box may be halved when the inner supremum
    /// escapes to its boundary.
    pub max_halvings: u32,
}

impl Default for DualOptions {
    fn default() -> Self {
        DualOptions {
            optim: OptimOptions::default(),
            half_width: 3.0,
            search_box: None,
            tol: 1e-10,
            trace: false,
            max_halvings: 6,
        }
    }
}

/// Distance kept from the boundary of Θ.
const BOUNDARY_MARGIN: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimateReport {
    pub theta_hat: Vec<f64>,
    pub alpha_hat: Vec<f64>,
    pub criterion_value: f64,
    pub iterations: usize,
    pub converged: bool,
    /// Criterion evaluations rejected because they left the domain of `φ`.
    pub rejected: usize,
    /// The box the final estimate was computed on.
    pub search_box: Vec<(f64, f64)>,
    pub inner_trace: Option<Vec<(Vec<f64>, f64)>>,
}

/// `∫ φ'(dP_θ/dP_α) dP_θ`.
fn phi_prime_integral(
    model: &ParametricModel,
    spec: &DivergenceSpec,
    theta: &[f64],
    alpha: &[f64],
    tol: f64,
) -> Result<f64> {
    if let Some(g) = spec.gamma() {
        if g.abs() < GAMMA_LIMIT_EPS {
            return Ok(1.0 - model.ratio_moment(theta, alpha, -1.0)?);
        }
        if (g - 1.0).abs() < GAMMA_LIMIT_EPS {
            return model.kl(theta, alpha);
        }
        return Ok((model.ratio_moment(theta, alpha, g - 1.0)? - 1.0) / (g - 1.0));
    }
    if !(model.in_domain(theta) && model.in_domain(alpha)) {
        return Err(Error::arg(format!("parameters {theta:?}, {alpha:?} must lie in the parameter space")));
    }
    model.integrate_under(
        theta,
        |x| match model.log_density_ratio(theta, alpha, x) {
            Ok(l) => spec.phi_d1(l.exp()),
            Err(_) => f64::NAN,
        },
        tol,
    )
}

/// `h(θ, α, x)`.
pub fn h_value(
    model: &ParametricModel,
    spec: &DivergenceSpec,
    theta: &[f64],
    alpha: &[f64],
    x: f64,
    tol: f64,
) -> Result<f64> {
    let i = phi_prime_integral(model, spec, theta, alpha, tol)?;
    let r = model.log_density_ratio(theta, alpha, x)?.exp();
    Ok(i - spec.phi_sharp(r))
}

/// Evaluates `∫ h(θ, α, ·) dμ` for a fixed model, divergence and measure.
struct Criterion<'a> {
    model: &'a ParametricModel,
    spec: &'a DivergenceSpec,
    xs: Vec<f64>,
    ws: Vec<f64>,
    mass: f64,
    tol: f64,
}

impl<'a> Criterion<'a> {
    fn new(model: &'a ParametricModel, spec: &'a DivergenceSpec, mu: &WeightedEmpiricalMeasure, tol: f64) -> Result<Self> {
        let (xs, ws) = if model.is_categorical() {
            mu.compressed()
        } else {
            let n = mu.len() as f64;
            (mu.points.clone(), mu.weights.iter().map(|w| w / n).collect())
        };
        if let Some(k) = model.atoms() {
            if let Some(x) = xs.iter().find(|&&x| !(x >= 0.0 && x < k as f64 && x.fract() == 0.0)) {
                return Err(Error::arg(format!("{x} is not an atom of the categorical model")));
            }
        }
        Ok(Criterion {
            model,
            spec,
            xs,
            ws,
            mass: mu.total_mass(),
            tol,
        })
    }

    /// `φ^#(e^l)`, computed without forming the ratio for Cressie–Read specs.
    fn sharp_of_log(&self, l: f64) -> f64 {
        match self.spec.gamma() {
            Some(g) if g.abs() < GAMMA_LIMIT_EPS => l,
            Some(g) if (g - 1.0).abs() < GAMMA_LIMIT_EPS => l.exp_m1(),
            Some(g) => (g * l).exp_m1() / g,
            None => self.spec.phi_sharp(l.exp()),
        }
    }

    /// The criterion, or a non-finite value when it leaves the domain.
    fn value(&self, theta: &[f64], alpha: &[f64]) -> f64 {
        if !(self.model.in_domain(theta) && self.model.in_domain(alpha)) {
            return f64::NAN;
        }
        let i = match phi_prime_integral(self.model, self.spec, theta, alpha, self.tol) {
            Ok(v) if v.is_finite() => v,
            _ => return f64::NAN,
        };
        let mut acc = 0.0;
        if self.model.is_categorical() {
            let (p, q) = match (self.model.probs(theta), self.model.probs(alpha)) {
                (Ok(p), Ok(q)) => (p, q),
                _ => return f64::NAN,
            };
            for (&x, &w) in self.xs.iter().zip(&self.ws) {
                let j = x as usize;
                acc += w * self.sharp_of_log(p[j].ln() - q[j].ln());
            }
        } else {
            let (slope, offset) = match self.model.log_ratio_affine(theta, alpha) {
                Ok(v) => v,
                Err(_) => return f64::NAN,
            };
            for (&x, &w) in self.xs.iter().zip(&self.ws) {
                acc += w * self.sharp_of_log(slope * self.model.sufficient_statistic(x) + offset);
            }
        }
        i * self.mass - acc
    }
}

/// Search box: the explicit box, or `pilot ± half_width`, intersected with Θ.
fn search_box(
    model: &ParametricModel,
    mu: &WeightedEmpiricalMeasure,
    opts: &DualOptions,
    half_width: f64,
) -> Result<Vec<(f64, f64)>> {
    let raw = match &opts.search_box {
        Some(b) => {
            if b.len() != model.dim() {
                return Err(Error::arg(format!(
                    "search box has {} coordinates, model has {}",
                    b.len(),
                    model.dim()
                )));
            }
            b.clone()
        }
        None => {
            let ones = vec![1.0; mu.len()];
            let pilot = model.moment_pilot(mu.points(), &ones)?;
            pilot.iter().map(|&p| (p - half_width, p + half_width)).collect()
        }
    };
    raw.iter()
        .zip(model.param_bounds())
        .map(|(&(a, b), (lo, hi))| {
            let a = a.max(lo + BOUNDARY_MARGIN * lo.abs().max(1.0));
            let b = b.min(hi - BOUNDARY_MARGIN * hi.abs().max(1.0));
            if a.is_finite() && b.is_finite() && a < b {
                Ok((a, b))
            } else {
                Err(Error::arg(format!("search interval [{a}, {b}] does not meet the parameter space")))
            }
        })
        .collect()
}

struct InnerResult {
    value: f64,
    alpha: Vec<f64>,
    converged: bool,
    iterations: usize,
    rejected: usize,
}

fn inner_sup(
    crit: &Criterion<'_>,
    theta: &[f64],
    bounds: &[(f64, f64)],
    opts: &OptimOptions,
    trace: Option<&Trace>,
) -> Result<InnerResult> {
    let r = optimize::maximize(
        |alpha| {
            let v = crit.value(theta, alpha);
            if let Some(t) = trace {
                t.borrow_mut().push((alpha.to_vec(), v));
            }
            v
        },
        bounds,
        opts,
    )?;
    Ok(InnerResult {
        value: r.value,
        alpha: r.x,
        converged: r.converged,
        iterations: r.iterations,
        rejected: r.rejected,
    })
}

/// `sup_α ∫ h(θ, α, ·) dμ` and its maximizer.
pub fn estimate_phi_dual(
    model: &ParametricModel,
    spec: &DivergenceSpec,
    theta: &[f64],
    mu: &WeightedEmpiricalMeasure,
    opts: &DualOptions,
) -> Result<(f64, Vec<f64>)> {
    spec.validate()?;
    if !model.in_domain(theta) {
        return Err(Error::arg(format!("parameter {theta:?} is outside the parameter space")));
    }
    let crit = Criterion::new(model, spec, mu, opts.tol)?;
    let mut half_width = opts.half_width;
    for halving in 0..=opts.max_halvings {
        let bounds = search_box(model, mu, opts, half_width)?;
        let r = inner_sup(&crit, theta, &bounds, &opts.optim, None)?;
        if opts.search_box.is_some() || halving == opts.max_halvings || !on_boundary(&r.alpha, &bounds) {
            return Ok((r.value, r.alpha));
        }
        half_width *= 0.5;
    }
    unreachable!("the last halving always returns")
}

/// True when `x` touches a face of `bounds`: the supremum is not attained
/// inside the box and the criterion is not well posed there.
fn on_boundary(x: &[f64], bounds: &[(f64, f64)]) -> bool {
    x.iter().zip(bounds).any(|(&v, &(a, b))| {
        let eps = 1e-6 * (b - a);
        v - a < eps || b - v < eps
    })
}

/// `θ̂ = arg inf_θ sup_α ∫ h(θ, α, ·) dμ`.
pub fn minimum_dual_estimator(
    model: &ParametricModel,
    spec: &DivergenceSpec,
    mu: &WeightedEmpiricalMeasure,
    opts: &DualOptions,
) -> Result<EstimateReport> {
    spec.validate()?;
    let crit = Criterion::new(model, spec, mu, opts.tol)?;
    let mut half_width = opts.half_width;
    let mut halving = 0;
    loop {
        let bounds = search_box(model, mu, opts, half_width)?;
        let last = opts.search_box.is_some() || halving == opts.max_halvings;
        // The supremum must be attained inside the box at the box centre as
        // well as at the estimate.
        if !last {
            let centre: Vec<f64> = bounds.iter().map(|&(a, b)| 0.5 * (a + b)).collect();
            let probe = inner_sup(&crit, &centre, &bounds, &opts.optim, None);
            if probe.is_ok_and(|r| on_boundary(&r.alpha, &bounds)) {
                half_width *= 0.5;
                halving += 1;
                continue;
            }
        }
        let report = estimate_in_box(&crit, &bounds, opts)?;
        if last || !on_boundary(&report.alpha_hat, &bounds) {
            return Ok(report);
        }
        half_width *= 0.5;
        halving += 1;
    }
}

fn estimate_in_box(crit: &Criterion<'_>, bounds: &[(f64, f64)], opts: &DualOptions) -> Result<EstimateReport> {
    let rejected = std::cell::Cell::new(0usize);
    let outer = optimize::minimize(
        |theta| match inner_sup(crit, theta, bounds, &opts.optim, None) {
            Ok(r) => {
                rejected.set(rejected.get() + r.rejected);
                r.value
            }
            Err(_) => f64::NAN,
        },
        bounds,
        &opts.optim,
    )?;
    let trace = opts.trace.then(|| RefCell::new(Vec::new()));
    let inner = inner_sup(crit, &outer.x, bounds, &opts.optim, trace.as_ref())?;
    Ok(EstimateReport {
        theta_hat: outer.x,
        alpha_hat: inner.alpha,
        criterion_value: inner.value,
        iterations: outer.iterations + inner.iterations,
        converged: outer.converged && inner.converged,
        rejected: rejected.get() + outer.rejected + inner.rejected,
        search_box: bounds.to_vec(),
        inner_trace: trace.map(RefCell::into_inner),
    })
}

/// The divergence whose minimum dual estimator is the weighted-sampling MLE
/// for weights drawn from `law`: the conjugate of `φ^W`.
pub fn weighted_mle_spec(law: &WeightLaw) -> DivergenceSpec {
    induced_divergence(law).conjugate()
}

/// Weighted-sampling MLE.
pub fn weighted_mle(
    model: &ParametricModel,
    law: &WeightLaw,
    mu: &WeightedEmpiricalMeasure,
    opts: &DualOptions,
) -> Result<EstimateReport> {
    minimum_dual_estimator(model, &weighted_mle_spec(law), mu, opts)
}
