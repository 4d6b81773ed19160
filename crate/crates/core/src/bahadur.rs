//! Bahadur slopes of the minimum-divergence test and of tests built from
//! generic functionals of the weighted empirical measure, with a Monte Carlo
//! probe of the null tail rate.
//!
//! Slopes are reported as signed limits of `(2/n) log p-value`: more
//! negative means more efficient.

use std::fmt;
use std::sync::Arc;

use rayon::prelude::*;
use serde::Serialize;

use crate::divergence::{divergence_vec, DivergenceSpec};
use crate::error::{Error, Result};
use crate::models::ParametricModel;
use crate::optimize::{self, OptimOptions};
use crate::sanov::{fitted_counts, wilson};
use crate::seed::{rng_for, with_pool};
use crate::weights::{induced_divergence, WeightLaw};

/// Simplex grid step of the constrained infimum in [`slope_generic`].
pub const GENERIC_GRID_STEP: f64 = 1e-3;

/// Grid points refined by local descent in [`slope_generic`].
pub const GENERIC_RESTARTS: usize = 3;

type CustomFn = Arc<dyn Fn(&[f64], &[f64]) -> f64 + Send + Sync>;

/// A functional `ψ(θ, Q)` of the cell masses `p = P_θ` and `q = Q`, with
/// `ψ(θ, P_θ) = 0`.
#[derive(Clone)]
pub enum Functional {
    /// `ψ ≡ 0`.
    Zero,
    /// `Q(A_j) − P_θ(A_j)`.
    CellMass { cell: usize },
    /// `φ^W(P_θ, Q)` for the weight law of the experiment.
    Divergence,
    Custom { name: String, f: CustomFn },
}

impl Functional {
    pub fn custom(name: impl Into<String>, f: impl Fn(&[f64], &[f64]) -> f64 + Send + Sync + 'static) -> Self {
        Functional::Custom {
            name: name.into(),
            f: Arc::new(f),
        }
    }

    pub fn name(&self) -> String {
        match self {
            Functional::Zero => "zero".into(),
            Functional::CellMass { cell } => format!("cell_mass:{cell}"),
            Functional::Divergence => "divergence".into(),
            Functional::Custom { name, .. } => name.clone(),
        }
    }

    pub fn eval(&self, spec: &DivergenceSpec, p: &[f64], q: &[f64]) -> f64 {
        match self {
            Functional::Zero => 0.0,
            Functional::CellMass { cell } => q[*cell] - p[*cell],
            Functional::Divergence => divergence_vec(spec, p, q),
            Functional::Custom { f, .. } => f(p, q),
        }
    }
}

impl fmt::Debug for Functional {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.name())
    }
}

impl std::str::FromStr for Functional {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "zero" => Ok(Functional::Zero),
            "divergence" => Ok(Functional::Divergence),
            _ => match s.strip_prefix("cell_mass") {
                Some("") => Ok(Functional::CellMass { cell: 0 }),
                Some(rest) => rest
                    .strip_prefix(':')
                    .and_then(|c| c.parse().ok())
                    .map(|cell| Functional::CellMass { cell })
                    .ok_or_else(|| Error::arg(format!("bad cell index in functional '{s}'"))),
                None => Err(Error::arg(format!(
                    "unknown functional '{s}' (expected zero, divergence or cell_mass[:j])"
                ))),
            },
        }
    }
}

/// A test statistic for `H0: θ_T = θ` evaluated on the cell masses of the
/// weighted empirical measure.
#[derive(Debug, Clone)]
pub enum TestStatistic {
    /// The plug-in minimum-divergence statistic `φ^W(P_n^W, P_θ0)`.
    MinDivergence { spec: DivergenceSpec, theta0: Vec<f64> },
    GenericFunctional(Functional),
}

impl TestStatistic {
    /// Value at cell masses `q` when `P_θ0` has cell masses `p`.
    pub fn eval(&self, spec: &DivergenceSpec, p: &[f64], q: &[f64]) -> f64 {
        match self {
            TestStatistic::MinDivergence { spec, .. } => divergence_vec(spec, q, p),
            TestStatistic::GenericFunctional(psi) => psi.eval(spec, p, q),
        }
    }
}

/// `−2 φ^W(P_θ, P_θ')`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Slope {
    pub slope: f64,
    pub divergence: f64,
    /// The divergence is infinite and the slope is `−∞`.
    pub infinite: bool,
}

impl Slope {
    fn from_divergence(d: f64) -> Self {
        Slope {
            slope: -2.0 * d,
            divergence: d,
            infinite: d == f64::INFINITY,
        }
    }
}

/// `∫ φ(dP/dQ) dQ` between two members of the model.
pub fn model_divergence(
    model: &ParametricModel,
    spec: &DivergenceSpec,
    theta: &[f64],
    theta_q: &[f64],
    tol: f64,
) -> Result<f64> {
    if model.is_categorical() {
        return Ok(divergence_vec(spec, &model.probs(theta)?, &model.probs(theta_q)?));
    }
    model.integrate_under(
        theta_q,
        |x| match model.log_density_ratio(theta, theta_q, x) {
            Ok(l) => spec.phi(l.exp()),
            Err(_) => f64::NAN,
        },
        tol,
    )
}

/// Slope of the minimum-divergence test, `−2 φ^W(P_θ, P_θ')`.
pub fn slope_min_divergence(
    model: &ParametricModel,
    law: &WeightLaw,
    theta: &[f64],
    theta_prime: &[f64],
    tol: f64,
) -> Result<Slope> {
    law.validate()?;
    let d = model_divergence(model, &induced_divergence(law), theta, theta_prime, tol)?;
    Ok(Slope::from_divergence(d.max(0.0)))
}

/// Slope of the test built on `ψ`, with the minimizing `Q`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GenericSlope {
    pub slope: f64,
    /// `inf { φ^W(P_θ, Q) : ψ(θ, Q) ≥ ψ(θ, P_θ') }`.
    pub infimum: f64,
    pub minimizer: Vec<f64>,
    /// `ψ(θ, P_θ')`, the constraint level.
    pub level: f64,
}

/// `−2 inf { φ^W(P_θ, Q) : ψ(θ, Q) ≥ ψ(θ, P_θ') }` over probability vectors
/// `Q`, by a simplex grid of step [`GENERIC_GRID_STEP`] whose best
/// [`GENERIC_RESTARTS`] points are refined by local descent.
pub fn slope_generic(
    model: &ParametricModel,
    law: &WeightLaw,
    psi: &Functional,
    theta: &[f64],
    theta_prime: &[f64],
) -> Result<GenericSlope> {
    law.validate()?;
    let k = model
        .atoms()
        .ok_or_else(|| Error::Kind(format!("generic slopes need a categorical model, got {}", model.token())))?;
    if k > 3 {
        return Err(Error::Scale(format!("generic slopes are solved on at most 3 atoms, got {k}")));
    }
    if let Functional::CellMass { cell } = psi {
        if *cell >= k {
            return Err(Error::arg(format!("cell {cell} out of range for {k} atoms")));
        }
    }
    let spec = induced_divergence(law);
    let p = model.probs(theta)?;
    let level = psi.eval(&spec, &p, &model.probs(theta_prime)?);
    let slack = 1e-12 * level.abs().max(1.0);
    let objective = |q: &[f64]| -> f64 {
        if psi.eval(&spec, &p, q) >= level - slack {
            divergence_vec(&spec, &p, q)
        } else {
            f64::INFINITY
        }
    };
    let full = |head: &[f64]| -> Vec<f64> {
        let mut q = head.to_vec();
        q.push(1.0 - head.iter().sum::<f64>());
        q
    };

    let m = (1.0 / GENERIC_GRID_STEP).round() as usize;
    let heads: Vec<Vec<f64>> = match k {
        2 => (1..m).map(|i| vec![i as f64 / m as f64]).collect(),
        _ => (1..m)
            .flat_map(|i| (1..m - i).map(move |j| vec![i as f64 / m as f64, j as f64 / m as f64]))
            .collect(),
    };
    let mut scored: Vec<(f64, usize)> = with_pool(|| {
        heads
            .par_iter()
            .enumerate()
            .map(|(i, h)| (objective(&full(h)), i))
            .collect()
    });
    scored.retain(|s| s.0.is_finite());
    if scored.is_empty() {
        return Err(Error::Degenerate(format!(
            "no probability vector satisfies ψ(θ, Q) ≥ {level} at finite divergence"
        )));
    }
    scored.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    let (mut best, mut arg) = (scored[0].0, full(&heads[scored[0].1]));
    let opts = OptimOptions {
        grid_points: 5,
        restarts: 1,
        ..OptimOptions::default()
    };
    for &(_, i) in scored.iter().take(GENERIC_RESTARTS) {
        let bounds: Vec<(f64, f64)> = heads[i]
            .iter()
            .map(|&c| ((c - GENERIC_GRID_STEP).max(1e-12), (c + GENERIC_GRID_STEP).min(1.0 - 1e-12)))
            .collect();
        let local = optimize::minimize(
            |h| {
                let q = full(h);
                if q.iter().any(|&v| v <= 0.0) {
                    f64::INFINITY
                } else {
                    objective(&q)
                }
            },
            &bounds,
            &opts,
        );
        if let Ok(r) = local {
            if r.value < best {
                best = r.value;
                arg = full(&r.x);
            }
        }
    }
    // The unconstrained minimizer P_θ itself is feasible whenever the level
    // is not positive.
    if objective(&p) <= best {
        best = objective(&p);
        arg = p.clone();
    }
    Ok(GenericSlope {
        slope: -2.0 * best,
        infimum: best,
        minimizer: arg,
        level,
    })
}

/// Both slopes and their ordering, in both sign conventions.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EfficiencyComparison {
    pub functional: String,
    /// Signed slopes: limits of `(2/n) log p-value`, more negative is better.
    pub slope_min_divergence: f64,
    pub slope_generic: f64,
    pub minimizer: Vec<f64>,
    /// `slope_generic ≥ slope_min_divergence`.
    pub min_divergence_efficient: bool,
    /// Positive exact slopes `c = −slope`, larger is better.
    pub exact_slope_min_divergence: f64,
    pub exact_slope_generic: f64,
    pub conventions: &'static str,
}

const CONVENTIONS: &str = "slope_* are signed limits of (2/n) log p-value (more negative is more efficient); \
exact_slope_* = -slope_* are the positive exact slopes (larger is more efficient)";

pub fn efficiency_compare(
    model: &ParametricModel,
    law: &WeightLaw,
    psi: &Functional,
    theta: &[f64],
    theta_prime: &[f64],
) -> Result<EfficiencyComparison> {
    let md = slope_min_divergence(model, law, theta, theta_prime, 1e-10)?;
    let g = slope_generic(model, law, psi, theta, theta_prime)?;
    let tol = 1e-12 * md.slope.abs().max(1.0);
    Ok(EfficiencyComparison {
        functional: psi.name(),
        slope_min_divergence: md.slope,
        slope_generic: g.slope,
        minimizer: g.minimizer,
        min_divergence_efficient: g.slope >= md.slope - tol,
        exact_slope_min_divergence: -md.slope,
        exact_slope_generic: -g.slope,
        conventions: CONVENTIONS,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrendRow {
    pub n: u64,
    pub t: f64,
    pub reps: u64,
    pub hits: u64,
    /// `(2/n) log` of the tail frequency; `−∞` without hits.
    pub rate_estimate: f64,
    /// `−2t`.
    pub rate_target: f64,
    pub ci_lo: f64,
    pub ci_hi: f64,
    /// No hits: `ci_hi` is a rule-of-three upper bound.
    pub one_sided: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrendTable {
    pub rows: Vec<TrendRow>,
    /// `|rate − target|` decreases along the rows that have hits.
    pub monotone: bool,
}

/// Null tail frequency of the minimum-divergence statistic
/// `T_n = φ^W(P_n^W, P_θ)` at `t = ½ φ^W(P_θ, P_θ')`.
///
/// The observations are fixed at the counts fitted to `P_θ` and only the
/// weights vary across replications.
#[allow(clippy::too_many_arguments)]
pub fn empirical_slope_trend(
    model: &ParametricModel,
    law: &WeightLaw,
    theta: &[f64],
    theta_prime: &[f64],
    n_grid: &[u64],
    reps: u64,
    seed: u64,
) -> Result<TrendTable> {
    law.validate()?;
    if reps < 1000 {
        return Err(Error::arg(format!("reps must be at least 1000, got {reps}")));
    }
    if !model.is_categorical() {
        return Err(Error::Kind(format!("the slope trend needs a categorical model, got {}", model.token())));
    }
    let spec = induced_divergence(law);
    let p = model.probs(theta)?;
    let t = 0.5 * divergence_vec(&spec, &p, &model.probs(theta_prime)?);
    let stat = TestStatistic::MinDivergence {
        spec,
        theta0: theta.to_vec(),
    };
    let mut rows = Vec::with_capacity(n_grid.len());
    for (gi, &n) in n_grid.iter().enumerate() {
        if n < 2 {
            return Err(Error::arg(format!("n must be at least 2, got {n}")));
        }
        let counts = fitted_counts(&p, n);
        let nf = n as f64;
        let hit = |r: u64| -> bool {
            let mut rng = rng_for(seed, "bahadur-trend", ((gi as u64) << 40) | r);
            let q: Vec<f64> = counts.iter().map(|&c| law.sample_tilted_sum(0.0, c, &mut rng) / nf).collect();
            stat.eval(&spec, &p, &q) >= t
        };
        let hits = with_pool(|| (0..reps).into_par_iter().filter(|&r| hit(r)).count()) as u64;
        let rate = |v: f64| if v > 0.0 { 2.0 * v.ln() / nf } else { f64::NEG_INFINITY };
        let rf = reps as f64;
        let row = if hits == 0 {
            TrendRow {
                n,
                t,
                reps,
                hits,
                rate_estimate: f64::NEG_INFINITY,
                rate_target: -2.0 * t,
                ci_lo: f64::NEG_INFINITY,
                ci_hi: rate(3.0 / rf),
                one_sided: true,
            }
        } else {
            let (lo, hi) = wilson(hits, reps);
            TrendRow {
                n,
                t,
                reps,
                hits,
                rate_estimate: rate(hits as f64 / rf),
                rate_target: -2.0 * t,
                ci_lo: rate(lo),
                ci_hi: rate(hi),
                one_sided: false,
            }
        };
        rows.push(row);
    }
    let gaps: Vec<f64> = rows
        .iter()
        .filter(|r| !r.one_sided)
        .map(|r| (r.rate_estimate - r.rate_target).abs())
        .collect();
    let monotone = gaps.windows(2).all(|w| w[1] <= w[0]);
    Ok(TrendTable { rows, monotone })
}
