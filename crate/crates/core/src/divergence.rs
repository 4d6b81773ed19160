//! Divergence functions and finite-support divergence pseudodistances.
//!
//! A divergence function `φ` is convex with `φ(1) = φ'(1) = 0` and `φ''(1) > 0`.
//! Two families are supported:
//!
//! * the Cressie–Read power divergences
//!   `φ_γ(x) = (x^γ − γx + γ − 1) / (γ(γ − 1))`, with the log limits at
//!   `γ = 0` (likelihood) and `γ = 1` (Kullback–Leibler);
//! * divergences induced by a weight law `W`, `φ^W = M*`, the Chernoff
//!   transform of the cumulant generating function of `W`.
//!
//! Values outside the domain of `φ` are `f64::INFINITY`. Infinity is never
//! replaced by a large finite sentinel; it propagates through sums and
//! comparisons as ordinary IEEE arithmetic does.

use std::cmp::Ordering;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::weights::WeightLaw;

/// Below this distance from 0 or 1 the log-form limits of `φ_γ` are used.
pub const GAMMA_LIMIT_EPS: f64 = 1e-9;

/// Which family a [`DivergenceSpec`] belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum DivergenceKind {
    CressieRead { gamma: f64 },
    /// `φ^W = M*` evaluated through the numeric Chernoff transform of `law`.
    WeightInduced { law: WeightLaw },
}

/// A divergence function together with its derivatives, conjugate and `φ^#`.
///
/// `conjugated` marks the conjugate `φ̃(x) = x φ(1/x)` of the base kind. For
/// Cressie–Read the conjugate is folded back into the family (`γ ↦ 1 − γ`),
/// so the flag is only ever set on weight-induced specs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DivergenceSpec {
    kind: DivergenceKind,
    conjugated: bool,
}

impl DivergenceSpec {
    pub fn cressie_read(gamma: f64) -> Self {
        DivergenceSpec {
            kind: DivergenceKind::CressieRead { gamma },
            conjugated: false,
        }
    }

    /// Likelihood divergence `−log x + x − 1`.
    pub fn likelihood() -> Self {
        Self::cressie_read(0.0)
    }

    /// Kullback–Leibler divergence `x log x − x + 1`.
    pub fn kullback_leibler() -> Self {
        Self::cressie_read(1.0)
    }

    /// `φ^W` through the numeric Chernoff transform, even when a closed form
    /// exists. See [`crate::weights::induced_divergence`] for the closed-form
    /// shortcut.
    pub fn weight_induced_numeric(law: WeightLaw) -> Self {
        DivergenceSpec {
            kind: DivergenceKind::WeightInduced { law },
            conjugated: false,
        }
    }

    pub fn kind(&self) -> DivergenceKind {
        self.kind
    }

    pub fn is_conjugated(&self) -> bool {
        self.conjugated
    }

    /// Cressie–Read index, if this is a Cressie–Read spec.
    pub fn gamma(&self) -> Option<f64> {
        match self.kind {
            DivergenceKind::CressieRead { gamma } => Some(gamma),
            DivergenceKind::WeightInduced { .. } => None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self.kind {
            DivergenceKind::CressieRead { gamma } if !gamma.is_finite() => {
                Err(Error::arg(format!("Cressie-Read index must be finite, got {gamma}")))
            }
            DivergenceKind::WeightInduced { law } => law.validate(),
            _ => Ok(()),
        }
    }

    /// The conjugate divergence `φ̃(x) = x φ(1/x)`.
    pub fn conjugate(&self) -> Self {
        match self.kind {
            DivergenceKind::CressieRead { gamma } => Self::cressie_read(1.0 - gamma),
            DivergenceKind::WeightInduced { .. } => DivergenceSpec {
                kind: self.kind,
                conjugated: !self.conjugated,
            },
        }
    }

    /// Open interval `(a, b)` on which `φ` is finite and twice differentiable.
    /// Endpoints may still carry a finite limit value (e.g. `φ_1(0) = 1`).
    pub fn domain(&self) -> (f64, f64) {
        match (self.kind, self.conjugated) {
            (DivergenceKind::CressieRead { gamma }, _) => {
                if gamma == 2.0 {
                    (f64::NEG_INFINITY, f64::INFINITY)
                } else {
                    (0.0, f64::INFINITY)
                }
            }
            (DivergenceKind::WeightInduced { law }, false) => law.mean_range(),
            (DivergenceKind::WeightInduced { law }, true) => {
                let (lo, hi) = law.mean_range();
                let a = if hi.is_finite() { 1.0 / hi } else { 0.0 };
                let b = if lo > 0.0 { 1.0 / lo } else { f64::INFINITY };
                (a, b)
            }
        }
    }

    /// `φ(x)`.
    pub fn phi(&self, x: f64) -> f64 {
        self.eval(x, 0)
    }

    /// `φ'(x)`.
    pub fn phi_d1(&self, x: f64) -> f64 {
        self.eval(x, 1)
    }

    /// `φ''(x)`.
    pub fn phi_d2(&self, x: f64) -> f64 {
        self.eval(x, 2)
    }

    fn eval(&self, x: f64, order: u8) -> f64 {
        if x.is_nan() {
            return f64::NAN;
        }
        match (self.kind, self.conjugated) {
            (DivergenceKind::CressieRead { gamma }, _) => cressie_read(gamma, x, order),
            (DivergenceKind::WeightInduced { law }, false) => law.chernoff_derivative(x, order),
            (DivergenceKind::WeightInduced { law }, true) => {
                if x < 0.0 {
                    return f64::INFINITY;
                }
                if x == 0.0 {
                    // x φ(1/x) as x → 0 is the recession slope of φ.
                    return match order {
                        0 => law.recession_slope(),
                        _ => f64::INFINITY,
                    };
                }
                let y = 1.0 / x;
                match order {
                    0 => x * law.chernoff_derivative(y, 0),
                    1 => {
                        let v = law.chernoff_derivative(y, 0);
                        if v.is_infinite() {
                            return f64::INFINITY;
                        }
                        v - y * law.chernoff_derivative(y, 1)
                    }
                    _ => law.chernoff_derivative(y, 2) * y * y * y,
                }
            }
        }
    }

    /// `φ^#(x) = x φ'(x) − φ(x)`; `+∞` outside the domain.
    pub fn phi_sharp(&self, x: f64) -> f64 {
        if x.is_nan() {
            return f64::NAN;
        }
        match (self.kind, self.conjugated) {
            (DivergenceKind::CressieRead { gamma }, _) => {
                if !cressie_read_in_domain(gamma, x) {
                    return f64::INFINITY;
                }
                if gamma.abs() < GAMMA_LIMIT_EPS {
                    x.ln()
                } else if (gamma - 1.0).abs() < GAMMA_LIMIT_EPS {
                    x - 1.0
                } else if gamma == 2.0 {
                    (x * x - 1.0) / 2.0
                } else {
                    (x.powf(gamma) - 1.0) / gamma
                }
            }
            (DivergenceKind::WeightInduced { law }, false) => {
                let v = law.chernoff(x);
                if v.is_infinite() {
                    return f64::INFINITY;
                }
                // Legendre identity: x t(x) − M*(x) = M(t(x)).
                let t = law.chernoff_derivative(x, 1);
                if t.is_finite() {
                    law.cgf(t)
                } else {
                    -v
                }
            }
            (DivergenceKind::WeightInduced { .. }, true) => {
                // φ̃^#(x) = −φ(1/x) by direct substitution.
                if x <= 0.0 {
                    let v = self.phi(x);
                    return if v.is_finite() { -v } else { f64::INFINITY };
                }
                let base = DivergenceSpec::weight_induced_numeric(match self.kind {
                    DivergenceKind::WeightInduced { law } => law,
                    _ => unreachable!(),
                });
                let v = base.phi(1.0 / x);
                if v.is_infinite() {
                    f64::INFINITY
                } else {
                    -v
                }
            }
        }
    }
}

fn cressie_read_in_domain(gamma: f64, x: f64) -> bool {
    if !x.is_finite() {
        return false;
    }
    if gamma == 2.0 {
        return true;
    }
    if x > 0.0 {
        return true;
    }
    // φ_γ(0) = 1/γ is finite for γ > 0.
    x == 0.0 && gamma > GAMMA_LIMIT_EPS
}

fn cressie_read(gamma: f64, x: f64, order: u8) -> f64 {
    if !cressie_read_in_domain(gamma, x) {
        return f64::INFINITY;
    }
    if gamma.abs() < GAMMA_LIMIT_EPS {
        return match order {
            0 => -x.ln() + x - 1.0,
            1 => 1.0 - 1.0 / x,
            _ => 1.0 / (x * x),
        };
    }
    if (gamma - 1.0).abs() < GAMMA_LIMIT_EPS {
        return match order {
            0 if x == 0.0 => 1.0,
            0 => x * x.ln() - x + 1.0,
            1 => x.ln(),
            _ => 1.0 / x,
        };
    }
    if gamma == 2.0 {
        return match order {
            0 => 0.5 * (x - 1.0) * (x - 1.0),
            1 => x - 1.0,
            _ => 1.0,
        };
    }
    match order {
        0 => (x.powf(gamma) - gamma * x + gamma - 1.0) / (gamma * (gamma - 1.0)),
        1 => (x.powf(gamma - 1.0) - 1.0) / (gamma - 1.0),
        _ => x.powf(gamma - 2.0),
    }
}

/// `φ(x)`, `φ'(x)` or `φ''(x)` depending on `order`.
pub fn eval_phi(spec: &DivergenceSpec, x: f64, order: u32) -> Result<f64> {
    match order {
        0..=2 => Ok(spec.eval(x, order as u8)),
        _ => Err(Error::arg(format!("derivative order must be 0, 1 or 2, got {order}"))),
    }
}

/// Conjugate divergence `φ̃(x) = x φ(1/x)`.
pub fn conjugate(spec: &DivergenceSpec) -> DivergenceSpec {
    spec.conjugate()
}

/// `φ^#(x) = x φ'(x) − φ(x)`.
pub fn phi_sharp(spec: &DivergenceSpec, x: f64) -> f64 {
    spec.phi_sharp(x)
}

/// A finite, possibly signed, possibly non-normalized measure on a finite
/// set of labelled atoms.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FiniteMeasure {
    support: Vec<f64>,
    masses: Vec<f64>,
}

impl FiniteMeasure {
    pub fn new(support: Vec<f64>, masses: Vec<f64>) -> Result<Self> {
        if support.len() != masses.len() {
            return Err(Error::arg(format!(
                "support has {} labels but {} masses were given",
                support.len(),
                masses.len()
            )));
        }
        if support.iter().chain(masses.iter()).any(|v| !v.is_finite()) {
            return Err(Error::arg("labels and masses must be finite"));
        }
        let mut sorted = support.clone();
        sorted.sort_by(f64::total_cmp);
        if sorted.windows(2).any(|w| w[0].total_cmp(&w[1]) == Ordering::Equal) {
            return Err(Error::arg("support labels must be distinct"));
        }
        Ok(FiniteMeasure { support, masses })
    }

    /// Masses on atoms labelled `0, 1, …, k−1`.
    pub fn from_masses(masses: &[f64]) -> Result<Self> {
        Self::new((0..masses.len()).map(|j| j as f64).collect(), masses.to_vec())
    }

    pub fn support(&self) -> &[f64] {
        &self.support
    }

    pub fn masses(&self) -> &[f64] {
        &self.masses
    }

    pub fn len(&self) -> usize {
        self.masses.len()
    }

    pub fn is_empty(&self) -> bool {
        self.masses.is_empty()
    }

    /// Plain sum of the masses; nothing is normalized.
    pub fn total_mass(&self) -> f64 {
        self.masses.iter().sum()
    }

    pub fn mass_of(&self, label: f64) -> f64 {
        self.support
            .iter()
            .position(|&s| s.total_cmp(&label) == Ordering::Equal)
            .map_or(0.0, |j| self.masses[j])
    }

    pub fn is_probability(&self, tol: f64) -> bool {
        self.masses.iter().all(|&m| m >= 0.0) && (self.total_mass() - 1.0).abs() <= tol
    }
}

/// `φ(Q, P) = Σ_j φ(q_j / p_j) p_j`, with `0/0 = 0` and `+∞` when `Q` charges a
/// `P`-null atom. Supports are unioned; missing atoms carry mass zero.
pub fn divergence_finite(spec: &DivergenceSpec, q: &FiniteMeasure, p: &FiniteMeasure) -> Result<f64> {
    if let Some(m) = p.masses.iter().find(|&&m| m < 0.0) {
        return Err(Error::arg(format!("reference measure has negative mass {m}")));
    }
    let mut labels: Vec<f64> = q.support.iter().chain(p.support.iter()).copied().collect();
    labels.sort_by(f64::total_cmp);
    labels.dedup_by(|a, b| a.total_cmp(b) == Ordering::Equal);
    let mut total = 0.0;
    for label in labels {
        let qj = q.mass_of(label);
        let pj = p.mass_of(label);
        if pj > 0.0 {
            total += spec.phi(qj / pj) * pj;
        } else if qj != 0.0 {
            return Ok(f64::INFINITY);
        }
    }
    Ok(total)
}

/// Divergence between two mass vectors on the same atoms.
pub(crate) fn divergence_vec(spec: &DivergenceSpec, q: &[f64], p: &[f64]) -> f64 {
    let mut total = 0.0;
    for (&qj, &pj) in q.iter().zip(p) {
        if pj > 0.0 {
            total += spec.phi(qj / pj) * pj;
        } else if qj != 0.0 {
            return f64::INFINITY;
        }
    }
    total
}
