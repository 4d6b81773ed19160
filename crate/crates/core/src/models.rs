//! Parametric models: categorical families on a finite set of atoms and
//! one-parameter exponential families on the line.
//!
//! Observations are `f64`. Categorical atoms are the labels `0, 1, …, k−1`.

use std::fmt;

use nalgebra::DMatrix;
use rand::Rng as _;
use rand_distr::{Distribution, Exp, Normal, Poisson};
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, DiscreteCDF, Exp as ExpDist, Normal as NormalDist, Poisson as PoissonDist};
use statrs::function::factorial::ln_factorial;

use crate::error::{Error, Result};
use crate::quadrature;
use crate::seed::{rng_from_seed, Rng};

/// How θ maps to the probability vector of a categorical model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum CategoricalMap {
    /// θ holds the first `k−1` masses; the last is `1 − Σθ`.
    Simplex,
    /// θ holds `k−1` logits; the last atom has logit 0.
    Softmax,
    /// Binomial`(k−1, θ)` masses with a scalar θ ∈ (0, 1).
    Binomial,
    /// A fixed probability vector indexed by a dummy scalar θ.
    Constant(Vec<f64>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum ModelKind {
    Categorical { k: usize, map: CategoricalMap },
    /// `N(θ, 1)`, `C(θ) = θ²/2`.
    GaussLocation,
    /// Poisson with natural parameter θ, `C(θ) = e^θ`.
    PoissonNatural,
    /// Exponential with natural parameter θ < 0, `C(θ) = −log(−θ)`.
    ExponentialScale,
}

/// A parametric family `{P_θ : θ ∈ Θ}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParametricModel {
    kind: ModelKind,
}

impl ParametricModel {
    pub fn categorical(k: usize, map: CategoricalMap) -> Result<Self> {
        if k < 2 {
            return Err(Error::arg(format!("a categorical model needs at least 2 atoms, got {k}")));
        }
        if let CategoricalMap::Constant(p) = &map {
            if p.len() != k || p.iter().any(|&v| !(v > 0.0)) || (p.iter().sum::<f64>() - 1.0).abs() > 1e-12 {
                return Err(Error::arg("constant categorical map needs k positive masses summing to 1"));
            }
        }
        Ok(ParametricModel {
            kind: ModelKind::Categorical { k, map },
        })
    }

    /// Full simplex on `k` atoms, parametrized by the first `k−1` masses.
    pub fn simplex(k: usize) -> Result<Self> {
        Self::categorical(k, CategoricalMap::Simplex)
    }

    pub fn gauss_location() -> Self {
        ParametricModel {
            kind: ModelKind::GaussLocation,
        }
    }

    pub fn poisson() -> Self {
        ParametricModel {
            kind: ModelKind::PoissonNatural,
        }
    }

    pub fn exponential_scale() -> Self {
        ParametricModel {
            kind: ModelKind::ExponentialScale,
        }
    }

    pub fn kind(&self) -> &ModelKind {
        &self.kind
    }

    pub fn is_categorical(&self) -> bool {
        matches!(self.kind, ModelKind::Categorical { .. })
    }

    pub fn is_exp_family(&self) -> bool {
        !self.is_categorical()
    }

    /// Config token.
    pub fn token(&self) -> &'static str {
        match self.kind {
            ModelKind::Categorical { .. } => "categorical",
            ModelKind::GaussLocation => "gauss_loc",
            ModelKind::PoissonNatural => "poisson",
            ModelKind::ExponentialScale => "exp_scale",
        }
    }

    /// Dimension of θ.
    pub fn dim(&self) -> usize {
        match &self.kind {
            ModelKind::Categorical { k, map } => match map {
                CategoricalMap::Simplex | CategoricalMap::Softmax => k - 1,
                CategoricalMap::Binomial | CategoricalMap::Constant(_) => 1,
            },
            _ => 1,
        }
    }

    /// Number of atoms for categorical models.
    pub fn atoms(&self) -> Option<usize> {
        match self.kind {
            ModelKind::Categorical { k, .. } => Some(k),
            _ => None,
        }
    }

    /// Coordinate-wise bounds of Θ (open box; the simplex map adds `Σθ < 1`).
    pub fn param_bounds(&self) -> Vec<(f64, f64)> {
        let inf = f64::INFINITY;
        match &self.kind {
            ModelKind::Categorical { map, .. } => match map {
                CategoricalMap::Simplex | CategoricalMap::Binomial => vec![(0.0, 1.0); self.dim()],
                CategoricalMap::Softmax | CategoricalMap::Constant(_) => vec![(-inf, inf); self.dim()],
            },
            ModelKind::GaussLocation | ModelKind::PoissonNatural => vec![(-inf, inf)],
            ModelKind::ExponentialScale => vec![(-inf, 0.0)],
        }
    }

    /// Whether θ lies in the interior of Θ.
    pub fn in_domain(&self, theta: &[f64]) -> bool {
        if theta.len() != self.dim() || theta.iter().any(|v| !v.is_finite()) {
            return false;
        }
        let inside = self
            .param_bounds()
            .iter()
            .zip(theta)
            .all(|(&(a, b), &t)| t > a && t < b);
        match &self.kind {
            ModelKind::Categorical {
                map: CategoricalMap::Simplex,
                ..
            } => inside && theta.iter().sum::<f64>() < 1.0,
            _ => inside,
        }
    }

    fn check(&self, theta: &[f64]) -> Result<()> {
        if self.in_domain(theta) {
            Ok(())
        } else {
            Err(Error::arg(format!("parameter {theta:?} is outside the {} parameter space", self.token())))
        }
    }

    /// Probability vector of a categorical model.
    pub fn probs(&self, theta: &[f64]) -> Result<Vec<f64>> {
        let ModelKind::Categorical { k, map } = &self.kind else {
            return Err(Error::Kind(format!("{} has no finite probability vector", self.token())));
        };
        self.check(theta)?;
        let k = *k;
        Ok(match map {
            CategoricalMap::Simplex => {
                let mut p = theta.to_vec();
                p.push(1.0 - theta.iter().sum::<f64>());
                p
            }
            CategoricalMap::Softmax => {
                let m = theta.iter().fold(0.0f64, |a, &b| a.max(b));
                let mut e: Vec<f64> = theta.iter().map(|&t| (t - m).exp()).collect();
                e.push((-m).exp());
                let s: f64 = e.iter().sum();
                e.iter().map(|v| v / s).collect()
            }
            CategoricalMap::Binomial => {
                let q = theta[0];
                let n = (k - 1) as u64;
                (0..k as u64)
                    .map(|j| {
                        let lc = ln_factorial(n) - ln_factorial(j) - ln_factorial(n - j);
                        (lc + j as f64 * q.ln() + (n - j) as f64 * (1.0 - q).ln()).exp()
                    })
                    .collect()
            }
            CategoricalMap::Constant(p) => p.clone(),
        })
    }

    /// Inverse of [`Self::probs`] for a strictly positive probability vector.
    pub fn theta_from_probs(&self, p: &[f64]) -> Result<Vec<f64>> {
        let ModelKind::Categorical { k, map } = &self.kind else {
            return Err(Error::Kind(format!("{} has no finite probability vector", self.token())));
        };
        if p.len() != *k {
            return Err(Error::arg(format!("expected {k} masses, got {}", p.len())));
        }
        Ok(match map {
            CategoricalMap::Simplex => p[..k - 1].to_vec(),
            CategoricalMap::Softmax => p[..k - 1].iter().map(|&v| (v / p[k - 1]).ln()).collect(),
            CategoricalMap::Binomial => {
                let mean: f64 = p.iter().enumerate().map(|(j, &v)| j as f64 * v).sum();
                vec![mean / (k - 1) as f64]
            }
            CategoricalMap::Constant(_) => vec![0.0],
        })
    }

    fn atom_index(&self, x: f64) -> Option<usize> {
        let k = self.atoms()?;
        let j = x.round();
        (j == x && j >= 0.0 && (j as usize) < k).then_some(j as usize)
    }

    /// Sufficient statistic `t(x)`; the identity for all shipped families.
    pub fn sufficient_statistic(&self, x: f64) -> f64 {
        x
    }

    /// Log-normalizer `C(θ)` of an exponential family.
    pub fn log_normalizer(&self, theta: &[f64]) -> Result<f64> {
        let t = self.exp_theta(theta)?;
        Ok(self.c(t))
    }

    fn exp_theta(&self, theta: &[f64]) -> Result<f64> {
        if self.is_categorical() {
            return Err(Error::Kind("categorical models are not parametrized as exponential families".into()));
        }
        self.check(theta)?;
        Ok(theta[0])
    }

    /// `C(θ)` extended by `+∞` outside Θ.
    fn c(&self, t: f64) -> f64 {
        match self.kind {
            ModelKind::GaussLocation => 0.5 * t * t,
            ModelKind::PoissonNatural => t.exp(),
            ModelKind::ExponentialScale if t < 0.0 => -(-t).ln(),
            _ => f64::INFINITY,
        }
    }

    fn c_d1(&self, t: f64) -> f64 {
        match self.kind {
            ModelKind::GaussLocation => t,
            ModelKind::PoissonNatural => t.exp(),
            _ => -1.0 / t,
        }
    }

    fn c_d2(&self, t: f64) -> f64 {
        match self.kind {
            ModelKind::GaussLocation => 1.0,
            ModelKind::PoissonNatural => t.exp(),
            _ => 1.0 / (t * t),
        }
    }

    /// `∇C(θ)`, the mean of the sufficient statistic under `P_θ`.
    pub fn grad_c(&self, theta: &[f64]) -> Result<Vec<f64>> {
        let t = self.exp_theta(theta)?;
        Ok(vec![self.c_d1(t)])
    }

    /// Solve `∇C(θ) = target` by safeguarded Newton.
    pub fn solve_score(&self, target: &[f64]) -> Result<Vec<f64>> {
        if self.is_categorical() {
            return Err(Error::Kind("score equation is defined for exponential families only".into()));
        }
        if target.len() != 1 || !target[0].is_finite() {
            return Err(Error::arg(format!("score target must be one finite value, got {target:?}")));
        }
        let y = target[0];
        match self.kind {
            ModelKind::GaussLocation => Ok(vec![y]),
            ModelKind::PoissonNatural | ModelKind::ExponentialScale if y <= 0.0 => Err(Error::NoSolution(format!(
                "score target {y} is outside the mean range (0, ∞) of the {} model",
                self.token()
            ))),
            ModelKind::PoissonNatural => Ok(vec![newton_polish(|t| self.c_d1(t) - y, |t| self.c_d2(t), y.ln())]),
            _ => Ok(vec![newton_polish(|t| self.c_d1(t) - y, |t| self.c_d2(t), -1.0 / y)]),
        }
    }

    /// Fisher information at θ.
    pub fn fisher_information(&self, theta: &[f64]) -> Result<DMatrix<f64>> {
        self.check(theta)?;
        if self.is_exp_family() {
            return Ok(DMatrix::from_element(1, 1, self.c_d2(theta[0])));
        }
        // J^T diag(1/p) J with a central-difference Jacobian of the map.
        let d = self.dim();
        let p = self.probs(theta)?;
        let k = p.len();
        let mut jac = DMatrix::zeros(k, d);
        for i in 0..d {
            let h = 1e-6 * theta[i].abs().max(1.0);
            let (mut up, mut dn) = (theta.to_vec(), theta.to_vec());
            up[i] += h;
            dn[i] -= h;
            if !self.in_domain(&up) || !self.in_domain(&dn) {
                return Err(Error::arg("parameter too close to the boundary for the information matrix"));
            }
            let (pu, pd) = (self.probs(&up)?, self.probs(&dn)?);
            for j in 0..k {
                jac[(j, i)] = (pu[j] - pd[j]) / (2.0 * h);
            }
        }
        let inv_p = DMatrix::from_diagonal(&nalgebra::DVector::from_iterator(k, p.iter().map(|v| 1.0 / v)));
        Ok(jac.transpose() * inv_p * &jac)
    }

    /// `log (dP_θ/dP_α)(x)`.
    pub fn log_density_ratio(&self, theta: &[f64], alpha: &[f64], x: f64) -> Result<f64> {
        match &self.kind {
            ModelKind::Categorical { .. } => {
                let j = self
                    .atom_index(x)
                    .ok_or_else(|| Error::arg(format!("{x} is not an atom of the categorical model")))?;
                let (p, q) = (self.probs(theta)?, self.probs(alpha)?);
                Ok(p[j].ln() - q[j].ln())
            }
            _ => {
                let (t, a) = (self.exp_theta(theta)?, self.exp_theta(alpha)?);
                Ok((t - a) * self.sufficient_statistic(x) - self.c(t) + self.c(a))
            }
        }
    }

    /// `(θ − α, C(α) − C(θ))`, so that `log (dP_θ/dP_α)(x) = slope·t(x) + offset`.
    pub fn log_ratio_affine(&self, theta: &[f64], alpha: &[f64]) -> Result<(f64, f64)> {
        let (t, a) = (self.exp_theta(theta)?, self.exp_theta(alpha)?);
        Ok((t - a, self.c(a) - self.c(t)))
    }

    /// `∫ (dP_θ/dP_α)^s dP_θ` in closed form for exponential families,
    /// `+∞` when the tilted parameter leaves Θ.
    pub fn ratio_moment(&self, theta: &[f64], alpha: &[f64], s: f64) -> Result<f64> {
        if let Some(k) = self.atoms() {
            let (p, q) = (self.probs(theta)?, self.probs(alpha)?);
            return Ok((0..k).map(|j| p[j] * (p[j] / q[j]).powf(s)).sum());
        }
        let (t, a) = (self.exp_theta(theta)?, self.exp_theta(alpha)?);
        let tilted = (1.0 + s) * t - s * a;
        let c = self.c(tilted);
        if !c.is_finite() {
            return Ok(f64::INFINITY);
        }
        Ok((c - (1.0 + s) * self.c(t) + s * self.c(a)).exp())
    }

    /// `KL(P_θ, P_α) = ∫ log(dP_θ/dP_α) dP_θ`.
    pub fn kl(&self, theta: &[f64], alpha: &[f64]) -> Result<f64> {
        if let Some(k) = self.atoms() {
            let (p, q) = (self.probs(theta)?, self.probs(alpha)?);
            return Ok((0..k).map(|j| p[j] * (p[j] / q[j]).ln()).sum());
        }
        let (t, a) = (self.exp_theta(theta)?, self.exp_theta(alpha)?);
        Ok((t - a) * self.c_d1(t) - self.c(t) + self.c(a))
    }

    /// Mean and standard deviation of the observation under `P_θ`.
    pub fn mean_sd(&self, theta: &[f64]) -> Result<(f64, f64)> {
        if let Some(k) = self.atoms() {
            let p = self.probs(theta)?;
            let m: f64 = (0..k).map(|j| j as f64 * p[j]).sum();
            let v: f64 = (0..k).map(|j| (j as f64 - m).powi(2) * p[j]).sum();
            return Ok((m, v.sqrt()));
        }
        let t = self.exp_theta(theta)?;
        Ok((self.c_d1(t), self.c_d2(t).sqrt()))
    }

    /// `log p_θ(x)` with respect to counting measure (discrete models) or
    /// Lebesgue measure (continuous models).
    pub fn log_density(&self, theta: &[f64], x: f64) -> Result<f64> {
        if self.is_categorical() {
            let p = self.probs(theta)?;
            return Ok(self.atom_index(x).map_or(f64::NEG_INFINITY, |j| p[j].ln()));
        }
        let t = self.exp_theta(theta)?;
        Ok(match self.kind {
            ModelKind::GaussLocation => -0.5 * (x - t).powi(2) - 0.5 * (2.0 * std::f64::consts::PI).ln(),
            ModelKind::PoissonNatural => {
                if x >= 0.0 && x.fract() == 0.0 {
                    t * x - t.exp() - ln_factorial(x as u64)
                } else {
                    f64::NEG_INFINITY
                }
            }
            _ => {
                if x > 0.0 {
                    t * x + (-t).ln()
                } else {
                    f64::NEG_INFINITY
                }
            }
        })
    }

    /// `∫ f dP_θ` to absolute-or-relative tolerance `tol`.
    pub fn integrate_under(&self, theta: &[f64], f: impl Fn(f64) -> f64, tol: f64) -> Result<f64> {
        if !(tol > 0.0) {
            return Err(Error::arg(format!("tolerance must be positive, got {tol}")));
        }
        if let Some(k) = self.atoms() {
            let p = self.probs(theta)?;
            return Ok((0..k).map(|j| p[j] * f(j as f64)).sum());
        }
        let t = self.exp_theta(theta)?;
        let (m, sd) = self.mean_sd(theta)?;
        match self.kind {
            ModelKind::GaussLocation => quadrature::integrate_real_line(
                |x| {
                    let d = (self.log_density(theta, x).unwrap_or(f64::NEG_INFINITY)).exp();
                    if d == 0.0 {
                        0.0
                    } else {
                        d * f(x)
                    }
                },
                m,
                sd,
                tol,
            ),
            ModelKind::ExponentialScale => quadrature::integrate_half_line(
                |x| {
                    let d = (t * x + (-t).ln()).exp();
                    if d == 0.0 {
                        0.0
                    } else {
                        d * f(x)
                    }
                },
                m,
                tol,
            ),
            _ => poisson_series(t, f, tol),
        }
    }

    /// Cumulative distribution function of `P_θ`.
    pub fn cdf(&self, theta: &[f64], x: f64) -> Result<f64> {
        if let Some(k) = self.atoms() {
            let p = self.probs(theta)?;
            if x < 0.0 {
                return Ok(0.0);
            }
            let upto = (x.floor() as usize).min(k - 1);
            return Ok(p[..=upto].iter().sum::<f64>().min(1.0));
        }
        let t = self.exp_theta(theta)?;
        Ok(match self.kind {
            ModelKind::GaussLocation => NormalDist::new(t, 1.0).expect("unit sd").cdf(x),
            ModelKind::PoissonNatural => {
                if x < 0.0 {
                    0.0
                } else {
                    PoissonDist::new(t.exp()).expect("positive rate").cdf(x.floor() as u64)
                }
            }
            _ => ExpDist::new(-t).expect("positive rate").cdf(x),
        })
    }

    /// One draw from `P_θ` (θ must already be validated).
    fn draw(&self, probs: Option<&[f64]>, t: f64, rng: &mut Rng) -> f64 {
        match (probs, &self.kind) {
            (Some(p), _) => {
                let u: f64 = rng.random();
                let mut acc = 0.0;
                for (j, &pj) in p.iter().enumerate() {
                    acc += pj;
                    if u < acc {
                        return j as f64;
                    }
                }
                (p.len() - 1) as f64
            }
            (None, ModelKind::GaussLocation) => Normal::new(t, 1.0).expect("unit sd").sample(rng),
            (None, ModelKind::PoissonNatural) => Poisson::new(t.exp()).expect("positive rate").sample(rng),
            (None, _) => Exp::new(-t).expect("positive rate").sample(rng),
        }
    }

    /// `n` draws from `P_θ` using an existing stream.
    pub fn sample_with(&self, theta: &[f64], n: usize, rng: &mut Rng) -> Result<Vec<f64>> {
        self.check(theta)?;
        let probs = if self.is_categorical() { Some(self.probs(theta)?) } else { None };
        let t = theta[0];
        Ok((0..n).map(|_| self.draw(probs.as_deref(), t, rng)).collect())
    }

    /// `n` i.i.d. draws from `P_θ`, deterministic in `seed`.
    pub fn sample(&self, theta: &[f64], n: usize, seed: u64) -> Result<Vec<f64>> {
        if n == 0 {
            return Err(Error::arg("sample size must be at least 1"));
        }
        self.sample_with(theta, n, &mut rng_from_seed(seed))
    }

    /// Moment-based pilot estimate from weighted observations: the
    /// self-normalized weighted mean matched through `∇C`, or weighted cell
    /// frequencies mapped back through the categorical map. The result is
    /// pulled inside Θ when the raw moment falls on or outside its boundary.
    pub fn moment_pilot(&self, points: &[f64], weights: &[f64]) -> Result<Vec<f64>> {
        let total: f64 = weights.iter().sum();
        if points.is_empty() || !(total.abs() > 0.0) {
            return Err(Error::Degenerate("pilot estimate needs a nonzero total weight".into()));
        }
        if let Some(k) = self.atoms() {
            let mut freq = vec![0.0; k];
            for (&x, &w) in points.iter().zip(weights) {
                let j = self
                    .atom_index(x)
                    .ok_or_else(|| Error::arg(format!("{x} is not an atom of the categorical model")))?;
                freq[j] += w;
            }
            let floor = 0.5 / points.len() as f64;
            let mut freq: Vec<f64> = freq.iter().map(|v| (v / total).max(floor)).collect();
            let s: f64 = freq.iter().sum();
            freq.iter_mut().for_each(|v| *v /= s);
            return self.theta_from_probs(&freq);
        }
        let mean = points.iter().zip(weights).map(|(x, w)| x * w).sum::<f64>() / total;
        match self.kind {
            ModelKind::GaussLocation => Ok(vec![mean]),
            _ => self.solve_score(&[mean.max(0.5 / points.len() as f64)]),
        }
    }
}

impl fmt::Display for ParametricModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.kind {
            ModelKind::Categorical { k, .. } => write!(f, "categorical(k={k})"),
            _ => f.write_str(self.token()),
        }
    }
}

impl std::str::FromStr for ParametricModel {
    type Err = Error;

    /// `gauss_loc`, `poisson`, `exp_scale`, or `simplex:k`, `softmax:k`,
    /// `binomial:k` for categorical models on `k` atoms.
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        match s {
            "gauss_loc" => return Ok(Self::gauss_location()),
            "poisson" => return Ok(Self::poisson()),
            "exp_scale" => return Ok(Self::exponential_scale()),
            _ => {}
        }
        let (map, k) = s
            .split_once(':')
            .ok_or_else(|| Error::arg(format!("unknown model {s:?}")))?;
        let k: usize = k
            .parse()
            .map_err(|_| Error::arg(format!("bad atom count in model {s:?}")))?;
        let map = match map {
            "simplex" | "categorical" => CategoricalMap::Simplex,
            "softmax" => CategoricalMap::Softmax,
            "binomial" => CategoricalMap::Binomial,
            _ => {
                return Err(Error::arg(format!(
                    "unknown model {s:?}; expected gauss_loc, poisson, exp_scale, simplex:k, softmax:k or binomial:k"
                )))
            }
        };
        Self::categorical(k, map)
    }
}

fn newton_polish(g: impl Fn(f64) -> f64, dg: impl Fn(f64) -> f64, mut t: f64) -> f64 {
    for _ in 0..50 {
        let step = g(t) / dg(t);
        t -= step;
        if step.abs() <= 1e-15 * t.abs().max(1.0) {
            break;
        }
    }
    t
}

/// `Σ_x f(x) P(X = x)` for `X ~ Poisson(e^θ)`, summing outward from the mode
/// until the geometric tail bound drops below `tol`.
fn poisson_series(theta: f64, f: impl Fn(f64) -> f64, tol: f64) -> Result<f64> {
    const MAX_TERMS: u64 = 1_000_000;
    let lambda = theta.exp();
    let term = |x: u64| {
        let lp = x as f64 * theta - lambda - ln_factorial(x);
        let p = lp.exp();
        if p == 0.0 {
            0.0
        } else {
            p * f(x as f64)
        }
    };
    let mode = lambda.floor() as u64;
    let mut sum = 0.0;
    // downward part: finite
    for x in (0..mode).rev() {
        sum += term(x);
    }
    let mut prev = term(mode);
    sum += prev;
    let mut x = mode + 1;
    loop {
        let cur = term(x);
        if !cur.is_finite() {
            return if cur == f64::INFINITY {
                Ok(cur)
            } else {
                Err(Error::Numeric {
                    message: "series term is not finite".into(),
                    partial: sum,
                })
            };
        }
        sum += cur;
        let ratio = if prev != 0.0 { (cur / prev).abs() } else { 0.0 };
        if x as f64 > lambda && ratio < 1.0 {
            let tail = cur.abs() * ratio / (1.0 - ratio);
            if tail <= tol.max(tol * sum.abs()) * 1e-2 {
                return Ok(sum);
            }
        }
        if x >= MAX_TERMS {
            return Err(Error::Numeric {
                message: "series did not converge".into(),
                partial: sum,
            });
        }
        prev = cur;
        x += 1;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    #[test]
    fn model_tokens() {
        assert_eq!("gauss_loc".parse::<ParametricModel>().unwrap(), ParametricModel::gauss_location());
        assert_eq!("simplex:3".parse::<ParametricModel>().unwrap(), ParametricModel::simplex(3).unwrap());
        assert_eq!("binomial:4".parse::<ParametricModel>().unwrap().dim(), 1);
        assert!("simplex:1".parse::<ParametricModel>().is_err());
        assert!("gauss".parse::<ParametricModel>().is_err());
    }
    #[test]
    fn log_density_ratio_examples() {
        let g = ParametricModel::gauss_location();
        assert_eq!(g.log_density_ratio(&[1.0], &[1.0], 0.3).unwrap(), 0.0);
        assert_abs_diff_eq!(g.log_density_ratio(&[1.0], &[0.0], 2.0).unwrap(), 1.5, epsilon = 1e-15);
        let c = ParametricModel::simplex(2).unwrap();
        assert_abs_diff_eq!(c.log_density_ratio(&[0.5], &[0.25], 0.0).unwrap(), 2f64.ln(), epsilon = 1e-15);
        assert!(c.log_density_ratio(&[0.5], &[0.25], 0.5).is_err());
    }

    #[test]
    fn integrate_under_examples() {
        let g = ParametricModel::gauss_location();
        assert_abs_diff_eq!(g.integrate_under(&[0.0], |_| 1.0, 1e-10).unwrap(), 1.0, epsilon = 1e-10);
        assert_abs_diff_eq!(g.integrate_under(&[0.0], |x| x * x, 1e-10).unwrap(), 1.0, epsilon = 1e-9);
        let r = g
            .integrate_under(&[1.0], |x| g.log_density_ratio(&[1.0], &[0.0], x).unwrap().exp(), 1e-10)
            .unwrap();
        assert_abs_diff_eq!(r, std::f64::consts::E, epsilon = 1e-8);
        assert_abs_diff_eq!(g.ratio_moment(&[1.0], &[0.0], 1.0).unwrap(), std::f64::consts::E, epsilon = 1e-14);
    }

    #[test]
    fn ratio_moment_matches_quadrature() {
        let cases = [
            (ParametricModel::gauss_location(), [0.3], [-0.4]),
            (ParametricModel::poisson(), [0.2], [0.5]),
            (ParametricModel::exponential_scale(), [-1.0], [-1.5]),
        ];
        for (m, t, a) in cases {
            for &s in &[-2.0, -1.0, -0.5, 0.5, 1.0] {
                let closed = m.ratio_moment(&t, &a, s).unwrap();
                let quad = m
                    .integrate_under(&t, |x| (s * m.log_density_ratio(&t, &a, x).unwrap()).exp(), 1e-11)
                    .unwrap();
                assert_abs_diff_eq!(closed, quad, epsilon = 1e-8 * closed.max(1.0));
            }
        }
        // tilted parameter leaves Θ
        let e = ParametricModel::exponential_scale();
        assert_eq!(e.ratio_moment(&[-1.0], &[-3.0], 2.0).unwrap(), f64::INFINITY);
    }

    #[test]
    fn sampling() {
        let c = ParametricModel::simplex(2).unwrap();
        let xs = c.sample(&[0.3], 100_000, 1).unwrap();
        let f0 = xs.iter().filter(|&&x| x == 0.0).count() as f64 / xs.len() as f64;
        assert!((f0 - 0.3).abs() < 0.01);
        let g = ParametricModel::gauss_location();
        let xs = g.sample(&[2.0], 100_000, 2).unwrap();
        assert!((xs.iter().sum::<f64>() / 1e5 - 2.0).abs() < 0.02);
        assert_eq!(g.sample(&[0.0], 3, 5).unwrap(), g.sample(&[0.0], 3, 5).unwrap());
        assert!(g.sample(&[0.0], 0, 5).is_err());
    }

    #[test]
    fn score_and_gradient() {
        let g = ParametricModel::gauss_location();
        let p = ParametricModel::poisson();
        assert_eq!(g.grad_c(&[1.7]).unwrap(), vec![1.7]);
        assert_eq!(p.grad_c(&[0.0]).unwrap(), vec![1.0]);
        assert_eq!(g.grad_c(&[0.0]).unwrap(), vec![0.0]);
        assert_eq!(g.solve_score(&[1.0]).unwrap(), vec![1.0]);
        assert_abs_diff_eq!(p.solve_score(&[1.0]).unwrap()[0], 0.0, epsilon = 1e-15);
        assert!(matches!(p.solve_score(&[-1.0]), Err(Error::NoSolution(_))));
        let c = ParametricModel::simplex(2).unwrap();
        assert!(matches!(c.grad_c(&[0.5]), Err(Error::Kind(_))));
        for m in [ParametricModel::poisson(), ParametricModel::exponential_scale(), g] {
            for &t in &[-2.0, -0.7, -0.1] {
                let back = m.solve_score(&m.grad_c(&[t]).unwrap()).unwrap();
                assert_abs_diff_eq!(back[0], t, epsilon = 1e-8);
                let h = 1e-6;
                let fd = (m.log_normalizer(&[t + h]).unwrap() - m.log_normalizer(&[t - h]).unwrap()) / (2.0 * h);
                let gc = m.grad_c(&[t]).unwrap()[0];
                assert!((fd - gc).abs() <= 1e-5 * gc.abs().max(1.0));
            }
        }
    }

    #[test]
    fn fisher_examples() {
        let g = ParametricModel::gauss_location();
        assert_eq!(g.fisher_information(&[3.0]).unwrap()[(0, 0)], 1.0);
        assert_eq!(ParametricModel::poisson().fisher_information(&[0.0]).unwrap()[(0, 0)], 1.0);
        let c = ParametricModel::categorical(3, CategoricalMap::Constant(vec![0.2, 0.3, 0.5])).unwrap();
        assert_eq!(c.fisher_information(&[0.0]).unwrap()[(0, 0)], 0.0);
        // binomial(k−1, q): information (k−1)/(q(1−q))
        let b = ParametricModel::categorical(4, CategoricalMap::Binomial).unwrap();
        assert_abs_diff_eq!(b.fisher_information(&[0.3]).unwrap()[(0, 0)], 3.0 / 0.21, epsilon = 1e-5);
        let s = ParametricModel::simplex(3).unwrap();
        let i = s.fisher_information(&[0.2, 0.3]).unwrap();
        assert_abs_diff_eq!(i[(0, 1)], i[(1, 0)], epsilon = 1e-12);
        assert!(i.clone().cholesky().is_some());
        assert!(s.fisher_information(&[0.6, 0.5]).is_err());
    }

    #[test]
    fn categorical_maps() {
        let sm = ParametricModel::categorical(3, CategoricalMap::Softmax).unwrap();
        let p = sm.probs(&[0.4, -1.0]).unwrap();
        assert_abs_diff_eq!(p.iter().sum::<f64>(), 1.0, epsilon = 1e-15);
        let back = sm.theta_from_probs(&p).unwrap();
        assert_abs_diff_eq!(back[0], 0.4, epsilon = 1e-12);
        let b = ParametricModel::categorical(3, CategoricalMap::Binomial).unwrap();
        let p = b.probs(&[0.5]).unwrap();
        assert_abs_diff_eq!(p[1], 0.5, epsilon = 1e-15);
        assert!(ParametricModel::simplex(1).is_err());
    }

    #[test]
    fn cdf_values() {
        let g = ParametricModel::gauss_location();
        assert_abs_diff_eq!(g.cdf(&[0.0], 0.0).unwrap(), 0.5, epsilon = 1e-15);
        let c = ParametricModel::simplex(3).unwrap();
        assert_abs_diff_eq!(c.cdf(&[0.2, 0.3], 1.0).unwrap(), 0.5, epsilon = 1e-15);
        let e = ParametricModel::exponential_scale();
        assert_abs_diff_eq!(e.cdf(&[-2.0], 1.0).unwrap(), 1.0 - (-2.0f64).exp(), epsilon = 1e-15);
    }

    proptest! {
        #[test]
        fn cocycle(t in -2.0f64..2.0, a in -2.0f64..2.0, b in -2.0f64..2.0, x in -3.0f64..3.0) {
            let g = ParametricModel::gauss_location();
            let lhs = g.log_density_ratio(&[t], &[a], x).unwrap().exp() * g.log_density_ratio(&[a], &[b], x).unwrap().exp();
            let rhs = g.log_density_ratio(&[t], &[b], x).unwrap().exp();
            prop_assert!((lhs - rhs).abs() <= 1e-12 * rhs.max(1.0));
        }

        #[test]
        fn change_of_measure(t in -1.5f64..1.5, a in -1.5f64..1.5) {
            for m in [ParametricModel::gauss_location(), ParametricModel::poisson()] {
                let v = m.integrate_under(&[t], |x| m.log_density_ratio(&[a], &[t], x).unwrap().exp(), 1e-10).unwrap();
                prop_assert!((v - 1.0).abs() <= 1e-8);
            }
        }

        #[test]
        fn categorical_cocycle(p in 0.05f64..0.9, q in 0.05f64..0.9, r in 0.05f64..0.9, x in 0usize..2) {
            let c = ParametricModel::simplex(2).unwrap();
            let x = x as f64;
            let lhs = c.log_density_ratio(&[p], &[q], x).unwrap() + c.log_density_ratio(&[q], &[r], x).unwrap();
            prop_assert!((lhs - c.log_density_ratio(&[p], &[r], x).unwrap()).abs() <= 1e-12);
        }
    }
}
