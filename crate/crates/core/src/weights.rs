//! Weight laws `W` with `EW = Var W = 1`, their cumulant generating functions
//! and the Chernoff transform `M*(x) = sup_t { tx − M(t) }`.

use std::fmt;
use std::str::FromStr;

use rand::Rng as _;
use rand_distr::{Binomial, Distribution, Exp, Gamma, Normal, Poisson};
use serde::{Deserialize, Serialize};

use crate::divergence::DivergenceSpec;
use crate::error::{Error, Result};
use crate::seed::{rng_from_seed, Rng};

/// `|t|` beyond which the cumulant generating function is treated as `+∞`.
pub const CGF_TRUNCATION: f64 = 700.0;

const NEWTON_MAX_ITER: usize = 200;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum WeightFamily {
    /// Poisson with mean 1.
    PoissonOne,
    /// Exponential with rate 1.
    ExponentialOne,
    /// Normal with mean 1 and variance 1.
    NormalOneOne,
    /// Two-point law taking `1 + √((1−p)/p)` with probability `p` and
    /// `1 − √(p/(1−p))` otherwise.
    TwoPoint { p: f64 },
}

/// An i.i.d. weight distribution with mean 1 and variance 1.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WeightLaw {
    family: WeightFamily,
}

impl WeightLaw {
    pub fn new(family: WeightFamily) -> Self {
        WeightLaw { family }
    }

    pub fn poisson_one() -> Self {
        Self::new(WeightFamily::PoissonOne)
    }

    pub fn exponential_one() -> Self {
        Self::new(WeightFamily::ExponentialOne)
    }

    pub fn normal_one_one() -> Self {
        Self::new(WeightFamily::NormalOneOne)
    }

    pub fn two_point(p: f64) -> Result<Self> {
        let law = Self::new(WeightFamily::TwoPoint { p });
        law.validate()?;
        Ok(law)
    }

    pub fn family(&self) -> WeightFamily {
        self.family
    }

    pub fn validate(&self) -> Result<()> {
        match self.family {
            WeightFamily::TwoPoint { p } if !(p > 0.0 && p < 1.0) => {
                Err(Error::arg(format!("two-point probability must lie in (0, 1), got {p}")))
            }
            _ => Ok(()),
        }
    }

    /// CLI/config token.
    pub fn token(&self) -> String {
        match self.family {
            WeightFamily::PoissonOne => "poisson1".into(),
            WeightFamily::ExponentialOne => "exp1".into(),
            WeightFamily::NormalOneOne => "normal11".into(),
            WeightFamily::TwoPoint { p: 0.5 } => "twopoint".into(),
            WeightFamily::TwoPoint { p } => format!("twopoint:{p}"),
        }
    }

    /// Atoms `(lo, hi)` of the two-point law.
    fn two_point_atoms(p: f64) -> (f64, f64) {
        (1.0 - (p / (1.0 - p)).sqrt(), 1.0 + ((1.0 - p) / p).sqrt())
    }

    /// Interval of `t` on which `M(t) < ∞`, after truncation.
    pub fn cgf_domain(&self) -> (f64, f64) {
        match self.family {
            WeightFamily::ExponentialOne => (-CGF_TRUNCATION, 1.0),
            _ => (-CGF_TRUNCATION, CGF_TRUNCATION),
        }
    }

    fn in_cgf_domain(&self, t: f64) -> bool {
        let (a, b) = self.cgf_domain();
        match self.family {
            WeightFamily::ExponentialOne => t >= a && t < b,
            _ => t >= a && t <= b,
        }
    }

    /// `M(t) = log E exp(tW)`; `+∞` outside the domain.
    pub fn cgf(&self, t: f64) -> f64 {
        if t.is_nan() {
            return f64::NAN;
        }
        if !self.in_cgf_domain(t) {
            return f64::INFINITY;
        }
        if t == 0.0 {
            return 0.0;
        }
        match self.family {
            WeightFamily::PoissonOne => t.exp_m1(),
            WeightFamily::ExponentialOne => -(-t).ln_1p(),
            WeightFamily::NormalOneOne => t + 0.5 * t * t,
            WeightFamily::TwoPoint { p } => {
                let (lo, hi) = Self::two_point_atoms(p);
                let a = p.ln() + t * hi;
                let b = (1.0 - p).ln() + t * lo;
                let m = a.max(b);
                m + ((a - m).exp() + (b - m).exp()).ln()
            }
        }
    }

    /// `M'(t)`.
    pub fn cgf_d1(&self, t: f64) -> f64 {
        match self.family {
            WeightFamily::PoissonOne => t.exp(),
            WeightFamily::ExponentialOne => 1.0 / (1.0 - t),
            WeightFamily::NormalOneOne => 1.0 + t,
            WeightFamily::TwoPoint { p } => {
                let (lo, hi) = Self::two_point_atoms(p);
                lo + (hi - lo) * two_point_tilt(p, t, hi - lo)
            }
        }
    }

    /// `M''(t)`.
    pub fn cgf_d2(&self, t: f64) -> f64 {
        match self.family {
            WeightFamily::PoissonOne => t.exp(),
            WeightFamily::ExponentialOne => 1.0 / ((1.0 - t) * (1.0 - t)),
            WeightFamily::NormalOneOne => 1.0,
            WeightFamily::TwoPoint { p } => {
                let (lo, hi) = Self::two_point_atoms(p);
                let q = two_point_tilt(p, t, hi - lo);
                q * (1.0 - q) * (hi - lo) * (hi - lo)
            }
        }
    }

    /// Closure of the range of `M'`, i.e. the convex hull of the support.
    pub fn mean_range(&self) -> (f64, f64) {
        match self.family {
            WeightFamily::PoissonOne | WeightFamily::ExponentialOne => (0.0, f64::INFINITY),
            WeightFamily::NormalOneOne => (f64::NEG_INFINITY, f64::INFINITY),
            WeightFamily::TwoPoint { p } => Self::two_point_atoms(p),
        }
    }

    /// `P(W = x)` for a finite endpoint `x` of [`Self::mean_range`].
    fn endpoint_mass(&self, x: f64) -> f64 {
        match self.family {
            WeightFamily::PoissonOne if x == 0.0 => (-1.0f64).exp(),
            WeightFamily::TwoPoint { p } => {
                let (lo, hi) = Self::two_point_atoms(p);
                if x == lo {
                    1.0 - p
                } else if x == hi {
                    p
                } else {
                    0.0
                }
            }
            _ => 0.0,
        }
    }

    /// `lim_{x→∞} M*(x)/x`: the right end of the untruncated cgf domain when
    /// the support is unbounded above, `+∞` otherwise.
    pub fn recession_slope(&self) -> f64 {
        match self.family {
            WeightFamily::ExponentialOne => 1.0,
            _ => f64::INFINITY,
        }
    }

    /// Solve `M'(t) = x` for `x` strictly inside the mean range.
    fn solve_tilt(&self, x: f64) -> f64 {
        let tol = 1e-10 * x.abs().max(1.0);
        let (dom_lo, dom_hi) = self.cgf_domain();
        // Bracket from t = 0, where M'(0) = 1.
        let (mut lo, mut hi) = (0.0f64, 0.0f64);
        if x > 1.0 {
            let mut step = 1.0;
            hi = step;
            while self.cgf_d1(hi) < x {
                lo = hi;
                if dom_hi.is_finite() && dom_hi < CGF_TRUNCATION {
                    hi = lo + 0.5 * (dom_hi - lo);
                    if hi <= lo {
                        return lo;
                    }
                } else {
                    step *= 2.0;
                    hi = (lo + step).min(dom_hi);
                    if lo >= dom_hi {
                        return dom_hi;
                    }
                }
            }
        } else if x < 1.0 {
            let mut step = 1.0;
            lo = -step;
            while self.cgf_d1(lo) > x {
                hi = lo;
                step *= 2.0;
                lo = (hi - step).max(dom_lo);
                if hi <= dom_lo {
                    return dom_lo;
                }
            }
        } else {
            return 0.0;
        }

        let mut t = 0.5 * (lo + hi);
        for _ in 0..NEWTON_MAX_ITER {
            let f = self.cgf_d1(t) - x;
            if f.abs() <= tol {
                return t;
            }
            if f > 0.0 {
                hi = t;
            } else {
                lo = t;
            }
            let d = self.cgf_d2(t);
            let newton = t - f / d;
            t = if d > 0.0 && newton > lo && newton < hi {
                newton
            } else {
                0.5 * (lo + hi)
            };
            if hi - lo <= f64::EPSILON * t.abs().max(1.0) {
                return t;
            }
        }
        // Golden-section on the concave objective t·x − M(t).
        golden_max(|s| s * x - self.cgf(s), lo, hi)
    }

    /// Chernoff transform `M*(x)`; `+∞` outside the closed mean range.
    pub fn chernoff(&self, x: f64) -> f64 {
        self.chernoff_derivative(x, 0)
    }

    /// `M*`, `(M*)' = t(x)` or `(M*)'' = 1/M''(t(x))` depending on `order`.
    pub fn chernoff_derivative(&self, x: f64, order: u8) -> f64 {
        if x.is_nan() {
            return f64::NAN;
        }
        let (a, b) = self.mean_range();
        if !x.is_finite() || x < a || x > b {
            return f64::INFINITY;
        }
        if x == a || x == b {
            return match order {
                0 => {
                    let m = self.endpoint_mass(x);
                    if m > 0.0 {
                        -m.ln()
                    } else {
                        f64::INFINITY
                    }
                }
                1 if x == a => f64::NEG_INFINITY,
                _ => f64::INFINITY,
            };
        }
        let t = self.solve_tilt(x);
        match order {
            0 => t * x - self.cgf(t),
            1 => t,
            _ => 1.0 / self.cgf_d2(t),
        }
    }

    /// Draw one weight.
    pub fn sample_one(&self, rng: &mut Rng) -> f64 {
        self.sample_tilted(0.0, rng)
    }

    /// Draw from the exponentially tilted law `dP_λ/dP(w) = exp(λw − M(λ))`.
    /// `λ` must lie inside the cgf domain.
    pub fn sample_tilted(&self, lambda: f64, rng: &mut Rng) -> f64 {
        match self.family {
            WeightFamily::PoissonOne => Poisson::new(lambda.exp()).expect("positive rate").sample(rng),
            WeightFamily::ExponentialOne => Exp::new(1.0 - lambda).expect("positive rate").sample(rng),
            WeightFamily::NormalOneOne => Normal::new(1.0 + lambda, 1.0).expect("unit sd").sample(rng),
            WeightFamily::TwoPoint { p } => {
                let (lo, hi) = Self::two_point_atoms(p);
                if rng.random::<f64>() < two_point_tilt(p, lambda, hi - lo) {
                    hi
                } else {
                    lo
                }
            }
        }
    }

    /// Sum of `m` independent draws from the tilted law, sampled in one step
    /// through the closure of each family under convolution.
    pub fn sample_tilted_sum(&self, lambda: f64, m: u64, rng: &mut Rng) -> f64 {
        if m == 0 {
            return 0.0;
        }
        let mf = m as f64;
        match self.family {
            WeightFamily::PoissonOne => Poisson::new(mf * lambda.exp()).expect("positive rate").sample(rng),
            WeightFamily::ExponentialOne => Gamma::new(mf, 1.0 / (1.0 - lambda)).expect("positive shape").sample(rng),
            WeightFamily::NormalOneOne => Normal::new(mf * (1.0 + lambda), mf.sqrt()).expect("positive sd").sample(rng),
            WeightFamily::TwoPoint { p } => {
                let (lo, hi) = Self::two_point_atoms(p);
                let q = two_point_tilt(p, lambda, hi - lo);
                let up = Binomial::new(m, q).expect("probability in [0, 1]").sample(rng) as f64;
                hi * up + lo * (mf - up)
            }
        }
    }

    /// Draw `n` weights from an existing stream.
    pub fn sample_with(&self, n: usize, rng: &mut Rng) -> Vec<f64> {
        (0..n).map(|_| self.sample_one(rng)).collect()
    }
}

/// Probability of the upper atom under the tilt `λ`.
fn two_point_tilt(p: f64, t: f64, spread: f64) -> f64 {
    let z = (p / (1.0 - p)).ln() + t * spread;
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

pub(crate) fn golden_max(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64) -> f64 {
    let g = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - g * (b - a);
    let mut d = a + g * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    for _ in 0..200 {
        if (b - a).abs() <= 1e-14 * (a.abs() + b.abs()).max(1.0) {
            break;
        }
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
    0.5 * (a + b)
}

impl fmt::Display for WeightLaw {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.token())
    }
}

impl FromStr for WeightLaw {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "poisson1" => Ok(Self::poisson_one()),
            "exp1" => Ok(Self::exponential_one()),
            "normal11" => Ok(Self::normal_one_one()),
            "twopoint" => Self::two_point(0.5),
            other => match other.strip_prefix("twopoint:") {
                Some(p) => {
                    let p: f64 = p
                        .parse()
                        .map_err(|_| Error::arg(format!("bad two-point probability in {other:?}")))?;
                    Self::two_point(p)
                }
                None => Err(Error::arg(format!(
                    "unknown weight law {other:?}; expected poisson1, exp1, normal11 or twopoint[:p]"
                ))),
            },
        }
    }
}

/// `M(t)` for `law`.
pub fn cgf(law: &WeightLaw, t: f64) -> f64 {
    law.cgf(t)
}

/// `M*(x)` for `law`.
pub fn chernoff(law: &WeightLaw, x: f64) -> f64 {
    law.chernoff(x)
}

/// The divergence `φ^W = M*`, in closed Cressie–Read form when one exists.
pub fn induced_divergence(law: &WeightLaw) -> DivergenceSpec {
    match law.family {
        WeightFamily::PoissonOne => DivergenceSpec::cressie_read(1.0),
        WeightFamily::ExponentialOne => DivergenceSpec::cressie_read(0.0),
        WeightFamily::NormalOneOne => DivergenceSpec::cressie_read(2.0),
        WeightFamily::TwoPoint { .. } => DivergenceSpec::weight_induced_numeric(*law),
    }
}

/// `n` i.i.d. weights, deterministic in `seed`.
pub fn sample_weights(law: &WeightLaw, n: usize, seed: u64) -> Result<Vec<f64>> {
    if n == 0 {
        return Err(Error::arg("number of weights must be at least 1"));
    }
    law.validate()?;
    let mut rng = rng_from_seed(seed);
    Ok(law.sample_with(n, &mut rng))
}
