//! Monte Carlo checks of the weak behaviour of weighted empirical measures:
//! the law of large numbers and central limit theorem for weighted linear
//! statistics `U_n = (1/n) Σ W_i f(x_i)` on fixed points, and the spread of
//! the weighted MLE against plain resampling.
//!
//! Points are drawn once and then held fixed; only weights vary across
//! replications of the weighted branch.

use std::fmt;
use std::str::FromStr;
use std::time::{Duration, Instant};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::divergence::DivergenceSpec;
use crate::dual::{minimum_dual_estimator, weighted_mle, weighted_mle_spec, DualOptions, WeightedEmpiricalMeasure};
use crate::error::{Error, Result};
use crate::models::ParametricModel;
use crate::seed::{derive_seed, rng_for, with_pool};
use crate::weights::WeightLaw;

/// Standard normal 0.95 quantile used by the tail checks.
pub const Z_TAIL: f64 = 1.645;

/// Largest tolerated share of failed estimates in
/// [`estimator_distribution_compare`].
pub const MAX_FAILURE_RATE: f64 = 0.05;

/// The function `f` of a linear statistic.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LinearStatistic {
    Identity,
    Square,
    Constant(f64),
    /// `1{x ≤ t}`.
    Indicator(f64),
}

impl LinearStatistic {
    pub fn eval(&self, x: f64) -> f64 {
        match *self {
            LinearStatistic::Identity => x,
            LinearStatistic::Square => x * x,
            LinearStatistic::Constant(c) => c,
            LinearStatistic::Indicator(t) => f64::from(u8::from(x <= t)),
        }
    }
}

impl fmt::Display for LinearStatistic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LinearStatistic::Identity => f.write_str("identity"),
            LinearStatistic::Square => f.write_str("square"),
            LinearStatistic::Constant(c) => write!(f, "const:{c}"),
            LinearStatistic::Indicator(t) => write!(f, "indicator:{t}"),
        }
    }
}

impl FromStr for LinearStatistic {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::arg(format!("unknown statistic {s:?}; expected identity, square, const:c or indicator:t"));
        match s.trim() {
            "identity" => Ok(LinearStatistic::Identity),
            "square" => Ok(LinearStatistic::Square),
            other => {
                let (head, v) = other.split_once(':').ok_or_else(bad)?;
                let v: f64 = v.parse().map_err(|_| bad())?;
                if !v.is_finite() {
                    return Err(bad());
                }
                match head {
                    "const" => Ok(LinearStatistic::Constant(v)),
                    "indicator" => Ok(LinearStatistic::Indicator(v)),
                    _ => Err(bad()),
                }
            }
        }
    }
}

/// Tolerances of the checks.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Gates {
    pub skewness: f64,
    pub excess_kurtosis: f64,
    /// Allowed deviation of the tail frequencies from 0.05 and 0.95.
    pub quantile: f64,
    /// Width of the moment checks in Monte Carlo standard errors.
    pub standard_errors: f64,
    /// Band for the variance ratio of the weighted and plain estimators.
    pub ratio_band: (f64, f64),
}

impl Default for Gates {
    fn default() -> Self {
        Gates {
            skewness: 0.15,
            excess_kurtosis: 0.3,
            quantile: 0.02,
            standard_errors: 4.0,
            ratio_band: (0.8, 1.25),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Check {
    Lln,
    Clt,
    EstimatorCompare,
}

/// A harness run read from configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MCConfig {
    pub model: String,
    pub law: String,
    pub theta_t: Vec<f64>,
    pub n: usize,
    pub reps: usize,
    pub seed: u64,
    pub check: Check,
    #[serde(default = "default_statistic")]
    pub statistic: String,
    /// Cressie–Read γ of the plain-sampling estimator; defaults to the
    /// divergence whose estimator is the weighted MLE.
    #[serde(default)]
    pub gamma: Option<f64>,
    #[serde(default)]
    pub gates: Gates,
}

fn default_statistic() -> String {
    "identity".into()
}

impl MCConfig {
    pub fn validate(&self) -> Result<()> {
        if self.reps < 100 {
            return Err(Error::arg(format!("reps must be at least 100, got {}", self.reps)));
        }
        if self.n < 10 {
            return Err(Error::arg(format!("n must be at least 10, got {}", self.n)));
        }
        let model: ParametricModel = self.model.parse()?;
        if !model.in_domain(&self.theta_t) {
            return Err(Error::arg(format!("theta_t {:?} is outside the parameter space", self.theta_t)));
        }
        self.law.parse::<WeightLaw>()?.validate()?;
        self.statistic.parse::<LinearStatistic>()?;
        if let Some(g) = self.gamma {
            DivergenceSpec::cressie_read(g).validate()?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Moments {
    pub mean: f64,
    pub variance: f64,
    pub skewness: f64,
    pub excess_kurtosis: f64,
}

impl Moments {
    /// Sample moments; the variance uses `reps − 1`, the shape moments are
    /// the plain central-moment ratios.
    pub fn of(values: &[f64]) -> Self {
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let (mut m2, mut m3, mut m4) = (0.0, 0.0, 0.0);
        for &v in values {
            let d = v - mean;
            let d2 = d * d;
            m2 += d2;
            m3 += d2 * d;
            m4 += d2 * d2;
        }
        let (m2, m3, m4) = (m2 / n, m3 / n, m4 / n);
        Moments {
            mean,
            variance: m2 * n / (n - 1.0),
            skewness: m3 / m2.powf(1.5),
            excess_kurtosis: m4 / (m2 * m2) - 3.0,
        }
    }
}

/// One pass/fail gate: `lo ≤ value ≤ hi`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Gate {
    pub name: String,
    pub value: f64,
    pub lo: f64,
    pub hi: f64,
    pub pass: bool,
}

impl Gate {
    fn new(name: &str, value: f64, lo: f64, hi: f64) -> Self {
        Gate {
            name: name.into(),
            value,
            lo,
            hi,
            pass: value >= lo && value <= hi,
        }
    }

    fn around(name: &str, value: f64, target: f64, half_width: f64) -> Self {
        Self::new(name, value, target - half_width, target + half_width)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MCReport {
    pub check: Check,
    pub n: usize,
    pub reps: usize,
    pub seed: u64,
    /// Per-replication statistic: `U_n` (lln), the standardized `T_n`
    /// (clt), or `√n(θ̂ − centre)` of the weighted estimator.
    pub values: Vec<f64>,
    /// `√n(θ̂ − θ_T)` of the plain-sampling estimator.
    pub reference_values: Option<Vec<f64>>,
    pub moments: Moments,
    pub gates: Vec<Gate>,
    pub pass: bool,
    /// Replications whose estimator failed and were dropped.
    pub failures: usize,
    /// Wall-clock time; excluded from serialized output so reports stay
    /// byte-reproducible.
    #[serde(skip)]
    pub runtime: Duration,
}

impl MCReport {
    fn new(check: Check, n: usize, reps: usize, seed: u64, values: Vec<f64>, gates: Vec<Gate>, started: Instant) -> Self {
        MCReport {
            check,
            n,
            reps,
            seed,
            moments: Moments::of(&values),
            pass: gates.iter().all(|g| g.pass),
            values,
            reference_values: None,
            gates,
            failures: 0,
            runtime: started.elapsed(),
        }
    }

    pub fn gate(&self, name: &str) -> Option<&Gate> {
        self.gates.iter().find(|g| g.name == name)
    }
}

/// `(μ_{1,f}, μ_{2,f})`, the first two empirical moments of `f` on the points.
pub fn point_moments(points: &[f64], f: &impl Fn(f64) -> f64) -> (f64, f64) {
    let n = points.len() as f64;
    points.iter().fold((0.0, 0.0), |(a, b), &x| {
        let v = f(x);
        (a + v / n, b + v * v / n)
    })
}

fn check_inputs(points: &[f64], law: &WeightLaw, reps: usize) -> Result<()> {
    law.validate()?;
    if points.len() < 2 {
        return Err(Error::arg(format!("need at least 2 points, got {}", points.len())));
    }
    if reps < 100 {
        return Err(Error::arg(format!("reps must be at least 100, got {reps}")));
    }
    Ok(())
}

/// Per-replication `f(x_i)`-weighted sums `Σ W_i g_i / n` in replication order.
fn weighted_means(g: &[f64], law: &WeightLaw, reps: usize, seed: u64, tag: &str) -> Vec<f64> {
    let n = g.len() as f64;
    with_pool(|| {
        (0..reps)
            .into_par_iter()
            .map(|r| {
                let mut rng = rng_for(seed, tag, r as u64);
                let w = law.sample_with(g.len(), &mut rng);
                w.iter().zip(g).map(|(w, v)| w * v).sum::<f64>() / n
            })
            .collect()
    })
}

/// Mean and variance of `U_n` over weight draws against `μ_{1,f}` and the
/// conditional variance `μ_{2,f}/n`, each within `gates.standard_errors`
/// Monte Carlo standard errors.
pub fn weighted_lln_check(
    points: &[f64],
    law: &WeightLaw,
    f: impl Fn(f64) -> f64,
    reps: usize,
    seed: u64,
    gates: &Gates,
) -> Result<MCReport> {
    let started = Instant::now();
    check_inputs(points, law, reps)?;
    let (mu1, mu2) = point_moments(points, &f);
    let n = points.len();
    let var_target = mu2 / n as f64;
    let g: Vec<f64> = points.iter().map(|&x| f(x)).collect();
    let values = weighted_means(&g, law, reps, seed, "clt-lln");
    let m = Moments::of(&values);
    let r = reps as f64;
    let se_mean = (var_target / r).sqrt();
    let fourth = values.iter().map(|v| (v - m.mean).powi(4)).sum::<f64>() / r;
    let se_var = ((fourth - m.variance * m.variance).max(0.0) / r).sqrt();
    let k = gates.standard_errors;
    let gates = vec![
        Gate::around("mean", m.mean, mu1, k * se_mean),
        Gate::around("variance", m.variance, var_target, k * se_var),
    ];
    Ok(MCReport::new(Check::Lln, n, reps, seed, values, gates, started))
}

/// Shape of `T_n = √n (1/n) Σ W_i (f(x_i) − μ_{1,f}) / √(μ_{2,f} − μ_{1,f}²)`:
/// skewness, excess kurtosis and the tail frequencies at `±Z_TAIL`.
pub fn weighted_clt_check(
    points: &[f64],
    law: &WeightLaw,
    f: impl Fn(f64) -> f64,
    reps: usize,
    seed: u64,
    gates: &Gates,
) -> Result<MCReport> {
    let started = Instant::now();
    check_inputs(points, law, reps)?;
    let (mu1, mu2) = point_moments(points, &f);
    let spread = mu2 - mu1 * mu1;
    if !(spread > 1e-12 * mu2.max(f64::MIN_POSITIVE)) {
        return Err(Error::arg(format!(
            "f has no spread on the points (μ2 − μ1² = {spread:e}); the standardized statistic is undefined"
        )));
    }
    let n = points.len();
    let scale = (n as f64).sqrt() / spread.sqrt();
    let g: Vec<f64> = points.iter().map(|&x| f(x) - mu1).collect();
    let values: Vec<f64> = weighted_means(&g, law, reps, seed, "clt-clt")
        .into_iter()
        .map(|u| u * scale)
        .collect();
    let m = Moments::of(&values);
    let r = reps as f64;
    let lower = values.iter().filter(|&&t| t <= -Z_TAIL).count() as f64 / r;
    let upper = values.iter().filter(|&&t| t <= Z_TAIL).count() as f64 / r;
    let gates = vec![
        Gate::around("skewness", m.skewness, 0.0, gates.skewness),
        Gate::around("excess_kurtosis", m.excess_kurtosis, 0.0, gates.excess_kurtosis),
        Gate::around("lower_tail", lower, 0.05, gates.quantile),
        Gate::around("upper_tail", upper, 0.95, gates.quantile),
    ];
    Ok(MCReport::new(Check::Clt, n, reps, seed, values, gates, started))
}

/// Spread of the weighted MLE over weight draws on one fixed sample against
/// the plain-sampling estimator with divergence `spec` over fresh samples.
///
/// The weighted branch is centred at its conditional limit, the estimate with
/// unit weights on the fixed sample; the plain branch at `θ_T`. The compared
/// spreads are mean squares of `√n(θ̂ − centre)`.
#[allow(clippy::too_many_arguments)]
pub fn estimator_distribution_compare(
    model: &ParametricModel,
    law: &WeightLaw,
    spec: &DivergenceSpec,
    theta_t: &[f64],
    n: usize,
    reps: usize,
    seed: u64,
    gates: &Gates,
) -> Result<MCReport> {
    let started = Instant::now();
    law.validate()?;
    spec.validate()?;
    if model.dim() != 1 {
        return Err(Error::Kind(format!("the estimator comparison needs a scalar parameter, got {model}")));
    }
    if reps < 100 || n < 10 {
        return Err(Error::arg(format!("need reps ≥ 100 and n ≥ 10, got reps={reps}, n={n}")));
    }
    let info = model.fisher_information(theta_t)?[(0, 0)];
    if !(info > 0.0) {
        return Err(Error::Degenerate(format!("Fisher information at {theta_t:?} is {info}")));
    }
    let opts = DualOptions::default();
    let points = model.sample(theta_t, n, derive_seed(seed, "clt-data", 0))?;
    let centre = minimum_dual_estimator(model, &weighted_mle_spec(law), &WeightedEmpiricalMeasure::plain(points.clone())?, &opts)?
        .theta_hat[0];
    let root_n = (n as f64).sqrt();

    let weighted: Vec<Result<f64>> = with_pool(|| {
        (0..reps)
            .into_par_iter()
            .map(|r| {
                let mut rng = rng_for(seed, "clt-weights", r as u64);
                let mu = WeightedEmpiricalMeasure::new(points.clone(), law.sample_with(n, &mut rng))?;
                Ok(root_n * (weighted_mle(model, law, &mu, &opts)?.theta_hat[0] - centre))
            })
            .collect()
    });
    let plain: Vec<Result<f64>> = with_pool(|| {
        (0..reps)
            .into_par_iter()
            .map(|r| {
                let mut rng = rng_for(seed, "clt-plain", r as u64);
                let mu = WeightedEmpiricalMeasure::plain(model.sample_with(theta_t, n, &mut rng)?)?;
                Ok(root_n * (minimum_dual_estimator(model, spec, &mu, &opts)?.theta_hat[0] - theta_t[0]))
            })
            .collect()
    });
    let split = |all: Vec<Result<f64>>| -> (Vec<f64>, Vec<String>) {
        let mut ok = Vec::with_capacity(all.len());
        let mut errs = Vec::new();
        for v in all {
            match v {
                Ok(x) if x.is_finite() => ok.push(x),
                Ok(x) => errs.push(format!("non-finite estimate {x}")),
                Err(e) => errs.push(e.to_string()),
            }
        }
        (ok, errs)
    };
    let (weighted, werr) = split(weighted);
    let (plain, perr) = split(plain);
    let failures = werr.len() + perr.len();
    for (branch, errs) in [("weighted", &werr), ("plain", &perr)] {
        if errs.len() as f64 > MAX_FAILURE_RATE * reps as f64 {
            return Err(Error::Quality(format!(
                "{branch} estimator failed in {} of {reps} replications; first failure: {}",
                errs.len(),
                errs[0]
            )));
        }
    }
    let mean_square = |v: &[f64]| v.iter().map(|x| x * x).sum::<f64>() / v.len() as f64;
    let (vw, vp) = (mean_square(&weighted), mean_square(&plain));
    let inv_info = 1.0 / info;
    let (lo, hi) = gates.ratio_band;
    let gates = vec![
        Gate::new("variance_ratio", vw / vp, lo, hi),
        Gate::new("weighted_variance_times_information", vw / inv_info, lo, hi),
        Gate::new("plain_variance_times_information", vp / inv_info, lo, hi),
    ];
    let mut report = MCReport::new(Check::EstimatorCompare, n, reps, seed, weighted, gates, started);
    report.reference_values = Some(plain);
    report.failures = failures;
    Ok(report)
}

/// Run the check selected by `config` on one sample of size `n` from
/// `P_θT`.
pub fn run(config: &MCConfig) -> Result<MCReport> {
    config.validate()?;
    let model: ParametricModel = config.model.parse()?;
    let law: WeightLaw = config.law.parse()?;
    match config.check {
        Check::EstimatorCompare => {
            let spec = config
                .gamma
                .map(DivergenceSpec::cressie_read)
                .unwrap_or_else(|| weighted_mle_spec(&law));
            estimator_distribution_compare(
                &model,
                &law,
                &spec,
                &config.theta_t,
                config.n,
                config.reps,
                config.seed,
                &config.gates,
            )
        }
        check => {
            let f: LinearStatistic = config.statistic.parse()?;
            let points = model.sample(&config.theta_t, config.n, derive_seed(config.seed, "clt-data", 0))?;
            let f = move |x| f.eval(x);
            if check == Check::Lln {
                weighted_lln_check(&points, &law, f, config.reps, config.seed, &config.gates)
            } else {
                weighted_clt_check(&points, &law, f, config.reps, config.seed, &config.gates)
            }
        }
    }
}

/// `run` repeated over independent data draws. Draw 0 is `run(config)`;
/// draw `d > 0` reseeds the whole experiment from `(seed, "clt-outer", d)`.
pub fn run_over_data(config: &MCConfig, draws: u64) -> Result<Vec<MCReport>> {
    if draws == 0 {
        return Err(Error::arg("draws must be at least 1"));
    }
    (0..draws)
        .map(|d| {
            let seed = if d == 0 { config.seed } else { derive_seed(config.seed, "clt-outer", d) };
            run(&MCConfig { seed, ..config.clone() })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn gauss_points(n: usize, seed: u64) -> Vec<f64> {
        ParametricModel::gauss_location().sample(&[0.5], n, seed).unwrap()
    }

    fn laws() -> Vec<WeightLaw> {
        vec![
            WeightLaw::poisson_one(),
            WeightLaw::exponential_one(),
            WeightLaw::normal_one_one(),
            WeightLaw::two_point(0.5).unwrap(),
        ]
    }

    #[test]
    fn moments_of_known_values() {
        let m = Moments::of(&[1.0, 2.0, 3.0, 4.0]);
        assert_abs_diff_eq!(m.mean, 2.5, epsilon = 1e-15);
        assert_abs_diff_eq!(m.variance, 5.0 / 3.0, epsilon = 1e-15);
        assert_abs_diff_eq!(m.skewness, 0.0, epsilon = 1e-15);
        // m4/m2² = 2.5625/1.5625
        assert_abs_diff_eq!(m.excess_kurtosis, 2.5625 / 1.5625 - 3.0, epsilon = 1e-14);
    }

    #[test]
    fn constant_statistic_lln() {
        let x = gauss_points(50, 1);
        let c = 2.0;
        let r = weighted_lln_check(&x, &WeightLaw::poisson_one(), |_| c, 4000, 3, &Gates::default()).unwrap();
        assert!(r.pass, "{:?}", r.gates);
        // exactly c times the mean weight
        let w = crate::weights::WeightLaw::poisson_one();
        let mut rng = rng_for(3, "clt-lln", 0);
        let first: f64 = w.sample_with(50, &mut rng).iter().sum::<f64>() / 50.0;
        assert_abs_diff_eq!(r.values[0], c * first, epsilon = 1e-14);
        assert_abs_diff_eq!(r.gate("variance").unwrap().lo + r.gate("variance").unwrap().hi, 2.0 * c * c / 50.0, epsilon = 1e-12);
    }

    #[test]
    fn identity_lln_for_every_law() {
        let x = gauss_points(40, 2);
        let (mu1, _) = point_moments(&x, &|v| v);
        for law in laws() {
            let r = weighted_lln_check(&x, &law, |v| v, 3000, 4, &Gates::default()).unwrap();
            assert!(r.pass, "{law}: {:?}", r.gates);
            assert_eq!(r.gate("mean").unwrap().lo + r.gate("mean").unwrap().hi, 2.0 * mu1);
        }
    }

    #[test]
    fn reproducible() {
        let x = gauss_points(30, 5);
        let a = weighted_clt_check(&x, &WeightLaw::exponential_one(), |v| v, 200, 9, &Gates::default()).unwrap();
        let b = weighted_clt_check(&x, &WeightLaw::exponential_one(), |v| v, 200, 9, &Gates::default()).unwrap();
        assert_eq!(a.values, b.values);
        assert_eq!(a.gates, b.gates);
    }

    #[test]
    fn normal_weights_are_exactly_normal_at_small_n() {
        // linear in Gaussian weights: T_n ~ N(0, 1) for every n
        let x = gauss_points(3, 6);
        let r = weighted_clt_check(&x, &WeightLaw::normal_one_one(), |v| v, 20_000, 7, &Gates::default()).unwrap();
        assert!(r.pass, "{:?}", r.gates);
        assert!(r.moments.mean.abs() < 4.0 / (20_000f64).sqrt());
        assert!((r.moments.variance - 1.0).abs() < 4.0 * (2.0 / 20_000f64).sqrt());
    }

    #[test]
    fn clt_shape_at_n_500_within_monte_carlo_error() {
        // the shape is normal up to O(1/√n); check against four Monte Carlo
        // standard errors of the sample moments and tail frequencies
        let x = gauss_points(500, 8);
        let reps = 2000;
        let r = reps as f64;
        let gates = Gates {
            skewness: 4.0 * (6.0 / r).sqrt(),
            excess_kurtosis: 4.0 * (24.0 / r).sqrt(),
            quantile: 4.0 * (0.05f64 * 0.95 / r).sqrt(),
            ..Gates::default()
        };
        for law in laws() {
            let rep = weighted_clt_check(&x, &law, |v| v, reps, 10, &gates).unwrap();
            assert!(rep.pass, "{law}: {:?}", rep.gates);
        }
    }

    #[test]
    fn constant_statistic_is_degenerate_for_clt() {
        let x = gauss_points(20, 1);
        let e = weighted_clt_check(&x, &WeightLaw::poisson_one(), |_| 3.0, 200, 1, &Gates::default()).unwrap_err();
        assert!(matches!(e, Error::Argument(_)));
    }

    #[test]
    fn statistic_tokens() {
        for s in ["identity", "square", "const:2.5", "indicator:-1"] {
            assert_eq!(s.parse::<LinearStatistic>().unwrap().to_string(), s);
        }
        assert!("const:x".parse::<LinearStatistic>().is_err());
        assert!("cube".parse::<LinearStatistic>().is_err());
    }

    #[test]
    fn config_validation() {
        let mut c = MCConfig {
            model: "gauss_loc".into(),
            law: "poisson1".into(),
            theta_t: vec![0.0],
            n: 50,
            reps: 100,
            seed: 1,
            check: Check::Clt,
            statistic: "identity".into(),
            gamma: None,
            gates: Gates::default(),
        };
        assert!(c.validate().is_ok());
        c.reps = 99;
        assert!(c.validate().is_err());
        c.reps = 100;
        c.n = 9;
        assert!(c.validate().is_err());
        let bad = serde_json::from_str::<MCConfig>(
            r#"{"model":"gauss_loc","law":"poisson1","theta_t":[0],"n":50,"reps":100,"seed":1,"check":"clt","extra":1}"#,
        );
        assert!(bad.is_err());
    }

    #[test]
    fn estimator_compare_small() {
        let g = ParametricModel::gauss_location();
        let law = WeightLaw::poisson_one();
        let r = estimator_distribution_compare(&g, &law, &weighted_mle_spec(&law), &[0.0], 100, 200, 11, &Gates::default())
            .unwrap();
        assert_eq!(r.values.len() + r.failures, 200);
        let ratio = r.gate("variance_ratio").unwrap().value;
        assert!(ratio > 0.6 && ratio < 1.6, "{ratio}");
        let again =
            estimator_distribution_compare(&g, &law, &weighted_mle_spec(&law), &[0.0], 100, 200, 11, &Gates::default())
                .unwrap();
        assert_eq!(r.values, again.values);
        assert_eq!(r.reference_values, again.reference_values);
    }

    #[test]
    fn outer_loop_starts_with_the_single_run() {
        let cfg: MCConfig = serde_json::from_str(
            r#"{"model":"gauss_loc","law":"exp1","theta_t":[0],"n":50,"reps":200,"seed":4,"check":"lln"}"#,
        )
        .unwrap();
        let draws = run_over_data(&cfg, 3).unwrap();
        assert_eq!(draws.len(), 3);
        assert_eq!(draws[0].values, run(&cfg).unwrap().values);
        assert_ne!(draws[1].values, draws[2].values);
        assert!(run_over_data(&cfg, 0).is_err());
    }
}
