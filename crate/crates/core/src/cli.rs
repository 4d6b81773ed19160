//! Experiment configuration and dispatch behind the `divlab` binary.
//!
//! A run is a flat JSON [`ExperimentConfig`], optionally read from a file and
//! overridden field by field from the command line. [`resolve`] validates it
//! and fills defaults into a [`Plan`]; [`execute`] computes and writes the
//! report files atomically.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::bahadur::{self, Functional};
use crate::clt::{self, Check, Gates, MCConfig};
use crate::divergence::{divergence_vec, DivergenceSpec};
use crate::dual::{self, DualOptions, WeightedEmpiricalMeasure};
use crate::error::{Error, Result};
use crate::models::ParametricModel;
use crate::report::{to_csv, to_json, write_atomic};
use crate::sanov::{self, LdpEstimator, LdpOptions, Partition};
use crate::seed::derive_seed;
use crate::weights::{induced_divergence, WeightLaw};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Command {
    Divergence,
    Chernoff,
    Estimate,
    Sanov,
    Bahadur,
    Clt,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Divergence => "divergence",
            Command::Chernoff => "chernoff",
            Command::Estimate => "estimate",
            Command::Sanov => "sanov",
            Command::Bahadur => "bahadur",
            Command::Clt => "clt",
        }
    }

    fn modes(self) -> &'static [&'static str] {
        match self {
            Command::Divergence => &["table", "eval"],
            Command::Chernoff => &["table"],
            Command::Estimate => &["dual", "weighted_mle"],
            Command::Sanov => &["rate", "sandwich", "optimum", "ldp", "shrink"],
            Command::Bahadur => &["compare", "slopes", "trend"],
            Command::Clt => &["clt", "lln", "estimator_compare"],
        }
    }
}

/// A Cressie–Read index or the divergence induced by the weight law.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DivergenceChoice {
    Gamma(f64),
    Induced,
}

impl DivergenceChoice {
    pub fn spec(self, law: &WeightLaw) -> DivergenceSpec {
        match self {
            DivergenceChoice::Gamma(g) => DivergenceSpec::cressie_read(g),
            DivergenceChoice::Induced => induced_divergence(law),
        }
    }
}

impl FromStr for DivergenceChoice {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if s == "induced" {
            return Ok(DivergenceChoice::Induced);
        }
        match s.parse::<f64>() {
            Ok(g) if g.is_finite() => Ok(DivergenceChoice::Gamma(g)),
            _ => Err(Error::arg(format!("gamma: invalid value {s:?} (expected a finite real or \"induced\")"))),
        }
    }
}

impl fmt::Display for DivergenceChoice {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DivergenceChoice::Gamma(g) => write!(f, "{g}"),
            DivergenceChoice::Induced => f.write_str("induced"),
        }
    }
}

impl Serialize for DivergenceChoice {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            DivergenceChoice::Gamma(g) => s.serialize_f64(*g),
            DivergenceChoice::Induced => s.serialize_str("induced"),
        }
    }
}

impl<'de> Deserialize<'de> for DivergenceChoice {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Num(f64),
            Str(String),
        }
        match Raw::deserialize(d)? {
            Raw::Num(g) => Ok(DivergenceChoice::Gamma(g)),
            Raw::Str(s) => s.parse().map_err(serde::de::Error::custom),
        }
    }
}

/// Tolerance overrides.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Tolerances {
    /// Quadrature tolerance of criteria and slopes.
    pub quadrature: f64,
    pub gates: Gates,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            quadrature: 1e-10,
            gates: Gates::default(),
        }
    }
}

/// One run. Every field is optional in the file; unknown keys are rejected.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub command: Option<Command>,
    pub mode: Option<String>,
    pub model: Option<String>,
    pub law: Option<String>,
    pub gamma: Option<DivergenceChoice>,
    pub theta: Option<Vec<f64>>,
    pub theta_prime: Option<Vec<f64>>,
    pub theta_t: Option<Vec<f64>>,
    pub n: Option<u64>,
    pub n_grid: Option<Vec<u64>>,
    pub epsilon: Option<f64>,
    pub eps_grid: Option<Vec<f64>>,
    /// Number of partition cells for continuous models.
    pub cells: Option<usize>,
    pub reps: Option<u64>,
    pub seed: Option<u64>,
    /// `a:b:m`, `m` equally spaced points from `a` to `b`.
    pub grid: Option<String>,
    /// Step of the θ grid searched by `sanov` optimum.
    pub step: Option<f64>,
    pub p: Option<Vec<f64>>,
    pub q: Option<Vec<f64>>,
    /// One-column CSV of observations, optionally with a weight column.
    pub data: Option<PathBuf>,
    /// `unit`, `column`, or a weight-law token to draw weights.
    pub weights: Option<String>,
    pub functional: Option<String>,
    pub statistic: Option<String>,
    pub estimator: Option<LdpEstimator>,
    pub resample_theta_sample: Option<bool>,
    pub output: Option<PathBuf>,
    pub tolerances: Option<Tolerances>,
}

macro_rules! merge_fields {
    ($base:ident, $over:ident; $($f:ident),*) => {
        ExperimentConfig { $($f: $over.$f.or($base.$f)),* }
    };
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::arg(format!("config: {e}")))
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Io(format!("cannot read config {}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    /// Fields set in `over` replace those of `self`.
    pub fn merge(self, over: ExperimentConfig) -> Self {
        let base = self;
        merge_fields!(base, over; command, mode, model, law, gamma, theta, theta_prime, theta_t, n, n_grid,
            epsilon, eps_grid, cells, reps, seed, grid, step, p, q, data, weights, functional, statistic,
            estimator, resample_theta_sample, output, tolerances)
    }
}

/// A validated run with every default filled in.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Plan {
    pub command: Command,
    pub mode: String,
    pub config: ExperimentConfig,
    pub outputs: Vec<PathBuf>,
}

/// A failed run: the operation that failed and why.
#[derive(Debug, Clone, PartialEq)]
pub struct Failure {
    pub operation: String,
    pub error: Error,
}

impl Failure {
    fn at(operation: &str) -> impl FnOnce(Error) -> Failure + '_ {
        move |error| Failure {
            operation: operation.to_string(),
            error,
        }
    }

    /// 2 for invalid input, 3 for numerical failures.
    pub fn exit_code(&self) -> i32 {
        if self.error.is_numeric() {
            3
        } else {
            2
        }
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.operation, self.error)
    }
}

impl std::error::Error for Failure {}

type Run<T> = std::result::Result<T, Failure>;

/// `a:b:m` into `m ≥ 1` equally spaced points.
pub fn parse_grid(s: &str) -> Result<Vec<f64>> {
    let bad = || Error::arg(format!("grid: invalid value {s:?} (expected a:b:m)"));
    let parts: Vec<&str> = s.split(':').collect();
    if parts.len() != 3 {
        return Err(bad());
    }
    let a: f64 = parts[0].trim().parse().map_err(|_| bad())?;
    let b: f64 = parts[1].trim().parse().map_err(|_| bad())?;
    let m: usize = parts[2].trim().parse().map_err(|_| bad())?;
    if m == 0 || !a.is_finite() || !b.is_finite() || (m > 1 && b <= a) {
        return Err(bad());
    }
    if m == 1 {
        return Ok(vec![a]);
    }
    Ok((0..m).map(|i| a + (b - a) * i as f64 / (m - 1) as f64).collect())
}

/// Observations and optional weights from a one- or two-column CSV. A first
/// row that does not parse as numbers is taken as a header.
pub fn read_data(path: &Path) -> Result<(Vec<f64>, Option<Vec<f64>>)> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(false)
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| Error::Io(format!("cannot read data {}: {e}", path.display())))?;
    let mut xs = Vec::new();
    let mut ws = Vec::new();
    let mut width = None;
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|e| Error::arg(format!("data: {e}")))?;
        let vals: std::result::Result<Vec<f64>, _> = rec.iter().map(str::parse::<f64>).collect();
        let vals = match vals {
            Ok(v) => v,
            Err(_) if i == 0 => continue,
            Err(_) => return Err(Error::arg(format!("data: row {} is not numeric", i + 1))),
        };
        match vals.len() {
            1 | 2 => {}
            w => return Err(Error::arg(format!("data: expected 1 or 2 columns, found {w}"))),
        }
        if vals.iter().any(|v| !v.is_finite()) {
            return Err(Error::arg(format!("data: row {} holds a non-finite value", i + 1)));
        }
        width.get_or_insert(vals.len());
        xs.push(vals[0]);
        if vals.len() == 2 {
            ws.push(vals[1]);
        }
    }
    if xs.is_empty() {
        return Err(Error::arg("data: no observations"));
    }
    Ok((xs, (width == Some(2)).then_some(ws)))
}

fn required<T: Clone>(v: &Option<T>, field: &str, command: Command) -> Result<T> {
    v.clone()
        .ok_or_else(|| Error::arg(format!("{field}: required by {}", command.name())))
}

fn check_theta(model: &ParametricModel, theta: &[f64], field: &str) -> Result<()> {
    if theta.len() != model.dim() || !model.in_domain(theta) {
        return Err(Error::arg(format!(
            "{field}: {theta:?} is not an interior parameter of {model} (dimension {})",
            model.dim()
        )));
    }
    Ok(())
}

/// Validate `config` and fill in defaults.
pub fn resolve(config: ExperimentConfig) -> Result<Plan> {
    let mut c = config;
    let command = c.command.ok_or_else(|| Error::arg("command: missing"))?;
    let mode = c.mode.clone().unwrap_or_else(|| command.modes()[0].to_string());
    if !command.modes().contains(&mode.as_str()) {
        return Err(Error::arg(format!(
            "mode: {mode:?} is not a mode of {} (expected one of {})",
            command.name(),
            command.modes().join(", ")
        )));
    }
    c.mode = Some(mode.clone());
    c.seed.get_or_insert(1);
    c.law.get_or_insert_with(|| "poisson1".into());
    c.output.get_or_insert_with(|| PathBuf::from("."));
    c.tolerances.get_or_insert_with(Tolerances::default);
    let law: WeightLaw = c.law.as_deref().unwrap_or_default().parse().map_err(|e: Error| prefix("law", e))?;
    law.validate().map_err(|e| prefix("law", e))?;
    let tol = c.tolerances.as_ref().map_or(1e-10, |t| t.quadrature);
    if !(tol > 0.0 && tol < 1.0) {
        return Err(Error::arg(format!("tolerances.quadrature: {tol} must lie in (0, 1)")));
    }
    if let Some(eps) = c.epsilon {
        if !(eps > 0.0 && eps < 1.0) {
            return Err(Error::arg(format!("epsilon: {eps} must lie in (0, 1)")));
        }
    }

    let default_model = match command {
        Command::Sanov | Command::Bahadur => "simplex:2",
        _ => "gauss_loc",
    };
    let model: ParametricModel = c
        .model
        .get_or_insert_with(|| default_model.into())
        .parse()
        .map_err(|e: Error| prefix("model", e))?;

    match command {
        Command::Divergence => {
            c.gamma.get_or_insert(DivergenceChoice::Gamma(1.0));
            if mode == "eval" {
                let p = required(&c.p, "p", command)?;
                let q = required(&c.q, "q", command)?;
                if p.len() != q.len() || p.is_empty() {
                    return Err(Error::arg("p, q: need two nonempty vectors of equal length"));
                }
                if p.iter().chain(&q).any(|v| !(v.is_finite() && *v >= 0.0)) {
                    return Err(Error::arg("p, q: masses must be finite and nonnegative"));
                }
            } else {
                parse_grid(c.grid.get_or_insert_with(|| "0.1:5:50".into()))?;
            }
        }
        Command::Chernoff => {
            parse_grid(c.grid.get_or_insert_with(|| "0.1:5:50".into()))?;
        }
        Command::Estimate => {
            if mode == "dual" {
                c.gamma.get_or_insert(DivergenceChoice::Gamma(0.0));
            }
            if c.data.is_none() {
                check_theta(&model, c.theta_t.get_or_insert_with(|| vec![0.0; model.dim()]), "theta_t")?;
                if c.n.get_or_insert(100) < &mut 2 {
                    return Err(Error::arg("n: must be at least 2"));
                }
            }
            match c.weights.as_deref() {
                None | Some("unit") | Some("column") => {}
                Some(tok) => {
                    tok.parse::<WeightLaw>().map_err(|e| prefix("weights", e))?;
                }
            }
        }
        Command::Sanov => {
            let k = model.atoms();
            if k.is_none() && matches!(mode.as_str(), "rate" | "optimum") {
                return Err(Error::Kind(format!("sanov {mode} needs a categorical model, got {model}")));
            }
            let default_t = match k {
                Some(k) => vec![1.0 / k as f64; k - 1],
                None => vec![0.0],
            };
            check_theta(&model, c.theta_t.get_or_insert(default_t), "theta_t")?;
            if mode != "optimum" {
                check_theta(&model, required(&c.theta, "theta", command)?.as_slice(), "theta")?;
            }
            match mode.as_str() {
                "rate" => {
                    let g = c.n_grid.get_or_insert_with(|| vec![50, 200, 800, 2000]);
                    if g.iter().any(|&n| n < 2) {
                        return Err(Error::arg("n_grid: sizes must be at least 2"));
                    }
                }
                "shrink" => {
                    c.gamma.get_or_insert(DivergenceChoice::Gamma(1.0));
                    let g = c.eps_grid.get_or_insert_with(|| vec![0.1, 0.05, 0.01, 0.001, 1e-6]);
                    if g.is_empty() || g.windows(2).any(|w| w[1] >= w[0]) || g.iter().any(|&e| !(e > 0.0)) {
                        return Err(Error::arg("eps_grid: must be positive and strictly decreasing"));
                    }
                }
                _ => {
                    c.epsilon.get_or_insert(0.05);
                    let n = *c.n.get_or_insert(100);
                    if n < 2 {
                        return Err(Error::arg("n: must be at least 2"));
                    }
                    if mode == "ldp" {
                        c.reps.get_or_insert(10_000);
                        c.estimator.get_or_insert(LdpEstimator::Tilted);
                        c.resample_theta_sample.get_or_insert(false);
                    }
                    if mode == "optimum" {
                        let step = *c.step.get_or_insert(0.01);
                        if !(step > 0.0 && step < 0.5) {
                            return Err(Error::arg(format!("step: {step} must lie in (0, 0.5)")));
                        }
                    }
                }
            }
            if k.is_none() {
                c.cells.get_or_insert(Partition::default_cells(c.n.unwrap_or(100) as usize));
            }
        }
        Command::Bahadur => {
            check_theta(&model, required(&c.theta, "theta", command)?.as_slice(), "theta")?;
            check_theta(&model, required(&c.theta_prime, "theta_prime", command)?.as_slice(), "theta_prime")?;
            match mode.as_str() {
                "compare" => {
                    c.functional
                        .get_or_insert_with(|| "cell_mass:0".into())
                        .parse::<Functional>()
                        .map_err(|e| prefix("functional", e))?;
                }
                "trend" => {
                    if c.n_grid.get_or_insert_with(|| vec![50, 100, 200]).iter().any(|&n| n < 2) {
                        return Err(Error::arg("n_grid: sizes must be at least 2"));
                    }
                    if c.reps.get_or_insert(10_000) < &mut 1000 {
                        return Err(Error::arg("reps: must be at least 1000"));
                    }
                }
                _ => {}
            }
        }
        Command::Clt => {
            c.statistic.get_or_insert_with(|| "identity".into());
            c.theta_t.get_or_insert_with(|| vec![0.0; model.dim()]);
            c.n.get_or_insert(500);
            c.reps.get_or_insert(2000);
            mc_config(&c, &mode)?.validate()?;
        }
    }

    let dir = c.output.clone().unwrap_or_default();
    let name = command.name();
    let mut outputs = vec![dir.join(format!("{name}.json"))];
    let has_csv = match command {
        Command::Divergence => mode == "table",
        Command::Chernoff | Command::Estimate | Command::Clt => true,
        Command::Sanov => matches!(mode.as_str(), "rate" | "shrink"),
        Command::Bahadur => mode == "trend",
    };
    if has_csv {
        outputs.push(dir.join(format!("{name}.csv")));
    }
    Ok(Plan {
        command,
        mode,
        config: c,
        outputs,
    })
}

fn prefix(field: &str, e: Error) -> Error {
    match e {
        Error::Argument(m) => Error::Argument(format!("{field}: {m}")),
        other => other,
    }
}

fn mc_config(c: &ExperimentConfig, mode: &str) -> Result<MCConfig> {
    let check = match mode {
        "lln" => Check::Lln,
        "estimator_compare" => Check::EstimatorCompare,
        _ => Check::Clt,
    };
    let gamma = match c.gamma {
        Some(DivergenceChoice::Gamma(g)) => Some(g),
        Some(DivergenceChoice::Induced) => {
            return Err(Error::arg("gamma: clt takes a Cressie-Read index for the plain-sampling estimator"))
        }
        None => None,
    };
    Ok(MCConfig {
        model: c.model.clone().unwrap_or_default(),
        law: c.law.clone().unwrap_or_default(),
        theta_t: c.theta_t.clone().unwrap_or_default(),
        n: c.n.unwrap_or_default() as usize,
        reps: c.reps.unwrap_or_default() as usize,
        seed: c.seed.unwrap_or_default(),
        check,
        statistic: c.statistic.clone().unwrap_or_default(),
        gamma,
        gates: c.tolerances.clone().unwrap_or_default().gates,
    })
}

/// The resolved plan as JSON, for `--dry-run`.
pub fn describe(plan: &Plan) -> Result<String> {
    to_json(plan)
}

fn write(path: &Path, contents: &str) -> Run<()> {
    write_atomic(path, contents).map_err(Failure::at("report::write_atomic"))
}

#[derive(Serialize)]
struct DivergenceRow {
    x: f64,
    phi: f64,
    phi_d1: f64,
    phi_d2: f64,
    phi_sharp: f64,
    conjugate: f64,
}

#[derive(Serialize)]
struct SpecSummary {
    gamma: DivergenceChoice,
    law: String,
    spec: DivergenceSpec,
    domain: (f64, f64),
}

#[derive(Serialize)]
struct DivergenceEval {
    #[serde(flatten)]
    spec: SpecSummary,
    p: Vec<f64>,
    q: Vec<f64>,
    /// `φ(Q, P) = Σ p φ(q/p)`.
    divergence: f64,
    /// `φ̃(P, Q)`, equal to `divergence`.
    conjugate_reversed: f64,
}

#[derive(Serialize)]
struct ChernoffRow {
    x: f64,
    value: f64,
    derivative: f64,
}

#[derive(Serialize)]
struct EstimateOutput {
    model: String,
    spec: DivergenceSpec,
    weights: String,
    n: usize,
    total_weight: f64,
    report: dual::EstimateReport,
    /// `∇C⁻¹` of the weighted mean of the sufficient statistic, for
    /// exponential families.
    score_solution: Option<Vec<f64>>,
}

#[derive(Serialize)]
struct EstimateRow {
    index: usize,
    theta_hat: f64,
    alpha_hat: f64,
}

#[derive(Serialize)]
struct SlopesOutput {
    min_divergence: bahadur::Slope,
    /// `−2 KL(P_θ, P_θ')`, the likelihood-ratio benchmark.
    kl_slope: f64,
}

#[derive(Serialize)]
struct CltRow {
    rep: usize,
    value: f64,
    reference: Option<f64>,
}

fn spec_summary(choice: DivergenceChoice, law: &WeightLaw) -> SpecSummary {
    let spec = choice.spec(law);
    SpecSummary {
        gamma: choice,
        law: law.token(),
        domain: spec.domain(),
        spec,
    }
}

fn partition_for(model: &ParametricModel, c: &ExperimentConfig, theta_t: &[f64]) -> Result<Partition> {
    match model.atoms() {
        Some(k) => Partition::identity(k),
        None => {
            let cells = c.cells.unwrap_or(2);
            let n = (c.n.unwrap_or(100) as usize).max(1000);
            let pts = model.sample(theta_t, n, derive_seed(c.seed.unwrap_or(1), "cli-partition", 0))?;
            Partition::equal_mass(&pts, cells)
        }
    }
}

/// Compute the plan and write its report files; returns the paths written.
pub fn execute(plan: &Plan) -> Run<Vec<PathBuf>> {
    let c = &plan.config;
    let law: WeightLaw = c.law.as_deref().unwrap_or_default().parse().map_err(Failure::at("config"))?;
    let model: ParametricModel = c.model.as_deref().unwrap_or_default().parse().map_err(Failure::at("config"))?;
    let tol = c.tolerances.clone().unwrap_or_default().quadrature;
    let seed = c.seed.unwrap_or(1);
    let json_path = &plan.outputs[0];
    let csv_path = plan.outputs.get(1);
    let mode = plan.mode.as_str();
    match plan.command {
        Command::Divergence => {
            let choice = c.gamma.unwrap_or(DivergenceChoice::Gamma(1.0));
            let summary = spec_summary(choice, &law);
            let spec = summary.spec;
            if mode == "eval" {
                let (p, q) = (c.p.clone().unwrap_or_default(), c.q.clone().unwrap_or_default());
                let out = DivergenceEval {
                    divergence: divergence_vec(&spec, &p, &q),
                    conjugate_reversed: divergence_vec(&spec.conjugate(), &q, &p),
                    spec: summary,
                    p,
                    q,
                };
                write(json_path, &to_json(&out).map_err(Failure::at("report::to_json"))?)?;
            } else {
                let grid = parse_grid(c.grid.as_deref().unwrap_or_default()).map_err(Failure::at("config"))?;
                let conj = spec.conjugate();
                let rows: Vec<DivergenceRow> = grid
                    .iter()
                    .map(|&x| DivergenceRow {
                        x,
                        phi: spec.phi(x),
                        phi_d1: spec.phi_d1(x),
                        phi_d2: spec.phi_d2(x),
                        phi_sharp: spec.phi_sharp(x),
                        conjugate: conj.phi(x),
                    })
                    .collect();
                write(json_path, &to_json(&summary).map_err(Failure::at("report::to_json"))?)?;
                let csv = to_csv(&["x", "phi", "phi_d1", "phi_d2", "phi_sharp", "conjugate"], &rows)
                    .map_err(Failure::at("report::to_csv"))?;
                write(csv_path.expect("table mode writes csv"), &csv)?;
            }
        }
        Command::Chernoff => {
            let grid = parse_grid(c.grid.as_deref().unwrap_or_default()).map_err(Failure::at("config"))?;
            let rows: Vec<ChernoffRow> = grid
                .iter()
                .map(|&x| ChernoffRow {
                    x,
                    value: law.chernoff(x),
                    derivative: law.chernoff_derivative(x, 1),
                })
                .collect();
            #[derive(Serialize)]
            struct Summary {
                law: String,
                grid: String,
                mean_range: (f64, f64),
            }
            let s = Summary {
                law: law.token(),
                grid: c.grid.clone().unwrap_or_default(),
                mean_range: law.mean_range(),
            };
            write(json_path, &to_json(&s).map_err(Failure::at("report::to_json"))?)?;
            let csv = to_csv(&["x", "value", "derivative"], &rows).map_err(Failure::at("report::to_csv"))?;
            write(csv_path.expect("chernoff writes csv"), &csv)?;
        }
        Command::Estimate => {
            let (points, column) = match &c.data {
                Some(path) => read_data(path).map_err(Failure::at("cli::read_data"))?,
                None => {
                    let theta_t = c.theta_t.clone().unwrap_or_default();
                    let pts = model
                        .sample(&theta_t, c.n.unwrap_or(100) as usize, derive_seed(seed, "cli-data", 0))
                        .map_err(Failure::at("models::sample"))?;
                    (pts, None)
                }
            };
            let weights_tok = c
                .weights
                .clone()
                .unwrap_or_else(|| if column.is_some() { "column" } else { "unit" }.into());
            let mu = match weights_tok.as_str() {
                "unit" => WeightedEmpiricalMeasure::plain(points.clone()),
                "column" => match column {
                    Some(w) => WeightedEmpiricalMeasure::new(points.clone(), w),
                    None => Err(Error::arg("weights: \"column\" needs a second data column")),
                },
                tok => tok
                    .parse::<WeightLaw>()
                    .and_then(|wl| dual::build_weighted_empirical(&points, &wl, derive_seed(seed, "cli-weights", 0))),
            }
            .map_err(Failure::at("dual::build_weighted_empirical"))?;
            let spec = if mode == "weighted_mle" {
                dual::weighted_mle_spec(&law)
            } else {
                c.gamma.unwrap_or(DivergenceChoice::Gamma(0.0)).spec(&law)
            };
            let opts = DualOptions {
                tol,
                ..DualOptions::default()
            };
            let report =
                dual::minimum_dual_estimator(&model, &spec, &mu, &opts).map_err(Failure::at("dual::minimum_dual_estimator"))?;
            let score_solution = if model.is_exp_family() {
                let t = mu.integrate(|x| model.sufficient_statistic(x)) / mu.total_mass();
                model.solve_score(&[t]).ok()
            } else {
                None
            };
            let rows: Vec<EstimateRow> = report
                .theta_hat
                .iter()
                .zip(&report.alpha_hat)
                .enumerate()
                .map(|(index, (&theta_hat, &alpha_hat))| EstimateRow {
                    index,
                    theta_hat,
                    alpha_hat,
                })
                .collect();
            let out = EstimateOutput {
                model: c.model.clone().unwrap_or_default(),
                spec,
                weights: weights_tok,
                n: mu.len(),
                total_weight: mu.total_mass(),
                report,
                score_solution,
            };
            write(json_path, &to_json(&out).map_err(Failure::at("report::to_json"))?)?;
            let csv = to_csv(&["index", "theta_hat", "alpha_hat"], &rows).map_err(Failure::at("report::to_csv"))?;
            write(csv_path.expect("estimate writes csv"), &csv)?;
        }
        Command::Sanov => {
            let theta_t = c.theta_t.clone().unwrap_or_default();
            let theta = c.theta.clone().unwrap_or_default();
            let eps = c.epsilon.unwrap_or(0.05);
            let n = c.n.unwrap_or(100);
            let part = partition_for(&model, c, &theta_t).map_err(Failure::at("sanov::Partition"))?;
            match mode {
                "rate" => {
                    let t = sanov::sanov_rate_convergence(&model, &theta, &theta_t, c.n_grid.as_deref().unwrap_or_default())
                        .map_err(Failure::at("sanov::sanov_rate_convergence"))?;
                    write(json_path, &to_json(&t).map_err(Failure::at("report::to_json"))?)?;
                    let csv = to_csv(&["n", "rate", "target", "gap"], &t.rows).map_err(Failure::at("report::to_csv"))?;
                    write(csv_path.expect("rate writes csv"), &csv)?;
                }
                "sandwich" => {
                    let r = sanov::sandwich_check(&model, &theta, &theta_t, &part, eps, n)
                        .map_err(Failure::at("sanov::sandwich_check"))?;
                    write(json_path, &to_json(&r).map_err(Failure::at("report::to_json"))?)?;
                }
                "optimum" => {
                    let k = model.atoms().unwrap_or(2);
                    let grid = sanov::simplex_grid(k, c.step.unwrap_or(0.01)).map_err(Failure::at("sanov::simplex_grid"))?;
                    let grid: Vec<Vec<f64>> = grid
                        .into_iter()
                        .filter_map(|p| model.theta_from_probs(&p).ok())
                        .collect();
                    let r = sanov::sandwich_optimum(&model, &theta_t, &part, eps, n, &grid)
                        .map_err(Failure::at("sanov::sandwich_optimum"))?;
                    write(json_path, &to_json(&r).map_err(Failure::at("report::to_json"))?)?;
                }
                "ldp" => {
                    let opts = LdpOptions {
                        estimator: c.estimator.unwrap_or(LdpEstimator::Tilted),
                        resample_theta_sample: c.resample_theta_sample.unwrap_or(false),
                    };
                    let r = sanov::conditional_ldp_mc(
                        &model,
                        &theta,
                        &theta_t,
                        &law,
                        &part,
                        eps,
                        n,
                        c.reps.unwrap_or(10_000),
                        seed,
                        &opts,
                    )
                    .map_err(Failure::at("sanov::conditional_ldp_mc"))?;
                    write(json_path, &to_json(&r).map_err(Failure::at("report::to_json"))?)?;
                }
                _ => {
                    let spec = c.gamma.unwrap_or(DivergenceChoice::Gamma(1.0)).spec(&law);
                    let t = sanov::shrink_epsilon_limit(
                        &spec,
                        &model,
                        &theta_t,
                        &theta,
                        &part,
                        c.eps_grid.as_deref().unwrap_or_default(),
                    )
                    .map_err(Failure::at("sanov::shrink_epsilon_limit"))?;
                    write(json_path, &to_json(&t).map_err(Failure::at("report::to_json"))?)?;
                    let csv = to_csv(&["epsilon", "value"], &t.rows).map_err(Failure::at("report::to_csv"))?;
                    write(csv_path.expect("shrink writes csv"), &csv)?;
                }
            }
        }
        Command::Bahadur => {
            let theta = c.theta.clone().unwrap_or_default();
            let theta_p = c.theta_prime.clone().unwrap_or_default();
            match mode {
                "slopes" => {
                    let s = bahadur::slope_min_divergence(&model, &law, &theta, &theta_p, tol)
                        .map_err(Failure::at("bahadur::slope_min_divergence"))?;
                    let kl = bahadur::model_divergence(&model, &DivergenceSpec::kullback_leibler(), &theta_p, &theta, tol)
                        .map_err(Failure::at("bahadur::model_divergence"))?;
                    let out = SlopesOutput {
                        min_divergence: s,
                        kl_slope: -2.0 * kl,
                    };
                    write(json_path, &to_json(&out).map_err(Failure::at("report::to_json"))?)?;
                }
                "trend" => {
                    let t = bahadur::empirical_slope_trend(
                        &model,
                        &law,
                        &theta,
                        &theta_p,
                        c.n_grid.as_deref().unwrap_or_default(),
                        c.reps.unwrap_or(10_000),
                        seed,
                    )
                    .map_err(Failure::at("bahadur::empirical_slope_trend"))?;
                    write(json_path, &to_json(&t).map_err(Failure::at("report::to_json"))?)?;
                    let csv = to_csv(
                        &["n", "t", "reps", "hits", "rate_estimate", "rate_target", "ci_lo", "ci_hi", "one_sided"],
                        &t.rows,
                    )
                    .map_err(Failure::at("report::to_csv"))?;
                    write(csv_path.expect("trend writes csv"), &csv)?;
                }
                _ => {
                    let psi: Functional = c
                        .functional
                        .as_deref()
                        .unwrap_or("cell_mass:0")
                        .parse()
                        .map_err(Failure::at("config"))?;
                    let r = bahadur::efficiency_compare(&model, &law, &psi, &theta, &theta_p)
                        .map_err(Failure::at("bahadur::efficiency_compare"))?;
                    write(json_path, &to_json(&r).map_err(Failure::at("report::to_json"))?)?;
                }
            }
        }
        Command::Clt => {
            let mc = mc_config(c, mode).map_err(Failure::at("config"))?;
            let op = match mc.check {
                Check::Lln => "clt::weighted_lln_check",
                Check::Clt => "clt::weighted_clt_check",
                Check::EstimatorCompare => "clt::estimator_distribution_compare",
            };
            let r = clt::run(&mc).map_err(Failure::at(op))?;
            write(json_path, &to_json(&r).map_err(Failure::at("report::to_json"))?)?;
            let rows: Vec<CltRow> = r
                .values
                .iter()
                .enumerate()
                .map(|(rep, &value)| CltRow {
                    rep,
                    value,
                    reference: r.reference_values.as_ref().and_then(|v| v.get(rep).copied()),
                })
                .collect();
            let csv = to_csv(&["rep", "value", "reference"], &rows).map_err(Failure::at("report::to_csv"))?;
            write(csv_path.expect("clt writes csv"), &csv)?;
        }
    }
    Ok(plan.outputs.clone())
}

/// Resolve `file` merged with `overrides`, then either describe the plan
/// (`dry_run`) or execute it. Returns what to print on success.
pub fn run(file: Option<&Path>, overrides: ExperimentConfig, dry_run: bool) -> Run<String> {
    let base = match file {
        Some(p) => ExperimentConfig::from_file(p).map_err(Failure::at("config"))?,
        None => ExperimentConfig::default(),
    };
    if let (Some(a), Some(b)) = (base.command, overrides.command) {
        if a != b {
            return Err(Failure::at("config")(Error::arg(format!(
                "command: the config file is for {} but {} was requested",
                a.name(),
                b.name()
            ))));
        }
    }
    let plan = resolve(base.merge(overrides)).map_err(Failure::at("config"))?;
    if dry_run {
        return describe(&plan).map_err(Failure::at("report::to_json"));
    }
    let written = execute(&plan)?;
    Ok(written.iter().map(|p| format!("{}\n", p.display())).collect())
}
