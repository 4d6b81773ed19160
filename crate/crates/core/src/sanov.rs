//! Large deviations on partitions: exact multinomial occupation
//! probabilities, partition divergences, the infimum of a divergence over a
//! cell-wise ε-neighbourhood, the likelihood/large-deviation sandwich, and a
//! Monte Carlo check of the conditional Sanov theorem for weighted empirical
//! measures.

use rand_distr::{Binomial, Distribution};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::function::factorial::ln_factorial;

use crate::divergence::{divergence_finite, divergence_vec, DivergenceKind, DivergenceSpec, FiniteMeasure};
use crate::error::{Error, Result};
use crate::models::ParametricModel;
use crate::seed::{rng_for, with_pool, Rng};
use crate::weights::{induced_divergence, WeightLaw};

/// Largest number of count vectors enumerated by [`sandwich_check`].
pub const ENUMERATION_CAP: usize = 5_000_000;

/// Slack subtracted from `nε` in the strict count-space membership test.
const COUNT_SLACK: f64 = 1e-9;

/// A finite partition of the sample space into `k ≥ 2` cells.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Partition {
    /// Cells are disjoint sets of atom indices of a categorical model.
    Atoms { cells: Vec<Vec<usize>> },
    /// Cells `(−∞, c₁], (c₁, c₂], …, (c_{k−1}, ∞)` for strictly increasing cuts.
    Intervals { cuts: Vec<f64> },
}

impl Partition {
    pub fn atoms(cells: Vec<Vec<usize>>) -> Result<Self> {
        if cells.len() < 2 {
            return Err(Error::arg(format!("a partition needs at least 2 cells, got {}", cells.len())));
        }
        let mut seen = std::collections::BTreeSet::new();
        for cell in &cells {
            if cell.is_empty() {
                return Err(Error::arg("partition cells must be nonempty"));
            }
            for &a in cell {
                if !seen.insert(a) {
                    return Err(Error::arg(format!("atom {a} appears in two partition cells")));
                }
            }
        }
        Ok(Partition::Atoms { cells })
    }

    /// One cell per atom.
    pub fn identity(k: usize) -> Result<Self> {
        Self::atoms((0..k).map(|j| vec![j]).collect())
    }

    pub fn intervals(cuts: Vec<f64>) -> Result<Self> {
        if cuts.is_empty() {
            return Err(Error::arg("an interval partition needs at least one cut"));
        }
        if cuts.iter().any(|c| !c.is_finite()) || cuts.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::arg("interval cuts must be finite and strictly increasing"));
        }
        Ok(Partition::Intervals { cuts })
    }

    /// Cells of (nearly) equal empirical mass `1/k` under the points. Ties in
    /// discrete data may merge cells; fewer than 2 distinct cells is an error.
    pub fn equal_mass(points: &[f64], k: usize) -> Result<Self> {
        if k < 2 || points.len() < k {
            return Err(Error::arg(format!("equal-mass partition needs 2 ≤ k ≤ n, got k={k}, n={}", points.len())));
        }
        let mut xs = points.to_vec();
        if xs.iter().any(|x| !x.is_finite()) {
            return Err(Error::arg("points must be finite"));
        }
        xs.sort_by(f64::total_cmp);
        let n = xs.len();
        let mut cuts: Vec<f64> = (1..k).map(|j| xs[(j * n).div_ceil(k) - 1]).collect();
        cuts.dedup();
        cuts.retain(|&c| c < xs[n - 1]);
        Self::intervals(cuts)
    }

    /// Default cell count `⌈n^{1/3}⌉`, at least 2.
    pub fn default_cells(n: usize) -> usize {
        ((n as f64).cbrt().ceil() as usize).max(2)
    }

    pub fn k(&self) -> usize {
        match self {
            Partition::Atoms { cells } => cells.len(),
            Partition::Intervals { cuts } => cuts.len() + 1,
        }
    }

    /// Cell holding `x`, if any.
    pub fn cell_of(&self, x: f64) -> Option<usize> {
        match self {
            Partition::Atoms { cells } => {
                let j = x.round();
                if j != x || j < 0.0 {
                    return None;
                }
                let a = j as usize;
                cells.iter().position(|c| c.contains(&a))
            }
            Partition::Intervals { cuts } => x.is_finite().then(|| cuts.partition_point(|&c| c < x)),
        }
    }

    fn check_model(&self, model: &ParametricModel) -> Result<()> {
        match (self, model.atoms()) {
            (Partition::Atoms { cells }, Some(k)) => {
                let covered: usize = cells.iter().map(Vec::len).sum();
                if covered != k || cells.iter().flatten().any(|&a| a >= k) {
                    return Err(Error::arg(format!("partition cells do not cover the {k} atoms of the model")));
                }
                Ok(())
            }
            (Partition::Atoms { .. }, None) => Err(Error::Kind(format!(
                "an atom partition needs a categorical model, got {}",
                model.token()
            ))),
            (Partition::Intervals { .. }, _) => Ok(()),
        }
    }

    /// `P_θ(A_j)` for every cell.
    pub fn cell_probs(&self, model: &ParametricModel, theta: &[f64]) -> Result<Vec<f64>> {
        self.check_model(model)?;
        match self {
            Partition::Atoms { cells } => {
                let p = model.probs(theta)?;
                Ok(cells.iter().map(|c| c.iter().map(|&a| p[a]).sum()).collect())
            }
            Partition::Intervals { cuts } => {
                let mut out = Vec::with_capacity(cuts.len() + 1);
                let mut prev = 0.0;
                for &c in cuts {
                    let f = model.cdf(theta, c)?;
                    out.push((f - prev).max(0.0));
                    prev = f;
                }
                out.push((1.0 - prev).max(0.0));
                Ok(out)
            }
        }
    }

    /// Number of points in every cell.
    pub fn counts(&self, points: &[f64]) -> Result<Vec<u64>> {
        let mut c = vec![0u64; self.k()];
        for &x in points {
            c[self.cell_index(x)?] += 1;
        }
        Ok(c)
    }

    /// `(1/n) Σ W_i 1{x_i ∈ A_j}` for every cell.
    pub fn weighted_masses(&self, points: &[f64], weights: &[f64]) -> Result<Vec<f64>> {
        if points.len() != weights.len() || points.is_empty() {
            return Err(Error::arg("points and weights must be nonempty and of equal length"));
        }
        let mut m = vec![0.0; self.k()];
        for (&x, &w) in points.iter().zip(weights) {
            m[self.cell_index(x)?] += w;
        }
        let n = points.len() as f64;
        Ok(m.into_iter().map(|v| v / n).collect())
    }

    /// Masses of a finite measure aggregated onto the cells.
    pub fn aggregate(&self, m: &FiniteMeasure) -> Result<Vec<f64>> {
        let mut out = vec![0.0; self.k()];
        for (&x, &v) in m.support().iter().zip(m.masses()) {
            out[self.cell_index(x)?] += v;
        }
        Ok(out)
    }

    fn cell_index(&self, x: f64) -> Result<usize> {
        self.cell_of(x).ok_or_else(|| Error::arg(format!("{x} lies in no cell of the partition")))
    }
}

/// Counts `n_j` closest to `n p_j` that sum to `n` (largest remainders,
/// ties to the lower index).
pub fn fitted_counts(p: &[f64], n: u64) -> Vec<u64> {
    let raw: Vec<f64> = p.iter().map(|&v| v * n as f64).collect();
    let mut counts: Vec<u64> = raw.iter().map(|v| v.floor() as u64).collect();
    let assigned: u64 = counts.iter().sum();
    let mut order: Vec<usize> = (0..p.len()).collect();
    order.sort_by(|&a, &b| (raw[b] - raw[b].floor()).total_cmp(&(raw[a] - raw[a].floor())).then(a.cmp(&b)));
    for &j in order.iter().cycle().take(n.saturating_sub(assigned) as usize) {
        counts[j] += 1;
    }
    counts
}

fn check_probability(p: &[f64]) -> Result<()> {
    if p.iter().any(|v| !(v.is_finite() && *v >= 0.0)) || (p.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
        return Err(Error::arg(format!("{p:?} is not a probability vector")));
    }
    Ok(())
}

/// `log P(n·P_{n,θ} = counts)` for the multinomial law with cell masses `p`.
pub fn log_occupation_probability(p: &[f64], counts: &[i64]) -> Result<f64> {
    if p.len() != counts.len() {
        return Err(Error::arg(format!("{} masses but {} counts", p.len(), counts.len())));
    }
    check_probability(p)?;
    if let Some(c) = counts.iter().find(|&&c| c < 0) {
        return Err(Error::arg(format!("counts must be nonnegative, got {c}")));
    }
    let n: u64 = counts.iter().map(|&c| c as u64).sum();
    let mut acc = ln_factorial(n);
    for (&c, &pj) in counts.iter().zip(p) {
        if c == 0 {
            continue;
        }
        if pj == 0.0 {
            return Ok(f64::NEG_INFINITY);
        }
        acc += c as f64 * pj.ln() - ln_factorial(c as u64);
    }
    Ok(acc)
}

/// Multinomial probability that the empirical measure of `n = Σ counts`
/// draws from `p` has exactly the given counts.
pub fn exact_occupation_probability(p: &[f64], counts: &[i64]) -> Result<f64> {
    Ok(log_occupation_probability(p, counts)?.exp())
}

/// `Σ_j Q(A_j) log(Q(A_j)/P(A_j))`.
pub fn kl_on_partition(q: &FiniteMeasure, p: &FiniteMeasure, part: &Partition) -> Result<f64> {
    let (qa, pa) = (part.aggregate(q)?, part.aggregate(p)?);
    Ok(divergence_vec(&DivergenceSpec::kullback_leibler(), &qa, &pa))
}

/// Open cell-wise ε-box `{Q : max_j |Q(A_j) − center_j| < ε}`, optionally
/// forcing `Q(A_j) = 0` wherever the centre vanishes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PartitionNeighborhood {
    center: Vec<f64>,
    epsilon: f64,
    zero_cells: bool,
}

impl PartitionNeighborhood {
    pub fn new(center: Vec<f64>, epsilon: f64) -> Result<Self> {
        if center.len() < 2 || center.iter().any(|c| !c.is_finite()) {
            return Err(Error::arg("neighbourhood centre needs at least 2 finite cell masses"));
        }
        if !(epsilon > 0.0 && epsilon.is_finite()) {
            return Err(Error::arg(format!("epsilon must be positive and finite, got {epsilon}")));
        }
        Ok(PartitionNeighborhood {
            center,
            epsilon,
            zero_cells: true,
        })
    }

    /// Centre at the cell masses of `m`.
    pub fn around(m: &FiniteMeasure, part: &Partition, epsilon: f64) -> Result<Self> {
        Self::new(part.aggregate(m)?, epsilon)
    }

    pub fn with_zero_cells(mut self, on: bool) -> Self {
        self.zero_cells = on;
        self
    }

    pub fn center(&self) -> &[f64] {
        &self.center
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn zero_cells(&self) -> bool {
        self.zero_cells
    }

    pub fn k(&self) -> usize {
        self.center.len()
    }

    pub fn contains(&self, q: &[f64]) -> bool {
        q.len() == self.k()
            && q.iter().zip(&self.center).all(|(&v, &c)| {
                (v - c).abs() < self.epsilon && !(self.zero_cells && c == 0.0 && v != 0.0)
            })
    }

    /// Membership of `sums / n`, decided in the scale of the sums with the
    /// boundary slack used for counts so that lattice points on the edge of
    /// the box are excluded regardless of rounding.
    pub fn contains_sums(&self, sums: &[f64], n: f64) -> bool {
        let radius = n * self.epsilon - COUNT_SLACK;
        sums.len() == self.k()
            && sums.iter().zip(&self.center).all(|(&s, &c)| {
                (s - n * c).abs() < radius && !(self.zero_cells && c == 0.0 && s != 0.0)
            })
    }

    /// Closed bounds of cell `j`.
    fn bounds(&self, j: usize) -> (f64, f64) {
        let c = self.center[j];
        if self.zero_cells && c == 0.0 {
            (0.0, 0.0)
        } else {
            (c - self.epsilon, c + self.epsilon)
        }
    }
}

/// Whether the infimum ranges over probability vectors or over arbitrary
/// (non-normalized) cell masses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MassConstraint {
    Probability,
    Free,
}

/// Solution `x ∈ [x_lo, x_hi]` of `φ'(x) = λ`, or the nearer end of the
/// range when `λ` lies outside the range of `φ'` there.
fn inverse_phi_d1(spec: &DivergenceSpec, lambda: f64, x_lo: f64, x_hi: f64) -> f64 {
    let x = match (spec.kind(), spec.is_conjugated()) {
        (DivergenceKind::CressieRead { gamma }, _) => {
            if (gamma - 1.0).abs() < crate::divergence::GAMMA_LIMIT_EPS {
                lambda.exp()
            } else {
                let s = 1.0 + (gamma - 1.0) * lambda;
                if gamma == 2.0 {
                    s
                } else if s <= 0.0 {
                    if gamma > 1.0 { 0.0 } else { f64::INFINITY }
                } else if gamma.abs() < crate::divergence::GAMMA_LIMIT_EPS {
                    1.0 / s
                } else {
                    s.powf(1.0 / (gamma - 1.0))
                }
            }
        }
        (DivergenceKind::WeightInduced { law }, false) => {
            let (lo, hi) = law.cgf_domain();
            if lambda <= lo {
                law.mean_range().0
            } else if lambda >= hi {
                law.mean_range().1
            } else {
                law.cgf_d1(lambda)
            }
        }
        (DivergenceKind::WeightInduced { .. }, true) => return numeric_inverse_d1(spec, lambda, x_lo, x_hi),
    };
    x.clamp(x_lo, x_hi)
}

/// Bisection for `φ'(x) = λ` on `[x_lo, x_hi]` within the domain, in
/// log-distance to a finite lower domain end.
fn numeric_inverse_d1(spec: &DivergenceSpec, lambda: f64, x_lo: f64, x_hi: f64) -> f64 {
    let (a, b) = spec.domain();
    let lo_x = x_lo.max(if a.is_finite() { a + 1e-12 * a.abs().max(1.0) } else { a });
    let hi_x = x_hi.min(if b.is_finite() { b - 1e-12 * b.abs().max(1.0) } else { b });
    if !(lo_x < hi_x) {
        return lo_x.min(x_hi).max(x_lo);
    }
    type Map = Box<dyn Fn(f64) -> f64>;
    let (to_u, to_x): (Map, Map) = if a.is_finite() {
        (Box::new(move |x: f64| (x - a).ln()), Box::new(move |u: f64| a + u.exp()))
    } else {
        (Box::new(|x| x), Box::new(|u| u))
    };
    if spec.phi_d1(lo_x) >= lambda {
        return lo_x;
    }
    if spec.phi_d1(hi_x) <= lambda {
        return hi_x;
    }
    let (mut lo, mut hi) = (to_u(lo_x), to_u(hi_x));
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if spec.phi_d1(to_x(mid)) < lambda {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= 1e-15 * hi.abs().max(1.0) {
            break;
        }
    }
    to_x(0.5 * (lo + hi))
}

/// Minimizer and value of `Σ_j p_j φ(q_j/p_j)` over the closed neighbourhood.
pub fn neighborhood_argmin(
    spec: &DivergenceSpec,
    v: &PartitionNeighborhood,
    p: &[f64],
    mass: MassConstraint,
) -> Result<(f64, Vec<f64>)> {
    spec.validate()?;
    let k = v.k();
    if p.len() != k {
        return Err(Error::arg(format!("neighbourhood has {k} cells but P has {}", p.len())));
    }
    if p.iter().any(|x| !(x.is_finite() && *x >= 0.0)) {
        return Err(Error::arg("P must have finite nonnegative cell masses"));
    }
    let mut bounds: Vec<(f64, f64)> = (0..k).map(|j| v.bounds(j)).collect();
    if mass == MassConstraint::Probability {
        for b in &mut bounds {
            b.0 = b.0.max(0.0);
        }
        let lo: f64 = bounds.iter().map(|b| b.0).sum();
        let hi: f64 = bounds.iter().map(|b| b.1).sum();
        if bounds.iter().any(|b| b.0 > b.1) || lo > 1.0 + 1e-12 || hi < 1.0 - 1e-12 {
            return Err(Error::arg("the neighbourhood contains no probability vector"));
        }
    }
    // Cells with P-mass zero must carry no Q-mass.
    for (j, b) in bounds.iter_mut().enumerate() {
        if p[j] == 0.0 {
            if b.0 > 0.0 || b.1 < 0.0 {
                return Ok((f64::INFINITY, (0..k).map(|i| bounds_mid(v.bounds(i))).collect()));
            }
            *b = (0.0, 0.0);
        }
    }
    // Only ratios that can reach the box matter to the clamp below.
    let active = || (0..k).filter(|&j| p[j] > 0.0);
    let x_lo = active().map(|j| bounds[j].0 / p[j]).fold(f64::INFINITY, f64::min);
    let x_hi = active().map(|j| bounds[j].1 / p[j]).fold(f64::NEG_INFINITY, f64::max);
    let (x_lo, x_hi) = if x_lo <= x_hi { (x_lo, x_hi) } else { (1.0, 1.0) };
    let at = |lambda: f64| -> Vec<f64> {
        let x = inverse_phi_d1(spec, lambda, x_lo, x_hi);
        (0..k)
            .map(|j| if p[j] == 0.0 { 0.0 } else { (p[j] * x).clamp(bounds[j].0, bounds[j].1) })
            .collect()
    };
    let q = match mass {
        MassConstraint::Free => at(0.0),
        MassConstraint::Probability => {
            let total = |l: f64| at(l).iter().sum::<f64>();
            let (mut lo, mut hi) = (-1.0, 1.0);
            for _ in 0..1100 {
                if total(lo) <= 1.0 {
                    break;
                }
                lo *= 2.0;
            }
            for _ in 0..1100 {
                if total(hi) >= 1.0 {
                    break;
                }
                hi *= 2.0;
            }
            for _ in 0..200 {
                let mid = 0.5 * (lo + hi);
                if total(mid) < 1.0 {
                    lo = mid;
                } else {
                    hi = mid;
                }
                if hi - lo <= 1e-15 * hi.abs().max(1.0) {
                    break;
                }
            }
            let mut q = at(0.5 * (lo + hi));
            // Put the residual rounding error on a cell with slack.
            let resid = 1.0 - q.iter().sum::<f64>();
            if let Some(j) = (0..k).find(|&j| {
                p[j] > 0.0 && q[j] + resid >= bounds[j].0 && q[j] + resid <= bounds[j].1
            }) {
                q[j] += resid;
            }
            q
        }
    };
    Ok((divergence_vec(spec, &q, p), q))
}

fn bounds_mid(b: (f64, f64)) -> f64 {
    0.5 * (b.0 + b.1)
}

/// `inf_{Q ∈ V̄} Σ_j P(A_j) φ(Q(A_j)/P(A_j))`.
///
/// The objective is separable and convex and the feasible set is a box,
/// possibly cut by the simplex, so the minimizer is `q_j = clamp(p_j x(λ))`
/// with `φ'(x(λ)) = λ`; the multiplier `λ` is found by bisection on the total
/// mass (and is zero without the simplex constraint).
pub fn neighborhood_inf_divergence(
    spec: &DivergenceSpec,
    v: &PartitionNeighborhood,
    p: &[f64],
    mass: MassConstraint,
) -> Result<f64> {
    Ok(neighborhood_argmin(spec, v, p, mass)?.0)
}

/// Exact sandwich certificate at one θ.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SandwichReport {
    pub n: u64,
    pub k: usize,
    pub epsilon: f64,
    pub theta: Vec<f64>,
    /// Observed counts of the centre, fitted to `P_θT`.
    pub observed_counts: Vec<u64>,
    /// `L = (1/n) log P_θ(P_{n,θ} ∈ V)`, by enumeration.
    pub l_value: f64,
    /// `K = −inf_{Q ∈ V} KL(Q, P_θ)`.
    pub k_value: f64,
    /// `−(k/n) log(n + 1)`.
    pub lower_bound: f64,
    pub enumerated: usize,
    /// `lower_bound ≤ L − K ≤ 0`.
    pub holds: bool,
}

struct Enumerator {
    n: u64,
    ln_fact: Vec<f64>,
    ranges: Vec<(u64, u64)>,
}

impl Enumerator {
    fn new(observed: &[u64], n: u64, epsilon: f64) -> Result<Self> {
        let radius = n as f64 * epsilon - COUNT_SLACK;
        let ranges: Vec<(u64, u64)> = observed
            .iter()
            .map(|&c| {
                if c == 0 {
                    return (0, 0);
                }
                // integers m with |m − c| < radius
                let r = (radius.ceil().max(1.0) as u64) - 1;
                (c.saturating_sub(r), (c + r).min(n))
            })
            .collect();
        ranges[..ranges.len() - 1]
            .iter()
            .try_fold(1usize, |acc, &(a, b)| acc.checked_mul((b - a + 1) as usize))
            .filter(|&s| s <= ENUMERATION_CAP)
            .ok_or_else(|| Error::Scale(format!("more than {ENUMERATION_CAP} count vectors to enumerate")))?;
        Ok(Enumerator {
            n,
            ln_fact: (0..=n).map(ln_factorial).collect(),
            ranges,
        })
    }

    /// `(log Σ_m P(m), number of m)` over count vectors in the box.
    fn log_mass(&self, p: &[f64]) -> (f64, usize) {
        let ln_p: Vec<f64> = p.iter().map(|v| v.ln()).collect();
        let k = p.len();
        let mut terms = Vec::new();
        let mut m = vec![0u64; k];
        self.walk(0, 0, &mut m, &ln_p, &mut terms);
        let count = terms.len();
        let top = terms.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        if !top.is_finite() {
            return (f64::NEG_INFINITY, count);
        }
        (top + terms.iter().map(|t| (t - top).exp()).sum::<f64>().ln(), count)
    }

    fn walk(&self, j: usize, used: u64, m: &mut [u64], ln_p: &[f64], out: &mut Vec<f64>) {
        let k = m.len();
        if j == k - 1 {
            let last = self.n - used;
            let (a, b) = self.ranges[j];
            if last < a || last > b {
                return;
            }
            m[j] = last;
            let mut acc = self.ln_fact[self.n as usize];
            for (i, &c) in m.iter().enumerate() {
                if c > 0 {
                    acc += c as f64 * ln_p[i] - self.ln_fact[c as usize];
                }
            }
            out.push(if acc.is_nan() { f64::NEG_INFINITY } else { acc });
            return;
        }
        let (a, b) = self.ranges[j];
        for c in a..=b.min(self.n - used) {
            m[j] = c;
            self.walk(j + 1, used + c, m, ln_p, out);
        }
    }
}

fn sandwich_at(
    en: &Enumerator,
    v: &PartitionNeighborhood,
    observed: &[u64],
    p: &[f64],
    theta: &[f64],
) -> Result<SandwichReport> {
    let n = en.n;
    let (log_mass, enumerated) = en.log_mass(p);
    let l_value = log_mass / n as f64;
    let k_value = -neighborhood_inf_divergence(&DivergenceSpec::kullback_leibler(), v, p, MassConstraint::Probability)?;
    let k = p.len();
    let lower_bound = -(k as f64 / n as f64) * ((n + 1) as f64).ln();
    let gap = l_value - k_value;
    let slack = 1e-12;
    Ok(SandwichReport {
        n,
        k,
        epsilon: v.epsilon(),
        theta: theta.to_vec(),
        observed_counts: observed.to_vec(),
        l_value,
        k_value,
        lower_bound,
        enumerated,
        holds: gap <= slack && gap >= lower_bound - slack,
    })
}

fn sandwich_setup(
    model: &ParametricModel,
    theta_t: &[f64],
    part: &Partition,
    epsilon: f64,
    n: u64,
) -> Result<(Enumerator, PartitionNeighborhood, Vec<u64>)> {
    if !model.is_categorical() {
        return Err(Error::Kind(format!("the sandwich needs a categorical model, got {}", model.token())));
    }
    if n == 0 {
        return Err(Error::arg("n must be at least 1"));
    }
    let observed = fitted_counts(&part.cell_probs(model, theta_t)?, n);
    let center: Vec<f64> = observed.iter().map(|&c| c as f64 / n as f64).collect();
    let v = PartitionNeighborhood::new(center, epsilon)?;
    let en = Enumerator::new(&observed, n, epsilon)?;
    Ok((en, v, observed))
}

/// Exact `L(θ)` and `K(θ)` at one θ, with the observed empirical measure
/// fixed at the counts fitted to `P_θT`, and the certificate
/// `−(k/n) log(n+1) ≤ L − K ≤ 0`.
pub fn sandwich_check(
    model: &ParametricModel,
    theta: &[f64],
    theta_t: &[f64],
    part: &Partition,
    epsilon: f64,
    n: u64,
) -> Result<SandwichReport> {
    let (en, v, observed) = sandwich_setup(model, theta_t, part, epsilon, n)?;
    let p = part.cell_probs(model, theta)?;
    sandwich_at(&en, &v, &observed, &p, theta)
}

/// Maximizers of `L` and `K` over a θ grid and the resulting certificate
/// `0 ≤ L(θ_ML) − L(θ_LDP) ≤ (k/n) log(n+1)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SandwichOptimum {
    pub n: u64,
    pub k: usize,
    pub epsilon: f64,
    pub theta_ml: Vec<f64>,
    pub theta_ldp: Vec<f64>,
    pub l_ml: f64,
    pub l_ldp: f64,
    pub bound: f64,
    /// Every grid point satisfied the per-θ certificate.
    pub pointwise_holds: bool,
    pub holds: bool,
}

pub fn sandwich_optimum(
    model: &ParametricModel,
    theta_t: &[f64],
    part: &Partition,
    epsilon: f64,
    n: u64,
    grid: &[Vec<f64>],
) -> Result<SandwichOptimum> {
    if grid.is_empty() {
        return Err(Error::arg("θ grid is empty"));
    }
    let (en, v, observed) = sandwich_setup(model, theta_t, part, epsilon, n)?;
    let reports: Vec<SandwichReport> = with_pool(|| {
        grid.par_iter()
            .map(|theta| sandwich_at(&en, &v, &observed, &part.cell_probs(model, theta)?, theta))
            .collect::<Result<Vec<_>>>()
    })?;
    let argmax = |key: fn(&SandwichReport) -> f64| {
        reports
            .iter()
            .enumerate()
            .fold(0, |best, (i, r)| if key(r) > key(&reports[best]) { i } else { best })
    };
    let ml = &reports[argmax(|r| r.l_value)];
    let ldp = &reports[argmax(|r| r.k_value)];
    let bound = (part.k() as f64 / n as f64) * ((n + 1) as f64).ln();
    let diff = ml.l_value - ldp.l_value;
    Ok(SandwichOptimum {
        n,
        k: part.k(),
        epsilon,
        theta_ml: ml.theta.clone(),
        theta_ldp: ldp.theta.clone(),
        l_ml: ml.l_value,
        l_ldp: ldp.l_value,
        bound,
        pointwise_holds: reports.iter().all(|r| r.holds),
        holds: diff >= 0.0 && diff <= bound + 1e-12,
    })
}

/// Probability vectors on `k` atoms whose masses are positive multiples of `step`.
pub fn simplex_grid(k: usize, step: f64) -> Result<Vec<Vec<f64>>> {
    let m = (1.0 / step).round() as usize;
    if k < 2 || m < k || ((m as f64) * step - 1.0).abs() > 1e-9 {
        return Err(Error::arg(format!("step {step} does not divide the simplex on {k} atoms")));
    }
    let mut out = Vec::new();
    let mut cur = vec![0usize; k];
    fn rec(j: usize, left: usize, cur: &mut [usize], m: usize, out: &mut Vec<Vec<f64>>) {
        let k = cur.len();
        if j == k - 1 {
            if left >= 1 {
                cur[j] = left;
                out.push(cur.iter().map(|&c| c as f64 / m as f64).collect());
            }
            return;
        }
        for c in 1..left {
            cur[j] = c;
            rec(j + 1, left - c, cur, m, out);
        }
    }
    rec(0, m, &mut cur, m, &mut out);
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SanovRow {
    pub n: u64,
    pub rate: f64,
    pub target: f64,
    pub gap: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SanovTable {
    pub rows: Vec<SanovRow>,
    /// Smallest `C` with `|gap| ≤ C log(n)/n` on every row.
    pub fitted_c: f64,
    /// `|gap|` strictly decreases along the grid.
    pub monotone: bool,
}

/// `(1/n) log P_θ(n P_{n,θ} = counts fitted to P_θT)` against `−KL(P_θT, P_θ)`.
pub fn sanov_rate_convergence(
    model: &ParametricModel,
    theta: &[f64],
    theta_t: &[f64],
    n_grid: &[u64],
) -> Result<SanovTable> {
    let p = model.probs(theta)?;
    let pt = model.probs(theta_t)?;
    let target = -divergence_vec(&DivergenceSpec::kullback_leibler(), &pt, &p);
    let mut rows = Vec::with_capacity(n_grid.len());
    for &n in n_grid {
        if n < 2 {
            return Err(Error::arg(format!("n must be at least 2, got {n}")));
        }
        let counts: Vec<i64> = fitted_counts(&pt, n).into_iter().map(|c| c as i64).collect();
        let rate = log_occupation_probability(&p, &counts)? / n as f64;
        rows.push(SanovRow {
            n,
            rate,
            target,
            gap: rate - target,
        });
    }
    let fitted_c = rows
        .iter()
        .map(|r| r.gap.abs() * r.n as f64 / (r.n as f64).ln())
        .fold(0.0, f64::max);
    let monotone = rows.windows(2).all(|w| w[1].gap.abs() < w[0].gap.abs());
    Ok(SanovTable { rows, fitted_c, monotone })
}

/// How the conditional probability is estimated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LdpEstimator {
    /// Plain hit frequency.
    Naive,
    /// Importance sampling with the weights of every cell exponentially
    /// tilted towards the dominating point of the neighbourhood.
    Tilted,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LdpOptions {
    pub estimator: LdpEstimator,
    /// Redraw the θ-sample in every replication instead of fixing it once.
    pub resample_theta_sample: bool,
}

impl Default for LdpOptions {
    fn default() -> Self {
        LdpOptions {
            estimator: LdpEstimator::Tilted,
            resample_theta_sample: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LdpEstimate {
    pub n: u64,
    pub epsilon: f64,
    pub reps: u64,
    pub estimator: LdpEstimator,
    pub hits: u64,
    pub probability: f64,
    /// `(1/n) log probability`; `−∞` when nothing was hit.
    pub rate_estimate: f64,
    pub ci_lo: f64,
    pub ci_hi: f64,
    /// `−inf_{Q ∈ V_ε(P_θT)} φ^W(Q, P_θ)` over free cell masses.
    pub rate_target: f64,
    /// The same infimum around the realized centre `P_n^W` against the cell
    /// frequencies of the fixed θ-sample (NaN when that sample is redrawn).
    pub conditional_target: f64,
    /// No hits: `ci_hi` is a rule-of-three upper bound.
    pub one_sided: bool,
    /// Cell masses of the weighted empirical measure `P_n^W`.
    pub center: Vec<f64>,
}

impl LdpEstimate {
    pub fn relative_error(&self) -> f64 {
        ((self.rate_estimate - self.rate_target) / self.rate_target).abs()
    }
}

const Z95: f64 = 1.959_963_984_540_054;

/// Monte Carlo estimate of `(1/n) log P(P^{W'}_{n,θ} ∈ V_ε(P_n^W) | x, W)`.
///
/// `x_1..x_n ~ P_θT` and their weights are drawn once and fixed. By default
/// the θ-sample `y_1..y_n ~ P_θ` is also drawn once and only the weights `W'`
/// vary across replications; `resample_theta_sample` redraws it every time.
/// Only cell sums of weights matter, and each is drawn in one step.
#[allow(clippy::too_many_arguments)]
pub fn conditional_ldp_mc(
    model: &ParametricModel,
    theta: &[f64],
    theta_t: &[f64],
    law: &WeightLaw,
    part: &Partition,
    epsilon: f64,
    n: u64,
    reps: u64,
    seed: u64,
    opts: &LdpOptions,
) -> Result<LdpEstimate> {
    law.validate()?;
    if reps < 100 {
        return Err(Error::arg(format!("reps must be at least 100, got {reps}")));
    }
    if n == 0 {
        return Err(Error::arg("n must be at least 1"));
    }
    let k = part.k();
    let p = part.cell_probs(model, theta)?;
    let pt = part.cell_probs(model, theta_t)?;
    let spec = induced_divergence(law);
    let target_v = PartitionNeighborhood::new(pt.clone(), epsilon)?;
    let rate_target = -neighborhood_inf_divergence(&spec, &target_v, &p, MassConstraint::Free)?;

    let mut data_rng = rng_for(seed, "sanov-data", 0);
    let x = model.sample_with(theta_t, n as usize, &mut data_rng)?;
    let w = law.sample_with(n as usize, &mut data_rng);
    let center = part.weighted_masses(&x, &w)?;
    let v = PartitionNeighborhood::new(center.clone(), epsilon)?;
    let fixed_counts = if opts.resample_theta_sample {
        None
    } else {
        let y = model.sample_with(theta, n as usize, &mut rng_for(seed, "sanov-theta", 0))?;
        Some(part.counts(&y)?)
    };

    let nf = n as f64;
    let tilts = |counts: &[u64]| -> Vec<f64> {
        if opts.estimator == LdpEstimator::Naive {
            return vec![0.0; k];
        }
        (0..k)
            .map(|j| {
                if counts[j] == 0 {
                    return 0.0;
                }
                let a = counts[j] as f64 / nf;
                let (lo, hi) = v.bounds(j);
                let t = law.chernoff_derivative(a.clamp(lo, hi) / a, 1);
                if t.is_finite() { t } else { 0.0 }
            })
            .collect()
    };
    let fixed_tilts = fixed_counts.as_deref().map(tilts);
    let conditional_target = match &fixed_counts {
        Some(c) => {
            let freq: Vec<f64> = c.iter().map(|&m| m as f64 / nf).collect();
            -neighborhood_inf_divergence(&spec, &v, &freq, MassConstraint::Free)?
        }
        None => f64::NAN,
    };

    let one = |r: u64| -> (bool, f64) {
        let mut rng: Rng = rng_for(seed, "sanov-rep", r);
        let drawn;
        let counts: &[u64] = match &fixed_counts {
            Some(c) => c,
            None => {
                drawn = multinomial(n, &p, &mut rng);
                &drawn
            }
        };
        let owned;
        let lambda: &[f64] = match &fixed_tilts {
            Some(t) => t,
            None => {
                owned = tilts(counts);
                &owned
            }
        };
        let mut sums = vec![0.0; k];
        let mut log_lr = 0.0;
        for j in 0..k {
            let s = law.sample_tilted_sum(lambda[j], counts[j], &mut rng);
            sums[j] = s;
            if lambda[j] != 0.0 {
                log_lr += counts[j] as f64 * law.cgf(lambda[j]) - lambda[j] * s;
            }
        }
        if v.contains_sums(&sums, nf) {
            (true, log_lr.exp())
        } else {
            (false, 0.0)
        }
    };
    let draws: Vec<(bool, f64)> = with_pool(|| (0..reps).into_par_iter().map(one).collect());

    let hits = draws.iter().filter(|d| d.0).count() as u64;
    let rf = reps as f64;
    let (probability, ci_lo_p, ci_hi_p) = match opts.estimator {
        LdpEstimator::Naive => {
            let ph = hits as f64 / rf;
            let (lo, hi) = wilson(hits, reps);
            (ph, lo, hi)
        }
        LdpEstimator::Tilted => {
            let mean = draws.iter().map(|d| d.1).sum::<f64>() / rf;
            let var = draws.iter().map(|d| (d.1 - mean).powi(2)).sum::<f64>() / (rf - 1.0);
            let se = (var / rf).sqrt();
            (mean, mean - Z95 * se, mean + Z95 * se)
        }
    };
    let log_rate = |v: f64| if v > 0.0 { v.ln() / nf } else { f64::NEG_INFINITY };
    let one_sided = hits == 0;
    let (rate_estimate, ci_lo, ci_hi) = if one_sided {
        (f64::NEG_INFINITY, f64::NEG_INFINITY, (3.0 / rf).ln() / nf)
    } else {
        (log_rate(probability), log_rate(ci_lo_p), log_rate(ci_hi_p))
    };
    Ok(LdpEstimate {
        n,
        epsilon,
        reps,
        estimator: opts.estimator,
        hits,
        probability,
        rate_estimate,
        ci_lo,
        ci_hi,
        rate_target,
        conditional_target,
        one_sided,
        center,
    })
}

/// Multinomial counts by sequential binomial draws.
pub(crate) fn multinomial(n: u64, p: &[f64], rng: &mut Rng) -> Vec<u64> {
    let mut left = n;
    let mut rest = 1.0;
    let mut out = Vec::with_capacity(p.len());
    for (j, &pj) in p.iter().enumerate() {
        if j + 1 == p.len() {
            out.push(left);
            break;
        }
        let q = if rest > 0.0 { (pj / rest).clamp(0.0, 1.0) } else { 0.0 };
        let c = if left == 0 { 0 } else { Binomial::new(left, q).expect("probability in [0, 1]").sample(rng) };
        out.push(c);
        left -= c;
        rest -= pj;
    }
    out
}

/// 95% Wilson score interval for a binomial proportion.
pub(crate) fn wilson(hits: u64, reps: u64) -> (f64, f64) {
    let n = reps as f64;
    let ph = hits as f64 / n;
    let z2 = Z95 * Z95;
    let denom = 1.0 + z2 / n;
    let centre = (ph + z2 / (2.0 * n)) / denom;
    let half = Z95 * (ph * (1.0 - ph) / n + z2 / (4.0 * n * n)).sqrt() / denom;
    ((centre - half).max(0.0), (centre + half).min(1.0))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ShrinkRow {
    pub epsilon: f64,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ShrinkTable {
    pub rows: Vec<ShrinkRow>,
    /// `φ(P_θT, P_θ)` on the cells.
    pub limit: f64,
    /// Values are nondecreasing as ε shrinks.
    pub monotone: bool,
    /// The smallest ε is within 1e-6 of the limit.
    pub converged: bool,
}

/// `inf_{Q ∈ V_ε(P_θT)} φ(Q, P_θ)` along a decreasing ε grid.
pub fn shrink_epsilon_limit(
    spec: &DivergenceSpec,
    model: &ParametricModel,
    theta_t: &[f64],
    theta: &[f64],
    part: &Partition,
    eps_grid: &[f64],
) -> Result<ShrinkTable> {
    if eps_grid.is_empty() || eps_grid.windows(2).any(|w| w[1] >= w[0]) {
        return Err(Error::arg("eps_grid must be nonempty and strictly decreasing"));
    }
    let pt = part.cell_probs(model, theta_t)?;
    let p = part.cell_probs(model, theta)?;
    let labels: Vec<f64> = (0..pt.len()).map(|j| j as f64).collect();
    let limit = divergence_finite(
        spec,
        &FiniteMeasure::new(labels.clone(), pt.clone())?,
        &FiniteMeasure::new(labels, p.clone())?,
    )?;
    let rows = eps_grid
        .iter()
        .map(|&epsilon| {
            let v = PartitionNeighborhood::new(pt.clone(), epsilon)?;
            Ok(ShrinkRow {
                epsilon,
                value: neighborhood_inf_divergence(spec, &v, &p, MassConstraint::Probability)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let monotone = rows.windows(2).all(|w| w[1].value >= w[0].value - 1e-15);
    let converged = rows.last().is_some_and(|r| (r.value - limit).abs() <= 1e-6);
    Ok(ShrinkTable {
        rows,
        limit,
        monotone,
        converged,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;
    use statrs::distribution::{DiscreteCDF, Poisson};

    fn kl(q: &[f64], p: &[f64]) -> f64 {
        q.iter().zip(p).map(|(&a, &b)| if a == 0.0 { 0.0 } else { a * (a / b).ln() }).sum()
    }

    /// Brute-force infimum over a simplex grid of the given step.
    fn grid_inf(spec: &DivergenceSpec, v: &PartitionNeighborhood, p: &[f64], step: f64) -> f64 {
        let m = (1.0 / step).round() as usize;
        let mut best = f64::INFINITY;
        let mut visit = |q: &[f64]| {
            let closed = q.iter().zip(v.center()).all(|(&a, &c)| (a - c).abs() <= v.epsilon() + 1e-12);
            if closed {
                best = best.min(divergence_vec(spec, q, p));
            }
        };
        match p.len() {
            2 => (0..=m).for_each(|i| visit(&[i as f64 * step, 1.0 - i as f64 * step])),
            3 => {
                for i in 0..=m {
                    for j in 0..=m - i {
                        let (a, b) = (i as f64 * step, j as f64 * step);
                        visit(&[a, b, 1.0 - a - b]);
                    }
                }
            }
            _ => unreachable!(),
        }
        best
    }

    #[test]
    fn occupation_examples() {
        assert_abs_diff_eq!(exact_occupation_probability(&[0.5, 0.5], &[1, 1]).unwrap(), 0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(exact_occupation_probability(&[0.5, 0.5], &[2, 0]).unwrap(), 0.25, epsilon = 1e-15);
        assert_eq!(exact_occupation_probability(&[1.0, 0.0], &[17, 0]).unwrap(), 1.0);
        assert_eq!(exact_occupation_probability(&[1.0, 0.0], &[16, 1]).unwrap(), 0.0);
        assert!(matches!(exact_occupation_probability(&[0.5, 0.5], &[-1, 3]), Err(Error::Argument(_))));
        assert!(exact_occupation_probability(&[0.5, 0.6], &[1, 1]).is_err());
    }

    #[test]
    fn occupation_sums_to_one() {
        for n in [1i64, 7, 30, 60] {
            let p2 = [0.35, 0.65];
            let s2: f64 = (0..=n).map(|a| exact_occupation_probability(&p2, &[a, n - a]).unwrap()).sum();
            assert_abs_diff_eq!(s2, 1.0, epsilon = 1e-10);
            let p3 = [0.2, 0.5, 0.3];
            let mut s3 = 0.0;
            for a in 0..=n {
                for b in 0..=n - a {
                    s3 += exact_occupation_probability(&p3, &[a, b, n - a - b]).unwrap();
                }
            }
            assert_abs_diff_eq!(s3, 1.0, epsilon = 1e-10);
        }
    }

    #[test]
    fn partition_kl_examples() {
        let part = Partition::identity(2).unwrap();
        let q = FiniteMeasure::from_masses(&[0.5, 0.5]).unwrap();
        let p = FiniteMeasure::from_masses(&[0.3, 0.7]).unwrap();
        assert_eq!(kl_on_partition(&q, &q, &part).unwrap(), 0.0);
        assert_abs_diff_eq!(kl_on_partition(&q, &p, &part).unwrap(), kl(&[0.5, 0.5], &[0.3, 0.7]), epsilon = 1e-15);
        assert_abs_diff_eq!(kl_on_partition(&q, &p, &part).unwrap(), 0.087176, epsilon = 1e-6);
        let a = FiniteMeasure::from_masses(&[1.0, 0.0]).unwrap();
        let b = FiniteMeasure::from_masses(&[0.0, 1.0]).unwrap();
        assert_eq!(kl_on_partition(&a, &b, &part).unwrap(), f64::INFINITY);
    }

    #[test]
    fn partition_construction() {
        assert!(Partition::atoms(vec![vec![0], vec![0, 1]]).is_err());
        assert!(Partition::atoms(vec![vec![0, 1]]).is_err());
        assert!(Partition::intervals(vec![1.0, 1.0]).is_err());
        let part = Partition::intervals(vec![0.0, 1.0]).unwrap();
        assert_eq!(part.k(), 3);
        assert_eq!(part.counts(&[-1.0, 0.0, 0.5, 1.0, 2.0]).unwrap(), vec![2, 2, 1]);
        let pts: Vec<f64> = (0..12).map(f64::from).collect();
        let eq = Partition::equal_mass(&pts, 3).unwrap();
        assert_eq!(eq.counts(&pts).unwrap(), vec![4, 4, 4]);
        assert_eq!(Partition::default_cells(1000), 10);
        assert_eq!(Partition::default_cells(27), 3);
        let model = ParametricModel::gauss_location();
        let probs = eq.cell_probs(&model, &[5.5]).unwrap();
        assert_abs_diff_eq!(probs.iter().sum::<f64>(), 1.0, epsilon = 1e-12);
        let coarse = Partition::atoms(vec![vec![0, 2], vec![1]]).unwrap();
        let simplex = ParametricModel::simplex(3).unwrap();
        let p = coarse.cell_probs(&simplex, &[0.2, 0.5]).unwrap();
        assert_abs_diff_eq!(p[0], 0.5, epsilon = 1e-15);
        assert!(Partition::identity(2).unwrap().cell_probs(&simplex, &[0.2, 0.5]).is_err());
    }

    #[test]
    fn fitted_counts_sum_to_n() {
        assert_eq!(fitted_counts(&[0.5, 0.5], 51), vec![26, 25]);
        assert_eq!(fitted_counts(&[0.3, 0.7], 50), vec![15, 35]);
        assert_eq!(fitted_counts(&[1.0 / 3.0; 3], 100), vec![34, 33, 33]);
    }

    #[test]
    fn neighborhood_examples() {
        let kl_spec = DivergenceSpec::kullback_leibler();
        let p = [0.2, 0.8];
        let v = PartitionNeighborhood::new(vec![0.2, 0.8], 0.03).unwrap();
        assert_eq!(neighborhood_inf_divergence(&kl_spec, &v, &p, MassConstraint::Probability).unwrap(), 0.0);
        let v = PartitionNeighborhood::new(vec![0.5, 0.5], 0.1).unwrap();
        let (val, q) = neighborhood_argmin(&kl_spec, &v, &p, MassConstraint::Probability).unwrap();
        assert_abs_diff_eq!(val, kl(&[0.4, 0.6], &p), epsilon = 1e-12);
        assert_abs_diff_eq!(q[0], 0.4, epsilon = 1e-12);
        assert_abs_diff_eq!(val, grid_inf(&kl_spec, &v, &p, 1e-4), epsilon = 1e-6);
        let wide = PartitionNeighborhood::new(vec![0.5, 0.5], 0.31).unwrap();
        assert_eq!(neighborhood_inf_divergence(&kl_spec, &wide, &p, MassConstraint::Probability).unwrap(), 0.0);
        let empty = PartitionNeighborhood::new(vec![0.1, 0.1], 0.1).unwrap();
        assert!(matches!(
            neighborhood_inf_divergence(&kl_spec, &empty, &p, MassConstraint::Probability),
            Err(Error::Argument(_))
        ));
    }

    #[test]
    fn neighborhood_matches_grid_oracle() {
        let specs = [
            DivergenceSpec::cressie_read(-1.0),
            DivergenceSpec::cressie_read(0.0),
            DivergenceSpec::cressie_read(0.5),
            DivergenceSpec::cressie_read(1.0),
            DivergenceSpec::cressie_read(2.0),
            DivergenceSpec::weight_induced_numeric(WeightLaw::poisson_one()),
            DivergenceSpec::weight_induced_numeric(WeightLaw::exponential_one()).conjugate(),
        ];
        let cases: [(&[f64], &[f64], f64); 4] = [
            (&[0.5, 0.5], &[0.3, 0.7], 0.05),
            (&[0.7, 0.3], &[0.1, 0.9], 0.2),
            (&[0.2, 0.3, 0.5], &[0.5, 0.3, 0.2], 0.1),
            (&[0.1, 0.1, 0.8], &[0.3, 0.3, 0.4], 0.15),
        ];
        for spec in &specs {
            for (c, p, eps) in cases {
                let v = PartitionNeighborhood::new(c.to_vec(), eps).unwrap();
                let got = neighborhood_inf_divergence(spec, &v, p, MassConstraint::Probability).unwrap();
                let step = if p.len() == 2 { 1e-4 } else { 1e-3 };
                let oracle = grid_inf(spec, &v, p, step);
                assert!(got <= oracle + 1e-9, "{spec:?} {c:?}: {got} vs grid {oracle}");
                assert!(oracle - got < 1e-4, "{spec:?} {c:?}: {got} vs grid {oracle}");
            }
        }
    }

    #[test]
    fn free_mass_is_cellwise() {
        let spec = induced_divergence(&WeightLaw::poisson_one());
        let v = PartitionNeighborhood::new(vec![0.5, 0.5], 0.05).unwrap();
        let (val, q) = neighborhood_argmin(&spec, &v, &[0.3, 0.7], MassConstraint::Free).unwrap();
        assert_eq!(q, vec![0.45, 0.55]);
        let oracle = 0.3 * spec.phi(0.45 / 0.3) + 0.7 * spec.phi(0.55 / 0.7);
        assert_abs_diff_eq!(val, oracle, epsilon = 1e-15);
        assert_abs_diff_eq!(val, 0.0498202, epsilon = 1e-7);
    }

    #[test]
    fn zero_cells_are_pinned() {
        let spec = DivergenceSpec::kullback_leibler();
        let v = PartitionNeighborhood::new(vec![0.0, 0.4, 0.6], 0.2).unwrap();
        assert!(!v.contains(&[0.05, 0.35, 0.6]));
        assert!(v.clone().with_zero_cells(false).contains(&[0.05, 0.35, 0.6]));
        let (_, q) = neighborhood_argmin(&spec, &v, &[0.3, 0.3, 0.4], MassConstraint::Probability).unwrap();
        assert_eq!(q[0], 0.0);
        let (_, q) = neighborhood_argmin(&spec, &v.with_zero_cells(false), &[0.3, 0.3, 0.4], MassConstraint::Probability)
            .unwrap();
        assert!(q[0] > 0.1);
    }

    #[test]
    fn divergence_inequality_chain() {
        let spec = DivergenceSpec::kullback_leibler();
        let (pt, p) = ([0.45, 0.3, 0.25], [0.2, 0.5, 0.3]);
        for (pn, eps) in [([0.5, 0.28, 0.22], 0.06), ([0.42, 0.33, 0.25], 0.05), ([0.45, 0.3, 0.25], 0.01)] {
            let vn = PartitionNeighborhood::new(pn.to_vec(), eps).unwrap();
            assert!(vn.contains(&pt));
            let v2 = PartitionNeighborhood::new(pt.to_vec(), 2.0 * eps).unwrap();
            let a = neighborhood_inf_divergence(&spec, &v2, &p, MassConstraint::Probability).unwrap();
            let b = neighborhood_inf_divergence(&spec, &vn, &p, MassConstraint::Probability).unwrap();
            assert!(a <= b + 1e-15 && b <= kl(&pt, &p) + 1e-15, "{a} {b}");
        }
    }

    #[test]
    fn sandwich_examples() {
        let m = ParametricModel::simplex(2).unwrap();
        let part = Partition::identity(2).unwrap();
        let r = sandwich_check(&m, &[0.5], &[0.5], &part, 0.1, 50).unwrap();
        assert!(r.holds, "{r:?}");
        assert!(r.l_value - r.k_value >= -(2.0 / 50.0) * 51f64.ln());
        let full = sandwich_check(&m, &[0.3], &[0.5], &part, 1.0, 50).unwrap();
        assert_abs_diff_eq!(full.l_value, 0.0, epsilon = 1e-12);
        assert_eq!(full.k_value, 0.0);
        // the likelihood-rate gap shrinks with n
        let gaps: Vec<f64> = [50, 100, 200]
            .iter()
            .map(|&n| {
                let r = sandwich_check(&m, &[0.3], &[0.5], &part, 0.05, n).unwrap();
                assert!(r.holds);
                (r.l_value - r.k_value).abs()
            })
            .collect();
        assert!(gaps[0] > gaps[1] && gaps[1] > gaps[2], "{gaps:?}");
    }

    #[test]
    fn sandwich_enumeration_is_exact() {
        // brute force over all count vectors for a small case
        let m = ParametricModel::simplex(3).unwrap();
        let part = Partition::identity(3).unwrap();
        let (n, eps) = (20i64, 0.12);
        let r = sandwich_check(&m, &[0.3, 0.3], &[0.2, 0.5], &part, eps, n as u64).unwrap();
        let centre = [4.0, 10.0, 6.0];
        let p = [0.3, 0.3, 0.4];
        let mut total = 0.0;
        for a in 0..=n {
            for b in 0..=n - a {
                let c = [a, b, n - a - b];
                if c.iter().zip(centre).all(|(&x, y)| ((x as f64 - y) / n as f64).abs() < eps) {
                    total += exact_occupation_probability(&p, &c).unwrap();
                }
            }
        }
        assert_abs_diff_eq!(r.l_value, total.ln() / n as f64, epsilon = 1e-12);
        assert!(matches!(
            sandwich_check(&m, &[0.3, 0.3], &[0.2, 0.5], &part, 0.5, 100_000),
            Err(Error::Scale(_))
        ));
    }

    #[test]
    fn sanov_rates() {
        let m = ParametricModel::simplex(2).unwrap();
        let t = sanov_rate_convergence(&m, &[0.3], &[0.5], &[50, 200, 800, 2000]).unwrap();
        let last = t.rows.last().unwrap();
        assert_abs_diff_eq!(last.target, -kl(&[0.5, 0.5], &[0.3, 0.7]), epsilon = 1e-15);
        assert!((last.rate - last.target).abs() < 0.005);
        assert!(t.monotone);
        assert!(t.rows.iter().all(|r| r.gap.abs() <= t.fitted_c * (r.n as f64).ln() / r.n as f64 + 1e-15));
        let same = sanov_rate_convergence(&m, &[0.4], &[0.4], &[50, 500]).unwrap();
        assert!(same.rows.iter().all(|r| r.rate < 0.0 && r.target == 0.0));
        assert!(same.rows[1].rate > same.rows[0].rate);
    }

    #[test]
    fn shrinking_neighbourhoods() {
        let m = ParametricModel::simplex(3).unwrap();
        let part = Partition::identity(3).unwrap();
        let spec = DivergenceSpec::cressie_read(0.5);
        let t = shrink_epsilon_limit(&spec, &m, &[0.3, 0.3], &[0.35, 0.3], &part, &[0.5, 0.1, 0.01, 1e-6]).unwrap();
        assert!(t.monotone && t.converged, "{t:?}");
        assert_eq!(t.rows[0].value, 0.0);
        assert!(shrink_epsilon_limit(&spec, &m, &[0.3, 0.3], &[0.35, 0.3], &part, &[0.1, 0.2]).is_err());
    }

    #[test]
    fn ldp_truth_inside_neighbourhood() {
        let m = ParametricModel::simplex(2).unwrap();
        let part = Partition::identity(2).unwrap();
        let opts = LdpOptions {
            estimator: LdpEstimator::Naive,
            resample_theta_sample: true,
        };
        let r = conditional_ldp_mc(&m, &[0.5], &[0.5], &WeightLaw::poisson_one(), &part, 0.3, 200, 2000, 3, &opts).unwrap();
        assert!(r.probability > 0.95, "{r:?}");
        assert!(r.rate_estimate > -1e-3 && r.rate_target == 0.0);
        let again = conditional_ldp_mc(&m, &[0.5], &[0.5], &WeightLaw::poisson_one(), &part, 0.3, 200, 2000, 3, &opts).unwrap();
        assert_eq!(format!("{r:?}"), format!("{again:?}"));
    }

    #[test]
    fn tilted_estimate_matches_exact_poisson_probability() {
        // With Poisson weights every cell sum given the θ-sample is Poisson,
        // so the conditional probability has a closed form.
        let m = ParametricModel::simplex(2).unwrap();
        let part = Partition::identity(2).unwrap();
        let law = WeightLaw::poisson_one();
        let (n, eps, seed) = (100u64, 0.05, 11);
        let r = conditional_ldp_mc(&m, &[0.3], &[0.5], &law, &part, eps, n, 20_000, seed, &LdpOptions::default()).unwrap();
        let y = m.sample_with(&[0.3], n as usize, &mut rng_for(seed, "sanov-theta", 0)).unwrap();
        let counts = part.counts(&y).unwrap();
        let nf = n as f64;
        let mut exact = 1.0;
        for (j, &c) in counts.iter().enumerate() {
            let (lo, hi) = (nf * (r.center[j] - eps), nf * (r.center[j] + eps));
            let d = Poisson::new(c as f64).unwrap();
            let (a, b) = ((lo + 1e-9).floor() as i64 + 1, (hi - 1e-9).ceil() as i64 - 1);
            let upper = d.cdf(b.max(0) as u64);
            let lower = if a <= 0 { 0.0 } else { d.cdf((a - 1) as u64) };
            exact *= upper - lower;
        }
        let rel = (r.probability - exact).abs() / exact;
        assert!(rel < 0.1, "tilted {} vs exact {exact}", r.probability);
        assert!(r.ci_lo <= exact.ln() / nf && exact.ln() / nf <= r.ci_hi);
    }

    #[test]
    fn zero_hits_give_one_sided_bound() {
        let m = ParametricModel::simplex(2).unwrap();
        let part = Partition::identity(2).unwrap();
        let opts = LdpOptions {
            estimator: LdpEstimator::Naive,
            resample_theta_sample: false,
        };
        let r = conditional_ldp_mc(&m, &[0.1], &[0.5], &WeightLaw::poisson_one(), &part, 0.02, 400, 500, 1, &opts).unwrap();
        assert!(r.one_sided && r.hits == 0);
        assert_eq!(r.rate_estimate, f64::NEG_INFINITY);
        assert_abs_diff_eq!(r.ci_hi, (3.0f64 / 500.0).ln() / 400.0, epsilon = 1e-15);
    }

    #[test]
    fn simplex_grid_counts() {
        assert_eq!(simplex_grid(2, 0.1).unwrap().len(), 9);
        assert_eq!(simplex_grid(3, 0.1).unwrap().len(), 36);
        assert!(simplex_grid(3, 0.3).is_err());
    }

    proptest! {
        #[test]
        fn refinement_never_decreases_kl(
            q in prop::collection::vec(0.05f64..1.0, 4),
            p in prop::collection::vec(0.05f64..1.0, 4),
        ) {
            let norm = |v: &[f64]| { let s: f64 = v.iter().sum(); v.iter().map(|x| x / s).collect::<Vec<_>>() };
            let (q, p) = (FiniteMeasure::from_masses(&norm(&q)).unwrap(), FiniteMeasure::from_masses(&norm(&p)).unwrap());
            let coarse = Partition::atoms(vec![vec![0, 1], vec![2, 3]]).unwrap();
            let mid = Partition::atoms(vec![vec![0], vec![1], vec![2, 3]]).unwrap();
            let fine = Partition::identity(4).unwrap();
            let a = kl_on_partition(&q, &p, &coarse).unwrap();
            let b = kl_on_partition(&q, &p, &mid).unwrap();
            let c = kl_on_partition(&q, &p, &fine).unwrap();
            let full = divergence_finite(&DivergenceSpec::kullback_leibler(), &q, &p).unwrap();
            prop_assert!(a <= b + 1e-12 && b <= c + 1e-12);
            prop_assert!((c - full).abs() < 1e-12);
        }
    }
}
