//! Testers for the easiness conditions (central, v-central, v-PPC, witness,
//! Bernstein, exponential tails, small-ball) and the implications between them.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::grip::GripProvider;
use crate::numeric::{expect, log_mean_exp, log_sum_exp, INF};
use crate::problem::{Comparator, FiniteProblem};

/// Default tolerance for exact condition checks.
pub const COND_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ConditionKind {
    StrongCentral,
    VCentral,
    VPpc,
    Witness,
    TauWitness,
    Bernstein,
    UniformExpTail,
    SmallBall,
    WeakenedSmallBall,
    GlmCentral,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConditionReport {
    pub condition: ConditionKind,
    pub holds: bool,
    pub constants: BTreeMap<String, f64>,
    pub violator: Option<usize>,
    /// Worst slack; negative beyond `-tol` means the condition fails.
    pub margin: f64,
    pub notes: Vec<String>,
}

impl ConditionReport {
    pub(crate) fn new(condition: ConditionKind, margin: f64, violator: Option<usize>, tol: f64) -> Self {
        let holds = margin >= -tol;
        ConditionReport {
            condition,
            holds,
            constants: BTreeMap::new(),
            violator: if holds { None } else { violator },
            margin,
            notes: Vec::new(),
        }
    }

    pub(crate) fn with(mut self, key: &str, value: f64) -> Self {
        self.constants.insert(key.to_string(), value);
        self
    }

    pub(crate) fn note(mut self, s: impl Into<String>) -> Self {
        self.notes.push(s.into());
        self
    }
}

/// Tracks the smallest margin and who attains it.
struct Worst {
    margin: f64,
    who: Option<usize>,
}

impl Worst {
    fn new() -> Self {
        Worst {
            margin: INF,
            who: None,
        }
    }

    fn push(&mut self, margin: f64, who: usize) {
        if margin < self.margin || self.who.is_none() {
            self.margin = margin;
            self.who = Some(who);
        }
    }
}

/// `v : [0, ∞) → [0, ∞)`, non-decreasing and bounded.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VFunction {
    Constant(f64),
    /// `C·ε^{exponent} ∧ v_max`, with `exponent = 1 − β`.
    Power { coeff: f64, exponent: f64, v_max: f64 },
    /// Piecewise-linear through `(0, 0)` and the given `(ε, η)` pairs, flat beyond.
    Tabulated(Vec<(f64, f64)>),
}

impl VFunction {
    pub fn validate(&self) -> Result<()> {
        match self {
            VFunction::Constant(v) if !(*v > 0.0) || !v.is_finite() => invalid("v must be positive and finite"),
            VFunction::Power { coeff, exponent, v_max } => {
                if !(*coeff > 0.0) || !(0.0..=1.0).contains(exponent) || !(*v_max > 0.0) || !v_max.is_finite() {
                    return invalid("power v needs C > 0, exponent in [0, 1], finite v_max > 0");
                }
                Ok(())
            }
            VFunction::Tabulated(t) => {
                if t.is_empty() {
                    return invalid("tabulated v is empty");
                }
                let mono = t.windows(2).all(|w| w[0].0 < w[1].0 && w[0].1 <= w[1].1);
                if !mono || t[0].0 < 0.0 || t.iter().any(|&(_, v)| !(v > 0.0) || !v.is_finite()) {
                    return invalid("tabulated v must be increasing in ε, non-decreasing and positive");
                }
                Ok(())
            }
            _ => Ok(()),
        }
    }

    pub fn eval(&self, eps: f64) -> f64 {
        match self {
            VFunction::Constant(v) => *v,
            VFunction::Power { coeff, exponent, v_max } => {
                if *exponent == 0.0 {
                    coeff.min(*v_max)
                } else {
                    (coeff * eps.powf(*exponent)).min(*v_max)
                }
            }
            VFunction::Tabulated(t) => {
                let (mut x0, mut y0) = (0.0, 0.0);
                for &(x, y) in t {
                    if eps <= x {
                        if x == x0 {
                            return y;
                        }
                        return y0 + (y - y0) * (eps - x0) / (x - x0);
                    }
                    x0 = x;
                    y0 = y;
                }
                y0
            }
        }
    }
}

/// Threshold function of the `(τ, c)`-witness condition; values are clamped at 1.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TauFunction {
    Constant(f64),
    /// `u·(1/x)^{exponent}`.
    Power { u: f64, exponent: f64 },
    /// `1 ∨ κ⁻¹ log(2M_κ/(κx))`.
    LogShape { kappa: f64, m_kappa: f64 },
    /// `u·(1 ∨ x)`.
    LinearMax { u: f64 },
    /// Piecewise-linear in `x`, flat outside the table.
    Tabulated(Vec<(f64, f64)>),
}

impl TauFunction {
    /// `(τ(x), clamped)`; for `x ≤ 0` decreasing shapes return `+∞`.
    pub fn eval(&self, x: f64) -> (f64, bool) {
        let raw = match self {
            TauFunction::Constant(u) => *u,
            TauFunction::Power { u, exponent } => {
                if x <= 0.0 {
                    INF
                } else {
                    u * (1.0 / x).powf(*exponent)
                }
            }
            TauFunction::LogShape { kappa, m_kappa } => {
                if x <= 0.0 {
                    INF
                } else {
                    (2.0 * m_kappa / (kappa * x)).ln() / kappa
                }
            }
            TauFunction::LinearMax { u } => u * x.max(1.0),
            TauFunction::Tabulated(t) => {
                if t.is_empty() {
                    1.0
                } else if x <= t[0].0 {
                    t[0].1
                } else {
                    let mut out = t[t.len() - 1].1;
                    for w in t.windows(2) {
                        if x <= w[1].0 {
                            out = w[0].1 + (w[1].1 - w[0].1) * (x - w[0].0) / (w[1].0 - w[0].0);
                            break;
                        }
                    }
                    out
                }
            }
        };
        let clamp_is_part_of_shape = matches!(self, TauFunction::LogShape { .. });
        if raw < 1.0 {
            (1.0, !clamp_is_part_of_shape)
        } else {
            (raw, false)
        }
    }
}

fn check_eta(eta: f64) -> Result<()> {
    if !(eta > 0.0) {
        return invalid(format!("rate must be positive, got {eta}"));
    }
    Ok(())
}

/// `max_f E[e^{−η L_f}]` against the comparator `comp`, and its argmax.
fn max_central_moment(problem: &FiniteProblem, comp: usize, eta: f64) -> (f64, usize) {
    let p = problem.probs();
    let base = problem.loss_row(comp);
    let mut best = (f64::NEG_INFINITY, comp);
    for f in 0..problem.num_predictors() {
        let x: Vec<f64> = problem
            .loss_row(f)
            .iter()
            .zip(base)
            .zip(p)
            .map(|((&l, &b), &pz)| {
                if pz == 0.0 {
                    0.0
                } else if l == INF {
                    f64::NEG_INFINITY
                } else {
                    -eta * (l - b)
                }
            })
            .collect();
        let lm = log_mean_exp(p, &x);
        if lm > best.0 {
            best = (lm, f);
        }
    }
    (best.0.exp(), best.1)
}

/// `E[e^{−η̄ L_f}] ≤ 1` for every `f`.
pub fn check_strong_central(problem: &FiniteProblem, eta_bar: f64) -> Result<ConditionReport> {
    check_strong_central_tol(problem, eta_bar, COND_TOL)
}

pub fn check_strong_central_tol(problem: &FiniteProblem, eta_bar: f64, tol: f64) -> Result<ConditionReport> {
    check_eta(eta_bar)?;
    let (m, f) = max_central_moment(problem, problem.comparator(), eta_bar);
    Ok(ConditionReport::new(ConditionKind::StrongCentral, 1.0 - m, Some(f), tol)
        .with("eta_bar", eta_bar)
        .with("max_moment", m))
}

/// Largest η for which the strong central condition holds, by bisection to
/// relative tolerance `rel_tol`; returns `cap` when it holds at `cap` and 0
/// when it holds at no positive rate.
pub fn max_central_eta(problem: &FiniteProblem, rel_tol: f64, cap: f64) -> f64 {
    let fs = problem.comparator();
    max_rate(cap, rel_tol, |eta: f64| 1.0 - max_central_moment(problem, fs, eta).0 >= -COND_TOL)
}

/// Largest rate in `(0, cap]` accepted by a monotone predicate: doubling
/// from 1, then bisection.
pub(crate) fn max_rate(cap: f64, rel_tol: f64, ok: impl Fn(f64) -> bool) -> f64 {
    let mut hi = 1.0f64.min(cap);
    if ok(hi) {
        loop {
            if hi >= cap {
                return cap;
            }
            let next = (hi * 2.0).min(cap);
            if !ok(next) {
                return bisect_rate(hi, next, rel_tol, ok);
            }
            hi = next;
        }
    }
    bisect_rate(0.0, hi, rel_tol, ok)
}

pub(crate) fn bisect_rate(mut lo: f64, mut hi: f64, rel_tol: f64, ok: impl Fn(f64) -> bool) -> f64 {
    for _ in 0..2000 {
        if hi - lo <= rel_tol * hi {
            break;
        }
        let mid = 0.5 * (lo + hi);
        if ok(mid) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    lo
}

/// For each ε: `loss_{f*} − loss_f ⪯_{v(ε)} ε` for all `f`. With
/// `search_comparator` every predictor with finite risk is tried as `f*`.
pub fn check_v_central(
    problem: &FiniteProblem,
    v: &VFunction,
    eps_grid: &[f64],
    search_comparator: bool,
) -> Result<ConditionReport> {
    v.validate()?;
    if eps_grid.is_empty() || eps_grid.iter().any(|&e| !(e >= 0.0)) {
        return invalid("ε grid must be nonempty and nonnegative");
    }
    let fs = problem.comparator();
    let candidates: Vec<usize> = if search_comparator {
        (0..problem.num_predictors())
            .filter(|&f| problem.risk(f).map_or(false, |r| r.is_finite()))
            .collect()
    } else {
        vec![fs]
    };
    let mut worst = Worst::new();
    let mut worst_eps = 0.0;
    for (i, &eps) in eps_grid.iter().enumerate() {
        let eta = v.eval(eps);
        if eta == 0.0 {
            continue;
        }
        let mut best: Option<(f64, usize)> = None;
        for &c in &candidates {
            let (m, f) = max_central_moment(problem, c, eta);
            let m = m * (-eta * eps).exp();
            if best.map_or(true, |(b, _)| m < b) {
                best = Some((m, f));
            }
        }
        let (m, f) = best.expect("comparator candidates are nonempty");
        if 1.0 - m < worst.margin {
            worst_eps = eps_grid[i];
        }
        worst.push(1.0 - m, f);
    }
    let margin = if worst.who.is_none() { 0.0 } else { worst.margin };
    let mut rep = ConditionReport::new(ConditionKind::VCentral, margin, worst.who, COND_TOL)
        .with("worst_epsilon", worst_eps)
        .with("v_at_worst_epsilon", v.eval(worst_eps));
    if search_comparator {
        rep = rep.note("comparator searched over all finite-risk predictors");
    }
    Ok(rep)
}

/// For each ε: `E[loss_{f*} − g_{v(ε)}] ≤ ε` up to the optimizer gap.
pub fn check_v_ppc(
    problem: &FiniteProblem,
    v: &VFunction,
    eps_grid: &[f64],
    provider: &dyn GripProvider,
) -> Result<ConditionReport> {
    v.validate()?;
    if eps_grid.is_empty() || eps_grid.iter().any(|&e| !(e >= 0.0)) {
        return invalid("ε grid must be nonempty and nonnegative");
    }
    let rf = problem.risk(problem.comparator())?;
    let mut worst = Worst::new();
    let mut worst_eps = 0.0;
    let mut max_gap: f64 = 0.0;
    let mut cache: Vec<(f64, f64, f64)> = Vec::new();
    for (i, &eps) in eps_grid.iter().enumerate() {
        let eta = v.eval(eps);
        if eta == 0.0 {
            continue;
        }
        let (gap, opt) = match cache.iter().find(|(e, _, _)| *e == eta) {
            Some(&(_, g, o)) => (g, o),
            None => {
                let g = provider.grip(problem, eta)?;
                let entry = (eta, rf - g.objective, g.opt_gap);
                cache.push(entry);
                (entry.1, entry.2)
            }
        };
        max_gap = max_gap.max(opt);
        let m = eps + opt - gap;
        if m < worst.margin {
            worst_eps = eps;
        }
        worst.push(m, i);
    }
    let margin = if worst.who.is_none() { 0.0 } else { worst.margin };
    Ok(ConditionReport::new(ConditionKind::VPpc, margin, Some(problem.comparator()), COND_TOL)
        .with("worst_epsilon", worst_eps)
        .with("max_opt_gap", max_gap))
}

fn excess_with(problem: &FiniteProblem, f: usize, comparator: &Comparator) -> Result<Vec<f64>> {
    Ok(problem.excess_loss(f, comparator)?.values())
}

fn witness_margin(p: &[f64], l: &[f64], threshold: f64, c: f64) -> f64 {
    let mean = expect(p, l);
    if mean == 0.0 {
        return 0.0;
    }
    let trunc: Vec<f64> = l.iter().map(|&x| if x <= threshold { x } else { 0.0 }).collect();
    let t = expect(p, &trunc);
    if mean == INF {
        return f64::NEG_INFINITY;
    }
    t - c * mean
}

fn check_c(c: f64) -> Result<()> {
    if !(c > 0.0 && c <= 1.0) {
        return invalid("c must lie in (0, 1]");
    }
    Ok(())
}

/// `E[L_f·1{L_f ≤ u}] ≥ c·E[L_f]` for every `f`.
pub fn check_witness(problem: &FiniteProblem, u: f64, c: f64, comparator: &Comparator) -> Result<ConditionReport> {
    if !(u > 0.0) {
        return invalid("u must be positive");
    }
    check_c(c)?;
    let p = problem.probs();
    let mut worst = Worst::new();
    for f in 0..problem.num_predictors() {
        let l = excess_with(problem, f, comparator)?;
        worst.push(witness_margin(p, &l, u, c), f);
    }
    Ok(ConditionReport::new(ConditionKind::Witness, worst.margin, worst.who, COND_TOL)
        .with("u", u)
        .with("c", c)
        .with("c_reverse", 1.0 - c))
}

/// `E[L_f·1{L_f ≤ τ(E[L_f])}] ≥ c·E[L_f]` for every `f`.
pub fn check_tau_witness(
    problem: &FiniteProblem,
    tau: &TauFunction,
    c: f64,
    comparator: &Comparator,
) -> Result<ConditionReport> {
    check_c(c)?;
    let p = problem.probs();
    let mut worst = Worst::new();
    let mut clamped = false;
    for f in 0..problem.num_predictors() {
        let l = excess_with(problem, f, comparator)?;
        let (t, cl) = tau.eval(expect(p, &l));
        clamped |= cl;
        worst.push(witness_margin(p, &l, t, c), f);
    }
    let mut rep = ConditionReport::new(ConditionKind::TauWitness, worst.margin, worst.who, COND_TOL).with("c", c);
    if clamped {
        rep = rep.note("τ clamped at 1 for some predictor");
    }
    Ok(rep)
}

/// `E[L_f²] ≤ B·E[L_f]^β` for every `f ≠ f*` with `E[L_f] ≥ 0`.
pub fn check_bernstein(problem: &FiniteProblem, beta: f64, b: f64) -> Result<ConditionReport> {
    if !(beta > 0.0 && beta <= 1.0) || !(b > 0.0) {
        return invalid("need β ∈ (0, 1] and B > 0");
    }
    let p = problem.probs();
    let fs = problem.comparator();
    let mut worst = Worst::new();
    for f in (0..problem.num_predictors()).filter(|&f| f != fs) {
        let l = problem.excess_vector(f);
        let mean = expect(p, &l);
        if mean < 0.0 {
            continue;
        }
        let sq: Vec<f64> = l.iter().map(|x| x * x).collect();
        let second = expect(p, &sq);
        let rhs = if mean == 0.0 { 0.0 } else { b * mean.powf(beta) };
        let m = if second == INF { f64::NEG_INFINITY } else { rhs - second };
        worst.push(m, f);
    }
    let margin = if worst.who.is_none() { 0.0 } else { worst.margin };
    Ok(ConditionReport::new(ConditionKind::Bernstein, margin, worst.who, COND_TOL)
        .with("beta", beta)
        .with("B", b))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExpTailReport {
    pub kappa: f64,
    /// `sup_f E[e^{κ L_f}]`.
    pub m_kappa: f64,
    pub log_m_kappa: f64,
    pub holds: bool,
    pub tau: Option<TauFunction>,
    pub c: f64,
}

/// `M_κ = sup_f E[e^{κ L_f}]` and the `(τ, 1/2)`-witness it induces.
pub fn check_uniform_exp_tail(problem: &FiniteProblem, kappa: f64) -> Result<ExpTailReport> {
    check_eta(kappa)?;
    let p = problem.probs();
    let log_m = (0..problem.num_predictors())
        .map(|f| {
            let x: Vec<f64> = problem.excess_vector(f).iter().map(|&l| kappa * l).collect();
            log_mean_exp(p, &x)
        })
        .fold(f64::NEG_INFINITY, f64::max);
    let m = log_m.exp();
    let holds = m.is_finite();
    Ok(ExpTailReport {
        kappa,
        m_kappa: m,
        log_m_kappa: log_m,
        holds,
        tau: holds.then_some(TauFunction::LogShape { kappa, m_kappa: m }),
        c: 0.5,
    })
}

/// Log of the partial series `Σ_j p_j e^{κ x_j}` from log-terms.
pub fn log_partial_sum(log_terms: &[f64]) -> f64 {
    log_sum_exp(log_terms)
}

/// Divergence detector for a truncation sequence of `log M_κ(J)` values
/// (increasing `J`): divergent when the value overflows or the last three
/// values grow with non-decreasing increments.
pub fn detect_divergence(log_values: &[f64]) -> bool {
    if log_values.iter().any(|v| *v == INF) {
        return true;
    }
    let n = log_values.len();
    if n < 3 {
        return false;
    }
    let a = &log_values[n - 3..];
    let d1 = a[1] - a[0];
    let d2 = a[2] - a[1];
    d1 > 0.0 && d2 >= d1
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PairSet {
    All,
    VsComparator,
}

fn prediction_pairs(problem: &FiniteProblem, pairs: PairSet) -> Vec<(usize, usize)> {
    let nf = problem.num_predictors();
    match pairs {
        PairSet::All => (0..nf).flat_map(|f| (f + 1..nf).map(move |h| (f, h))).collect(),
        PairSet::VsComparator => {
            let fs = problem.comparator();
            (0..nf).filter(|&f| f != fs).map(|f| (f, fs)).collect()
        }
    }
}

/// `P(|f − h| ≥ κ‖f − h‖_{L₂(P)}) ≥ ε` for the requested pairs.
pub fn check_small_ball(problem: &FiniteProblem, kappa: f64, epsilon: f64, pairs: PairSet) -> Result<ConditionReport> {
    if !(kappa > 0.0) || !(epsilon > 0.0 && epsilon <= 1.0) {
        return invalid("need κ > 0 and ε ∈ (0, 1]");
    }
    let pred = problem
        .predictions()
        .ok_or_else(|| Error::Precondition("small-ball needs a prediction matrix".into()))?;
    let p = problem.probs();
    let mut worst = Worst::new();
    let mut skipped = 0;
    for (f, h) in prediction_pairs(problem, pairs) {
        let d: Vec<f64> = pred[f].iter().zip(&pred[h]).map(|(a, b)| (a - b).abs()).collect();
        let sq: Vec<f64> = d.iter().map(|x| x * x).collect();
        let norm = expect(p, &sq).sqrt();
        if norm == 0.0 {
            skipped += 1;
            continue;
        }
        let thr = kappa * norm * (1.0 - 1e-12);
        let mass: f64 = d.iter().zip(p).filter(|(&x, _)| x >= thr).map(|(_, &pz)| pz).sum();
        worst.push(mass - epsilon, f);
    }
    let margin = if worst.who.is_none() { 0.0 } else { worst.margin };
    let mut rep = ConditionReport::new(ConditionKind::SmallBall, margin, worst.who, COND_TOL)
        .with("kappa", kappa)
        .with("epsilon", epsilon);
    if skipped > 0 {
        rep = rep.note(format!("{skipped} pairs with f = h skipped"));
    }
    Ok(rep)
}

/// Small-ball constants `(C₁, C₂)` on `S = (f − h)²` to the weakened form
/// `(2/C₂, C₁C₂/2)`.
pub fn smallball_to_weakened(c1: f64, c2: f64) -> Result<(f64, f64)> {
    if !(c1 > 0.0) || !(c2 > 0.0 && c2 < 1.0) {
        return invalid("need C₁ > 0 and C₂ ∈ (0, 1)");
    }
    Ok((2.0 / c2, c1 * c2 / 2.0))
}

/// `E[1{S < C₁′E[S]}·S] ≥ C₂′E[S]` for `S = (f − h)²` over the requested pairs.
pub fn check_weakened_small_ball(
    problem: &FiniteProblem,
    c1p: f64,
    c2p: f64,
    pairs: PairSet,
) -> Result<ConditionReport> {
    let pred = problem
        .predictions()
        .ok_or_else(|| Error::Precondition("weakened small-ball needs a prediction matrix".into()))?;
    let p = problem.probs();
    let mut worst = Worst::new();
    for (f, h) in prediction_pairs(problem, pairs) {
        let s: Vec<f64> = pred[f].iter().zip(&pred[h]).map(|(a, b)| (a - b) * (a - b)).collect();
        let es = expect(p, &s);
        if es == 0.0 {
            continue;
        }
        let lower: Vec<f64> = s.iter().map(|&x| if x < c1p * es { x } else { 0.0 }).collect();
        worst.push((expect(p, &lower) - c2p * es) / es, f);
    }
    let margin = if worst.who.is_none() { 0.0 } else { worst.margin };
    Ok(ConditionReport::new(ConditionKind::WeakenedSmallBall, margin, worst.who, COND_TOL)
        .with("C1_prime", c1p)
        .with("C2_prime", c2p))
}

/// Witness constants implied by a `(1, B)`-Bernstein certificate: `u = 2B`, `c = 1/2`,
/// or more generally `c = 1 − B/u` for `u > B`.
pub fn bernstein_to_witness(b: f64, u: f64) -> Result<(f64, f64)> {
    if !(u > b) {
        return invalid("need u > B");
    }
    Ok((u, 1.0 - b / u))
}

/// τ-witness implied by a `(β, B)`-Bernstein certificate: `τ(x) = u(1/x)^{1−β}`,
/// `c = 1 − B/u`.
pub fn bernstein_to_tau_witness(beta: f64, b: f64, u: f64) -> Result<(TauFunction, f64)> {
    if !(u > b) {
        return invalid("need u > B");
    }
    Ok((TauFunction::Power { u, exponent: 1.0 - beta }, 1.0 - b / u))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn log_loss_problem() -> FiniteProblem {
        let q = vec![vec![0.2, 0.3, 0.5], vec![0.4, 0.4, 0.2], vec![1.0 / 3.0; 3]];
        let kind = crate::problem::LossKind::LogLoss {
            table: q.clone(),
            base_weights: vec![1.0; 3],
        };
        FiniteProblem::log_loss(q[0].clone(), &kind).unwrap()
    }

    #[test]
    fn well_specified_log_loss_is_central_at_one() {
        let p = log_loss_problem();
        let r = check_strong_central(&p, 1.0).unwrap();
        assert!(r.holds);
        assert!((r.constants["max_moment"] - 1.0).abs() < 1e-12);
        assert!(max_central_eta(&p, 1e-6, 1e6) >= 1.0);
    }

    #[test]
    fn singleton_is_central_everywhere() {
        let p = FiniteProblem::new(vec![0.5, 0.5], vec![vec![1.0, 3.0]]).unwrap();
        assert_eq!(max_central_eta(&p, 1e-6, 1e6), 1e6);
    }

    #[test]
    fn bounded_witness_with_sup() {
        let p = FiniteProblem::new(vec![0.3, 0.7], vec![vec![0.0, 0.0], vec![1.0, -0.2], vec![0.5, 0.5]]).unwrap();
        let fs = Comparator::Static(p.comparator());
        let u = 1.0;
        assert!(check_witness(&p, u, 1.0, &fs).unwrap().holds);
        let r = check_tau_witness(&p, &TauFunction::Constant(u), 1.0, &fs).unwrap();
        assert!(r.holds);
    }

    #[test]
    fn weakened_plug_in() {
        assert_eq!(smallball_to_weakened(1.0, 0.5).unwrap(), (4.0, 0.25));
    }

    #[test]
    fn tabulated_v_interpolates() {
        let v = VFunction::Tabulated(vec![(0.5, 1.0), (1.0, 2.0)]);
        v.validate().unwrap();
        assert_eq!(v.eval(0.25), 0.5);
        assert_eq!(v.eval(0.75), 1.5);
        assert_eq!(v.eval(3.0), 2.0);
    }

    #[test]
    fn divergence_detector() {
        assert!(detect_divergence(&[1.0, 3.0, 7.0]));
        assert!(!detect_divergence(&[1.0, 1.5, 1.7]));
    }
}
