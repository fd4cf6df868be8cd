//! Exact product-space enumeration, seeded Monte Carlo, and the verifiers
//! that turn the ESI risk bounds into pass/fail experiments.

use std::collections::BTreeMap;

use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::conditions::{check_strong_central, check_tau_witness, check_v_central, check_witness, TauFunction, VFunction};
use crate::divergences::{cprime_constant, cu_constant, misspec_metric};
use crate::error::{invalid, Error, Result};
use crate::esi::annealed_expectation;
use crate::estimators::{
    cumulative_excess, cumulative_losses, information_complexity_from, two_part_objectives, EstimatorKind,
    WeightVector,
};
use crate::grip::mini_grip_map;
use crate::numeric::{expect, mass_times, pairwise_sum, INF};
use crate::problem::{Comparator, FiniteProblem};
use crate::rng::{cdf, sample_index, substream};

/// Default cap on enumerated product states.
pub const ENUM_CAP: usize = 1_000_000;
/// Default Monte-Carlo replicate count.
pub const MC_REPLICATES: usize = 100_000;
const BLOCK: u64 = 1 << 12;

/// `|Z|^n` as a float (may exceed `u64`).
pub fn product_space_size(k: usize, n: usize) -> f64 {
    (k as f64).powi(n as i32)
}

/// `m` expectations `E_{Z^n ∼ P^n}[g(Z^n)]` by full enumeration. States with
/// zero probability are skipped; the block partial sums are combined in
/// index order so the result does not depend on the thread count.
pub fn expect_over_product_space<G>(p: &[f64], n: usize, m: usize, g: G) -> Vec<f64>
where
    G: Fn(&[usize], &mut [f64]) + Sync,
{
    let k = p.len() as u64;
    let total = (k as u128).pow(n as u32) as u64;
    let blocks = total.div_ceil(BLOCK);
    let partial: Vec<Vec<f64>> = (0..blocks)
        .into_par_iter()
        .map(|b| {
            let start = b * BLOCK;
            let end = (start + BLOCK).min(total);
            let mut digits = vec![0usize; n];
            let mut x = start;
            for d in digits.iter_mut() {
                *d = (x % k) as usize;
                x /= k;
            }
            let mut acc = vec![0.0; m];
            let mut buf = vec![0.0; m];
            for _ in start..end {
                let prob: f64 = digits.iter().map(|&z| p[z]).product();
                if prob > 0.0 {
                    g(&digits, &mut buf);
                    for (a, &v) in acc.iter_mut().zip(&buf) {
                        *a += mass_times(prob, v);
                    }
                }
                for d in digits.iter_mut() {
                    *d += 1;
                    if *d < k as usize {
                        break;
                    }
                    *d = 0;
                }
            }
            acc
        })
        .collect();
    (0..m)
        .map(|j| pairwise_sum(&partial.iter().map(|v| v[j]).collect::<Vec<_>>()))
        .collect()
}

pub fn sum_over_product_space<G>(p: &[f64], n: usize, g: G) -> f64
where
    G: Fn(&[usize]) -> f64 + Sync,
{
    expect_over_product_space(p, n, 1, |z, out| out[0] = g(z))[0]
}

/// Mean, variance and standard error of replicate values.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct McStats {
    pub mean: f64,
    pub variance: f64,
    pub standard_error: f64,
    pub replicates: usize,
}

#[derive(Clone, Copy)]
struct Moments {
    n: f64,
    mean: f64,
    m2: f64,
}

fn merge(a: Moments, b: Moments) -> Moments {
    if a.n == 0.0 {
        return b;
    }
    if b.n == 0.0 {
        return a;
    }
    let n = a.n + b.n;
    let d = b.mean - a.mean;
    Moments {
        n,
        mean: a.mean + d * b.n / n,
        m2: a.m2 + b.m2 + d * d * a.n * b.n / n,
    }
}

fn pairwise_moments(xs: &[f64]) -> Moments {
    match xs.len() {
        0 => Moments { n: 0.0, mean: 0.0, m2: 0.0 },
        1 => Moments { n: 1.0, mean: xs[0], m2: 0.0 },
        len => {
            let (a, b) = xs.split_at(len / 2);
            merge(pairwise_moments(a), pairwise_moments(b))
        }
    }
}

/// Streaming-stable statistics, merged pairwise in index order.
pub fn mc_stats(values: &[f64]) -> McStats {
    let m = pairwise_moments(values);
    let variance = if m.n > 1.0 { m.m2 / (m.n - 1.0) } else { 0.0 };
    McStats {
        mean: m.mean,
        variance,
        standard_error: if m.n > 0.0 { (variance / m.n).sqrt() } else { 0.0 },
        replicates: values.len(),
    }
}

/// Runs `f(k, rng_k)` for replicates `k = 0..reps` on independent substreams
/// of `seed`; results come back in replicate order.
pub fn mc_map<T, F>(reps: usize, seed: u64, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(u64, &mut ChaCha8Rng) -> T + Sync,
{
    (0..reps as u64)
        .into_par_iter()
        .map(|k| {
            let mut rng = substream(seed, k);
            f(k, &mut rng)
        })
        .collect()
}

/// `n` i.i.d. draws from a cumulative distribution.
pub fn draw_sample(rng: &mut ChaCha8Rng, cdf: &[f64], n: usize) -> Vec<usize> {
    (0..n).map(|_| sample_index(rng, cdf)).collect()
}

/// Monte-Carlo estimate of `E[g(Z^n)]`.
pub fn mc_sample_statistic<G>(p: &[f64], n: usize, reps: usize, seed: u64, g: G) -> McStats
where
    G: Fn(&[usize]) -> f64 + Sync,
{
    let c = cdf(p);
    let values = mc_map(reps, seed, |_, rng| g(&draw_sample(rng, &c, n)));
    mc_stats(&values)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Exactness {
    Exact { cap: usize },
    MonteCarlo { replicates: usize, seed: u64 },
    /// Exact when `|Z|^n ≤ cap`, otherwise Monte Carlo.
    Auto { cap: usize, replicates: usize, seed: u64 },
}

impl Default for Exactness {
    fn default() -> Self {
        Exactness::Auto {
            cap: ENUM_CAP,
            replicates: MC_REPLICATES,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InequalityTag {
    Zhang,
    ZhangMiniGrip,
    Metric,
    FirstRiskBound,
    FirstRiskBoundTau,
    MainBoundedCentral,
    MainBoundedPpc,
    MainUnbounded,
}

/// What to run on every sample.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnumerationPlan {
    pub problem: FiniteProblem,
    pub n: usize,
    pub estimator: EstimatorKind,
    pub prior: WeightVector,
    pub eta: f64,
    pub target: InequalityTag,
    pub exactness: Exactness,
    pub tol: f64,
}

impl EnumerationPlan {
    pub fn new(problem: FiniteProblem, n: usize, estimator: EstimatorKind, eta: f64, target: InequalityTag) -> Self {
        let nf = problem.num_predictors();
        EnumerationPlan {
            problem,
            n,
            estimator,
            prior: WeightVector::uniform(nf),
            eta,
            target,
            exactness: Exactness::default(),
            tol: 1e-10,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return invalid("n must be at least 1");
        }
        if !(self.eta > 0.0) {
            return invalid("η must be positive");
        }
        if self.prior.len() != self.problem.num_predictors() {
            return invalid("prior length differs from predictor count");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Pass,
    Fail,
    Inconclusive,
    PreAsymptotic,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerifyOutcome {
    pub target: InequalityTag,
    pub moment_or_frequency: f64,
    pub threshold: f64,
    pub passed: bool,
    pub verdict: Verdict,
    pub standard_error: f64,
    pub replicates_or_states: u64,
    pub exact: bool,
    pub details: BTreeMap<String, f64>,
}

impl VerifyOutcome {
    fn from_estimate(target: InequalityTag, est: f64, threshold: f64, se: f64, count: u64, exact: bool) -> Self {
        let (passed, verdict) = if exact {
            let ok = est <= threshold;
            (ok, if ok { Verdict::Pass } else { Verdict::Fail })
        } else {
            let passed = est <= threshold + 3.0 * se;
            let verdict = if est < threshold - 3.0 * se || (se == 0.0 && est <= threshold) {
                Verdict::Pass
            } else if passed {
                Verdict::Inconclusive
            } else {
                Verdict::Fail
            };
            (passed, verdict)
        };
        VerifyOutcome {
            target,
            moment_or_frequency: est,
            threshold,
            passed,
            verdict,
            standard_error: if exact { 0.0 } else { se },
            replicates_or_states: count,
            exact,
            details: BTreeMap::new(),
        }
    }
}

/// Estimator output on one sample, as weights over `F`.
pub fn estimator_weights(
    problem: &FiniteProblem,
    kind: EstimatorKind,
    prior: &WeightVector,
    cum_loss: &[f64],
    eta: f64,
) -> Result<Vec<f64>> {
    let nf = problem.num_predictors();
    match kind {
        EstimatorKind::Bayes => {
            let lw: Vec<f64> = prior
                .as_slice()
                .iter()
                .zip(cum_loss)
                .map(|(&p, &s)| if p == 0.0 || s == INF { f64::NEG_INFINITY } else { p.ln() - eta * s })
                .collect();
            Ok(WeightVector::from_log_weights(&lw)?.as_slice().to_vec())
        }
        EstimatorKind::Twopart => {
            let obj: Vec<f64> = prior
                .as_slice()
                .iter()
                .zip(cum_loss)
                .map(|(&p, &s)| if p == 0.0 { INF } else { s - p.ln() / eta })
                .collect();
            Ok(point_mass(nf, argmin_first(&obj)))
        }
        EstimatorKind::Erm => Ok(point_mass(nf, argmin_first(cum_loss))),
    }
}

fn point_mass(nf: usize, i: usize) -> Vec<f64> {
    let mut w = vec![0.0; nf];
    w[i] = 1.0;
    w
}

fn argmin_first(v: &[f64]) -> usize {
    let mut best = 0;
    for (i, &x) in v.iter().enumerate() {
        if x < v[best] {
            best = i;
        }
    }
    best
}

/// Per-sample quantities shared by the ESI verifiers.
struct SampleEval<'a> {
    plan: &'a EnumerationPlan,
    comparator: Comparator,
}

struct SampleValues {
    weights: Vec<f64>,
    ic: f64,
}

impl<'a> SampleEval<'a> {
    fn new(plan: &'a EnumerationPlan) -> Result<Self> {
        let comparator = match plan.target {
            InequalityTag::ZhangMiniGrip => {
                Comparator::PerPredictor(mini_grip_map(&plan.problem, plan.eta, 1e-12)?)
            }
            _ => Comparator::Static(plan.problem.comparator()),
        };
        Ok(SampleEval { plan, comparator })
    }

    fn eval(&self, sample: &[usize]) -> SampleValues {
        let pr = &self.plan.problem;
        let cum_loss = cumulative_losses(pr, sample);
        let weights = estimator_weights(pr, self.plan.estimator, &self.plan.prior, &cum_loss, self.plan.eta)
            .expect("estimator defined on every sample");
        let cum = cumulative_excess(pr, sample, &self.comparator).expect("comparator finite on the support");
        let post = WeightVector::normalized(weights.clone()).expect("weights normalized");
        let ic = information_complexity_from(&self.plan.prior, &post, &cum, self.plan.eta, sample.len()).total;
        SampleValues { weights, ic }
    }
}

/// ESI moment `E[e^{ρ(lhs − rhs)}]` and the exceedance frequencies used by
/// the ESI-implication check.
fn run_esi<F>(plan: &EnumerationPlan, rate: f64, stat: F) -> Result<VerifyOutcome>
where
    F: Fn(&[usize]) -> (f64, f64) + Sync,
{
    const DELTAS: [f64; 3] = [0.5, 0.1, 0.02];
    let per_state = |z: &[usize], out: &mut [f64]| {
        let (lhs, rhs) = stat(z);
        let d = if lhs == INF && rhs == INF { 0.0 } else { lhs - rhs };
        out[0] = if d == f64::NEG_INFINITY { 0.0 } else { (rate * d).exp() };
        out[1] = lhs;
        out[2] = rhs;
        for (j, &delta) in DELTAS.iter().enumerate() {
            out[3 + j] = if rate * d > (1.0 / delta).ln() { 1.0 } else { 0.0 };
        }
    };
    let p = plan.problem.probs();
    let k = plan.problem.num_outcomes();
    let size = product_space_size(k, plan.n);
    let (exact, cap, reps, seed) = match plan.exactness {
        Exactness::Exact { cap } => {
            if size > cap as f64 {
                return Err(Error::CapExceeded { states: size, cap });
            }
            (true, cap, 0, 0)
        }
        Exactness::MonteCarlo { replicates, seed } => (false, 0, replicates, seed),
        Exactness::Auto { cap, replicates, seed } => (size <= cap as f64, cap, replicates, seed),
    };
    let _ = cap;
    let (vals, se, count) = if exact {
        (expect_over_product_space(p, plan.n, 6, per_state), 0.0, size as u64)
    } else {
        let c = cdf(p);
        let rows: Vec<[f64; 6]> = mc_map(reps, seed, |_, rng| {
            let z = draw_sample(rng, &c, plan.n);
            let mut out = [0.0; 6];
            per_state(&z, &mut out);
            out
        });
        let cols: Vec<McStats> = (0..6)
            .map(|j| mc_stats(&rows.iter().map(|r| r[j]).collect::<Vec<_>>()))
            .collect();
        (cols.iter().map(|s| s.mean).collect(), cols[0].standard_error, reps as u64)
    };
    let mut out = VerifyOutcome::from_estimate(plan.target, vals[0], 1.0 + plan.tol, se, count, exact);
    out.details.insert("rate".into(), rate);
    out.details.insert("mean_lhs".into(), vals[1]);
    out.details.insert("mean_rhs".into(), vals[2]);
    for (j, &delta) in DELTAS.iter().enumerate() {
        out.details.insert(format!("exceedance_at_delta_{delta}"), vals[3 + j]);
    }
    Ok(out)
}

fn annealed_excess(problem: &FiniteProblem, comparator: &Comparator, eta: f64) -> Result<Vec<f64>> {
    let p = problem.probs();
    (0..problem.num_predictors())
        .map(|f| {
            let l = problem.excess_loss(f, comparator)?.values();
            annealed_expectation(p, &l, eta)
        })
        .collect()
}

fn excess_risks(problem: &FiniteProblem) -> Vec<f64> {
    (0..problem.num_predictors())
        .map(|f| expect(problem.probs(), &problem.excess_vector(f)))
        .collect()
}

fn posterior_average(w: &[f64], v: &[f64]) -> f64 {
    w.iter().zip(v).map(|(&a, &b)| mass_times(a, b)).sum()
}

/// `E_{f∼Π_n}[E^ann(η)[L_f]] ⪯_{ηn} IC_{n,η}`; with `ZhangMiniGrip` the
/// excess losses are taken against each predictor's mini-GRIP.
pub fn verify_zhang(plan: &EnumerationPlan) -> Result<VerifyOutcome> {
    plan.validate()?;
    if !matches!(plan.target, InequalityTag::Zhang | InequalityTag::ZhangMiniGrip) {
        return invalid("plan target must be zhang or zhang_mini_grip");
    }
    let ev = SampleEval::new(plan)?;
    let ann = annealed_excess(&plan.problem, &ev.comparator, plan.eta)?;
    run_esi(plan, plan.eta * plan.n as f64, |z| {
        let s = ev.eval(z);
        (posterior_average(&s.weights, &ann), s.ic)
    })
}

/// `E_{f∼Π_n}[d²_η̄(f*, f)] ⪯_{ηn} C_η·IC` with `C_η = η/(η̄ − η)`. With
/// `rescaled` set, the form `⪯_{ηn/D} D·IC` with `D = max(1, C_η)` is
/// checked instead.
pub fn verify_metric_theorem(plan: &EnumerationPlan, eta_bar: f64, rescaled: bool) -> Result<VerifyOutcome> {
    plan.validate()?;
    if !(plan.eta < eta_bar) {
        return invalid("need η < η̄");
    }
    if !check_strong_central(&plan.problem, eta_bar)?.holds {
        return Err(Error::Precondition("strong central condition not certified".into()));
    }
    let c_eta = plan.eta / (eta_bar - plan.eta);
    let fs = plan.problem.comparator();
    let d2: Vec<f64> = (0..plan.problem.num_predictors())
        .map(|f| misspec_metric(&plan.problem, fs, f, eta_bar))
        .collect::<Result<_>>()?;
    let ev = SampleEval::new(plan)?;
    let (s, mult) = if rescaled {
        (c_eta.max(1.0), c_eta.max(1.0))
    } else {
        (1.0, c_eta)
    };
    let mut out = run_esi(plan, plan.eta * plan.n as f64 / s, |z| {
        let v = ev.eval(z);
        (posterior_average(&v.weights, &d2), mult * v.ic)
    })?;
    out.details.insert("c_eta".into(), c_eta);
    Ok(out)
}

/// `E_Π[E L_f] ⪯_{ηn/c_u} c_u·IC`, or with `tau_lambda = Some((τ, λ))` the
/// form `⪯_{ηn/c_{τ(λ)}} λ + c_{τ(λ)}·IC`.
pub fn verify_first_risk_bound(
    plan: &EnumerationPlan,
    eta_bar: f64,
    u: f64,
    c: f64,
    tau_lambda: Option<(&TauFunction, f64)>,
) -> Result<VerifyOutcome> {
    plan.validate()?;
    if !check_strong_central(&plan.problem, eta_bar)?.holds {
        return Err(Error::Precondition("strong central condition not certified".into()));
    }
    let fs = Comparator::Static(plan.problem.comparator());
    let (cu, lambda) = match tau_lambda {
        None => {
            if !check_witness(&plan.problem, u, c, &fs)?.holds {
                return Err(Error::Precondition("witness condition not certified".into()));
            }
            (cu_constant(plan.eta, eta_bar, u, c)?, 0.0)
        }
        Some((tau, lambda)) => {
            if !check_tau_witness(&plan.problem, tau, c, &fs)?.holds {
                return Err(Error::Precondition("τ-witness condition not certified".into()));
            }
            if !(lambda > 0.0) {
                return invalid("λ must be positive");
            }
            (cu_constant(plan.eta, eta_bar, tau.eval(lambda).0, c)?, lambda)
        }
    };
    let risks = excess_risks(&plan.problem);
    let ev = SampleEval::new(plan)?;
    let mut out = run_esi(plan, plan.eta * plan.n as f64 / cu, |z| {
        let v = ev.eval(z);
        (posterior_average(&v.weights, &risks), lambda + cu * v.ic)
    })?;
    out.details.insert("c_u".into(), cu);
    out.details.insert("lambda".into(), lambda);
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MainBranch {
    /// ESI at rate `ηn/(2c′)`.
    VCentral,
    /// ESI at rate `ηn/c′`, valid when the strong central condition holds with `ε = 0`.
    StrongCentral,
    /// In expectation only.
    VPpc,
}

/// Bounded-excess-risk bound `E_Π[E L_f] ⪯ c′_{2u}(IC + ε)` at `η < v(ε)/2`.
#[allow(clippy::too_many_arguments)]
pub fn verify_main_bounded(
    plan: &EnumerationPlan,
    v: &VFunction,
    eps: f64,
    u: f64,
    c: f64,
    branch: MainBranch,
    provider: &dyn crate::grip::GripProvider,
) -> Result<VerifyOutcome> {
    plan.validate()?;
    let v_eps = v.eval(eps);
    if !(plan.eta < v_eps / 2.0) {
        return invalid("need η < v(ε)/2");
    }
    let fs = Comparator::Static(plan.problem.comparator());
    if !check_witness(&plan.problem, u, c, &fs)?.holds {
        return Err(Error::Precondition("witness condition not certified".into()));
    }
    match branch {
        MainBranch::VCentral => {
            if !check_v_central(&plan.problem, v, &[eps], false)?.holds {
                return Err(Error::Precondition("v-central not certified at ε".into()));
            }
        }
        MainBranch::StrongCentral => {
            if eps != 0.0 || !check_strong_central(&plan.problem, v_eps)?.holds {
                return Err(Error::Precondition("strong central not certified at v(0)".into()));
            }
        }
        MainBranch::VPpc => {
            if !crate::conditions::check_v_ppc(&plan.problem, v, &[eps], provider)?.holds {
                return Err(Error::Precondition("v-PPC not certified at ε".into()));
            }
        }
    }
    let cp = cprime_constant(plan.eta, v_eps, u, c)?;
    let risks = excess_risks(&plan.problem);
    let ev = SampleEval::new(plan)?;
    let stat = |z: &[usize]| {
        let s = ev.eval(z);
        (posterior_average(&s.weights, &risks), cp * (s.ic + eps))
    };
    let nf = plan.n as f64;
    let mut out = match branch {
        MainBranch::VCentral => run_esi(plan, plan.eta * nf / (2.0 * cp), stat)?,
        MainBranch::StrongCentral => run_esi(plan, plan.eta * nf / cp, stat)?,
        MainBranch::VPpc => {
            let moment_plan = run_esi(plan, plan.eta * nf / (2.0 * cp), stat)?;
            let lhs = moment_plan.details["mean_lhs"];
            let rhs = moment_plan.details["mean_rhs"];
            let mut o = VerifyOutcome::from_estimate(
                plan.target,
                lhs,
                rhs + plan.tol,
                0.0,
                moment_plan.replicates_or_states,
                true,
            );
            if !moment_plan.exact {
                o.exact = false;
                o.standard_error = moment_plan.standard_error;
            }
            o.details = moment_plan.details;
            o
        }
    };
    out.details.insert("c_prime".into(), cp);
    out.details.insert("v_eps".into(), v_eps);
    Ok(out)
}

/// Plan for the high-probability bound of a deterministic estimator.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UnboundedPlan {
    pub problem: FiniteProblem,
    pub prior: WeightVector,
    pub estimator: EstimatorKind,
    pub v: VFunction,
    pub n: usize,
    pub eta_n: f64,
    pub eps_n: f64,
    pub u: f64,
    pub c: f64,
    pub deltas: Vec<f64>,
    pub replicates: usize,
    pub seed: u64,
}

/// Violation frequency of `E[L_f̂] ≤ (c′₂/δ)·(E[IC] + ε_n)` over Monte-Carlo
/// replicates, one outcome per δ. Returns pre-asymptotic outcomes when the
/// bound is not below 1.
pub fn verify_main_unbounded(plan: &UnboundedPlan) -> Result<Vec<VerifyOutcome>> {
    if plan.estimator == EstimatorKind::Bayes {
        return invalid("the high-probability branch needs a deterministic estimator");
    }
    if !(plan.u >= 1.0) {
        return invalid("need u ≥ 1");
    }
    let fs = Comparator::Static(plan.problem.comparator());
    let tau = TauFunction::LinearMax { u: plan.u };
    if !check_tau_witness(&plan.problem, &tau, plan.c, &fs)?.holds {
        return Err(Error::Precondition("τ-witness with τ(x) = u(1 ∨ x) not certified".into()));
    }
    let v_eps = plan.v.eval(plan.eps_n);
    if !(plan.eta_n > 0.0 && plan.eta_n < v_eps / 2.0) {
        return invalid("need 0 < η_n < v(ε_n)/2");
    }
    if !check_v_central(&plan.problem, &plan.v, &[plan.eps_n], false)?.holds {
        return Err(Error::Precondition("v-central not certified at ε_n".into()));
    }
    let c2 = (2.0 * plan.eta_n + 1.0) / (plan.c * (1.0 - 2.0 * plan.eta_n / v_eps));
    let risks = excess_risks(&plan.problem);
    let c = cdf(plan.problem.probs());
    let rows: Vec<(f64, f64)> = mc_map(plan.replicates, plan.seed, |_, rng| {
        let z = draw_sample(rng, &c, plan.n);
        let cum_loss = cumulative_losses(&plan.problem, &z);
        let w = estimator_weights(&plan.problem, plan.estimator, &plan.prior, &cum_loss, plan.eta_n)
            .expect("estimator defined");
        let f = w.iter().position(|&x| x == 1.0).expect("point mass");
        let cum = cumulative_excess(&plan.problem, &z, &fs).expect("finite comparator");
        let ic = cum[f] / plan.n as f64 - plan.prior.get(f).ln() / (plan.eta_n * plan.n as f64);
        (risks[f], ic)
    });
    let ic_stats = mc_stats(&rows.iter().map(|r| r.1).collect::<Vec<_>>());
    let bound = ic_stats.mean + plan.eps_n;
    plan.deltas
        .iter()
        .map(|&delta| {
            let threshold = c2 / delta * bound;
            let ind: Vec<f64> = rows.iter().map(|r| if r.0 > threshold { 1.0 } else { 0.0 }).collect();
            let st = mc_stats(&ind);
            let mut o = VerifyOutcome::from_estimate(
                InequalityTag::MainUnbounded,
                st.mean,
                delta,
                st.standard_error,
                plan.replicates as u64,
                false,
            );
            if !(bound < 1.0) {
                o.verdict = Verdict::PreAsymptotic;
                o.passed = false;
            }
            o.details.insert("delta".into(), delta);
            o.details.insert("bound".into(), bound);
            o.details.insert("c_prime_2".into(), c2);
            o.details.insert("risk_threshold".into(), threshold);
            o.details.insert("expected_ic".into(), ic_stats.mean);
            o.details.insert("expected_ic_se".into(), ic_stats.standard_error);
            Ok(o)
        })
        .collect()
}

/// Mean posterior mass of `{f : E[L_f] > threshold}` for generalized Bayes.
pub fn posterior_bad_mass(
    problem: &FiniteProblem,
    prior: &WeightVector,
    n: usize,
    eta: f64,
    threshold: f64,
    reps: usize,
    seed: u64,
) -> McStats {
    let risks = excess_risks(problem);
    let c = cdf(problem.probs());
    let vals = mc_map(reps, seed, |_, rng| {
        let z = draw_sample(rng, &c, n);
        let w = estimator_weights(problem, EstimatorKind::Bayes, prior, &cumulative_losses(problem, &z), eta)
            .expect("posterior defined");
        w.iter().zip(&risks).filter(|(_, &r)| r > threshold).map(|(&x, _)| x).sum::<f64>()
    });
    mc_stats(&vals)
}

/// Monte-Carlo mean of `E_{f∼Π_n}[E L_f]` for a given estimator. Samples are
/// summarized by outcome counts, so large `n` stays cheap.
pub fn expected_posterior_risk(
    problem: &FiniteProblem,
    prior: &WeightVector,
    kind: EstimatorKind,
    n: usize,
    eta: f64,
    reps: usize,
    seed: u64,
) -> McStats {
    let risks = excess_risks(problem);
    let c = cdf(problem.probs());
    let k = problem.num_outcomes();
    let vals = mc_map(reps, seed, |_, rng| {
        let mut counts = vec![0.0; k];
        for _ in 0..n {
            counts[sample_index(rng, &c)] += 1.0;
        }
        let cum: Vec<f64> = problem
            .loss_matrix()
            .iter()
            .map(|row| row.iter().zip(&counts).filter(|(_, &n)| n > 0.0).map(|(&l, &n)| l * n).sum())
            .collect();
        let w = estimator_weights(problem, kind, prior, &cum, eta).expect("estimator defined");
        posterior_average(&w, &risks)
    });
    mc_stats(&vals)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OlsFit {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
    pub points: usize,
}

/// Ordinary least squares `y ≈ a + b x`.
pub fn ols(xs: &[f64], ys: &[f64]) -> Result<OlsFit> {
    if xs.len() != ys.len() || xs.len() < 2 {
        return invalid("need at least two paired points");
    }
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let syy: f64 = ys.iter().map(|y| (y - my).powi(2)).sum();
    if sxx == 0.0 {
        return invalid("x values are constant");
    }
    let slope = sxy / sxx;
    Ok(OlsFit {
        slope,
        intercept: my - slope * mx,
        r_squared: if syy == 0.0 { 1.0 } else { sxy * sxy / (sxx * syy) },
        points: xs.len(),
    })
}

/// Fitted rate exponent `r` in `value ≈ C n^{−r}` from at least five sizes.
pub fn rate_fit(ns: &[usize], values: &[f64]) -> Result<OlsFit> {
    if ns.len() < 5 {
        return invalid("rate fits need at least five sample sizes");
    }
    if values.iter().any(|&v| !(v > 0.0)) {
        return invalid("rate fits need positive values");
    }
    let xs: Vec<f64> = ns.iter().map(|&n| (n as f64).ln()).collect();
    let ys: Vec<f64> = values.iter().map(|v| v.ln()).collect();
    let mut fit = ols(&xs, &ys)?;
    fit.slope = -fit.slope;
    Ok(fit)
}

/// Two-part objective minimum, exposed for the verifier tests.
pub fn two_part_minimum(problem: &FiniteProblem, prior: &WeightVector, sample: &[usize], eta: f64) -> Result<f64> {
    Ok(two_part_objectives(problem, prior, sample, eta)?
        .into_iter()
        .fold(INF, f64::min))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn enumeration_sums_to_one() {
        let p = [0.2, 0.5, 0.3];
        let s = sum_over_product_space(&p, 4, |_| 1.0);
        assert!((s - 1.0).abs() < 1e-14);
        let mean = sum_over_product_space(&p, 3, |z| z.iter().filter(|&&x| x == 1).count() as f64);
        assert!((mean - 1.5).abs() < 1e-14);
    }

    #[test]
    fn mc_is_reproducible_and_accurate() {
        let p = [0.7, 0.3];
        let a = mc_sample_statistic(&p, 1, 100_000, 9, |z| z[0] as f64);
        let b = mc_sample_statistic(&p, 1, 100_000, 9, |z| z[0] as f64);
        assert_eq!(a, b);
        assert!((a.mean - 0.3).abs() < 4.0 * a.standard_error);
    }

    #[test]
    fn point_mass_prior_on_comparator() {
        let pr = FiniteProblem::new(vec![0.5, 0.5], vec![vec![0.0, 1.0], vec![1.0, 0.5]]).unwrap();
        let fs = pr.comparator();
        let mut plan = EnumerationPlan::new(pr, 3, EstimatorKind::Bayes, 1.0, InequalityTag::Zhang);
        plan.prior = WeightVector::point_mass(2, fs);
        let out = verify_zhang(&plan).unwrap();
        assert!((out.moment_or_frequency - 1.0).abs() < 1e-14);
    }

    #[test]
    fn ols_recovers_line() {
        let fit = ols(&[0.0, 1.0, 2.0], &[1.0, 3.0, 5.0]).unwrap();
        assert!((fit.slope - 2.0).abs() < 1e-14 && (fit.intercept - 1.0).abs() < 1e-14);
    }
}
