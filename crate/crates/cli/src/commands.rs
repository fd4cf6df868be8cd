//! Single-shot commands: check, grip, divergence, verify, estimate, sweep,
//! and the operation runner for experiment configs.

use std::path::Path;

use fastrates_core::conditions::{
    check_bernstein, check_small_ball, check_strong_central, check_tau_witness, check_uniform_exp_tail,
    check_v_central, check_v_ppc, check_weakened_small_ball, check_witness, max_central_eta, PairSet,
};
use fastrates_core::divergences::{hellinger_squared, kl_divergence, misspec_metric, renyi_divergence};
use fastrates_core::estimators::{
    cumulative_excess, cumulative_losses, ic_minimizer_check, information_complexity, information_complexity_from,
    run_estimator, EstimatorKind, IcCheckOptions, WeightVector,
};
use fastrates_core::grip::{compute_grip, compute_mini_grip, verify_grip_central, GripOptions, GripResult, GripSolver, MiniGripResult};
use fastrates_core::numeric::{expect, mass_times};
use fastrates_core::rng::{cdf, substream};
use fastrates_core::verify::{
    draw_sample, estimator_weights, mc_map, mc_stats, verify_first_risk_bound, verify_main_bounded,
    verify_main_unbounded, verify_metric_theorem, verify_zhang, EnumerationPlan, Exactness, InequalityTag, MainBranch,
    McStats, UnboundedPlan, Verdict, VerifyOutcome,
};
use fastrates_core::{Comparator, FiniteProblem};
use serde::Serialize;
use serde_json::{json, Value};

use crate::cache::{cache_key, memoized};
use crate::config::{from_value, need, CheckParams, EstimateConfig, ExperimentConfig, OpParams, OperationKind, VerifyPlanFile};
use crate::report::{Step, StepVerdict};
use crate::CliError;

pub const CONDITIONS: [&str; 9] = [
    "strong-central",
    "v-central",
    "v-ppc",
    "witness",
    "tau-witness",
    "bernstein",
    "exp-tail",
    "small-ball",
    "weakened-small-ball",
];

pub const INEQUALITIES: [&str; 6] = [
    "zhang",
    "zhang-mini-grip",
    "metric",
    "first-risk-bound",
    "main-bounded",
    "main-unbounded",
];

/// Condition report as JSON plus whether the condition holds.
pub fn run_check(problem: &FiniteProblem, condition: &str, p: &CheckParams) -> Result<(Value, bool), CliError> {
    let fs = Comparator::Static(problem.comparator());
    let pairs = p.pairs.unwrap_or(PairSet::All);
    let eps_grid = || p.eps_grid.clone().ok_or_else(|| CliError::Config("missing parameter `eps_grid`".into()));
    let v = || p.v.clone().ok_or_else(|| CliError::Config("missing parameter `v`".into()));
    let rep = match condition {
        "strong-central" => check_strong_central(problem, need(p.eta, "eta")?)?,
        "v-central" => check_v_central(problem, &v()?, &eps_grid()?, p.search_comparator)?,
        "v-ppc" => check_v_ppc(problem, &v()?, &eps_grid()?, &GripSolver::default())?,
        "witness" => check_witness(problem, need(p.u, "u")?, need(p.c, "c")?, &fs)?,
        "tau-witness" => {
            let tau = p.tau.clone().ok_or_else(|| CliError::Config("missing parameter `tau`".into()))?;
            check_tau_witness(problem, &tau, need(p.c, "c")?, &fs)?
        }
        "bernstein" => check_bernstein(problem, need(p.beta, "beta")?, need(p.b, "b")?)?,
        "exp-tail" => {
            let r = check_uniform_exp_tail(problem, need(p.kappa, "kappa")?)?;
            return Ok((to_value(&r), r.holds));
        }
        "small-ball" => check_small_ball(problem, need(p.kappa, "kappa")?, need(p.epsilon, "epsilon")?, pairs)?,
        "weakened-small-ball" => check_weakened_small_ball(problem, need(p.c1, "c1")?, need(p.c2, "c2")?, pairs)?,
        other => {
            return Err(CliError::Config(format!(
                "unknown condition `{other}` (expected one of {})",
                CONDITIONS.join(", ")
            )))
        }
    };
    Ok((to_value(&rep), rep.holds))
}

pub fn to_value<T: Serialize>(v: &T) -> Value {
    serde_json::to_value(v).expect("serializable")
}

#[derive(Debug, Clone, Serialize)]
#[serde(untagged)]
pub enum GripOutput {
    Grip(GripResult),
    Mini(MiniGripResult),
}

pub fn run_grip(problem: &FiniteProblem, eta: f64, mini: Option<usize>, tol: f64) -> Result<GripOutput, CliError> {
    let key = cache_key(problem, eta, tol, mini);
    Ok(match mini {
        None => GripOutput::Grip(memoized(&key, || {
            compute_grip(
                problem,
                eta,
                &GripOptions {
                    tol,
                    ..GripOptions::default()
                },
            )
        })?),
        Some(f) => GripOutput::Mini(memoized(&key, || compute_mini_grip(problem, f, eta, tol))?),
    })
}

/// `e^{−loss_f}` normalized over outcomes.
fn model_density(problem: &FiniteProblem, f: usize) -> Result<Vec<f64>, CliError> {
    if f >= problem.num_predictors() {
        return Err(CliError::Config(format!("predictor index {f} out of range")));
    }
    let w: Vec<f64> = problem.loss_row(f).iter().map(|&l| (-l).exp()).collect();
    let s: f64 = w.iter().sum();
    if !(s > 0.0) {
        return Err(CliError::Config(format!("predictor {f} has no density mass")));
    }
    Ok(w.into_iter().map(|x| x / s).collect())
}

/// Divergence between `P` (or the density of predictor `g`) and the density of predictor `f`.
pub fn run_divergence(
    problem: &FiniteProblem,
    kind: &str,
    f: usize,
    g: Option<usize>,
    alpha: Option<f64>,
    eta_bar: Option<f64>,
) -> Result<Value, CliError> {
    let first = match g {
        Some(g) => model_density(problem, g)?,
        None => problem.probs().to_vec(),
    };
    let value = match kind {
        "kl" => kl_divergence(&first, &model_density(problem, f)?)?,
        "renyi" => renyi_divergence(&first, &model_density(problem, f)?, need(alpha, "alpha")?)?,
        "hellinger" => hellinger_squared(&first, &model_density(problem, f)?)?,
        "misspec" => {
            let base = g.unwrap_or_else(|| problem.comparator());
            misspec_metric(problem, base, f, need(eta_bar, "eta-bar")?)?
        }
        other => return Err(CliError::Config(format!("unknown divergence `{other}`"))),
    };
    Ok(json!({ "kind": kind, "f": f, "g": g, "value": value }))
}

pub fn prior_from(problem: &FiniteProblem, prior: &Option<Vec<f64>>) -> Result<WeightVector, CliError> {
    let w = match prior {
        None => WeightVector::uniform(problem.num_predictors()),
        Some(v) => WeightVector::new(v.clone())?,
    };
    if w.len() != problem.num_predictors() {
        return Err(CliError::Config("prior length differs from the predictor count".into()));
    }
    Ok(w)
}

fn inequality_tag(name: &str) -> Result<InequalityTag, CliError> {
    Ok(match name {
        "zhang" => InequalityTag::Zhang,
        "zhang-mini-grip" => InequalityTag::ZhangMiniGrip,
        "metric" => InequalityTag::Metric,
        "first-risk-bound" => InequalityTag::FirstRiskBound,
        "main-bounded" => InequalityTag::MainBoundedCentral,
        "main-unbounded" => InequalityTag::MainUnbounded,
        other => {
            return Err(CliError::Config(format!(
                "unknown inequality `{other}` (expected one of {})",
                INEQUALITIES.join(", ")
            )))
        }
    })
}

pub fn run_verify(inequality: &str, plan: &VerifyPlanFile, base: &Path) -> Result<Vec<VerifyOutcome>, CliError> {
    let problem = plan.problem.load(base)?;
    let tag = inequality_tag(inequality)?;
    let prior = prior_from(&problem, &plan.prior)?;
    if tag == InequalityTag::MainUnbounded {
        let up = UnboundedPlan {
            problem,
            prior,
            estimator: plan.estimator,
            v: plan.v.clone().ok_or_else(|| CliError::Config("missing `v`".into()))?,
            n: plan.n,
            eta_n: plan.eta,
            eps_n: plan.eps.unwrap_or(0.0),
            u: need(plan.u, "u")?,
            c: need(plan.c, "c")?,
            deltas: plan.deltas.clone().unwrap_or_else(|| vec![0.25, 0.1]),
            replicates: plan.replicates.unwrap_or(2000),
            seed: plan.seed.unwrap_or(0),
        };
        return Ok(verify_main_unbounded(&up)?);
    }
    let mut ep = EnumerationPlan::new(problem, plan.n, plan.estimator, plan.eta, tag);
    ep.prior = prior;
    if let Some(x) = plan.exactness {
        ep.exactness = x;
    } else if let Some(seed) = plan.seed {
        if let Exactness::Auto { cap, replicates, .. } = ep.exactness {
            ep.exactness = Exactness::Auto { cap, replicates, seed };
        }
    }
    if let Some(t) = plan.tol {
        ep.tol = t;
    }
    let out = match tag {
        InequalityTag::Zhang | InequalityTag::ZhangMiniGrip => verify_zhang(&ep)?,
        InequalityTag::Metric => verify_metric_theorem(&ep, need(plan.eta_bar, "eta_bar")?, plan.rescaled)?,
        InequalityTag::FirstRiskBound => {
            let eta_bar = need(plan.eta_bar, "eta_bar")?;
            match (&plan.tau, plan.lambda) {
                (Some(tau), Some(l)) => {
                    ep.target = InequalityTag::FirstRiskBoundTau;
                    verify_first_risk_bound(&ep, eta_bar, 1.0, need(plan.c, "c")?, Some((tau, l)))?
                }
                _ => verify_first_risk_bound(&ep, eta_bar, need(plan.u, "u")?, need(plan.c, "c")?, None)?,
            }
        }
        _ => {
            let branch = plan.branch.unwrap_or(MainBranch::VCentral);
            if branch == MainBranch::VPpc {
                ep.target = InequalityTag::MainBoundedPpc;
            }
            let v = plan.v.clone().ok_or_else(|| CliError::Config("missing `v`".into()))?;
            verify_main_bounded(
                &ep,
                &v,
                plan.eps.unwrap_or(0.0),
                need(plan.u, "u")?,
                need(plan.c, "c")?,
                branch,
                &GripSolver::default(),
            )?
        }
    };
    Ok(vec![out])
}

pub fn outcome_verdict(o: &VerifyOutcome) -> StepVerdict {
    match o.verdict {
        Verdict::Pass => StepVerdict::Pass,
        Verdict::Fail => StepVerdict::Fail,
        Verdict::Inconclusive | Verdict::PreAsymptotic => StepVerdict::Inconclusive,
    }
}

pub fn run_estimate(cfg: &EstimateConfig, base: &Path) -> Result<Value, CliError> {
    let problem = cfg.problem.load(base)?;
    let prior = prior_from(&problem, &cfg.prior)?;
    if cfg.n == 0 {
        return Err(CliError::Config("n must be at least 1".into()));
    }
    let mut rng = substream(cfg.seed, 0);
    let sample = draw_sample(&mut rng, &cdf(problem.probs()), cfg.n);
    let out = run_estimator(cfg.estimator, &problem, &prior, &sample, cfg.eta)?;
    let post = out.weights(problem.num_predictors());
    let fs = Comparator::Static(problem.comparator());
    let ic = information_complexity(&problem, &prior, &post, &sample, cfg.eta, &fs)?;
    let risks: Vec<f64> = (0..problem.num_predictors())
        .map(|f| expect(problem.probs(), &problem.excess_vector(f)))
        .collect();
    let excess: f64 = post.as_slice().iter().zip(&risks).map(|(&w, &r)| mass_times(w, r)).sum();
    Ok(json!({
        "estimator": cfg.estimator,
        "eta": cfg.eta,
        "n": cfg.n,
        "seed": cfg.seed,
        "output": out,
        "information_complexity": ic,
        "posterior_excess_risk": excess,
    }))
}

pub const SWEEP_HEADER: [&str; 13] = [
    "param",
    "value",
    "eta",
    "n",
    "eps",
    "replicates",
    "expected_ic",
    "expected_ic_se",
    "expected_excess_risk",
    "expected_excess_risk_se",
    "central_holds",
    "v_central_holds",
    "error",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepParam {
    Eta,
    N,
    Epsilon,
}

impl SweepParam {
    pub fn name(self) -> &'static str {
        match self {
            SweepParam::Eta => "eta",
            SweepParam::N => "n",
            SweepParam::Epsilon => "epsilon",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub value: f64,
    pub eta: f64,
    pub n: usize,
    pub eps: Option<f64>,
    pub replicates: usize,
    pub expected_ic: f64,
    pub expected_ic_se: f64,
    pub expected_excess_risk: f64,
    pub expected_excess_risk_se: f64,
    pub central_holds: bool,
    pub v_central_holds: Option<bool>,
}

/// Monte Carlo means of the information complexity and of the posterior
/// excess risk over `reps` samples of size `n`.
pub fn expected_ic_and_risk(
    problem: &FiniteProblem,
    prior: &WeightVector,
    kind: EstimatorKind,
    eta: f64,
    n: usize,
    reps: usize,
    seed: u64,
) -> Result<(McStats, McStats), CliError> {
    let fs = Comparator::Static(problem.comparator());
    let risks: Vec<f64> = (0..problem.num_predictors())
        .map(|f| expect(problem.probs(), &problem.excess_vector(f)))
        .collect();
    let c = cdf(problem.probs());
    let rows: Vec<Result<(f64, f64), CliError>> = mc_map(reps, seed, |_, rng| {
        let z = draw_sample(rng, &c, n);
        let w = estimator_weights(problem, kind, prior, &cumulative_losses(problem, &z), eta)?;
        let post = WeightVector::new(w)?;
        let cum = cumulative_excess(problem, &z, &fs)?;
        let ic = information_complexity_from(prior, &post, &cum, eta, n).total;
        let risk = post.as_slice().iter().zip(&risks).map(|(&a, &b)| mass_times(a, b)).sum();
        Ok((ic, risk))
    });
    let rows: Vec<(f64, f64)> = rows.into_iter().collect::<Result<_, _>>()?;
    Ok((
        mc_stats(&rows.iter().map(|r| r.0).collect::<Vec<_>>()),
        mc_stats(&rows.iter().map(|r| r.1).collect::<Vec<_>>()),
    ))
}

fn sweep_row(problem: &FiniteProblem, prior: &WeightVector, cfg: &EstimateConfig, value: f64) -> Result<SweepRow, CliError> {
    if cfg.n == 0 || !(cfg.eta > 0.0) {
        return Err(CliError::Config("need n ≥ 1 and η > 0".into()));
    }
    let reps = cfg.replicates.unwrap_or(200);
    let (ic, risk) = expected_ic_and_risk(problem, prior, cfg.estimator, cfg.eta, cfg.n, reps, cfg.seed)?;
    let v_central_holds = match (&cfg.v, cfg.eps) {
        (Some(v), Some(e)) => Some(check_v_central(problem, v, &[e], false)?.holds),
        _ => None,
    };
    Ok(SweepRow {
        value,
        eta: cfg.eta,
        n: cfg.n,
        eps: cfg.eps,
        replicates: reps,
        expected_ic: ic.mean,
        expected_ic_se: ic.standard_error,
        expected_excess_risk: risk.mean,
        expected_excess_risk_se: risk.standard_error,
        central_holds: check_strong_central(problem, cfg.eta)?.holds,
        v_central_holds,
    })
}

/// One row per grid value; failures become rows with an error message.
pub fn run_sweep(cfg: &EstimateConfig, base: &Path, param: SweepParam, grid: &[f64]) -> Result<Vec<Result<SweepRow, String>>, CliError> {
    if grid.is_empty() {
        return Err(CliError::Config("sweep grid is empty".into()));
    }
    let problem = cfg.problem.load(base)?;
    let prior = prior_from(&problem, &cfg.prior)?;
    Ok(grid
        .iter()
        .map(|&x| {
            let mut c = cfg.clone();
            match param {
                SweepParam::Eta => c.eta = x,
                SweepParam::N => {
                    if !(x >= 1.0 && x.fract() == 0.0) {
                        return Err(format!("n = {x} is not a positive integer"));
                    }
                    c.n = x as usize;
                }
                SweepParam::Epsilon => c.eps = Some(x),
            }
            sweep_row(&problem, &prior, &c, x).map_err(|e| e.to_string())
        })
        .collect())
}

pub fn sweep_csv(param: SweepParam, rows: &[Result<SweepRow, String>]) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(SWEEP_HEADER).expect("in-memory write");
    let f = |x: f64| x.to_string();
    for r in rows {
        let rec: Vec<String> = match r {
            Ok(r) => vec![
                param.name().into(),
                f(r.value),
                f(r.eta),
                r.n.to_string(),
                r.eps.map(f).unwrap_or_default(),
                r.replicates.to_string(),
                f(r.expected_ic),
                f(r.expected_ic_se),
                f(r.expected_excess_risk),
                f(r.expected_excess_risk_se),
                r.central_holds.to_string(),
                r.v_central_holds.map(|b| b.to_string()).unwrap_or_default(),
                String::new(),
            ],
            Err(e) => {
                let mut v = vec![String::new(); SWEEP_HEADER.len()];
                v[0] = param.name().into();
                v[12] = e.clone();
                v
            }
        };
        w.write_record(&rec).expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("flush")).expect("utf8")
}

/// Runs the operations of a config whose scenario is a problem.
pub fn run_operations(problem: &FiniteProblem, cfg: &ExperimentConfig, seed: u64, base: &Path) -> Result<Vec<Step>, CliError> {
    let mut steps = Vec::new();
    for (i, op) in cfg.operations.iter().enumerate() {
        let label = |s: &str| format!("{i}:{s}");
        match op.op {
            OperationKind::Check => {
                let cond = op
                    .condition
                    .clone()
                    .ok_or_else(|| CliError::Config(format!("operation {i}: check needs `condition`")))?;
                let params: CheckParams = from_value(&op.params, "check parameters")?;
                let (v, holds) = run_check(problem, &cond, &params)?;
                steps.push(match op.expect {
                    Some(e) => Step::expect(label(&cond), e, holds, v),
                    None => Step::check(label(&cond), holds, v),
                });
            }
            OperationKind::Verify => {
                let ineq = op
                    .inequality
                    .clone()
                    .ok_or_else(|| CliError::Config(format!("operation {i}: verify needs `inequality`")))?;
                let mut params = if op.params.is_null() { json!({}) } else { op.params.clone() };
                let obj = params
                    .as_object_mut()
                    .ok_or_else(|| CliError::Config(format!("operation {i}: params must be an object")))?;
                obj.insert("problem".into(), to_value(problem));
                obj.entry("seed").or_insert(json!(seed));
                let plan: VerifyPlanFile = from_value(&params, "verify parameters")?;
                for o in run_verify(&ineq, &plan, base)? {
                    steps.push(Step::new(label(&ineq), outcome_verdict(&o), &o));
                }
            }
            kind => {
                let p: OpParams = from_value(&op.params, "operation parameters")?;
                match kind {
                    OperationKind::CentralEta => {
                        let eta_bar = max_central_eta(problem, 1e-9, p.cap.unwrap_or(64.0));
                        steps.push(Step::info(label("central_eta"), json!({ "eta_bar": eta_bar })));
                    }
                    OperationKind::Grip => {
                        let eta = need(p.eta, "eta")?;
                        match run_grip(problem, eta, p.mini, 1e-8)? {
                            GripOutput::Grip(g) => {
                                let c = verify_grip_central(problem, &g, 1e-6)?;
                                steps.push(Step::check(label("grip"), c.holds, json!({ "grip": g, "central": c })));
                            }
                            m => steps.push(Step::info(label("mini_grip"), m)),
                        }
                    }
                    OperationKind::IcCheck => {
                        let eta = need(p.eta, "eta")?;
                        let n = need(p.n, "n")?;
                        let prior = prior_from(problem, &p.prior)?;
                        let mut rng = substream(seed, i as u64);
                        let z = draw_sample(&mut rng, &cdf(problem.probs()), n);
                        let opts = IcCheckOptions {
                            seed,
                            ..IcCheckOptions::default()
                        };
                        let r = ic_minimizer_check(problem, &prior, &z, eta, &opts)?;
                        steps.push(Step::check(label("ic_check"), r.passed, r));
                    }
                    OperationKind::Estimate => {
                        let ec = EstimateConfig {
                            problem: crate::config::ProblemSource::Inline(problem.clone()),
                            prior: p.prior.clone(),
                            eta: need(p.eta, "eta")?,
                            n: need(p.n, "n")?,
                            estimator: p.estimator.unwrap_or(EstimatorKind::Bayes),
                            seed,
                            replicates: None,
                            v: None,
                            eps: None,
                        };
                        steps.push(Step::info(label("estimate"), run_estimate(&ec, base)?));
                    }
                    OperationKind::Check | OperationKind::Verify => unreachable!(),
                }
            }
        }
    }
    Ok(steps)
}
