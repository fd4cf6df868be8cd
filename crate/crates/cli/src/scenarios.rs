//! Bundled scenarios. Each returns the ordered steps of its report.

use fastrates_core::conditions::{
    check_bernstein, check_small_ball, check_strong_central, check_tau_witness, check_witness, PairSet, TauFunction,
    VFunction, COND_TOL,
};
use fastrates_core::divergences::{cu_constant, kl_vs_hellinger_bound};
use fastrates_core::estimators::{EstimatorKind, WeightVector};
use fastrates_core::expfam::{
    central_moment_expfam, check_expfam_central, expfam_central_eta, expfam_problem, local_eta_limit, ExpFamily,
    GridDistribution,
};
use fastrates_core::instances::{
    inverse_square_tail, random_bounded_ratio_pair, random_problem, NoBernsteinBounded, NoBernsteinUnbounded, NoSmallBall,
    RandomSpec,
};
use fastrates_core::numeric::{expect, lin_grid};
use fastrates_core::problem::LossKind;
use fastrates_core::rng::substream;
use fastrates_core::verify::{verify_main_unbounded, verify_zhang, EnumerationPlan, Exactness, InequalityTag, UnboundedPlan};
use fastrates_core::{Comparator, FiniteProblem};
use serde::Deserialize;
use serde_json::{json, Value};

use crate::commands::{expected_ic_and_risk, outcome_verdict};
use crate::config::from_value;
use crate::report::Step;
use crate::CliError;

pub const BUILTINS: [&str; 7] = [
    "zhang-exact",
    "no-bernstein-bounded",
    "gaussian-threshold",
    "birge-massart",
    "eta-sweep-misspec",
    "no-small-ball",
    "no-bernstein-unbounded",
];

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct Params {
    sigma_ratio: Option<f64>,
    j_max: Option<usize>,
}

pub fn run_builtin(name: &str, params: &Value, seed: u64) -> Result<Vec<Step>, CliError> {
    let p: Params = from_value(params, "scenario parameters")?;
    match name {
        "zhang-exact" => zhang_exact(seed),
        "no-bernstein-bounded" => no_bernstein_bounded(p.j_max.unwrap_or(1000)),
        "gaussian-threshold" => gaussian_threshold(p.sigma_ratio.unwrap_or(2.0)),
        "birge-massart" => birge_massart(seed),
        "eta-sweep-misspec" => eta_sweep_misspec(seed),
        "no-small-ball" => no_small_ball(p.j_max.unwrap_or(50)),
        "no-bernstein-unbounded" => no_bernstein_unbounded(seed),
        other => Err(CliError::Config(format!("unknown scenario `{other}`"))),
    }
}

const ZHANG_TOL: f64 = 1e-10;

/// 100 random 3×3 problems, n = 3, every estimator and η, with the static
/// comparator and with the mini-GRIP comparator map.
fn zhang_exact(seed: u64) -> Result<Vec<Step>, CliError> {
    let mut rng = substream(seed, 0);
    let spec = RandomSpec {
        outcomes: 3,
        predictors: 3,
        loss_scale: 1.0,
    };
    let problems: Vec<FiniteProblem> = (0..100).map(|_| random_problem(&mut rng, spec)).collect();
    let mut steps = Vec::new();
    for target in [InequalityTag::Zhang, InequalityTag::ZhangMiniGrip] {
        for kind in [EstimatorKind::Bayes, EstimatorKind::Twopart, EstimatorKind::Erm] {
            for eta in [0.1, 0.5, 1.0, 2.0] {
                let mut worst = f64::NEG_INFINITY;
                for pr in &problems {
                    let mut plan = EnumerationPlan::new(pr.clone(), 3, kind, eta, target);
                    plan.exactness = Exactness::Exact { cap: 1_000_000 };
                    plan.tol = ZHANG_TOL;
                    worst = worst.max(verify_zhang(&plan)?.moment_or_frequency);
                }
                let name = format!("{target:?}/{}/eta={eta}", kind_name(kind));
                steps.push(Step::check(
                    name,
                    worst <= 1.0 + ZHANG_TOL,
                    json!({ "problems": problems.len(), "n": 3, "max_moment": worst, "tol": ZHANG_TOL }),
                ));
            }
        }
    }
    Ok(steps)
}

fn kind_name(k: EstimatorKind) -> &'static str {
    match k {
        EstimatorKind::Bayes => "bayes",
        EstimatorKind::Twopart => "twopart",
        EstimatorKind::Erm => "erm",
    }
}

/// Smallest `B` with `E[L_f²] ≤ B (E L_f)^β` for every `f`.
pub fn minimal_bernstein_b(problem: &FiniteProblem, beta: f64) -> f64 {
    let p = problem.probs();
    (0..problem.num_predictors())
        .filter_map(|f| {
            let l = problem.excess_vector(f);
            let m = expect(p, &l);
            let s = expect(p, &l.iter().map(|x| x * x).collect::<Vec<_>>());
            (m > 0.0).then(|| s / m.powf(beta))
        })
        .fold(0.0, f64::max)
}

fn no_bernstein_bounded(j_max: usize) -> Result<Vec<Step>, CliError> {
    let ex = NoBernsteinBounded::new(j_max)?;
    let pr = &ex.problem;
    let mut steps = Vec::new();
    let formula = ex.excess_risk_formula();
    let worst_gap = (2..=j_max)
        .map(|j| pr.excess_risk(j - 1, 0).map_or(f64::INFINITY, |r| (r - formula).abs()))
        .fold(0.0, f64::max);
    steps.push(Step::check(
        "excess_risk_formula",
        worst_gap <= 1e-9,
        json!({ "a": ex.a, "formula": formula, "max_abs_gap": worst_gap }),
    ));
    let tail_gap = (ex.tail_mass - inverse_square_tail(j_max)).abs();
    steps.push(Step::check(
        "tail_formula",
        tail_gap <= 1e-9,
        json!({ "summed_tail": ex.tail_mass, "euler_maclaurin": inverse_square_tail(j_max), "gap": tail_gap }),
    ));
    let c = check_strong_central(pr, 2.0)?;
    steps.push(Step::expect("strong_central eta=2", true, c.holds, &c));
    let fs = Comparator::Static(pr.comparator());
    let w = check_witness(pr, 1.0, 0.1, &fs)?;
    steps.push(Step::expect("witness u=1 c=0.1", true, w.holds, &w));
    for beta in [0.25, 0.5, 0.75, 1.0] {
        let b = check_bernstein(pr, beta, 1e5)?;
        steps.push(Step::expect(format!("bernstein beta={beta} B=1e5"), false, b.holds, &b));
        steps.push(Step::info(
            format!("minimal_bernstein_b beta={beta}"),
            json!({ "j_max": j_max, "b_min": minimal_bernstein_b(pr, beta) }),
        ));
    }
    Ok(steps)
}

fn gaussian_threshold(r: f64) -> Result<Vec<Step>, CliError> {
    if !(r > 0.0) {
        return Err(CliError::Config("sigma_ratio must be positive".into()));
    }
    let fam = ExpFamily::gaussian_location(1.0, (-2.0, 2.0))?;
    let p = GridDistribution::gaussian(0.0, r.sqrt())?;
    let thetas = lin_grid(-2.0, 2.0, 81);
    let target = 1.0 / r;
    let mut steps = Vec::new();
    let eta_bar = expfam_central_eta(&fam, &p, &thetas, 1e-9, 64.0)?;
    steps.push(Step::check(
        "certified_eta_bar",
        (0.96 * target..=1.04 * target).contains(&eta_bar),
        json!({ "eta_bar": eta_bar, "variance_ratio": target, "band": [0.96 * target, 1.04 * target] }),
    ));
    let below = check_expfam_central(&fam, &p, &thetas, 0.9 * target)?;
    steps.push(Step::expect("central at 0.9/r", true, below.holds, &below));
    let above = check_expfam_central(&fam, &p, &thetas, 1.1 * target)?;
    steps.push(Step::expect("central at 1.1/r", false, above.holds, &above));
    let local = local_eta_limit(&fam, &p, 1e-3, 20, 64.0)?;
    let rel = (local - target).abs() / target;
    steps.push(Step::check(
        "local_limit",
        rel <= 0.02,
        json!({ "limit": local, "variance_ratio": target, "relative_error": rel }),
    ));
    // Cumulant form against grid summation, and both against the Gaussian formula.
    let mut worst_direct = 0.0f64;
    let mut worst_analytic = 0.0f64;
    let var = p.variance();
    for &t in &thetas {
        for eta in [0.5 * target, target, 1.5 * target] {
            let m = central_moment_expfam(&fam, &p, t, eta)?;
            worst_direct = worst_direct.max((m.closed_form - m.direct).abs());
            let d = t - m.theta_star;
            let analytic = (0.5 * eta * d * d * (eta * var - 1.0)).exp();
            worst_analytic = worst_analytic.max((m.closed_form - analytic).abs() / analytic);
        }
    }
    steps.push(Step::check(
        "cumulant_vs_direct",
        worst_direct <= 1e-10,
        json!({ "max_abs_gap": worst_direct }),
    ));
    steps.push(Step::info("cumulant_vs_gaussian_formula", json!({ "max_rel_gap": worst_analytic })));
    Ok(steps)
}

/// KL ≤ (log V + 2)·2(1 − affinity) on random pairs with density ratio ≤ V.
fn birge_massart(seed: u64) -> Result<Vec<Step>, CliError> {
    let mut steps = Vec::new();
    for (i, v) in [2.0f64, 7.5, 100.0].into_iter().enumerate() {
        let u = v.ln();
        let cu = cu_constant(0.5, 1.0, u, 1.0)?;
        steps.push(Step::check(
            format!("constant V={v}"),
            (cu - (u + 2.0)).abs() <= 1e-12,
            json!({ "cu": cu, "log_v_plus_2": u + 2.0 }),
        ));
        let mut rng = substream(seed, i as u64 + 1);
        let mut worst = f64::INFINITY;
        let mut failures = 0;
        for _ in 0..500 {
            // Stay a hair inside the ratio bound so L ≤ log V survives rounding.
            let (p, q) = random_bounded_ratio_pair(&mut rng, 8, v * (1.0 - 1e-9));
            let kind = LossKind::LogLoss {
                table: vec![p.clone(), q],
                base_weights: vec![1.0; 8],
            };
            let pr = FiniteProblem::log_loss(p, &kind)?;
            let r = kl_vs_hellinger_bound(&pr, 1, 0.5, 1.0, u, 1.0)?;
            worst = worst.min(r.first_margin);
            failures += usize::from(!r.holds);
        }
        steps.push(Step::check(
            format!("kl_vs_hellinger V={v}"),
            failures == 0,
            json!({ "pairs": 500, "failures": failures, "min_margin": worst }),
        ));
    }
    Ok(steps)
}

/// Gaussian location with σ² = 4σ*², so η̄ = 1/4.
fn eta_sweep_misspec(seed: u64) -> Result<Vec<Step>, CliError> {
    let fam = ExpFamily::gaussian_location(1.0, (-2.0, 2.0))?;
    let p = GridDistribution::gaussian(0.0, 2.0)?;
    let thetas = lin_grid(-2.0, 2.0, 41);
    let pr = expfam_problem(&fam, &p, &thetas)?;
    let eta_bar = expfam_central_eta(&fam, &p, &thetas, 1e-9, 64.0)?;
    let mut steps = vec![Step::info("eta_bar", json!({ "eta_bar": eta_bar, "variance_ratio": 0.25 }))];
    let prior = WeightVector::uniform(thetas.len());
    let (n, reps) = (20, 200);
    let mut ics = Vec::new();
    for eta in [0.0625, 0.125, 0.2, 0.3, 0.5, 1.0, 2.0] {
        let c = check_strong_central(&pr, eta)?;
        steps.push(Step::expect(format!("central eta={eta}"), eta <= 0.25, c.holds, &c));
        // Same seed for every η: common random numbers keep E[IC] comparable.
        let (ic, risk) = expected_ic_and_risk(&pr, &prior, EstimatorKind::Bayes, eta, n, reps, seed)?;
        steps.push(Step::info(format!("expected eta={eta}"), json!({ "n": n, "ic": ic, "excess_risk": risk })));
        ics.push(ic.mean);
    }
    let monotone = ics.windows(2).all(|w| w[1] <= w[0] + 1e-12);
    steps.push(Step::check("expected_ic_nonincreasing", monotone, json!({ "expected_ic": ics })));
    Ok(steps)
}

fn no_small_ball(j_max: usize) -> Result<Vec<Step>, CliError> {
    let ex = NoSmallBall::new(j_max, 401)?;
    let pr = &ex.problem;
    let mut steps = Vec::new();
    for kappa in [0.1, 0.5, 1.0, 2.0, 5.0, 10.0] {
        let r = check_small_ball(pr, kappa, 1e-3, PairSet::All)?;
        steps.push(Step::expect(format!("small_ball kappa={kappa} eps=1e-3"), false, r.holds, &r));
    }
    let c = check_strong_central(pr, 0.5)?;
    steps.push(Step::expect("strong_central eta=1/2", true, c.holds, &c));
    let cw = 1.0 - (2.0 / std::f64::consts::PI).sqrt();
    let w = check_witness(pr, 3.0, cw, &Comparator::Static(pr.comparator()))?;
    steps.push(Step::expect("witness u=3 c=1-sqrt(2/pi)", true, w.holds, &w));
    Ok(steps)
}

fn no_bernstein_unbounded(seed: u64) -> Result<Vec<Step>, CliError> {
    let ex = NoBernsteinUnbounded::new(3.0, 61, 401)?;
    let pr = &ex.problem;
    let cw = 1.0 - (2.0 / std::f64::consts::PI).sqrt();
    let mut steps = Vec::new();
    let fs = Comparator::Static(pr.comparator());
    let t = check_tau_witness(pr, &TauFunction::LinearMax { u: 4.0 }, cw, &fs)?;
    steps.push(Step::expect("tau_witness u=4 c=1-sqrt(2/pi)", true, t.holds, &t));
    let c = check_strong_central(pr, 1.0)?;
    steps.push(Step::expect("strong_central eta=1", true, c.holds, &c));
    let n = 512;
    let plan = UnboundedPlan {
        problem: pr.clone(),
        prior: WeightVector::uniform(ex.means.len()),
        estimator: EstimatorKind::Erm,
        v: VFunction::Constant(1.0),
        n,
        eta_n: (n as f64).powf(-0.5),
        eps_n: 0.0,
        u: 4.0,
        c: cw,
        deltas: vec![0.25, 0.1],
        replicates: 2000,
        seed,
    };
    for o in verify_main_unbounded(&plan)? {
        steps.push(Step::new("main_unbounded", outcome_verdict(&o), &o));
    }
    steps.push(Step::info("tolerance", json!({ "condition_tol": COND_TOL })));
    Ok(steps)
}
