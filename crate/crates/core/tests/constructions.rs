use fastrates_core::conditions::{
    check_bernstein, check_small_ball, check_strong_central, check_tau_witness, check_witness, PairSet, TauFunction,
};
use fastrates_core::divergences::{cu_constant, kl_divergence, kl_vs_hellinger_bound};
use fastrates_core::expfam::{check_expfam_central, expfam_central_eta, local_eta_limit, ExpFamily, GridDistribution};
use fastrates_core::instances::{
    random_bounded_ratio_pair, NoBernsteinBounded, NoBernsteinUnbounded, NoSmallBall,
};
use fastrates_core::numeric::lin_grid;
use fastrates_core::problem::LossKind;
use fastrates_core::rng::substream;
use fastrates_core::{Comparator, FiniteProblem};

fn witness_c() -> f64 {
    1.0 - (2.0 / std::f64::consts::PI).sqrt()
}

#[test]
fn bounded_construction_moments_match_formulas() {
    let ex = NoBernsteinBounded::new(200).unwrap();
    let pr = &ex.problem;
    let p = pr.probs();
    for j in [2usize, 17, 200] {
        let l = pr.excess_vector(j - 1);
        let m2: f64 = p.iter().zip(&l).map(|(a, x)| a * x * x).sum();
        assert!((m2 - ex.second_moment_formula(j)).abs() < 1e-9 * m2);
        assert!((pr.excess_risk(j - 1, 0).unwrap() - ex.excess_risk_formula()).abs() < 1e-12);
    }
    assert!(check_strong_central(pr, 2.0).unwrap().holds);
    assert!(check_witness(pr, 1.0, 0.1, &Comparator::Static(0)).unwrap().holds);
    assert!(!check_bernstein(pr, 1.0, 1e4).unwrap().holds);
}

#[test]
fn small_ball_construction() {
    let ex = NoSmallBall::new(50, 201).unwrap();
    let pr = &ex.problem;
    assert_eq!(pr.comparator(), 0);
    assert!(check_strong_central(pr, 0.5).unwrap().holds);
    assert!(check_witness(pr, 3.0, witness_c(), &Comparator::Static(0)).unwrap().holds);
    assert!(!check_small_ball(pr, 1.0, 1e-3, PairSet::All).unwrap().holds);
    assert!((ex.p_j(1) - 6.0 / std::f64::consts::PI.powi(2)).abs() < 1e-15);
}

#[test]
fn unbounded_construction_tau_witness() {
    let ex = NoBernsteinUnbounded::new(3.0, 31, 401).unwrap();
    let pr = &ex.problem;
    assert_eq!(ex.means[pr.comparator()], 0.0);
    let fs = Comparator::Static(pr.comparator());
    assert!(check_tau_witness(pr, &TauFunction::LinearMax { u: 4.0 }, witness_c(), &fs).unwrap().holds);
    assert!(check_strong_central(pr, 1.0).unwrap().holds);
}

#[test]
fn gaussian_variance_ratio_threshold() {
    for r in [1.5, 2.0, 4.0] {
        let fam = ExpFamily::gaussian_location(1.0, (-2.0, 2.0)).unwrap();
        let p = GridDistribution::gaussian(0.0, f64::sqrt(r)).unwrap();
        let thetas = lin_grid(-2.0, 2.0, 41);
        let eb = expfam_central_eta(&fam, &p, &thetas, 1e-9, 64.0).unwrap();
        assert!((eb * r - 1.0).abs() < 0.04, "r = {r}: η̄ = {eb}");
        assert!(check_expfam_central(&fam, &p, &thetas, 0.9 / r).unwrap().holds);
        assert!(!check_expfam_central(&fam, &p, &thetas, 1.1 / r).unwrap().holds);
        let local = local_eta_limit(&fam, &p, 1e-3, 10, 64.0).unwrap();
        assert!((local * r - 1.0).abs() < 0.02);
    }
}

#[test]
fn kl_bounded_by_hellinger_for_bounded_ratios() {
    let mut rng = substream(8, 0);
    for v in [2.0f64, 30.0] {
        let cu = cu_constant(0.5, 1.0, v.ln(), 1.0).unwrap();
        assert!((cu - (v.ln() + 2.0)).abs() < 1e-12);
        for _ in 0..100 {
            let (p, q) = random_bounded_ratio_pair(&mut rng, 5, v * (1.0 - 1e-9));
            let kind = LossKind::LogLoss {
                table: vec![p.clone(), q.clone()],
                base_weights: vec![1.0; 5],
            };
            let pr = FiniteProblem::log_loss(p.clone(), &kind).unwrap();
            let r = kl_vs_hellinger_bound(&pr, 1, 0.5, 1.0, v.ln(), 1.0).unwrap();
            assert!(r.holds);
            assert!((r.excess_risk - kl_divergence(&p, &q).unwrap()).abs() < 1e-12);
        }
    }
}
