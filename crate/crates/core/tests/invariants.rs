use fastrates_core::conditions::{check_strong_central, max_central_eta};
use fastrates_core::divergences::{g_eta, h_ratio, hellinger_squared, misspec_metric, ratio_constant};
use fastrates_core::esi::{annealed_expectation, hellinger_expectation, plain_expectation};
use fastrates_core::estimators::{
    bayes_ic_marginal, generalized_bayes_posterior, ic_minimizer_check, information_complexity, IcCheckOptions,
    WeightVector,
};
use fastrates_core::grip::{compute_grip, mix_loss, verify_grip_central, GripOptions};
use fastrates_core::instances::{random_log_loss_model, random_problem, RandomSpec};
use fastrates_core::numeric::expect;
use fastrates_core::rng::{dirichlet_ones, substream};
use fastrates_core::verify::{mc_map, mc_stats, verify_zhang, EnumerationPlan, Exactness, InequalityTag};
use fastrates_core::{Comparator, FiniteProblem};
use proptest::prelude::*;

fn problem(seed: u64, outcomes: usize, predictors: usize) -> FiniteProblem {
    random_problem(
        &mut substream(seed, 0),
        RandomSpec {
            outcomes,
            predictors,
            loss_scale: 2.0,
        },
    )
}

fn sample(seed: u64, k: usize, n: usize) -> Vec<usize> {
    (0..n).map(|i| (seed as usize / 7 + i * 5 + i * i) % k).collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn log_loss_excess_has_unit_exponential_moment(seed in any::<u64>(), k in 2usize..12, nf in 1usize..8) {
        let (pr, _) = random_log_loss_model(&mut substream(seed, 0), k, nf);
        for f in 0..nf {
            let l = pr.excess_vector(f);
            let m: f64 = pr.probs().iter().zip(&l).map(|(p, x)| p * (-x).exp()).sum();
            prop_assert!((m - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn hellinger_below_annealed_below_plain(seed in any::<u64>(), k in 1usize..10, eta in 0.01f64..5.0) {
        let mut rng = substream(seed, 0);
        let p = dirichlet_ones(&mut rng, k);
        let x: Vec<f64> = dirichlet_ones(&mut rng, k).iter().map(|v| 6.0 * v - 1.0).collect();
        let he = hellinger_expectation(&p, &x, eta).unwrap();
        let ann = annealed_expectation(&p, &x, eta).unwrap();
        let plain = plain_expectation(&p, &x).unwrap();
        prop_assert!(he <= ann + 1e-12);
        prop_assert!(ann <= plain + 1e-12);
    }

    #[test]
    fn bayes_posterior_minimizes_information_complexity(seed in any::<u64>(), nf in 1usize..7, n in 1usize..6, eta in 0.05f64..4.0) {
        let pr = problem(seed, 4, nf);
        let prior = WeightVector::normalized(dirichlet_ones(&mut substream(seed, 1), nf)).unwrap();
        let z = sample(seed, 4, n);
        let opts = IcCheckOptions { random_posteriors: 100, seed, ..IcCheckOptions::default() };
        let r = ic_minimizer_check(&pr, &prior, &z, eta, &opts).unwrap();
        prop_assert!(r.passed, "{r:?}");
        let post = generalized_bayes_posterior(&pr, &prior, &z, eta).unwrap();
        let fs = Comparator::Static(pr.comparator());
        let ic = information_complexity(&pr, &prior, &post, &z, eta, &fs).unwrap().total;
        let marginal = bayes_ic_marginal(&pr, &prior, &z, eta, &fs).unwrap();
        prop_assert!((ic - marginal).abs() <= 1e-10 * (1.0 + ic.abs()));
    }

    #[test]
    fn grip_is_central_and_beats_every_mixture(seed in any::<u64>(), k in 2usize..6, nf in 1usize..5, eta in 0.1f64..3.0) {
        let pr = problem(seed, k, nf);
        let g = compute_grip(&pr, eta, &GripOptions::default()).unwrap();
        let c = verify_grip_central(&pr, &g, 1e-6).unwrap();
        prop_assert!(c.holds);
        prop_assert!(c.max_moment <= 1.0 + 1e-6);
        let mut rng = substream(seed, 2);
        for _ in 0..20 {
            let q = WeightVector::normalized(dirichlet_ones(&mut rng, nf)).unwrap();
            let obj = expect(pr.probs(), &mix_loss(&pr, &q, eta).unwrap());
            prop_assert!(g.objective <= obj + 1e-7);
        }
        for f in 0..nf {
            prop_assert!(g.objective <= pr.risk(f).unwrap() + 1e-7);
        }
    }

    #[test]
    fn ratio_constant_bounds_g(eta_prime in 0.0f64..0.9, gap in 0.01f64..0.09, log_v in 0.01f64..6.0, t in 0.0f64..1.0) {
        let eta = eta_prime + gap;
        let v = log_v.exp();
        let rc = ratio_constant(eta_prime, eta, v).unwrap();
        // r spans [1/V, 10³] on a log scale.
        let r = (-(log_v) + t * (log_v + 1000f64.ln())).exp();
        prop_assert!(g_eta(eta_prime, r) <= rc.c * g_eta(eta, r) * (1.0 + 1e-9) + 1e-15);
        prop_assert!(rc.c <= rc.upper_bound * (1.0 + 1e-12));
        let r2 = r * 1.01;
        prop_assert!(h_ratio(eta_prime, eta, r2) <= h_ratio(eta_prime, eta, r) * (1.0 + 1e-9));
    }

    #[test]
    fn zhang_moment_at_most_one(seed in any::<u64>(), n in 1usize..4, eta in 0.05f64..3.0) {
        let pr = problem(seed, 3, 3);
        let mut plan = EnumerationPlan::new(pr, n, fastrates_core::estimators::EstimatorKind::Bayes, eta, InequalityTag::Zhang);
        plan.exactness = Exactness::Exact { cap: 1_000_000 };
        let o = verify_zhang(&plan).unwrap();
        prop_assert!(o.moment_or_frequency <= 1.0 + 1e-10);
    }

    #[test]
    fn central_rate_is_certified(seed in any::<u64>()) {
        let pr = problem(seed, 4, 3);
        let eb = max_central_eta(&pr, 1e-9, 16.0);
        prop_assert!(check_strong_central(&pr, eb).unwrap().holds);
    }
}

#[test]
fn misspec_metric_is_hellinger_when_well_specified() {
    let mut rng = substream(4, 0);
    for _ in 0..20 {
        let (pr, table) = random_log_loss_model(&mut rng, 6, 4);
        for f in 1..4 {
            let d2 = misspec_metric(&pr, 0, f, 1.0).unwrap();
            let h = hellinger_squared(&table[0], &table[f]).unwrap();
            assert!((d2 - h).abs() < 1e-12, "{d2} vs {h}");
        }
    }
}

#[test]
fn monte_carlo_is_thread_count_invariant() {
    let run = |threads| {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .unwrap()
            .install(|| {
                let v = mc_map(5000, 17, |k, rng| {
                    use rand::Rng;
                    k as f64 * 1e-3 + rng.random::<f64>()
                });
                mc_stats(&v)
            })
    };
    let a = run(1);
    let b = run(4);
    assert_eq!(a.mean.to_bits(), b.mean.to_bits());
    assert_eq!(a.variance.to_bits(), b.variance.to_bits());
}
