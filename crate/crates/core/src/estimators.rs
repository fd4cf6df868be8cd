//! η-generalized Bayes, two-part MDL, ERM and information complexity.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::numeric::{log_grid, log_sum_exp, mass_times, INF};
use crate::problem::{Comparator, FiniteProblem};
use crate::rng::{dirichlet_ones, substream};
use crate::verify::{product_space_size, sum_over_product_space};

/// A probability vector over predictors: prior, posterior or mixing weights.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct WeightVector {
    weights: Vec<f64>,
}

impl WeightVector {
    pub fn new(weights: Vec<f64>) -> Result<Self> {
        if weights.is_empty() {
            return invalid("empty weight vector");
        }
        if weights.iter().any(|&w| !(w >= 0.0) || !w.is_finite()) {
            return invalid("weights must be finite and nonnegative");
        }
        let s: f64 = weights.iter().sum();
        if (s - 1.0).abs() > 1e-12 {
            return invalid(format!("weights sum to {s}"));
        }
        Ok(WeightVector { weights })
    }

    /// Normalizes nonnegative weights.
    pub fn normalized(weights: Vec<f64>) -> Result<Self> {
        let s: f64 = weights.iter().sum();
        if !(s > 0.0) || !s.is_finite() {
            return Err(Error::ZeroNormalizer("weights have no mass".into()));
        }
        WeightVector::new(weights.into_iter().map(|w| w / s).collect())
    }

    /// Normalizes `exp(log_weights)` with a max shift.
    pub fn from_log_weights(log_weights: &[f64]) -> Result<Self> {
        let m = log_weights.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        if m == f64::NEG_INFINITY || m.is_nan() {
            return Err(Error::ZeroNormalizer("all log-weights are −∞".into()));
        }
        let w: Vec<f64> = log_weights.iter().map(|&l| (l - m).exp()).collect();
        let s: f64 = w.iter().sum();
        Ok(WeightVector {
            weights: w.into_iter().map(|x| x / s).collect(),
        })
    }

    pub fn uniform(k: usize) -> Self {
        WeightVector {
            weights: vec![1.0 / k as f64; k],
        }
    }

    pub fn point_mass(k: usize, i: usize) -> Self {
        let mut weights = vec![0.0; k];
        weights[i] = 1.0;
        WeightVector { weights }
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn get(&self, i: usize) -> f64 {
        self.weights[i]
    }

    /// `KL(self ‖ other)` in nats, `+∞` if `self` is not absolutely continuous.
    pub fn kl(&self, other: &WeightVector) -> f64 {
        kl_weights(&self.weights, &other.weights)
    }

    /// Restriction to a subset, renormalized.
    pub fn conditional(&self, subset: &[usize]) -> Result<(Self, f64)> {
        let mass: f64 = subset.iter().map(|&i| self.weights[i]).sum();
        if !(mass > 0.0) {
            return Err(Error::ZeroNormalizer("subset has zero mass".into()));
        }
        let mut w = vec![0.0; self.weights.len()];
        for &i in subset {
            w[i] = self.weights[i] / mass;
        }
        Ok((WeightVector { weights: w }, mass))
    }
}

fn kl_weights(p: &[f64], q: &[f64]) -> f64 {
    let mut s = 0.0;
    for (&a, &b) in p.iter().zip(q) {
        if a > 0.0 {
            if b <= 0.0 {
                return INF;
            }
            s += a * (a / b).ln();
        }
    }
    s.max(0.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EstimatorKind {
    Bayes,
    Twopart,
    Erm,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum EstimatorKindOutput {
    Randomized(WeightVector),
    Deterministic(usize),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimatorOutput {
    pub kind: EstimatorKindOutput,
    pub sample: Vec<usize>,
    pub eta: f64,
}

impl EstimatorOutput {
    /// The output as a distribution over `F` (point mass for deterministic estimators).
    pub fn weights(&self, num_predictors: usize) -> WeightVector {
        match &self.kind {
            EstimatorKindOutput::Randomized(w) => w.clone(),
            EstimatorKindOutput::Deterministic(i) => WeightVector::point_mass(num_predictors, *i),
        }
    }
}

fn check_sample(problem: &FiniteProblem, sample: &[usize]) -> Result<()> {
    if let Some(&z) = sample.iter().find(|&&z| z >= problem.num_outcomes()) {
        return Err(Error::IndexOutOfRange {
            index: z,
            len: problem.num_outcomes(),
        });
    }
    Ok(())
}

fn check_prior(problem: &FiniteProblem, prior: &WeightVector) -> Result<()> {
    if prior.len() != problem.num_predictors() {
        return invalid("prior length differs from predictor count");
    }
    Ok(())
}

/// `Σ_i loss_f(z_i)` for every `f`.
pub fn cumulative_losses(problem: &FiniteProblem, sample: &[usize]) -> Vec<f64> {
    (0..problem.num_predictors())
        .map(|f| sample.iter().map(|&z| problem.loss(f, z)).sum())
        .collect()
}

/// `Σ_i L_f(z_i)` against `comparator`, for every `f`.
pub fn cumulative_excess(
    problem: &FiniteProblem,
    sample: &[usize],
    comparator: &Comparator,
) -> Result<Vec<f64>> {
    (0..problem.num_predictors())
        .map(|f| {
            let base = comparator.loss_for(problem, f);
            let mut s = 0.0;
            for &z in sample {
                if base[z] == INF {
                    return invalid(format!("comparator loss is infinite on sample outcome {z}"));
                }
                s += problem.loss(f, z) - base[z];
            }
            Ok(s)
        })
        .collect()
}

fn posterior_from_cumulative(prior: &WeightVector, cum: &[f64], eta: f64) -> Result<WeightVector> {
    let lw: Vec<f64> = prior
        .as_slice()
        .iter()
        .zip(cum)
        .map(|(&p, &s)| {
            if p == 0.0 || s == INF {
                f64::NEG_INFINITY
            } else {
                p.ln() - eta * s
            }
        })
        .collect();
    WeightVector::from_log_weights(&lw).map_err(|_| {
        Error::ZeroNormalizer("every predictor with prior mass has infinite sample loss".into())
    })
}

/// Posterior with weights `∝ prior(f)·exp(−η Σ_i loss_f(z_i))`.
pub fn generalized_bayes_posterior(
    problem: &FiniteProblem,
    prior: &WeightVector,
    sample: &[usize],
    eta: f64,
) -> Result<WeightVector> {
    if !(eta > 0.0) {
        return invalid("learning rate must be positive");
    }
    check_prior(problem, prior)?;
    check_sample(problem, sample)?;
    posterior_from_cumulative(prior, &cumulative_losses(problem, sample), eta)
}

/// One-observation update of a generalized Bayes posterior.
pub fn bayes_update(
    problem: &FiniteProblem,
    posterior: &WeightVector,
    z: usize,
    eta: f64,
) -> Result<WeightVector> {
    generalized_bayes_posterior(problem, posterior, &[z], eta)
}

/// Two-part MDL objective `Σ_i loss_f(z_i) + (1/η)(−log prior(f))` per predictor.
pub fn two_part_objectives(
    problem: &FiniteProblem,
    prior: &WeightVector,
    sample: &[usize],
    eta: f64,
) -> Result<Vec<f64>> {
    if !(eta > 0.0) {
        return invalid("learning rate must be positive");
    }
    check_prior(problem, prior)?;
    check_sample(problem, sample)?;
    Ok(cumulative_losses(problem, sample)
        .into_iter()
        .zip(prior.as_slice())
        .map(|(s, &p)| if p == 0.0 { INF } else { s - p.ln() / eta })
        .collect())
}

fn first_within(obj: &[f64], slack: f64) -> Option<usize> {
    let m = obj.iter().cloned().fold(INF, f64::min);
    if m == INF {
        return None;
    }
    obj.iter().position(|&o| o <= m + slack)
}

/// Two-part MDL estimator; ties go to the smallest index.
pub fn two_part_mdl(
    problem: &FiniteProblem,
    prior: &WeightVector,
    sample: &[usize],
    eta: f64,
) -> Result<usize> {
    two_part_mdl_within(problem, prior, sample, eta, 0.0)
}

/// Streaming variant: the first predictor whose objective is within `slack`
/// (typically `1/n`) of the infimum.
pub fn two_part_mdl_within(
    problem: &FiniteProblem,
    prior: &WeightVector,
    sample: &[usize],
    eta: f64,
    slack: f64,
) -> Result<usize> {
    let obj = two_part_objectives(problem, prior, sample, eta)?;
    first_within(&obj, slack)
        .ok_or_else(|| Error::Precondition("two-part objective is infinite for every predictor".into()))
}

/// Empirical risk minimizer; ties go to the smallest index.
pub fn erm(problem: &FiniteProblem, sample: &[usize]) -> Result<usize> {
    check_sample(problem, sample)?;
    let cum = cumulative_losses(problem, sample);
    Ok(first_within(&cum, 0.0).unwrap_or(0))
}

/// Runs one of the standard estimators on a sample.
pub fn run_estimator(
    kind: EstimatorKind,
    problem: &FiniteProblem,
    prior: &WeightVector,
    sample: &[usize],
    eta: f64,
) -> Result<EstimatorOutput> {
    let out = match kind {
        EstimatorKind::Bayes => {
            EstimatorKindOutput::Randomized(generalized_bayes_posterior(problem, prior, sample, eta)?)
        }
        EstimatorKind::Twopart => {
            EstimatorKindOutput::Deterministic(two_part_mdl(problem, prior, sample, eta)?)
        }
        EstimatorKind::Erm => EstimatorKindOutput::Deterministic(erm(problem, sample)?),
    };
    Ok(EstimatorOutput {
        kind: out,
        sample: sample.to_vec(),
        eta,
    })
}

/// `IC_{n,η} = E_{f∼Π_n}[(1/n) Σ L_f(z_i)] + KL(Π_n‖Π_0)/(ηn)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InformationComplexity {
    pub empirical_excess_term: f64,
    pub kl_term: f64,
    pub total: f64,
    pub eta: f64,
    pub n: usize,
}

/// IC from precomputed cumulative excess losses.
pub fn information_complexity_from(
    prior: &WeightVector,
    posterior: &WeightVector,
    cum_excess: &[f64],
    eta: f64,
    n: usize,
) -> InformationComplexity {
    let nf = n as f64;
    let emp: f64 = posterior
        .as_slice()
        .iter()
        .zip(cum_excess)
        .map(|(&w, &s)| mass_times(w, s))
        .sum::<f64>()
        / nf;
    let kl = posterior.kl(prior) / (eta * nf);
    InformationComplexity {
        empirical_excess_term: emp,
        kl_term: kl,
        total: emp + kl,
        eta,
        n,
    }
}

pub fn information_complexity(
    problem: &FiniteProblem,
    prior: &WeightVector,
    posterior: &WeightVector,
    sample: &[usize],
    eta: f64,
    comparator: &Comparator,
) -> Result<InformationComplexity> {
    if !(eta > 0.0) {
        return invalid("learning rate must be positive");
    }
    if sample.is_empty() {
        return invalid("information complexity needs n ≥ 1");
    }
    check_prior(problem, prior)?;
    check_prior(problem, posterior)?;
    check_sample(problem, sample)?;
    let cum = cumulative_excess(problem, sample, comparator)?;
    Ok(information_complexity_from(prior, posterior, &cum, eta, sample.len()))
}

/// `n·IC` of the generalized Bayes posterior in closed form:
/// `−(1/η) log E_{f∼Π_0} exp(−η Σ_i L_f(z_i))`.
pub fn bayes_n_ic(prior: &[f64], cum_excess: &[f64], eta: f64) -> f64 {
    let terms: Vec<f64> = prior
        .iter()
        .zip(cum_excess)
        .map(|(&p, &s)| {
            if p == 0.0 || s == INF {
                f64::NEG_INFINITY
            } else {
                p.ln() - eta * s
            }
        })
        .collect();
    let l = log_sum_exp(&terms);
    if l == f64::NEG_INFINITY {
        INF
    } else {
        -l / eta
    }
}

/// `IC` of the generalized Bayes posterior via its marginal-likelihood form.
pub fn bayes_ic_marginal(
    problem: &FiniteProblem,
    prior: &WeightVector,
    sample: &[usize],
    eta: f64,
    comparator: &Comparator,
) -> Result<f64> {
    if sample.is_empty() {
        return invalid("information complexity needs n ≥ 1");
    }
    check_prior(problem, prior)?;
    check_sample(problem, sample)?;
    let cum = cumulative_excess(problem, sample, comparator)?;
    Ok(bayes_n_ic(prior.as_slice(), &cum, eta) / sample.len() as f64)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IcCheckOptions {
    pub random_posteriors: usize,
    pub eta_grid: Vec<f64>,
    pub seed: u64,
    /// Enumerate every subset when `|F|` is at most this.
    pub exhaustive_subset_limit: usize,
    pub random_subsets: usize,
}

impl Default for IcCheckOptions {
    fn default() -> Self {
        IcCheckOptions {
            random_posteriors: 500,
            eta_grid: log_grid(0.05, 5.0, 30),
            seed: 0,
            exhaustive_subset_limit: 12,
            random_subsets: 200,
        }
    }
}

/// Margins of the IC equivalences; every margin is `rhs − lhs`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IcCheckReport {
    pub ic_bayes: f64,
    /// `|IC(posterior, definition) − IC(marginal form)|`.
    pub marginal_identity_gap: f64,
    /// min over random posteriors and point masses of `IC(Q) − IC(Bayes)`.
    pub minimizer_margin: f64,
    pub candidates_checked: usize,
    /// min over consecutive grid points of `IC(η_i) − IC(η_{i+1})`.
    pub eta_monotone_margin: f64,
    /// `−(1/η) log Π_0(A) + n·IC_A − n·IC`, minimized over subsets.
    pub subset_chain_first_margin: f64,
    /// `E_{Π_0|A}[Σ L] − n·IC_A`, minimized over subsets.
    pub subset_chain_second_margin: f64,
    pub subsets_checked: usize,
    /// `min_f n·IC(δ_f) − n·IC(Bayes)`.
    pub two_part_first_margin: f64,
    /// `|n·IC(two-part) − min_f{−(1/η) log π(f) + Σ L_f}|`.
    pub two_part_identity_gap: f64,
    pub worst_margin: f64,
    pub passed: bool,
}

fn subsets(nf: usize, opts: &IcCheckOptions) -> Vec<Vec<usize>> {
    if nf <= opts.exhaustive_subset_limit {
        (1u64..(1u64 << nf))
            .map(|mask| (0..nf).filter(|&i| mask >> i & 1 == 1).collect())
            .collect()
    } else {
        use rand::Rng;
        let mut rng = substream(opts.seed, 1);
        let mut out = vec![(0..nf).collect::<Vec<_>>()];
        while out.len() < opts.random_subsets {
            let s: Vec<usize> = (0..nf).filter(|_| rng.random::<bool>()).collect();
            if !s.is_empty() {
                out.push(s);
            }
        }
        out
    }
}

/// Checks that the Bayes posterior minimizes IC, that its IC is
/// non-increasing in η, and the subset and two-part chains.
pub fn ic_minimizer_check(
    problem: &FiniteProblem,
    prior: &WeightVector,
    sample: &[usize],
    eta: f64,
    opts: &IcCheckOptions,
) -> Result<IcCheckReport> {
    let n = sample.len();
    if n == 0 {
        return invalid("sample must be nonempty");
    }
    let nf = problem.num_predictors();
    let comparator = Comparator::Static(problem.comparator());
    let cum = cumulative_excess(problem, sample, &comparator)?;
    let post = generalized_bayes_posterior(problem, prior, sample, eta)?;
    let ic_def = information_complexity_from(prior, &post, &cum, eta, n).total;
    let n_ic = bayes_n_ic(prior.as_slice(), &cum, eta);
    let ic_bayes = n_ic / n as f64;
    let marginal_identity_gap = (ic_def - ic_bayes).abs();

    // (a) minimization over random posteriors and point masses
    let mut rng = substream(opts.seed, 0);
    let mut minimizer_margin = INF;
    let mut candidates = 0;
    for i in 0..opts.random_posteriors + nf {
        let q = if i < opts.random_posteriors {
            WeightVector::normalized(dirichlet_ones(&mut rng, nf))?
        } else {
            WeightVector::point_mass(nf, i - opts.random_posteriors)
        };
        let ic = information_complexity_from(prior, &q, &cum, eta, n).total;
        if ic.is_finite() {
            minimizer_margin = minimizer_margin.min(ic - ic_bayes);
        }
        candidates += 1;
    }

    // (b) monotonicity in η
    let mut grid = opts.eta_grid.clone();
    grid.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let ics: Vec<f64> = grid
        .iter()
        .map(|&e| bayes_n_ic(prior.as_slice(), &cum, e) / n as f64)
        .collect();
    let eta_monotone_margin = ics
        .windows(2)
        .map(|w| w[0] - w[1])
        .fold(INF, f64::min);

    // (c) subset chain
    let mut first = INF;
    let mut second = INF;
    let mut checked = 0;
    for a in subsets(nf, opts) {
        let Ok((cond, mass)) = prior.conditional(&a) else {
            continue;
        };
        let Ok(post_a) = posterior_from_cumulative(&cond, &problem_cum_losses(problem, sample), eta)
        else {
            continue;
        };
        let n_ic_a = information_complexity_from(&cond, &post_a, &cum, eta, n).total * n as f64;
        let penalty = -mass.ln() / eta;
        let prior_avg: f64 = a.iter().map(|&f| mass_times(cond.get(f), cum[f])).sum();
        first = first.min(penalty + n_ic_a - n_ic);
        second = second.min(prior_avg - n_ic_a);
        checked += 1;
    }

    // (d) two-part chain
    let point_n_ic: Vec<f64> = (0..nf)
        .map(|f| {
            let p = prior.get(f);
            if p == 0.0 {
                INF
            } else {
                cum[f] - p.ln() / eta
            }
        })
        .collect();
    let det_inf = point_n_ic.iter().cloned().fold(INF, f64::min);
    let tp = two_part_mdl(problem, prior, sample, eta)?;
    let tp_ic = information_complexity_from(prior, &WeightVector::point_mass(nf, tp), &cum, eta, n)
        .total
        * n as f64;
    let two_part_first_margin = det_inf - n_ic;
    let two_part_identity_gap = (tp_ic - det_inf).abs();

    let scale = 1.0 + n_ic.abs();
    let worst_margin = [
        minimizer_margin / scale,
        eta_monotone_margin / scale,
        first / scale,
        second / scale,
        two_part_first_margin / scale,
        -marginal_identity_gap / scale,
        -two_part_identity_gap / scale,
    ]
    .into_iter()
    .fold(INF, f64::min);
    Ok(IcCheckReport {
        ic_bayes,
        marginal_identity_gap,
        minimizer_margin,
        candidates_checked: candidates,
        eta_monotone_margin,
        subset_chain_first_margin: first,
        subset_chain_second_margin: second,
        subsets_checked: checked,
        two_part_first_margin,
        two_part_identity_gap,
        worst_margin,
        passed: worst_margin >= -1e-10,
    })
}

fn problem_cum_losses(problem: &FiniteProblem, sample: &[usize]) -> Vec<f64> {
    cumulative_losses(problem, sample)
}

/// One model's prior placed at an offset inside the union `⋃ F_j`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PriorBlock {
    pub offset: usize,
    pub prior: WeightVector,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AggregatedPrior {
    pub weights: WeightVector,
    pub blocks: Vec<PriorBlock>,
    pub model_prior: WeightVector,
}

/// Composite prior `π(f) = q(j)·π^{(j)}(f)` over the union of the models.
pub fn aggregate_priors(
    blocks: &[PriorBlock],
    model_prior: &WeightVector,
    total: usize,
) -> Result<AggregatedPrior> {
    if blocks.len() != model_prior.len() {
        return invalid("one model weight per block required");
    }
    if model_prior.as_slice().iter().any(|&q| !(q > 0.0)) {
        return invalid("model prior must be positive on every listed model");
    }
    let mut owner = vec![None; total];
    let mut w = vec![0.0; total];
    for (j, b) in blocks.iter().enumerate() {
        for (k, &p) in b.prior.as_slice().iter().enumerate() {
            let i = b.offset + k;
            if i >= total {
                return Err(Error::IndexOutOfRange { index: i, len: total });
            }
            if owner[i].is_some() {
                return invalid(format!("index {i} belongs to two models"));
            }
            owner[i] = Some(j);
            w[i] = model_prior.get(j) * p;
        }
    }
    Ok(AggregatedPrior {
        weights: WeightVector::normalized(w)?,
        blocks: blocks.to_vec(),
        model_prior: model_prior.clone(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AggregationCheck {
    /// `n·IC` of the Bayes posterior under the composite prior.
    pub composite_n_ic: f64,
    /// `−(1/η) log q(j*)`.
    pub overhead: f64,
    /// `n·IC` of the Bayes posterior inside model `j*`.
    pub within_n_ic: f64,
    /// Overhead expressed per unit of IC: `−log q(j*)/(nη)`.
    pub overhead_ic: f64,
    pub margin: f64,
    pub holds: bool,
}

impl AggregatedPrior {
    /// Checks `n·IC(composite) ≤ −(1/η) log q(j*) + n·IC(inside F_{j*})` on a sample.
    pub fn check_preaggregation(
        &self,
        problem: &FiniteProblem,
        sample: &[usize],
        eta: f64,
        j_star: usize,
    ) -> Result<AggregationCheck> {
        if j_star >= self.blocks.len() {
            return Err(Error::IndexOutOfRange {
                index: j_star,
                len: self.blocks.len(),
            });
        }
        let comparator = Comparator::Static(problem.comparator());
        let cum = cumulative_excess(problem, sample, &comparator)?;
        let composite_n_ic = bayes_n_ic(self.weights.as_slice(), &cum, eta);
        let b = &self.blocks[j_star];
        let inner_cum: Vec<f64> = (0..b.prior.len()).map(|k| cum[b.offset + k]).collect();
        let within_n_ic = bayes_n_ic(b.prior.as_slice(), &inner_cum, eta);
        let q = self.model_prior.get(j_star);
        let overhead = -q.ln() / eta;
        let margin = overhead + within_n_ic - composite_n_ic;
        Ok(AggregationCheck {
            composite_n_ic,
            overhead,
            within_n_ic,
            overhead_ic: -q.ln() / (sample.len() as f64 * eta),
            margin,
            holds: margin >= -1e-10 * (1.0 + composite_n_ic.abs()),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GgvReport {
    pub eps: f64,
    pub c: f64,
    pub eta: f64,
    pub n: usize,
    /// `Π_0(f : E[L_f] ≤ ε²)`.
    pub ball_mass: f64,
    /// `e^{−nCε²}`.
    pub required_mass: f64,
    pub hypothesis_holds: bool,
    pub expected_ic: Option<f64>,
    pub standard_error: f64,
    pub exact: bool,
    /// `ε²(1 + C/η)`.
    pub bound: f64,
    pub holds: Option<bool>,
    /// `bound / E[IC]`, informational.
    pub tightness_ratio: Option<f64>,
    pub note: String,
}

/// Prior-mass condition `Π_0(E[L_f] ≤ ε²) ≥ e^{−nCε²}` and, when it holds,
/// `E_{Z^n}[IC] ≤ ε²(1 + C/η)` for the Bayes posterior.
#[allow(clippy::too_many_arguments)]
pub fn ggv_prior_mass_bound(
    problem: &FiniteProblem,
    prior: &WeightVector,
    eps: f64,
    c: f64,
    eta: f64,
    n: usize,
    cap: usize,
    mc_replicates: usize,
    seed: u64,
) -> Result<GgvReport> {
    if !(eps > 0.0) || !(c >= 0.0) || !(eta > 0.0) || n == 0 {
        return invalid("need ε > 0, C ≥ 0, η > 0, n ≥ 1");
    }
    check_prior(problem, prior)?;
    let fs = problem.comparator();
    let eps2 = eps * eps;
    let ball_mass: f64 = (0..problem.num_predictors())
        .filter(|&f| problem.excess_risk(f, fs).map_or(false, |r| r <= eps2))
        .map(|f| prior.get(f))
        .sum();
    let required_mass = (-(n as f64) * c * eps2).exp();
    let bound = eps2 * (1.0 + c / eta);
    let mut report = GgvReport {
        eps,
        c,
        eta,
        n,
        ball_mass,
        required_mass,
        hypothesis_holds: ball_mass >= required_mass * (1.0 - 1e-12),
        expected_ic: None,
        standard_error: 0.0,
        exact: true,
        bound,
        holds: None,
        tightness_ratio: None,
        note: String::new(),
    };
    if !report.hypothesis_holds {
        report.note = "hypothesis not satisfied".into();
        return Ok(report);
    }
    let comparator = Comparator::Static(fs);
    let ic_of = |sample: &[usize]| -> f64 {
        let cum = cumulative_excess(problem, sample, &comparator).expect("finite comparator");
        bayes_n_ic(prior.as_slice(), &cum, eta) / n as f64
    };
    let (mean, se, exact) = if product_space_size(problem.num_outcomes(), n) <= cap as f64 {
        (sum_over_product_space(problem.probs(), n, |s| ic_of(s)), 0.0, true)
    } else {
        let stats = crate::verify::mc_sample_statistic(problem.probs(), n, mc_replicates, seed, |s| ic_of(s));
        (stats.mean, stats.standard_error, false)
    };
    report.expected_ic = Some(mean);
    report.standard_error = se;
    report.exact = exact;
    report.holds = Some(mean <= bound + 3.0 * se + 1e-12);
    report.tightness_ratio = Some(bound / mean);
    Ok(report)
}
