//! Univariate exponential families and GLMs on quadrature grids: central
//! thresholds, the local variance-ratio limit, GLM conditions and risk
//! identities.

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::conditions::{bisect_rate, max_rate, ConditionKind, ConditionReport};
use crate::divergences::kl_divergence;
use crate::error::{invalid, Error, Result};
use crate::estimators::bayes_n_ic;
use crate::numeric::{lin_grid, log_sum_exp, INF};
use crate::problem::FiniteProblem;
use crate::rng::cdf;
use crate::verify::{draw_sample, mc_map, mc_stats, ols, OlsFit};

/// Tolerance for grid normalization defects.
pub const GRID_TOL: f64 = 1e-8;
/// Central-moment slack on log scale used by the grid certificates.
const LOG_MOMENT_TOL: f64 = 1e-12;

type Triple = Arc<dyn Fn(f64) -> [f64; 3] + Send + Sync>;
type Carrier = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Support {
    Real,
    Binary,
    Counts { max: usize },
}

/// `p_θ(y) = exp(θy − F(θ) + r(y))` with `θ` restricted to a closed interval.
#[derive(Clone)]
pub struct ExpFamily {
    pub name: String,
    log_partition: Triple,
    carrier: Carrier,
    pub interval: (f64, f64),
    pub support: Support,
}

impl fmt::Debug for ExpFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ExpFamily")
            .field("name", &self.name)
            .field("interval", &self.interval)
            .field("support", &self.support)
            .finish()
    }
}

/// Extremes of `F`, `F′`, `F″` over the parameter interval.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IneccsiBounds {
    pub f_min: f64,
    pub f_max: f64,
    pub mean_min: f64,
    pub mean_max: f64,
    pub var_min: f64,
    pub var_max: f64,
}

impl ExpFamily {
    pub fn custom(
        name: impl Into<String>,
        log_partition: impl Fn(f64) -> [f64; 3] + Send + Sync + 'static,
        carrier: impl Fn(f64) -> f64 + Send + Sync + 'static,
        interval: (f64, f64),
        support: Support,
    ) -> Result<Self> {
        let fam = ExpFamily {
            name: name.into(),
            log_partition: Arc::new(log_partition),
            carrier: Arc::new(carrier),
            interval,
            support,
        };
        fam.ineccsi()?;
        Ok(fam)
    }

    /// Normal with known standard deviation `σ*`; mean `θσ*²`.
    pub fn gaussian_location(sigma_star: f64, interval: (f64, f64)) -> Result<Self> {
        if !(sigma_star > 0.0) {
            return invalid("σ* must be positive");
        }
        let s2 = sigma_star * sigma_star;
        let lognorm = (2.0 * std::f64::consts::PI).sqrt().ln() + sigma_star.ln();
        Self::custom(
            "gaussian_location",
            move |t| [0.5 * t * t * s2, t * s2, s2],
            move |y| -y * y / (2.0 * s2) - lognorm,
            interval,
            Support::Real,
        )
    }

    pub fn bernoulli(interval: (f64, f64)) -> Result<Self> {
        Self::custom(
            "bernoulli",
            |t: f64| {
                let m = 1.0 / (1.0 + (-t).exp());
                [t.max(0.0) + (-t.abs()).exp().ln_1p(), m, m * (1.0 - m)]
            },
            |_| 0.0,
            interval,
            Support::Binary,
        )
    }

    /// Poisson on counts `0..=y_max`; the truncated tail is reported as a grid defect.
    pub fn poisson(interval: (f64, f64), y_max: usize) -> Result<Self> {
        Self::custom(
            "poisson",
            |t: f64| {
                let e = t.exp();
                [e, e, e]
            },
            |y: f64| -ln_factorial(y),
            interval,
            Support::Counts { max: y_max },
        )
    }

    pub fn log_partition(&self, theta: f64) -> f64 {
        (self.log_partition)(theta)[0]
    }

    pub fn mean(&self, theta: f64) -> f64 {
        (self.log_partition)(theta)[1]
    }

    pub fn variance(&self, theta: f64) -> f64 {
        (self.log_partition)(theta)[2]
    }

    pub fn carrier(&self, y: f64) -> f64 {
        (self.carrier)(y)
    }

    pub fn log_density(&self, theta: f64, y: f64) -> f64 {
        theta * y - self.log_partition(theta) + self.carrier(y)
    }

    pub fn loss(&self, theta: f64, y: f64) -> f64 {
        -self.log_density(theta, y)
    }

    pub fn contains(&self, theta: f64) -> bool {
        theta >= self.interval.0 && theta <= self.interval.1
    }

    /// Sampled on 1001 interval points; errors when a bound is infinite,
    /// `inf F″ ≤ 0`, or the mean map is not strictly increasing.
    pub fn ineccsi(&self) -> Result<IneccsiBounds> {
        let (lo, hi) = self.interval;
        if !(lo < hi) || !lo.is_finite() || !hi.is_finite() {
            return invalid("parameter interval must be a finite nondegenerate [lo, hi]");
        }
        let mut b = IneccsiBounds {
            f_min: INF,
            f_max: -INF,
            mean_min: INF,
            mean_max: -INF,
            var_min: INF,
            var_max: -INF,
        };
        let mut prev = -INF;
        for t in lin_grid(lo, hi, 1001) {
            let [f, m, v] = (self.log_partition)(t);
            if !(f.is_finite() && m.is_finite() && v.is_finite()) {
                return invalid(format!("log-partition not finite at θ = {t}"));
            }
            if !(m > prev) {
                return invalid(format!("mean map not increasing at θ = {t}"));
            }
            prev = m;
            b.f_min = b.f_min.min(f);
            b.f_max = b.f_max.max(f);
            b.mean_min = b.mean_min.min(m);
            b.mean_max = b.mean_max.max(m);
            b.var_min = b.var_min.min(v);
            b.var_max = b.var_max.max(v);
        }
        if !(b.var_min > 0.0) {
            return invalid("inf F″ must be positive on the interval");
        }
        Ok(b)
    }

    /// `μ⁻¹(m)` by bisection on the interval.
    pub fn mean_inverse(&self, m: f64) -> Result<f64> {
        let (lo, hi) = self.interval;
        let (mlo, mhi) = (self.mean(lo), self.mean(hi));
        if !(m >= mlo && m <= mhi) {
            return invalid(format!("mean {m} outside the mean-value image [{mlo}, {mhi}]"));
        }
        let (mut a, mut b) = (lo, hi);
        for _ in 0..200 {
            if b - a <= 1e-12 * (1.0 + a.abs().max(b.abs())) {
                break;
            }
            let mid = 0.5 * (a + b);
            if self.mean(mid) < m {
                a = mid;
            } else {
                b = mid;
            }
        }
        Ok(0.5 * (a + b))
    }

    /// Base grid suited to `p_θ`: ±12 standard deviations with 401 nodes on
    /// the real line, the support itself otherwise.
    pub fn default_grid(&self, theta: f64) -> QuadGrid {
        match self.support {
            Support::Real => QuadGrid::centered(self.mean(theta), self.variance(theta).sqrt(), 401, 12.0),
            Support::Binary => QuadGrid::counting(vec![0.0, 1.0]),
            Support::Counts { max } => QuadGrid::counting((0..=max).map(|k| k as f64).collect()),
        }
    }
}

fn ln_factorial(y: f64) -> f64 {
    (1..=y.round() as u64).map(|k| (k as f64).ln()).sum()
}

/// Family registry entry as it appears in experiment JSON.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case", deny_unknown_fields)]
pub enum FamilySpec {
    GaussianLocation { sigma_star: f64, interval: [f64; 2] },
    Bernoulli { interval: [f64; 2] },
    Poisson { interval: [f64; 2], y_max: usize },
}

impl FamilySpec {
    pub fn build(&self) -> Result<ExpFamily> {
        match *self {
            FamilySpec::GaussianLocation { sigma_star, interval } => {
                ExpFamily::gaussian_location(sigma_star, (interval[0], interval[1]))
            }
            FamilySpec::Bernoulli { interval } => ExpFamily::bernoulli((interval[0], interval[1])),
            FamilySpec::Poisson { interval, y_max } => ExpFamily::poisson((interval[0], interval[1]), y_max),
        }
    }
}

/// Quadrature nodes with base-measure weights.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuadGrid {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl QuadGrid {
    /// Uniform nodes on `[lo, hi]`, each weighted by the spacing.
    pub fn uniform(lo: f64, hi: f64, n: usize) -> Self {
        let nodes = lin_grid(lo, hi, n);
        let h = (hi - lo) / (n - 1) as f64;
        QuadGrid {
            weights: vec![h; n],
            nodes,
        }
    }

    pub fn centered(mean: f64, sd: f64, n: usize, width: f64) -> Self {
        Self::uniform(mean - width * sd, mean + width * sd, n)
    }

    pub fn counting(nodes: Vec<f64>) -> Self {
        QuadGrid {
            weights: vec![1.0; nodes.len()],
            nodes,
        }
    }
}

/// A distribution supported on grid nodes, with the normalization defect of
/// the density it was built from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridDistribution {
    pub nodes: Vec<f64>,
    pub probs: Vec<f64>,
    pub defect: f64,
}

impl GridDistribution {
    pub fn from_log_density(grid: &QuadGrid, log_density: impl Fn(f64) -> f64) -> Result<Self> {
        let raw: Vec<f64> = grid
            .nodes
            .iter()
            .zip(&grid.weights)
            .map(|(&y, &w)| log_density(y) + w.ln())
            .collect();
        let lz = log_sum_exp(&raw);
        if !lz.is_finite() {
            return Err(Error::ZeroNormalizer("grid density has no mass".into()));
        }
        Ok(GridDistribution {
            nodes: grid.nodes.clone(),
            probs: raw.iter().map(|&r| (r - lz).exp()).collect(),
            defect: 1.0 - lz.exp(),
        })
    }

    /// Normal distribution on a 401-node grid spanning ±12 standard deviations.
    pub fn gaussian(mean: f64, sd: f64) -> Result<Self> {
        if !(sd > 0.0) {
            return invalid("standard deviation must be positive");
        }
        let lognorm = (2.0 * std::f64::consts::PI).sqrt().ln() + sd.ln();
        Self::from_log_density(&QuadGrid::centered(mean, sd, 401, 12.0), |y| {
            -0.5 * ((y - mean) / sd).powi(2) - lognorm
        })
    }

    pub fn from_probs(nodes: Vec<f64>, probs: Vec<f64>) -> Result<Self> {
        if nodes.len() != probs.len() || nodes.is_empty() {
            return invalid("nodes and probabilities must have equal nonzero length");
        }
        let s: f64 = probs.iter().sum();
        if probs.iter().any(|&p| !(p >= 0.0)) || (s - 1.0).abs() > 1e-12 {
            return invalid("probabilities must be nonnegative and sum to one");
        }
        Ok(GridDistribution {
            nodes,
            probs,
            defect: 0.0,
        })
    }

    pub fn mean(&self) -> f64 {
        self.nodes.iter().zip(&self.probs).map(|(y, p)| y * p).sum()
    }

    pub fn variance(&self) -> f64 {
        let m = self.mean();
        self.nodes.iter().zip(&self.probs).map(|(y, p)| p * (y - m).powi(2)).sum()
    }

    /// `log E[e^{λ(Y − c)}]`.
    pub fn log_mgf_centered(&self, lambda: f64, c: f64) -> f64 {
        let xs: Vec<f64> = self
            .nodes
            .iter()
            .zip(&self.probs)
            .filter(|(_, &p)| p > 0.0)
            .map(|(&y, &p)| p.ln() + lambda * (y - c))
            .collect();
        log_sum_exp(&xs)
    }
}

/// `p_θ` discretized on `grid`, renormalized with the defect recorded.
pub fn expfam_density(fam: &ExpFamily, theta: f64, grid: &QuadGrid) -> Result<GridDistribution> {
    if !fam.contains(theta) {
        return invalid(format!("θ = {theta} outside [{}, {}]", fam.interval.0, fam.interval.1));
    }
    GridDistribution::from_log_density(grid, |y| fam.log_density(theta, y))
}

/// `θ*` with `μ(θ*) = E_P[Y]`.
pub fn expfam_projection(fam: &ExpFamily, p: &GridDistribution) -> Result<f64> {
    fam.mean_inverse(p.mean())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CentralMoment {
    pub theta: f64,
    pub theta_star: f64,
    pub eta: f64,
    pub closed_form: f64,
    pub direct: f64,
    pub log_moment: f64,
}

/// `E_P[e^{−η(loss_θ − loss_θ*)}]` both through the cumulant form
/// `exp(−G(η(θ−θ*)) + ηF(θ*) − ηF(θ))` and by summing over the grid.
pub fn central_moment_expfam(fam: &ExpFamily, p: &GridDistribution, theta: f64, eta: f64) -> Result<CentralMoment> {
    let ts = expfam_projection(fam, p)?;
    central_moment_at(fam, p, theta, ts, eta)
}

fn central_moment_at(fam: &ExpFamily, p: &GridDistribution, theta: f64, ts: f64, eta: f64) -> Result<CentralMoment> {
    if !fam.contains(theta) {
        return invalid(format!("θ = {theta} outside the interval"));
    }
    let d = theta - ts;
    let m = fam.mean(ts);
    // F(θ) − F(θ*) − (θ − θ*)μ(θ*), nonnegative by convexity.
    let bregman = fam.log_partition(theta) - fam.log_partition(ts) - d * m;
    let log_moment = p.log_mgf_centered(eta * d, m) - eta * bregman;
    let df = fam.log_partition(theta) - fam.log_partition(ts);
    let direct = p
        .nodes
        .iter()
        .zip(&p.probs)
        .map(|(&y, &q)| q * (eta * (d * y - df)).exp())
        .sum();
    Ok(CentralMoment {
        theta,
        theta_star: ts,
        eta,
        closed_form: log_moment.exp(),
        direct,
        log_moment,
    })
}

/// Central condition at rate `η` over a parameter grid.
pub fn check_expfam_central(fam: &ExpFamily, p: &GridDistribution, thetas: &[f64], eta: f64) -> Result<ConditionReport> {
    let ts = expfam_projection(fam, p)?;
    let mut worst = (-INF, 0usize);
    for (i, &t) in thetas.iter().enumerate() {
        let lm = central_moment_at(fam, p, t, ts, eta)?.log_moment;
        if lm > worst.0 {
            worst = (lm, i);
        }
    }
    Ok(
        ConditionReport::new(ConditionKind::StrongCentral, -worst.0, Some(worst.1), LOG_MOMENT_TOL)
            .with("eta", eta)
            .with("theta_star", ts)
            .with("max_log_moment", worst.0)
            .with("grid_defect", p.defect),
    )
}

/// Largest grid-certified `η̄` (bisection to `rel_tol`, capped at `cap`).
pub fn expfam_central_eta(fam: &ExpFamily, p: &GridDistribution, thetas: &[f64], rel_tol: f64, cap: f64) -> Result<f64> {
    let ts = expfam_projection(fam, p)?;
    for &t in thetas {
        if !fam.contains(t) {
            return invalid(format!("θ = {t} outside the interval"));
        }
    }
    Ok(max_rate(cap, rel_tol, |eta| {
        thetas
            .iter()
            .all(|&t| central_moment_at(fam, p, t, ts, eta).map_or(false, |c| c.log_moment <= LOG_MOMENT_TOL))
    }))
}

/// Smallest admissible rate over `θ* ± radius·k/points`, `k = 1..=points`:
/// the local variance-ratio limit as the radius shrinks.
pub fn local_eta_limit(fam: &ExpFamily, p: &GridDistribution, radius: f64, points: usize, cap: f64) -> Result<f64> {
    let ts = expfam_projection(fam, p)?;
    let m = fam.mean(ts);
    let mut best = INF;
    for k in 1..=points {
        for sign in [-1.0, 1.0] {
            let t = ts + sign * radius * k as f64 / points as f64;
            if !fam.contains(t) {
                continue;
            }
            let d = t - ts;
            let bregman = fam.log_partition(t) - fam.log_partition(ts) - d * m;
            // log E e^{ηd(Y−m)} / η is increasing in η.
            let g = |eta: f64| p.log_mgf_centered(eta * d, m) / eta - bregman;
            let root = if g(cap) <= 0.0 {
                cap
            } else {
                bisect_rate(0.0, cap, 1e-10, |eta| eta == 0.0 || g(eta) <= 0.0)
            };
            best = best.min(root);
        }
    }
    if best == INF {
        return invalid("no parameter inside the interval within the radius");
    }
    Ok(best)
}

/// Finite problem with predictors `θ ∈ thetas` and outcomes the grid nodes.
pub fn expfam_problem(fam: &ExpFamily, p: &GridDistribution, thetas: &[f64]) -> Result<FiniteProblem> {
    let loss = thetas
        .iter()
        .map(|&t| p.nodes.iter().map(|&y| fam.loss(t, y)).collect())
        .collect();
    FiniteProblem::new(p.probs.clone(), loss)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Link {
    Identity,
    Logit,
    Log,
}

impl Link {
    pub fn inverse(self, a: f64) -> f64 {
        match self {
            Link::Identity => a,
            Link::Logit => 1.0 / (1.0 + (-a).exp()),
            Link::Log => a.exp(),
        }
    }

    pub fn inverse_derivative(self, a: f64) -> f64 {
        match self {
            Link::Identity => 1.0,
            Link::Logit => {
                let m = self.inverse(a);
                m * (1.0 - m)
            }
            Link::Log => a.exp(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DesignPoint {
    pub x: Vec<f64>,
    pub prob: f64,
}

/// `p_β(y|x) = p_{θ_x(β)}(y)` with `μ(θ_x(β)) = g⁻¹(⟨β, x⟩)`.
#[derive(Debug, Clone)]
pub struct GlmSpec {
    pub family: ExpFamily,
    pub link: Link,
    pub design: Vec<DesignPoint>,
    pub beta_grid: Vec<Vec<f64>>,
}

/// True conditional distributions of `Y` given each design point. When
/// `beta_circ` is set the construction claims `E[Y|X] = g⁻¹(⟨β°, X⟩)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JointGrid {
    pub conditionals: Vec<GridDistribution>,
    pub beta_circ: Option<Vec<f64>>,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

impl GlmSpec {
    fn validate(&self, joint: &JointGrid) -> Result<()> {
        if self.design.is_empty() || self.beta_grid.is_empty() {
            return invalid("design and β grid must be nonempty");
        }
        let d = self.design[0].x.len();
        if self.design.iter().any(|p| p.x.len() != d) || self.beta_grid.iter().any(|b| b.len() != d) {
            return invalid("dimension mismatch between design and β grid");
        }
        let s: f64 = self.design.iter().map(|p| p.prob).sum();
        if (s - 1.0).abs() > 1e-12 || self.design.iter().any(|p| !(p.prob >= 0.0)) {
            return invalid("design probabilities must sum to one");
        }
        if joint.conditionals.len() != self.design.len() {
            return invalid("one conditional distribution per design point");
        }
        Ok(())
    }

    pub fn theta(&self, beta: &[f64], x: &[f64]) -> Result<f64> {
        self.family.mean_inverse(self.link.inverse(dot(beta, x)))
    }

    /// Finite problem over joint outcomes `(x, y)`, predictors `β ∈ beta_grid`.
    pub fn to_problem(&self, joint: &JointGrid) -> Result<FiniteProblem> {
        self.validate(joint)?;
        let mut probs = Vec::new();
        for (dp, cond) in self.design.iter().zip(&joint.conditionals) {
            probs.extend(cond.probs.iter().map(|q| q * dp.prob));
        }
        let loss = self
            .beta_grid
            .iter()
            .map(|b| {
                let mut row = Vec::new();
                for (dp, cond) in self.design.iter().zip(&joint.conditionals) {
                    let t = self.theta(b, &dp.x)?;
                    row.extend(cond.nodes.iter().map(|&y| self.family.loss(t, y)));
                }
                Ok(row)
            })
            .collect::<Result<Vec<Vec<f64>>>>()?;
        FiniteProblem::new(probs, loss)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GlmRiskIdentity {
    pub risk_under_p: f64,
    pub risk_under_pstar: f64,
    pub gap: f64,
}

fn conditional_excess(fam: &ExpFamily, q: &GridDistribution, t: f64, t0: f64) -> f64 {
    let df = fam.log_partition(t) - fam.log_partition(t0);
    q.nodes
        .iter()
        .zip(&q.probs)
        .map(|(&y, &p)| p * (-(t - t0) * y + df))
        .sum()
}

/// Excess risk of `β` against `β°` under the true joint and under the model
/// at `β°`; the two agree when the conditional means are well specified.
pub fn glm_risk_identity(glm: &GlmSpec, joint: &JointGrid, beta: &[f64]) -> Result<GlmRiskIdentity> {
    glm.validate(joint)?;
    let Some(bc) = &joint.beta_circ else {
        return Err(Error::Precondition("joint grid lacks the well-specified-mean construction".into()));
    };
    let (mut rp, mut rs) = (0.0, 0.0);
    for (dp, cond) in glm.design.iter().zip(&joint.conditionals) {
        let t = glm.theta(beta, &dp.x)?;
        let t0 = glm.theta(bc, &dp.x)?;
        rp += dp.prob * conditional_excess(&glm.family, cond, t, t0);
        let model = expfam_density(&glm.family, t0, &glm.family.default_grid(t0))?;
        rs += dp.prob * conditional_excess(&glm.family, &model, t, t0);
    }
    Ok(GlmRiskIdentity {
        risk_under_p: rp,
        risk_under_pstar: rs,
        gap: (rp - rs).abs(),
    })
}

/// Checks the three GLM conditions on the grid, then bisects for the largest
/// `η̄` with every conditional central moment at most one.
pub fn glm_central_certificate(glm: &GlmSpec, joint: &JointGrid, rel_tol: f64, cap: f64) -> Result<ConditionReport> {
    glm.validate(joint)?;
    let fam = &glm.family;
    let (mlo, mhi) = (fam.mean(fam.interval.0), fam.mean(fam.interval.1));
    let fail = |msg: String| Ok(ConditionReport::new(ConditionKind::GlmCentral, -1.0, None, 0.0).note(msg));

    let mut deriv_bound: f64 = 0.0;
    for b in &glm.beta_grid {
        for dp in &glm.design {
            let a = dot(b, &dp.x);
            let m = glm.link.inverse(a);
            let dv = glm.link.inverse_derivative(a);
            if !dv.is_finite() || !(m >= mlo && m <= mhi) {
                return fail(format!(
                    "condition 1 fails: inverse link at {a} gives mean {m} outside [{mlo}, {mhi}] or unbounded slope"
                ));
            }
            deriv_bound = deriv_bound.max(dv.abs());
        }
    }

    let Some(bc) = &joint.beta_circ else {
        return fail("condition 3 fails: no well-specified conditional mean supplied".into());
    };
    let mut mean_gap: f64 = 0.0;
    for (dp, cond) in glm.design.iter().zip(&joint.conditionals) {
        mean_gap = mean_gap.max((cond.mean() - glm.link.inverse(dot(bc, &dp.x))).abs());
    }
    if mean_gap > 1e-8 {
        return fail(format!("condition 3 fails: conditional mean off by {mean_gap:e}"));
    }

    // Precompute (θ, θ°) for every (β, x).
    let mut pairs = Vec::new();
    for b in &glm.beta_grid {
        for (i, dp) in glm.design.iter().enumerate() {
            pairs.push((i, glm.theta(b, &dp.x)?, glm.theta(bc, &dp.x)?));
        }
    }
    let log_moment = |eta: f64| -> f64 {
        pairs
            .iter()
            .map(|&(i, t, t0)| {
                central_moment_at(fam, &joint.conditionals[i], t, t0, eta).map_or(INF, |c| c.log_moment)
            })
            .fold(-INF, f64::max)
    };
    if !log_moment(cap).is_finite() {
        return fail("condition 2 fails: conditional moment generating function not finite".into());
    }
    let eta_bar = max_rate(cap, rel_tol, |eta| log_moment(eta) <= LOG_MOMENT_TOL);
    let margin = if eta_bar > 0.0 { 0.0 } else { -1.0 };
    Ok(ConditionReport::new(ConditionKind::GlmCentral, margin, None, 0.0)
        .with("eta_bar", eta_bar)
        .with("inverse_link_derivative_bound", deriv_bound)
        .with("mean_gap", mean_gap))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EntroboundRow {
    pub f: usize,
    pub risk_under_p: f64,
    pub kl: f64,
    pub bound: f64,
    pub holds: bool,
    pub l1: f64,
    pub pinsker_bound: f64,
    pub pinsker_holds: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EntroboundReport {
    pub applicable: bool,
    pub density_ratio: f64,
    pub rows: Vec<EntroboundRow>,
    pub holds: bool,
}

/// `E_P[L_f] ≤ C(KL(P_{f*}‖P_f) + √(2 KL(P_{f*}‖P_f)))` with `C = max dP/dP_{f*}`,
/// for a log-loss problem whose densities are taken against `base_weights`.
pub fn entrobound_check(problem: &FiniteProblem, base_weights: &[f64]) -> Result<EntroboundReport> {
    if base_weights.len() != problem.num_outcomes() {
        return invalid("one base weight per outcome");
    }
    let p = problem.probs();
    let model = |f: usize| -> Vec<f64> {
        problem
            .loss_row(f)
            .iter()
            .zip(base_weights)
            .map(|(&l, &w)| if l == INF { 0.0 } else { (-l).exp() * w })
            .collect()
    };
    let fs = problem.comparator();
    let pstar = model(fs);
    let ratio = p
        .iter()
        .zip(&pstar)
        .filter(|(&a, _)| a > 0.0)
        .map(|(&a, &b)| if b > 0.0 { a / b } else { INF })
        .fold(0.0, f64::max);
    if ratio == INF {
        return Ok(EntroboundReport {
            applicable: false,
            density_ratio: INF,
            rows: Vec::new(),
            holds: false,
        });
    }
    let mut rows = Vec::new();
    for f in 0..problem.num_predictors() {
        let pf = model(f);
        let risk = crate::numeric::expect(p, &problem.excess_vector(f));
        let kl = kl_divergence(&pstar, &pf)?;
        let bound = ratio * (kl + (2.0 * kl).sqrt());
        let l1: f64 = pstar.iter().zip(&pf).map(|(a, b)| (a - b).abs()).sum();
        let pinsker_bound = (2.0 * kl).sqrt();
        rows.push(EntroboundRow {
            f,
            risk_under_p: risk,
            kl,
            bound,
            holds: risk <= bound + 1e-12,
            l1,
            pinsker_bound,
            pinsker_holds: l1 <= pinsker_bound + 1e-12,
        });
    }
    let holds = rows.iter().all(|r| r.holds && r.pinsker_holds);
    Ok(EntroboundReport {
        applicable: true,
        density_ratio: ratio,
        rows,
        holds,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BicDiagnostic {
    pub ns: Vec<usize>,
    pub mean_n_ic: Vec<f64>,
    pub fit: OlsFit,
    /// `|slope − 1| ≤ 0.25` for the regression of `n·IC` on `(d/2η) log n`.
    pub within_tolerance: bool,
}

/// Expected `n·IC_{n,η}` of generalized Bayes under a uniform prior on
/// `thetas` (d = 1), regressed on `(1/2η) log n`.
pub fn bic_slope_diagnostic(
    fam: &ExpFamily,
    p: &GridDistribution,
    thetas: &[f64],
    eta: f64,
    ns: &[usize],
    reps: usize,
    seed: u64,
) -> Result<BicDiagnostic> {
    let ts = expfam_projection(fam, p)?;
    // Comparator on the grid: the element with least excess risk.
    let m = fam.mean(ts);
    let risk = |t: f64| fam.log_partition(t) - t * m;
    let fs = thetas
        .iter()
        .cloned()
        .fold((INF, 0.0), |acc, t| if risk(t) < acc.0 { (risk(t), t) } else { acc })
        .1;
    let prior = vec![1.0 / thetas.len() as f64; thetas.len()];
    let c = cdf(&p.probs);
    let mut means = Vec::with_capacity(ns.len());
    for (j, &n) in ns.iter().enumerate() {
        let vals = mc_map(reps, seed.wrapping_add(j as u64), |_, rng| {
            let sum_y: f64 = draw_sample(rng, &c, n).iter().map(|&i| p.nodes[i]).sum();
            let cum: Vec<f64> = thetas
                .iter()
                .map(|&t| -(t - fs) * sum_y + n as f64 * (fam.log_partition(t) - fam.log_partition(fs)))
                .collect();
            bayes_n_ic(&prior, &cum, eta)
        });
        means.push(mc_stats(&vals).mean);
    }
    let xs: Vec<f64> = ns.iter().map(|&n| (n as f64).ln() / (2.0 * eta)).collect();
    let fit = ols(&xs, &means)?;
    Ok(BicDiagnostic {
        ns: ns.to_vec(),
        mean_n_ic: means,
        within_tolerance: (fit.slope - 1.0).abs() <= 0.25,
        fit,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gaussian_grid_identities() {
        let fam = ExpFamily::gaussian_location(1.5, (-3.0, 3.0)).unwrap();
        for &t in &[-1.0, 0.0, 0.7] {
            let d = expfam_density(&fam, t, &fam.default_grid(t)).unwrap();
            assert!(d.defect.abs() < 1e-8);
            assert!((d.mean() - fam.mean(t)).abs() < 1e-6);
            assert!((d.variance() - fam.variance(t)).abs() < 1e-6);
        }
    }

    #[test]
    fn projection_of_point_mass() {
        let fam = ExpFamily::poisson((-2.0, 3.0), 30).unwrap();
        let p = GridDistribution::from_probs(vec![4.0], vec![1.0]).unwrap();
        let t = expfam_projection(&fam, &p).unwrap();
        assert!((fam.mean(t) - 4.0).abs() < 1e-9);
    }

    #[test]
    fn moment_at_projection_is_one() {
        let fam = ExpFamily::bernoulli((-4.0, 4.0)).unwrap();
        let p = GridDistribution::from_probs(vec![0.0, 1.0], vec![0.3, 0.7]).unwrap();
        let ts = expfam_projection(&fam, &p).unwrap();
        let c = central_moment_expfam(&fam, &p, ts, 0.8).unwrap();
        assert!((c.closed_form - 1.0).abs() < 1e-12);
        let c = central_moment_expfam(&fam, &p, 1.3, 0.8).unwrap();
        assert!((c.closed_form - c.direct).abs() < 1e-10);
    }

    #[test]
    fn family_spec_roundtrip() {
        let s: FamilySpec =
            serde_json::from_str(r#"{"family": "gaussian_location", "sigma_star": 1.0, "interval": [-3, 3]}"#).unwrap();
        assert_eq!(s.build().unwrap().name, "gaussian_location");
        assert!(serde_json::from_str::<FamilySpec>(r#"{"family": "bernoulli", "interval": [-1, 1], "x": 1}"#).is_err());
    }
}
