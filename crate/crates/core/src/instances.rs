//! Ready-made learning problems: the comparative counterexamples (truncated
//! to finitely many predictors), Gaussian location problems and random
//! generators used by the property tests.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::expfam::{expfam_problem, ExpFamily, GridDistribution, QuadGrid};
use crate::numeric::lin_grid;
use crate::problem::{FiniteProblem, LossKind};
use crate::rng::dirichlet_ones;

/// `a = 2 − π²/6`.
pub fn bernstein_a() -> f64 {
    2.0 - std::f64::consts::PI.powi(2) / 6.0
}

/// `Σ_{j>J} 1/j²` by Euler–Maclaurin, accurate to `O(J⁻⁷)`.
pub fn inverse_square_tail(j: usize) -> f64 {
    let x = j as f64;
    1.0 / x - 1.0 / (2.0 * x * x) + 1.0 / (6.0 * x.powi(3)) - 1.0 / (30.0 * x.powi(5))
}

/// Squared-loss problem with bounded excess risk but unbounded second
/// moment. Outcomes are `x = 0, 1, …, J` plus one tail outcome carrying
/// the remaining mass `Σ_{j>J} 1/j²`; predictors are `f_1, …, f_J` (index
/// `j − 1`). `Y = 0` surely.
#[derive(Debug, Clone)]
pub struct NoBernsteinBounded {
    pub problem: FiniteProblem,
    pub a: f64,
    pub j_max: usize,
    pub tail_mass: f64,
}

impl NoBernsteinBounded {
    pub fn new(j_max: usize) -> Result<Self> {
        if j_max < 2 {
            return invalid("need J ≥ 2");
        }
        let a = bernstein_a();
        let mut probs = vec![a / 2.0, a / 2.0];
        probs.extend((2..=j_max).map(|j| 1.0 / (j * j) as f64));
        let tail_mass = 1.0 - probs.iter().sum::<f64>();
        probs.push(tail_mass.max(0.0));
        let k = probs.len();
        let mut predictions = Vec::with_capacity(j_max);
        let mut f1 = vec![0.0; k];
        f1[1] = 0.5;
        predictions.push(f1);
        for j in 2..=j_max {
            let mut row = vec![0.0; k];
            row[0] = 1.0;
            row[j] = j as f64;
            predictions.push(row);
        }
        let problem = FiniteProblem::supervised(probs, &vec![0.0; k], predictions, &LossKind::SquaredLoss)?;
        Ok(NoBernsteinBounded {
            problem,
            a,
            j_max,
            tail_mass,
        })
    }

    /// `3a/8 + 1` for every `j > 1`.
    pub fn excess_risk_formula(&self) -> f64 {
        3.0 * self.a / 8.0 + 1.0
    }

    /// `E[L_{f_j}²] = a/2 + a/32 + j²`.
    pub fn second_moment_formula(&self, j: usize) -> f64 {
        self.a / 2.0 + self.a / 32.0 + (j * j) as f64
    }

    /// Tail mass from `π²/6` and from Euler–Maclaurin.
    pub fn tail_formula(&self) -> f64 {
        inverse_square_tail(self.j_max)
    }
}

/// Indicator regression with `P(X = j) = 1/(a′j²)`, `a′ = π²/6`, for
/// `j = 1..J` plus a tail outcome, and `Y ∼ N(0,1)` independent on a grid.
/// Predictors `f_0 ≡ 0` and `f_j = 1{x = j}`.
#[derive(Debug, Clone)]
pub struct NoSmallBall {
    pub problem: FiniteProblem,
    pub j_max: usize,
    pub x_probs: Vec<f64>,
    pub y_grid: GridDistribution,
}

impl NoSmallBall {
    pub fn new(j_max: usize, y_nodes: usize) -> Result<Self> {
        if j_max < 1 || y_nodes < 3 {
            return invalid("need J ≥ 1 and at least three Y nodes");
        }
        let ap = std::f64::consts::PI.powi(2) / 6.0;
        let mut x_probs: Vec<f64> = (1..=j_max).map(|j| 1.0 / (ap * (j * j) as f64)).collect();
        let tail = (1.0 - x_probs.iter().sum::<f64>()).max(0.0);
        x_probs.push(tail);
        let y_grid = GridDistribution::from_log_density(&QuadGrid::centered(0.0, 1.0, y_nodes, 12.0), |y| -0.5 * y * y)?;
        let mut probs = Vec::new();
        let mut targets = Vec::new();
        let mut xs = Vec::new();
        for (i, &px) in x_probs.iter().enumerate() {
            for (&y, &py) in y_grid.nodes.iter().zip(&y_grid.probs) {
                probs.push(px * py);
                targets.push(y);
                xs.push(i + 1);
            }
        }
        let predictions: Vec<Vec<f64>> = (0..=j_max)
            .map(|j| xs.iter().map(|&x| if j > 0 && x == j { 1.0 } else { 0.0 }).collect())
            .collect();
        let problem = FiniteProblem::supervised(probs, &targets, predictions, &LossKind::SquaredLoss)?;
        Ok(NoSmallBall {
            problem,
            j_max,
            x_probs,
            y_grid,
        })
    }

    pub fn p_j(&self, j: usize) -> f64 {
        self.x_probs[j - 1]
    }
}

/// Well-specified normal location family with unit variance: `Y ∼ N(0,1)`
/// on a grid and predictors `N(μ, 1)` for `μ` on a symmetric grid.
#[derive(Debug, Clone)]
pub struct NoBernsteinUnbounded {
    pub problem: FiniteProblem,
    pub means: Vec<f64>,
    pub y_grid: GridDistribution,
}

impl NoBernsteinUnbounded {
    pub fn new(mu_max: f64, mu_points: usize, y_nodes: usize) -> Result<Self> {
        if mu_points % 2 == 0 {
            return invalid("an odd number of means keeps μ = 0 on the grid");
        }
        let fam = ExpFamily::gaussian_location(1.0, (-mu_max, mu_max))?;
        let y_grid = GridDistribution::from_log_density(&QuadGrid::centered(0.0, 1.0, y_nodes, 12.0), |y| -0.5 * y * y)?;
        let means = lin_grid(-mu_max, mu_max, mu_points);
        let problem = expfam_problem(&fam, &y_grid, &means)?;
        Ok(NoBernsteinUnbounded { problem, means, y_grid })
    }
}

/// Gaussian location model `N(θσ*², σ*²)` against truth `N(0, σ²)`,
/// discretized on a `y_nodes` grid over ±`width` true standard deviations.
pub fn gaussian_location_problem(
    sigma: f64,
    sigma_star: f64,
    thetas: &[f64],
    y_nodes: usize,
    width: f64,
) -> Result<(FiniteProblem, GridDistribution)> {
    let lo = thetas.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = thetas.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let fam = ExpFamily::gaussian_location(sigma_star, (lo.min(-1e-9), hi.max(1e-9)))?;
    let grid = QuadGrid::centered(0.0, sigma, y_nodes, width);
    let p = GridDistribution::from_log_density(&grid, |y| -0.5 * (y / sigma).powi(2))?;
    Ok((expfam_problem(&fam, &p, thetas)?, p))
}

/// Serializable description of a random-problem family.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RandomSpec {
    pub outcomes: usize,
    pub predictors: usize,
    pub loss_scale: f64,
}

/// Dirichlet(1) outcome law and losses uniform on `[0, loss_scale]`.
pub fn random_problem<R: Rng + ?Sized>(rng: &mut R, spec: RandomSpec) -> FiniteProblem {
    let probs = dirichlet_ones(rng, spec.outcomes);
    let loss = (0..spec.predictors)
        .map(|_| (0..spec.outcomes).map(|_| spec.loss_scale * rng.random::<f64>()).collect())
        .collect();
    FiniteProblem::new(probs, loss).expect("random problem is valid")
}

/// Random density model with Dirichlet(1) rows; the truth is row 0 so the
/// model is well specified.
pub fn random_log_loss_model<R: Rng + ?Sized>(rng: &mut R, outcomes: usize, predictors: usize) -> (FiniteProblem, Vec<Vec<f64>>) {
    let table: Vec<Vec<f64>> = (0..predictors).map(|_| dirichlet_ones(rng, outcomes)).collect();
    let kind = LossKind::LogLoss {
        table: table.clone(),
        base_weights: vec![1.0; outcomes],
    };
    let problem = FiniteProblem::log_loss(table[0].clone(), &kind).expect("log-loss model is valid");
    (problem, table)
}

/// Pair of strictly positive distributions with `p/q ≤ v` pointwise.
pub fn random_bounded_ratio_pair<R: Rng + ?Sized>(rng: &mut R, outcomes: usize, v: f64) -> (Vec<f64>, Vec<f64>) {
    let q = dirichlet_ones(rng, outcomes);
    // Mix toward q until the ratio bound holds; ratio of a mixture with
    // weight λ on an arbitrary p is at most λ max(p/q) + (1 − λ).
    let raw = dirichlet_ones(rng, outcomes);
    let r = raw.iter().zip(&q).map(|(a, b)| a / b).fold(0.0, f64::max);
    let lambda = if r <= v { 1.0 } else { (v - 1.0) / (r - 1.0) };
    let p: Vec<f64> = raw.iter().zip(&q).map(|(a, b)| lambda * a + (1.0 - lambda) * b).collect();
    (p, q)
}
