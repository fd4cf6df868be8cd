//! GRIP pseudo-losses: mix losses, the simplex optimizer, mini-GRIPs and
//! checks of their central and PPC properties.

use serde::{Deserialize, Serialize};

use crate::conditions::{check_v_ppc, ConditionReport, VFunction};
use crate::error::{invalid, Error, Result};
use crate::esi::hellinger_expectation;
use crate::estimators::WeightVector;
use crate::numeric::{expect, log_sum_exp, INF};
use crate::problem::FiniteProblem;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GripOptions {
    pub max_iter: usize,
    /// Target Frank–Wolfe gap.
    pub tol: f64,
}

impl Default for GripOptions {
    fn default() -> Self {
        GripOptions {
            max_iter: 50_000,
            tol: 1e-8,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GripResult {
    pub eta: f64,
    pub mixing_weights: WeightVector,
    /// `g_η(z) = −(1/η) log Σ_f q_f e^{−η loss_f(z)}`.
    pub grip_loss: Vec<f64>,
    /// `E_P[g_η]`.
    pub objective: f64,
    /// Frank–Wolfe gap at the returned weights; bounds the suboptimality.
    pub opt_gap: f64,
    pub iterations: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MiniGripResult {
    pub f: usize,
    pub eta: f64,
    pub alpha: f64,
    pub grip_loss: Vec<f64>,
    pub objective: f64,
    /// Frank–Wolfe gap on the segment `{f*, f}`.
    pub opt_gap: f64,
}

/// Source of GRIP solutions; lets callers put a cache in front of the solver.
pub trait GripProvider {
    fn grip(&self, problem: &FiniteProblem, eta: f64) -> Result<GripResult>;
}

/// Solves every request from scratch.
#[derive(Debug, Clone, Copy, Default)]
pub struct GripSolver(pub GripOptions);

impl GripProvider for GripSolver {
    fn grip(&self, problem: &FiniteProblem, eta: f64) -> Result<GripResult> {
        compute_grip(problem, eta, &self.0)
    }
}

fn check_eta(eta: f64) -> Result<()> {
    if !(eta > 0.0) || !eta.is_finite() {
        return invalid(format!("learning rate must be positive and finite, got {eta}"));
    }
    Ok(())
}

/// Pointwise mix loss of the predictors under weights `q`.
pub fn mix_loss_rows(rows: &[&[f64]], q: &[f64], eta: f64) -> Vec<f64> {
    let nz = rows[0].len();
    let mut terms = Vec::with_capacity(rows.len());
    (0..nz)
        .map(|z| {
            terms.clear();
            for (row, &w) in rows.iter().zip(q) {
                if w > 0.0 && row[z] < INF {
                    terms.push(w.ln() - eta * row[z]);
                }
            }
            let l = log_sum_exp(&terms);
            if l == f64::NEG_INFINITY {
                INF
            } else {
                -l / eta
            }
        })
        .collect()
}

pub fn mix_loss(problem: &FiniteProblem, q: &WeightVector, eta: f64) -> Result<Vec<f64>> {
    check_eta(eta)?;
    if q.len() != problem.num_predictors() {
        return invalid("weight vector length differs from predictor count");
    }
    let rows: Vec<&[f64]> = problem.loss_matrix().iter().map(|r| r.as_slice()).collect();
    Ok(mix_loss_rows(&rows, q.as_slice(), eta))
}

/// Shifted exponentiated losses on the support of `P`:
/// `r[f][k] = e^{−η(loss_f(z_k) − m_k)}` with `m_k = min_f loss_f(z_k)`.
struct Tilted {
    p: Vec<f64>,
    shift: Vec<f64>,
    r: Vec<Vec<f64>>,
}

impl Tilted {
    fn new(rows: &[&[f64]], probs: &[f64], eta: f64) -> Result<Self> {
        let support: Vec<usize> = (0..probs.len()).filter(|&z| probs[z] > 0.0).collect();
        let mut shift = Vec::with_capacity(support.len());
        for &z in &support {
            let m = rows.iter().map(|row| row[z]).fold(INF, f64::min);
            if m == INF {
                return Err(Error::Precondition(format!(
                    "every predictor has infinite loss at outcome {z}"
                )));
            }
            shift.push(m);
        }
        let r = rows
            .iter()
            .map(|row| {
                support
                    .iter()
                    .zip(&shift)
                    .map(|(&z, &m)| if row[z] == INF { 0.0 } else { (-eta * (row[z] - m)).exp() })
                    .collect()
            })
            .collect();
        Ok(Tilted {
            p: support.iter().map(|&z| probs[z]).collect(),
            shift,
            r,
        })
    }

    fn mixture(&self, q: &[f64]) -> Vec<f64> {
        let mut s = vec![0.0; self.p.len()];
        for (row, &w) in self.r.iter().zip(q) {
            if w > 0.0 {
                for (acc, &x) in s.iter_mut().zip(row) {
                    *acc += w * x;
                }
            }
        }
        s
    }

    fn objective(&self, s: &[f64], eta: f64) -> f64 {
        self.p
            .iter()
            .zip(&self.shift)
            .zip(s)
            .map(|((&p, &m), &x)| p * (m - x.ln() / eta))
            .sum()
    }

    /// `M_f = E[e^{−η(loss_f − mix)}]`; the gradient is `−M/η`.
    fn moments(&self, s: &[f64]) -> Vec<f64> {
        self.r
            .iter()
            .map(|row| {
                row.iter()
                    .zip(s)
                    .zip(&self.p)
                    .map(|((&x, &sz), &p)| p * x / sz)
                    .sum()
            })
            .collect()
    }
}

/// Minimizes `Q ↦ E_P[m^η_Q]` over the simplex by entropic mirror descent
/// with Armijo backtracking; stops once the Frank–Wolfe gap is at most `tol`.
pub fn compute_grip(problem: &FiniteProblem, eta: f64, opts: &GripOptions) -> Result<GripResult> {
    check_eta(eta)?;
    let rows: Vec<&[f64]> = problem.loss_matrix().iter().map(|r| r.as_slice()).collect();
    let (q, gap, iterations) = solve_simplex(&rows, problem.probs(), eta, opts)?;
    let grip_loss = mix_loss_rows(&rows, &q, eta);
    let objective = expect(problem.probs(), &grip_loss);
    Ok(GripResult {
        eta,
        mixing_weights: WeightVector::normalized(q)?,
        grip_loss,
        objective,
        opt_gap: gap,
        iterations,
    })
}

fn solve_simplex(
    rows: &[&[f64]],
    probs: &[f64],
    eta: f64,
    opts: &GripOptions,
) -> Result<(Vec<f64>, f64, usize)> {
    let t = Tilted::new(rows, probs, eta)?;
    let nf = rows.len();
    let mut q = vec![1.0 / nf as f64; nf];
    let mut s = t.mixture(&q);
    let mut step = 1.0;
    let mut gap = INF;
    for it in 0..=opts.max_iter {
        let m = t.moments(&s);
        let mmax = m.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        gap = ((mmax - 1.0) / eta).max(0.0);
        if gap <= opts.tol {
            return Ok((q, gap, it));
        }
        if it == opts.max_iter {
            break;
        }
        let mut accepted = false;
        let mut trial = step * 2.0;
        for _ in 0..80 {
            let mut qn: Vec<f64> = q
                .iter()
                .zip(&m)
                .map(|(&w, &mf)| w * (trial * (mf - mmax)).exp())
                .collect();
            let z: f64 = qn.iter().sum();
            qn.iter_mut().for_each(|w| *w /= z);
            // J(q⁺) − J(q) = −(1/η) Σ p log1p(Σ_f (q⁺_f − q_f) r_f / S)
            let dq: Vec<f64> = qn.iter().zip(&q).map(|(a, b)| a - b).collect();
            let mut diff = 0.0;
            for (k, (&pk, &sk)) in t.p.iter().zip(&s).enumerate() {
                let d: f64 = dq.iter().zip(&t.r).map(|(&d, row)| d * row[k]).sum::<f64>() / sk;
                diff -= pk * d.ln_1p() / eta;
            }
            let decrease: f64 = dq.iter().zip(&m).map(|(&d, &mf)| d * mf).sum::<f64>() / eta;
            if diff <= -1e-4 * decrease {
                q = qn;
                s = t.mixture(&q);
                step = trial;
                accepted = true;
                break;
            }
            trial /= 2.0;
        }
        if !accepted {
            // No representable progress: the iterate is as good as the
            // arithmetic allows.
            break;
        }
    }
    Err(Error::NonConvergence {
        iterations: opts.max_iter,
        gap,
        best: q,
    })
}

/// GRIP restricted to `{f*, f}`: minimizes over `α ∈ [0, 1]` by golden-section
/// search to width `tol`, then compares against both endpoints (ties go to
/// the smaller α).
pub fn compute_mini_grip(problem: &FiniteProblem, f: usize, eta: f64, tol: f64) -> Result<MiniGripResult> {
    check_eta(eta)?;
    if f >= problem.num_predictors() {
        return Err(Error::IndexOutOfRange {
            index: f,
            len: problem.num_predictors(),
        });
    }
    let fs = problem.comparator();
    let rows = [problem.loss_row(fs), problem.loss_row(f)];
    let t = Tilted::new(&rows, problem.probs(), eta)?;
    let phi = |a: f64| t.objective(&t.mixture(&[1.0 - a, a]), eta);
    let alpha = if f == fs {
        0.0
    } else {
        let g = (5f64.sqrt() - 1.0) / 2.0;
        let (mut lo, mut hi) = (0.0f64, 1.0f64);
        let mut x1 = hi - g * (hi - lo);
        let mut x2 = lo + g * (hi - lo);
        let (mut f1, mut f2) = (phi(x1), phi(x2));
        while hi - lo > tol.max(1e-15) {
            if f1 <= f2 {
                hi = x2;
                x2 = x1;
                f2 = f1;
                x1 = hi - g * (hi - lo);
                f1 = phi(x1);
            } else {
                lo = x1;
                x1 = x2;
                f1 = f2;
                x2 = lo + g * (hi - lo);
                f2 = phi(x2);
            }
        }
        let mid = 0.5 * (lo + hi);
        let mut best = (0.0, phi(0.0));
        for a in [mid, 1.0] {
            let v = phi(a);
            if v < best.1 {
                best = (a, v);
            }
        }
        best.0
    };
    let w = [1.0 - alpha, alpha];
    let s = t.mixture(&w);
    let m = t.moments(&s);
    let opt_gap = ((m[0].max(m[1]) - 1.0) / eta).max(0.0);
    let grip_loss = mix_loss_rows(&rows, &w, eta);
    let objective = expect(problem.probs(), &grip_loss);
    Ok(MiniGripResult {
        f,
        eta,
        alpha,
        grip_loss,
        objective,
        opt_gap,
    })
}

/// Mini-GRIP pseudo-losses for every predictor, as a comparator map.
pub fn mini_grip_map(problem: &FiniteProblem, eta: f64, tol: f64) -> Result<Vec<Vec<f64>>> {
    (0..problem.num_predictors())
        .map(|f| compute_mini_grip(problem, f, eta, tol).map(|r| r.grip_loss))
        .collect()
}

/// `a − b` on outcomes; entries at zero-mass outcomes are 0.
fn diff_on_support(a: &[f64], b: &[f64], p: &[f64]) -> Vec<f64> {
    a.iter()
        .zip(b)
        .zip(p)
        .map(|((&x, &y), &pz)| if pz == 0.0 { 0.0 } else { x - y })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GripCentralReport {
    pub eta: f64,
    /// `E[e^{η(g_η − loss_f)}]` per predictor.
    pub moments: Vec<f64>,
    pub max_moment: f64,
    /// `η·opt_gap + tol`.
    pub slack: f64,
    pub holds: bool,
    pub grip_risk: f64,
    pub comparator_risk: f64,
    /// `E[g_η] ≤ E[loss_{f*}]`.
    pub risk_dominated: bool,
}

/// Checks `g_η − loss_f ⪯_η 0` for every `f`, allowing for the optimizer gap.
pub fn verify_grip_central(problem: &FiniteProblem, grip: &GripResult, tol: f64) -> Result<GripCentralReport> {
    let p = problem.probs();
    let moments: Vec<f64> = (0..problem.num_predictors())
        .map(|f| {
            let x: Vec<f64> = grip
                .grip_loss
                .iter()
                .zip(problem.loss_row(f))
                .zip(p)
                .map(|((&g, &l), &pz)| {
                    if pz == 0.0 || l == INF {
                        0.0
                    } else {
                        (grip.eta * (g - l)).exp()
                    }
                })
                .collect();
            expect(p, &x)
        })
        .collect();
    let max_moment = moments.iter().cloned().fold(0.0, f64::max);
    let slack = grip.eta * grip.opt_gap + tol;
    let comparator_risk = problem.risk(problem.comparator())?;
    Ok(GripCentralReport {
        eta: grip.eta,
        max_moment,
        slack,
        holds: max_moment <= 1.0 + slack,
        grip_risk: grip.objective,
        comparator_risk,
        risk_dominated: grip.objective <= comparator_risk + grip.opt_gap + tol,
        moments,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MiniGripComparison {
    pub f: usize,
    pub eta: f64,
    /// `E^he(η)[loss_f − g_{η,f}]`.
    pub lhs: f64,
    /// `E^he(η/2)[loss_f − g_η]`.
    pub rhs: f64,
    pub slack: f64,
    pub holds: bool,
}

/// Compares the Hellinger-transformed excess of `f` over its mini-GRIP with
/// that over the full GRIP at half the rate.
pub fn verify_minigrip_to_grip(
    problem: &FiniteProblem,
    f: usize,
    eta: f64,
    opts: &GripOptions,
) -> Result<MiniGripComparison> {
    let mini = compute_mini_grip(problem, f, eta, 1e-12)?;
    let grip = compute_grip(problem, eta, opts)?;
    let p = problem.probs();
    let lf = problem.loss_row(f);
    let lhs = hellinger_expectation(p, &diff_on_support(lf, &mini.grip_loss, p), eta)?;
    let rhs = hellinger_expectation(p, &diff_on_support(lf, &grip.grip_loss, p), eta / 2.0)?;
    let slack = grip.opt_gap + mini.opt_gap + 1e-9;
    Ok(MiniGripComparison {
        f,
        eta,
        lhs,
        rhs,
        slack,
        holds: lhs <= rhs + slack,
    })
}

/// How a loss above `loss_{f*} + u` is replaced.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Truncation {
    /// `min(loss_f, loss_{f*} + u)`.
    Clip,
    /// `loss_f` where `loss_f ≤ loss_{f*} + u`, else `loss_{f*}`.
    Reset,
}

/// The smaller-loss problem obtained by truncating excess losses at `u`.
pub fn truncated_problem(problem: &FiniteProblem, u: f64, kind: Truncation) -> Result<FiniteProblem> {
    if !(u > 0.0) {
        return invalid("truncation level must be positive");
    }
    let fs = problem.comparator();
    let base = problem.loss_row(fs);
    let loss = problem
        .loss_matrix()
        .iter()
        .map(|row| {
            row.iter()
                .zip(base)
                .map(|(&l, &b)| {
                    if b == INF || l <= b + u {
                        l
                    } else {
                        match kind {
                            Truncation::Clip => b + u,
                            Truncation::Reset => b,
                        }
                    }
                })
                .collect()
        })
        .collect();
    problem.with_loss(loss, Some(fs))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PpcTransferReport {
    pub smaller: ConditionReport,
    pub original: ConditionReport,
    /// Certified on the smaller problem and confirmed on the original.
    pub transfers: bool,
}

/// v-PPC on a pointwise smaller-loss problem implies v-PPC on the original.
pub fn verify_ppc_smaller_loss(
    problem: &FiniteProblem,
    smaller: &FiniteProblem,
    v: &VFunction,
    eps_grid: &[f64],
    provider: &dyn GripProvider,
) -> Result<PpcTransferReport> {
    if problem.num_predictors() != smaller.num_predictors()
        || problem.num_outcomes() != smaller.num_outcomes()
        || problem.probs() != smaller.probs()
    {
        return Err(Error::Precondition("problems must share P and the predictor index set".into()));
    }
    let fs = problem.comparator();
    if smaller.loss_row(fs) != problem.loss_row(fs) {
        return Err(Error::Precondition("the comparator loss must be unchanged".into()));
    }
    for (a, b) in smaller.loss_matrix().iter().zip(problem.loss_matrix()) {
        if a.iter().zip(b).any(|(x, y)| x > y) {
            return Err(Error::Precondition("modified loss exceeds the original loss".into()));
        }
    }
    let smaller_rep = check_v_ppc(smaller, v, eps_grid, provider)?;
    let original = check_v_ppc(problem, v, eps_grid, provider)?;
    Ok(PpcTransferReport {
        transfers: !smaller_rep.holds || original.holds,
        smaller: smaller_rep,
        original,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PpcGapPoint {
    pub eta: f64,
    /// `E[loss_{f*}] − E[g_η]`.
    pub gap: f64,
    pub opt_gap: f64,
}

/// PPC gap `E[loss_{f*} − g_η]` along a grid of rates.
pub fn ppc_gap_curve(problem: &FiniteProblem, etas: &[f64], provider: &dyn GripProvider) -> Result<Vec<PpcGapPoint>> {
    let rf = problem.risk(problem.comparator())?;
    etas.iter()
        .map(|&eta| {
            let g = provider.grip(problem, eta)?;
            Ok(PpcGapPoint {
                eta,
                gap: rf - g.objective,
                opt_gap: g.opt_gap,
            })
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SlowRateReport {
    pub eta: f64,
    pub u: f64,
    pub positive_thinking: bool,
    /// `E[loss_{f*} − g_η]`.
    pub gap: f64,
    /// `η·e·(u² + 1.5·E[loss_{f*}²])`.
    pub bound: f64,
    pub holds: bool,
}

/// Checks the PPC gap bound for nonnegative losses at `η ≤ 1/E[loss_{f*}]`.
pub fn check_slowrate(problem: &FiniteProblem, u: f64, eta: f64, provider: &dyn GripProvider) -> Result<SlowRateReport> {
    let p = problem.probs();
    if problem
        .loss_matrix()
        .iter()
        .any(|row| row.iter().zip(p).any(|(&l, &pz)| pz > 0.0 && l < 0.0))
    {
        return Err(Error::Precondition("losses must be nonnegative".into()));
    }
    let fs = problem.comparator();
    let lstar = problem.loss_row(fs);
    let r_star = expect(p, lstar);
    if r_star > 0.0 && eta > 1.0 / r_star * (1.0 + 1e-12) {
        return Err(Error::Precondition("η must not exceed 1/E[loss_{f*}]".into()));
    }
    let positive_thinking = (0..problem.num_predictors()).all(|f| {
        let l = problem.excess_vector(f);
        let m = expect(p, &l);
        if !(m > 0.0) {
            return true;
        }
        let trunc: Vec<f64> = l.iter().map(|&x| if x <= u { x } else { 0.0 }).collect();
        expect(p, &trunc) > 0.0
    });
    let sq: Vec<f64> = lstar.iter().map(|&x| x * x).collect();
    let bound = eta * std::f64::consts::E * (u * u + 1.5 * expect(p, &sq));
    let g = provider.grip(problem, eta)?;
    let gap = r_star - g.objective;
    Ok(SlowRateReport {
        eta,
        u,
        positive_thinking,
        gap,
        bound,
        holds: gap <= bound + g.opt_gap + 1e-12,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mix_loss_hand_value() {
        let p = FiniteProblem::new(vec![1.0], vec![vec![0.0], vec![4f64.ln()]]).unwrap();
        let m = mix_loss(&p, &WeightVector::uniform(2), 1.0).unwrap();
        assert!((m[0] - (-(5.0f64 / 8.0).ln())).abs() < 1e-15);
        assert!((m[0] - 0.4700).abs() < 1e-4);
        let m = mix_loss(&p, &WeightVector::point_mass(2, 1), 1.0).unwrap();
        assert_eq!(m[0], 4f64.ln());
    }

    #[test]
    fn singleton_grip() {
        let p = FiniteProblem::new(vec![0.3, 0.7], vec![vec![1.0, 2.0]]).unwrap();
        let g = compute_grip(&p, 0.7, &GripOptions::default()).unwrap();
        assert_eq!(g.opt_gap, 0.0);
        assert!((g.grip_loss[0] - 1.0).abs() < 1e-15 && (g.grip_loss[1] - 2.0).abs() < 1e-15);
    }

    #[test]
    fn dominated_predictor_gets_alpha_zero() {
        let p = FiniteProblem::new(vec![0.5, 0.5], vec![vec![0.0, 1.0], vec![0.5, 1.5]]).unwrap();
        let m = compute_mini_grip(&p, 1, 1.0, 1e-10).unwrap();
        assert_eq!(m.alpha, 0.0);
        assert_eq!(compute_mini_grip(&p, 0, 1.0, 1e-10).unwrap().alpha, 0.0);
    }

    #[test]
    fn infinite_losses_are_kept_in_the_mixture() {
        let p = FiniteProblem::new(vec![0.5, 0.5], vec![vec![0.0, 2.0], vec![INF, 0.0]]).unwrap();
        let g = compute_grip(&p, 1.0, &GripOptions::default()).unwrap();
        assert!(g.grip_loss.iter().all(|x| x.is_finite()));
        let rep = verify_grip_central(&p, &g, 1e-9).unwrap();
        assert!(rep.holds && rep.risk_dominated);
    }
}
