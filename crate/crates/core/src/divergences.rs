//! KL, Rényi and Hellinger divergences, the misspecification metric, and
//! the constants that convert Hellinger-type bounds into excess-risk bounds.

use serde::{Deserialize, Serialize};

use crate::conditions::{check_strong_central, check_tau_witness, check_witness, TauFunction};
use crate::error::{invalid, Error, Result};
use crate::esi::{annealed_expectation, hellinger_expectation};
use crate::numeric::{expect, log_mean_exp, INF};
use crate::problem::{Comparator, FiniteProblem};

fn same_len(p: &[f64], q: &[f64]) -> Result<()> {
    if p.len() != q.len() {
        return invalid("vectors differ in length");
    }
    Ok(())
}

/// `KL(p‖q) = Σ p log(p/q)`; `+∞` when `q = 0 < p` somewhere.
pub fn kl_divergence(p: &[f64], q: &[f64]) -> Result<f64> {
    same_len(p, q)?;
    let mut s = 0.0;
    for (&a, &b) in p.iter().zip(q) {
        if a > 0.0 {
            if b <= 0.0 {
                return Ok(INF);
            }
            s += a * (a / b).ln();
        }
    }
    Ok(s.max(0.0))
}

/// Rényi divergence of order `α ∈ (0, 1)`.
pub fn renyi_divergence(p: &[f64], q: &[f64], alpha: f64) -> Result<f64> {
    same_len(p, q)?;
    if !(alpha > 0.0 && alpha < 1.0) {
        return invalid("Rényi order must lie in (0, 1)");
    }
    let s: f64 = p
        .iter()
        .zip(q)
        .filter(|(&a, &b)| a > 0.0 && b > 0.0)
        .map(|(&a, &b)| a.powf(alpha) * b.powf(1.0 - alpha))
        .sum();
    if s <= 0.0 {
        return Ok(INF);
    }
    Ok((s.ln() / (alpha - 1.0)).max(0.0))
}

/// `Σ √(p q)`.
pub fn hellinger_affinity(p: &[f64], q: &[f64]) -> Result<f64> {
    same_len(p, q)?;
    Ok(p.iter().zip(q).map(|(&a, &b)| (a * b).sqrt()).sum())
}

/// Squared Hellinger distance normalized as `2(1 − Σ √(p q))`.
pub fn hellinger_squared(p: &[f64], q: &[f64]) -> Result<f64> {
    Ok((2.0 * (1.0 - hellinger_affinity(p, q)?)).max(0.0))
}

/// `p_{f,η}(z) ∝ p(z)·e^{−η L_f(z)}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TiltedDensity {
    pub base: Vec<f64>,
    pub tilt: Vec<f64>,
    pub eta: f64,
    pub density: Vec<f64>,
}

impl TiltedDensity {
    pub fn new(base: &[f64], tilt: &[f64], eta: f64) -> Result<Self> {
        same_len(base, tilt)?;
        if !(eta > 0.0) {
            return invalid("tilt rate must be positive");
        }
        let m = base
            .iter()
            .zip(tilt)
            .filter(|(&p, &l)| p > 0.0 && l < INF)
            .map(|(_, &l)| l)
            .fold(INF, f64::min);
        if m == INF {
            return Err(Error::ZeroNormalizer("tilted density has no mass".into()));
        }
        let w: Vec<f64> = base
            .iter()
            .zip(tilt)
            .map(|(&p, &l)| if p > 0.0 && l < INF { p * (-eta * (l - m)).exp() } else { 0.0 })
            .collect();
        let s: f64 = w.iter().sum();
        Ok(TiltedDensity {
            base: base.to_vec(),
            tilt: tilt.to_vec(),
            eta,
            density: w.into_iter().map(|x| x / s).collect(),
        })
    }
}

/// `d²_η̄(f, f′) = (2/η̄)(1 − Σ √(p_{f,η̄} p_{f′,η̄}))`.
pub fn misspec_metric(problem: &FiniteProblem, f: usize, f_prime: usize, eta_bar: f64) -> Result<f64> {
    let nf = problem.num_predictors();
    for i in [f, f_prime] {
        if i >= nf {
            return Err(Error::IndexOutOfRange { index: i, len: nf });
        }
    }
    if f == f_prime {
        return Ok(0.0);
    }
    let p = problem.probs();
    let a = TiltedDensity::new(p, &problem.excess_vector(f), eta_bar)?;
    let b = TiltedDensity::new(p, &problem.excess_vector(f_prime), eta_bar)?;
    Ok(hellinger_squared(&a.density, &b.density)? / eta_bar)
}

/// `g_η(r) = η⁻¹(1 − r^η) − (1 − r)`, with `g_0(r) = −log r − (1 − r)`.
pub fn g_eta(eta: f64, r: f64) -> f64 {
    let t = r.ln();
    if t.abs() < 0.1 {
        // Σ_{k≥2} t^k (1 − η^{k−1}) / k!
        let mut s = 0.0;
        let mut term = t;
        let mut ek = 1.0;
        for k in 2..30 {
            term *= t / k as f64;
            ek *= eta;
            s += term * (1.0 - ek);
        }
        s
    } else if eta == 0.0 {
        -t - (1.0 - r)
    } else {
        -(eta * t).exp_m1() / eta + t.exp_m1()
    }
}

/// `h_{η′,η}(r) = g_{η′}(r) / g_η(r)`, extended to `r = 1` by its limit.
pub fn h_ratio(eta_prime: f64, eta: f64, r: f64) -> f64 {
    if r == 1.0 {
        return (1.0 - eta_prime) / (1.0 - eta);
    }
    g_eta(eta_prime, r) / g_eta(eta, r)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RatioConstants {
    pub eta_prime: f64,
    pub eta: f64,
    pub v: f64,
    /// `C_{η′←η}(V) = h_{η′,η}(1/V)`.
    pub c: f64,
    /// `(η/(1−η)) log V + 1/(1−η)` when `η′ = 0`, else `(1/η′ − 1)/(1/η − 1)`.
    pub upper_bound: f64,
}

pub fn ratio_constant(eta_prime: f64, eta: f64, v: f64) -> Result<RatioConstants> {
    if !(0.0 <= eta_prime && eta_prime < eta && eta < 1.0) {
        return invalid("need 0 ≤ η′ < η < 1");
    }
    if !(v > 1.0) || !v.is_finite() {
        return invalid("need 1 < V < ∞");
    }
    let c = if eta_prime == 0.0 {
        let lv = v.ln();
        let vi = 1.0 / v;
        (lv - (1.0 - vi)) / ((1.0 - v.powf(-eta)) / eta - (1.0 - vi))
    } else {
        h_ratio(eta_prime, eta, 1.0 / v)
    };
    let upper_bound = if eta_prime == 0.0 {
        eta / (1.0 - eta) * v.ln() + 1.0 / (1.0 - eta)
    } else {
        (1.0 / eta_prime - 1.0) / (1.0 / eta - 1.0)
    };
    Ok(RatioConstants {
        eta_prime,
        eta,
        v,
        c,
        upper_bound,
    })
}

/// `c_u = (1/c)(ηu + 1)/(1 − η/η̄)`.
pub fn cu_constant(eta: f64, eta_bar: f64, u: f64, c: f64) -> Result<f64> {
    if !(eta > 0.0 && eta < eta_bar) {
        return invalid("need 0 < η < η̄");
    }
    if !(u > 0.0) || !(c > 0.0 && c <= 1.0) {
        return invalid("need u > 0 and c ∈ (0, 1]");
    }
    Ok((eta * u + 1.0) / (c * (1.0 - eta / eta_bar)))
}

/// `c′_{2u} = (1/c)(2ηu + 1)/(1 − 2η/v)`, for `η < v/2`.
pub fn cprime_constant(eta: f64, v: f64, u: f64, c: f64) -> Result<f64> {
    if !(eta > 0.0 && 2.0 * eta < v) {
        return invalid("need 0 < η < v(ε)/2");
    }
    if !(u > 0.0) || !(c > 0.0 && c <= 1.0) {
        return invalid("need u > 0 and c ∈ (0, 1]");
    }
    Ok((2.0 * eta * u + 1.0) / (c * (1.0 - 2.0 * eta / v)))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WongShenComparison {
    pub kappa: f64,
    /// `sup_f E[e^{κ L_f}·1{L_f ≤ −1/κ}]`.
    pub m_prime: f64,
    /// Their bound when `E^he ≤ (1 − e^{−1})²/2`.
    pub bound: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KlHellingerReport {
    pub f: usize,
    pub eta: f64,
    pub eta_bar: f64,
    pub cu: f64,
    pub excess_risk: f64,
    pub hellinger: f64,
    pub annealed: f64,
    /// `c_u E^he − E[L]`.
    pub first_margin: f64,
    /// `c_u E^ann − c_u E^he`.
    pub second_margin: f64,
    pub holds: bool,
}

fn excess_and_transforms(problem: &FiniteProblem, f: usize, eta: f64) -> Result<(f64, f64, f64)> {
    let p = problem.probs();
    let l = problem.excess_vector(f);
    Ok((
        expect(p, &l),
        hellinger_expectation(p, &l, eta)?,
        annealed_expectation(p, &l, eta)?,
    ))
}

/// `E[L_f] ≤ c_u E^he(η)[L_f] ≤ c_u E^ann(η)[L_f]` once central and witness
/// are certified.
pub fn kl_vs_hellinger_bound(
    problem: &FiniteProblem,
    f: usize,
    eta: f64,
    eta_bar: f64,
    u: f64,
    c: f64,
) -> Result<KlHellingerReport> {
    let cu = cu_constant(eta, eta_bar, u, c)?;
    if !check_strong_central(problem, eta_bar)?.holds {
        return Err(Error::Precondition("strong central condition not certified".into()));
    }
    let fs = Comparator::Static(problem.comparator());
    if !check_witness(problem, u, c, &fs)?.holds {
        return Err(Error::Precondition("witness condition not certified".into()));
    }
    let (risk, he, ann) = excess_and_transforms(problem, f, eta)?;
    let scale = 1e-12 * (1.0 + risk.abs());
    let first_margin = cu * he - risk;
    let second_margin = cu * ann - cu * he;
    Ok(KlHellingerReport {
        f,
        eta,
        eta_bar,
        cu,
        excess_risk: risk,
        hellinger: he,
        annealed: ann,
        first_margin,
        second_margin,
        holds: first_margin >= -scale && second_margin >= -scale,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KlHellingerTauReport {
    pub f: usize,
    pub eta: f64,
    pub lambda: f64,
    pub tau_at_lambda: f64,
    pub c_tau: f64,
    pub excess_risk: f64,
    pub hellinger: f64,
    /// `λ ∨ c_{τ(λ)} E^he`.
    pub bound: f64,
    pub holds: bool,
    pub wong_shen: Option<WongShenComparison>,
}

/// `E[L_f] ≤ λ ∨ c_{τ(λ)} E^he(η)[L_f]` under central and `(τ, c)`-witness.
/// `lambda = None` uses `λ = E^he(η)[L_f]`.
#[allow(clippy::too_many_arguments)]
pub fn kl_vs_hellinger_tau(
    problem: &FiniteProblem,
    f: usize,
    eta: f64,
    eta_bar: f64,
    tau: &TauFunction,
    c: f64,
    lambda: Option<f64>,
    wong_shen_kappa: Option<f64>,
) -> Result<KlHellingerTauReport> {
    if !check_strong_central(problem, eta_bar)?.holds {
        return Err(Error::Precondition("strong central condition not certified".into()));
    }
    let fs = Comparator::Static(problem.comparator());
    if !check_tau_witness(problem, tau, c, &fs)?.holds {
        return Err(Error::Precondition("τ-witness condition not certified".into()));
    }
    let (risk, he, _) = excess_and_transforms(problem, f, eta)?;
    let lambda = lambda.unwrap_or(he);
    let (bound, tau_at_lambda, c_tau) = if lambda > 0.0 {
        let t = tau.eval(lambda).0;
        let ct = cu_constant(eta, eta_bar, t, c)?;
        (lambda.max(ct * he), t, ct)
    } else {
        // λ = 0 only when E^he = 0, i.e. L_f = 0 almost surely.
        (0.0, INF, INF)
    };
    let wong_shen = wong_shen_kappa.map(|kappa| {
        let p = problem.probs();
        let m_prime = (0..problem.num_predictors())
            .map(|g| {
                let l = problem.excess_vector(g);
                let v: Vec<f64> = l
                    .iter()
                    .map(|&x| if x <= -1.0 / kappa { (kappa * x).exp() } else { 0.0 })
                    .collect();
                expect(p, &v)
            })
            .fold(0.0, f64::max);
        let regime = 0.5 * (1.0 - (-1.0f64).exp()).powi(2);
        let bound = (he <= regime && he > 0.0).then(|| {
            let k0 = 6.0 + 2.0 * 2f64.ln() / (1.0 - (-1.0f64).exp()).powi(2);
            (k0 + 4.0 / kappa * 2f64.max((m_prime / he).ln())) * he
        });
        WongShenComparison {
            kappa,
            m_prime,
            bound,
        }
    });
    Ok(KlHellingerTauReport {
        f,
        eta,
        lambda,
        tau_at_lambda,
        c_tau,
        excess_risk: risk,
        hellinger: he,
        bound,
        holds: risk <= bound + 1e-12 * (1.0 + risk.abs()),
        wong_shen,
    })
}

/// `log E[e^{κ L_f}]`, the building block of exponential-tail constants.
pub fn log_exp_moment(problem: &FiniteProblem, f: usize, kappa: f64) -> f64 {
    let x: Vec<f64> = problem.excess_vector(f).iter().map(|&l| kappa * l).collect();
    log_mean_exp(problem.probs(), &x)
}
