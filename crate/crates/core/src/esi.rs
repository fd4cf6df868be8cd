//! Annealed and Hellinger-transformed expectations and exponential
//! stochastic inequalities (ESIs) on finite spaces.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::numeric::{expect, log_mean_exp, mean_expm1, INF};

/// Default tolerance for exact ESI verdicts.
pub const ESI_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum TransformKind {
    Annealed,
    HellingerTransformed,
    Plain,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TransformedExpectation {
    pub kind: TransformKind,
    pub eta: f64,
    pub value: f64,
}

fn check_eta(eta: f64) -> Result<()> {
    if !(eta > 0.0) {
        return invalid(format!("learning rate must be positive, got {eta}"));
    }
    Ok(())
}

fn check_dims(p: &[f64], values: &[f64]) -> Result<()> {
    if p.len() != values.len() {
        return invalid(format!(
            "dimension mismatch: {} probabilities, {} values",
            p.len(),
            values.len()
        ));
    }
    Ok(())
}

fn scaled(values: &[f64], s: f64) -> Vec<f64> {
    values
        .iter()
        .map(|&v| if v == INF { f64::NEG_INFINITY } else { s * v })
        .collect()
}

/// `E[U]` with `0·∞ = 0`.
pub fn plain_expectation(p: &[f64], values: &[f64]) -> Result<f64> {
    check_dims(p, values)?;
    Ok(expect(p, values))
}

/// `E^ann(η)[U] = −(1/η) log E[e^{−ηU}]`.
pub fn annealed_expectation(p: &[f64], values: &[f64], eta: f64) -> Result<f64> {
    check_eta(eta)?;
    check_dims(p, values)?;
    let l = log_mean_exp(p, &scaled(values, -eta));
    Ok(if l == f64::NEG_INFINITY { INF } else { -l / eta })
}

/// `E^he(η)[U] = (1/η)(1 − E[e^{−ηU}])`.
pub fn hellinger_expectation(p: &[f64], values: &[f64], eta: f64) -> Result<f64> {
    check_eta(eta)?;
    check_dims(p, values)?;
    Ok(-mean_expm1(p, &scaled(values, -eta)) / eta)
}

pub fn transformed_expectation(
    kind: TransformKind,
    p: &[f64],
    values: &[f64],
    eta: f64,
) -> Result<TransformedExpectation> {
    let value = match kind {
        TransformKind::Annealed => annealed_expectation(p, values, eta)?,
        TransformKind::HellingerTransformed => hellinger_expectation(p, values, eta)?,
        TransformKind::Plain => plain_expectation(p, values)?,
    };
    Ok(TransformedExpectation { kind, eta, value })
}

/// `U ⪯_η U′` on a finite space, with its exact moment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EsiStatement {
    pub lhs: Vec<f64>,
    pub rhs: Vec<f64>,
    pub probs: Vec<f64>,
    pub eta: f64,
    /// `E[exp(η(lhs − rhs))]`.
    pub moment: f64,
    pub log_moment: f64,
    pub tol: f64,
    pub holds: bool,
}

/// `η(lhs − rhs)` pointwise; `∞ − ∞` is taken as 0 and `x − ∞` as `−∞`.
fn esi_exponent(lhs: f64, rhs: f64, eta: f64) -> f64 {
    match (lhs == INF, rhs == INF) {
        (true, true) => 0.0,
        (false, true) => f64::NEG_INFINITY,
        (true, false) => INF,
        (false, false) => eta * (lhs - rhs),
    }
}

/// Log of the ESI moment `log E[exp(η(lhs − rhs))]`.
pub fn esi_log_moment(lhs: &[f64], rhs: &[f64], p: &[f64], eta: f64) -> f64 {
    let x: Vec<f64> = lhs.iter().zip(rhs).map(|(&a, &b)| esi_exponent(a, b, eta)).collect();
    log_mean_exp(p, &x)
}

pub fn check_esi(lhs: &[f64], rhs: &[f64], p: &[f64], eta: f64, tol: f64) -> Result<EsiStatement> {
    check_eta(eta)?;
    check_dims(p, lhs)?;
    check_dims(p, rhs)?;
    if !(tol >= 0.0) {
        return invalid("tolerance must be nonnegative");
    }
    let log_moment = esi_log_moment(lhs, rhs, p, eta);
    let moment = log_moment.exp();
    Ok(EsiStatement {
        lhs: lhs.to_vec(),
        rhs: rhs.to_vec(),
        probs: p.to_vec(),
        eta,
        moment,
        log_moment,
        tol,
        holds: moment <= 1.0 + tol,
    })
}

/// From `U ⪯_η a` and `V ⪯_η b` (constant right-hand sides, same space),
/// the statement `U + V ⪯_{η/2} a + b`, checked by its own moment.
pub fn esi_weak_transitivity(s1: &EsiStatement, s2: &EsiStatement) -> Result<EsiStatement> {
    if s1.eta != s2.eta {
        return invalid("statements have different rates");
    }
    if s1.probs != s2.probs {
        return invalid("statements live on different spaces");
    }
    let constant = |v: &[f64]| v.windows(2).all(|w| w[0] == w[1]);
    if !constant(&s1.rhs) || !constant(&s2.rhs) {
        return invalid("weak transitivity needs constant right-hand sides");
    }
    let lhs: Vec<f64> = s1.lhs.iter().zip(&s2.lhs).map(|(a, b)| a + b).collect();
    let rhs: Vec<f64> = s1.rhs.iter().zip(&s2.rhs).map(|(a, b)| a + b).collect();
    check_esi(&lhs, &rhs, &s1.probs, s1.eta / 2.0, s1.tol.max(s2.tol))
}

/// Measured consequences of a holding ESI.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EsiImplications {
    pub mean_lhs: f64,
    pub mean_rhs: f64,
    /// `E[rhs] − E[lhs]`, nonnegative up to `tol/η`.
    pub mean_gap: f64,
    pub k: f64,
    /// `P(lhs > rhs + K/η)`.
    pub tail_probability: f64,
    /// `e^{−K}`.
    pub tail_bound: f64,
    pub mean_ok: bool,
    pub tail_ok: bool,
}

pub fn esi_implications(stmt: &EsiStatement, k: f64) -> Result<EsiImplications> {
    if !stmt.holds {
        return Err(Error::Precondition("the ESI does not hold".into()));
    }
    if !(k > 0.0) {
        return invalid("K must be positive");
    }
    let p = &stmt.probs;
    let mean_lhs = expect(p, &stmt.lhs);
    let mean_rhs = expect(p, &stmt.rhs);
    let mean_gap = mean_rhs - mean_lhs;
    let tail_probability: f64 = stmt
        .lhs
        .iter()
        .zip(&stmt.rhs)
        .zip(p)
        .filter(|((&a, &b), &pz)| pz > 0.0 && esi_exponent(a, b, 1.0) > k / stmt.eta)
        .map(|(_, &pz)| pz)
        .sum();
    let tail_bound = (-k).exp();
    // The moment bound gives E[η(U − U′)] ≤ log(1 + tol) and Markov's
    // inequality gives the tail bound up to the factor (1 + tol).
    let slack = (1.0 + stmt.tol).ln() / stmt.eta + 1e-12 * (1.0 + mean_rhs.abs());
    Ok(EsiImplications {
        mean_lhs,
        mean_rhs,
        mean_gap,
        k,
        tail_probability,
        tail_bound,
        mean_ok: mean_gap >= -slack || (mean_rhs == INF),
        tail_ok: tail_probability <= tail_bound * (1.0 + stmt.tol) + 1e-15,
    })
}

/// Product of two independent finite distributions, first index major.
pub fn product_distribution(p: &[f64], q: &[f64]) -> Vec<f64> {
    p.iter().flat_map(|&a| q.iter().map(move |&b| a * b)).collect()
}

/// Lifts a variable on the first factor of a product space.
pub fn lift_first(u: &[f64], second_len: usize) -> Vec<f64> {
    u.iter().flat_map(|&a| std::iter::repeat(a).take(second_len)).collect()
}

/// Lifts a variable on the second factor of a product space.
pub fn lift_second(v: &[f64], first_len: usize) -> Vec<f64> {
    (0..first_len).flat_map(|_| v.iter().cloned()).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fair_coin_values() {
        let p = [0.5, 0.5];
        let u = [0.0, 1.0];
        let a = annealed_expectation(&p, &u, 1.0).unwrap();
        assert!((a - (-((1.0 + (-1.0f64).exp()) / 2.0).ln())).abs() < 1e-15);
        assert!((a - 0.37988).abs() < 1e-5);
        let h = hellinger_expectation(&p, &u, 1.0).unwrap();
        assert!((h - (1.0 - (-1.0f64).exp()) / 2.0).abs() < 1e-15);
        assert!((h - 0.31606).abs() < 1e-5);
    }

    #[test]
    fn constants_and_infinity() {
        let p = [0.3, 0.7];
        assert!((annealed_expectation(&p, &[2.5, 2.5], 3.0).unwrap() - 2.5).abs() < 1e-14);
        assert_eq!(hellinger_expectation(&p, &[0.0, 0.0], 3.0).unwrap(), 0.0);
        assert_eq!(annealed_expectation(&p, &[INF, INF], 1.0).unwrap(), INF);
        assert!((hellinger_expectation(&p, &[INF, INF], 2.0).unwrap() - 0.5).abs() < 1e-15);
        assert!(annealed_expectation(&p, &[1.0, 1.0], 0.0).is_err());
    }

    #[test]
    fn deterministic_shift_fails() {
        let p = [0.4, 0.6];
        let rhs = [1.0, 2.0];
        let lhs = [1.1, 2.1];
        let s = check_esi(&lhs, &rhs, &p, 2.0, ESI_TOL).unwrap();
        assert!((s.moment - (0.2f64).exp()).abs() < 1e-14);
        assert!(!s.holds);
        let s = check_esi(&rhs, &rhs, &p, 2.0, ESI_TOL).unwrap();
        assert_eq!(s.moment, 1.0);
        assert!(s.holds);
    }

    #[test]
    fn implications_of_equality() {
        let p = [0.4, 0.6];
        let s = check_esi(&[1.0, 2.0], &[1.0, 2.0], &p, 1.0, ESI_TOL).unwrap();
        let imp = esi_implications(&s, (20.0f64).ln()).unwrap();
        assert_eq!(imp.mean_gap, 0.0);
        assert_eq!(imp.tail_probability, 0.0);
        assert!((imp.tail_bound - 0.05).abs() < 1e-15);
    }

    #[test]
    fn product_lifts() {
        let p = product_distribution(&[0.3, 0.7], &[0.5, 0.25, 0.25]);
        assert_eq!(p.len(), 6);
        assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-15);
        assert_eq!(lift_first(&[1.0, 2.0], 3), vec![1.0, 1.0, 1.0, 2.0, 2.0, 2.0]);
        assert_eq!(lift_second(&[1.0, 2.0], 2), vec![1.0, 2.0, 1.0, 2.0]);
    }
}
