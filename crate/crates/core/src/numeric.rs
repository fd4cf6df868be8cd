//! Extended-real helpers and stable exponential sums.
//!
//! Losses live in `[−∞, +∞]` but only `+∞` is legal inside a problem. The
//! conventions are the measure-theoretic ones: `0·∞ = 0`, `exp(−η·∞) = 0`.

/// The `+∞` sentinel used for infinite losses.
pub const INF: f64 = f64::INFINITY;

/// `p·x` with the convention `0·∞ = 0`.
#[inline]
pub fn mass_times(p: f64, x: f64) -> f64 {
    if p == 0.0 {
        0.0
    } else {
        p * x
    }
}

/// `Σ p(z)·v(z)` with `0·∞ = 0`.
pub fn expect(p: &[f64], v: &[f64]) -> f64 {
    debug_assert_eq!(p.len(), v.len());
    p.iter().zip(v).map(|(&p, &x)| mass_times(p, x)).sum()
}

/// `log Σ exp(x_i)`, `−∞` when empty or all entries are `−∞`.
pub fn log_sum_exp(xs: &[f64]) -> f64 {
    let m = xs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if m == f64::NEG_INFINITY || m == INF {
        return m;
    }
    m + xs.iter().map(|x| (x - m).exp()).sum::<f64>().ln()
}

/// `log Σ_z p(z)·exp(x(z))` over mass-carrying entries.
///
/// When every exponent is small the sum is formed as `log1p(Σ p·expm1(x))`,
/// which keeps full relative precision as `x → 0` (needed for the η → 0
/// limits and for tiny parameter neighbourhoods).
pub fn log_mean_exp(p: &[f64], x: &[f64]) -> f64 {
    debug_assert_eq!(p.len(), x.len());
    let mut m = f64::NEG_INFINITY;
    let mut small = true;
    for (&pz, &xz) in p.iter().zip(x) {
        if pz > 0.0 {
            m = m.max(xz);
            if !(xz.abs() < 0.5) {
                small = false;
            }
        }
    }
    if m == f64::NEG_INFINITY || m == INF {
        return m;
    }
    if small {
        let total: f64 = p.iter().sum();
        let s: f64 = p
            .iter()
            .zip(x)
            .filter(|(&pz, _)| pz > 0.0)
            .map(|(&pz, &xz)| pz * xz.exp_m1())
            .sum();
        return (s + (total - 1.0)).ln_1p();
    }
    let s: f64 = p
        .iter()
        .zip(x)
        .filter(|(&pz, _)| pz > 0.0)
        .map(|(&pz, &xz)| pz * (xz - m).exp())
        .sum();
    m + s.ln()
}

/// `Σ_z p(z)·exp(x(z)) − 1` accurately for small exponents.
pub fn mean_expm1(p: &[f64], x: &[f64]) -> f64 {
    let total: f64 = p.iter().sum();
    let s: f64 = p
        .iter()
        .zip(x)
        .filter(|(&pz, _)| pz > 0.0)
        .map(|(&pz, &xz)| pz * xz.exp_m1())
        .sum();
    s + (total - 1.0)
}

/// Pairwise (cascade) summation; the result depends only on the order of `xs`.
pub fn pairwise_sum(xs: &[f64]) -> f64 {
    if xs.len() <= 16 {
        return xs.iter().sum();
    }
    let mid = xs.len() / 2;
    pairwise_sum(&xs[..mid]) + pairwise_sum(&xs[mid..])
}

/// Relative/absolute closeness test used throughout the checks.
pub fn close(a: f64, b: f64, tol: f64) -> bool {
    if a == b {
        return true;
    }
    (a - b).abs() <= tol * (1.0 + a.abs().max(b.abs()))
}

/// `n` points spaced evenly on a log scale between `lo` and `hi` (inclusive).
pub fn log_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    assert!(lo > 0.0 && hi >= lo && n >= 1);
    if n == 1 {
        return vec![lo];
    }
    let (a, b) = (lo.ln(), hi.ln());
    (0..n)
        .map(|i| (a + (b - a) * i as f64 / (n - 1) as f64).exp())
        .collect()
}

/// `n` evenly spaced points on `[lo, hi]` (inclusive).
pub fn lin_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![lo];
    }
    (0..n)
        .map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64)
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_times_infinity_is_zero() {
        assert_eq!(mass_times(0.0, INF), 0.0);
        assert_eq!(expect(&[0.5, 0.5, 0.0], &[1.0, 3.0, INF]), 2.0);
        assert_eq!(expect(&[0.5, 0.5], &[1.0, INF]), INF);
    }

    #[test]
    fn log_mean_exp_branches_agree() {
        let p = [0.2, 0.3, 0.5];
        let x = [0.1, -0.2, 0.3];
        let direct = (0.2f64 * 0.1f64.exp() + 0.3 * (-0.2f64).exp() + 0.5 * 0.3f64.exp()).ln();
        assert!((log_mean_exp(&p, &x) - direct).abs() < 1e-15);
        let x = [10.0, -800.0, 2.0];
        let direct = 10.0 + (0.2 + 0.5 * (-8.0f64).exp()).ln();
        assert!((log_mean_exp(&p, &x) - direct).abs() < 1e-13);
        assert_eq!(log_mean_exp(&p, &[f64::NEG_INFINITY; 3]), f64::NEG_INFINITY);
    }

    #[test]
    fn pairwise_sum_matches_naive_on_integers() {
        let xs: Vec<f64> = (0..1000).map(|i| i as f64).collect();
        assert_eq!(pairwise_sum(&xs), 499_500.0);
    }
}
