//! Log-domain special functions shared by the evidence formulas.

use statrs::function::{erf as erf_fn, gamma};

/// Natural log of the gamma function, ln Γ(x).
pub fn ln_gamma(x: f64) -> f64 {
    gamma::ln_gamma(x)
}

/// Natural log of the beta function, ln B(a, b) = ln Γ(a) + ln Γ(b) − ln Γ(a+b).
pub fn ln_beta(a: f64, b: f64) -> f64 {
    gamma::ln_gamma(a) + gamma::ln_gamma(b) - gamma::ln_gamma(a + b)
}

/// Natural log of the binomial coefficient C(n, k), via log-gamma so that
/// counts in the millions stay representable.
pub fn ln_binomial(n: u64, k: u64) -> f64 {
    debug_assert!(k <= n);
    gamma::ln_gamma(n as f64 + 1.0)
        - gamma::ln_gamma(k as f64 + 1.0)
        - gamma::ln_gamma((n - k) as f64 + 1.0)
}

/// Error function.
pub fn erf(x: f64) -> f64 {
    erf_fn::erf(x)
}

/// P(Z² ≤ t) for a standard normal Z, i.e. the chi-square(1) CDF.
pub fn normal_square_cdf(t: f64) -> f64 {
    if t <= 0.0 {
        0.0
    } else {
        erf_fn::erf((0.5 * t).sqrt())
    }
}

/// log(e^a + e^b) without overflow.
pub fn log_add_exp(a: f64, b: f64) -> f64 {
    let (hi, lo) = if a >= b { (a, b) } else { (b, a) };
    if hi == f64::NEG_INFINITY {
        return f64::NEG_INFINITY;
    }
    hi + (lo - hi).exp().ln_1p()
}

/// Numerically stable log(Σᵢ exp(vᵢ)). Returns −∞ for an empty slice or when
/// every term is −∞.
pub fn log_sum_exp(v: &[f64]) -> f64 {
    let m = v.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if m == f64::NEG_INFINITY || m.is_nan() {
        return m;
    }
    m + v.iter().map(|&x| (x - m).exp()).sum::<f64>().ln()
}

/// Log-odds transform, log(p / (1−p)).
pub fn logit(p: f64) -> f64 {
    (p / (1.0 - p)).ln()
}

/// Logistic sigmoid, the inverse of [`logit`].
pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// Kahan compensated accumulator; keeps long sums of like-sized terms at
/// round-off accuracy instead of growing error linearly with the term count.
#[derive(Clone, Copy, Debug, Default)]
pub struct KahanSum {
    sum: f64,
    carry: f64,
}

impl KahanSum {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, v: f64) {
        let y = v - self.carry;
        let t = self.sum + y;
        self.carry = (t - self.sum) - y;
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ln_beta_matches_small_integers() {
        assert!((ln_beta(1.0, 1.0)).abs() < 1e-14);
        assert!((ln_beta(2.0, 3.0) - (1.0f64 / 12.0).ln()).abs() < 1e-14);
    }

    #[test]
    fn ln_binomial_matches_direct() {
        assert!((ln_binomial(6, 2) - 15.0f64.ln()).abs() < 1e-12);
        assert!((ln_binomial(10, 0)).abs() < 1e-12);
    }

    #[test]
    fn log_sum_exp_handles_extremes() {
        assert_eq!(log_sum_exp(&[]), f64::NEG_INFINITY);
        assert_eq!(log_sum_exp(&[f64::NEG_INFINITY; 3]), f64::NEG_INFINITY);
        let v = [1000.0, 1000.0];
        assert!((log_sum_exp(&v) - (1000.0 + 2.0f64.ln())).abs() < 1e-12);
    }

    #[test]
    fn sigmoid_logit_roundtrip() {
        for &p in &[1e-12, 0.3, 0.5, 0.9, 1.0 - 1e-12] {
            assert!((sigmoid(logit(p)) - p).abs() < 1e-12);
        }
    }

    #[test]
    fn kahan_beats_naive_on_long_constant_sum() {
        let n = 2_000_000usize;
        let v = 0.5f64.ln();
        let mut k = KahanSum::new();
        for _ in 0..n {
            k.add(v);
        }
        assert!((k.value() - n as f64 * v).abs() < 1e-9);
    }
}
