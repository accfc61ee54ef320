//! Closed-form evidences, MAP values, Bayes factor, BIC, and the
//! selection lower bound for the single-probability and independent-edge
//! graph models.

use crate::error::{Error, Result};
use crate::special::{ln_beta, ln_binomial, normal_square_cdf, KahanSum};

/// Shape parameters of a beta distribution.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BetaParams {
    pub alpha: f64,
    pub beta: f64,
}

impl BetaParams {
    pub fn new(alpha: f64, beta: f64) -> Result<Self> {
        if !(alpha > 0.0 && beta > 0.0) {
            return Err(Error::Domain(format!(
                "beta shapes must be positive, found ({alpha}, {beta})"
            )));
        }
        Ok(Self { alpha, beta })
    }

    /// The flat Beta(1, 1) prior.
    pub fn uniform() -> Self {
        Self {
            alpha: 1.0,
            beta: 1.0,
        }
    }

    pub fn mean(&self) -> f64 {
        self.alpha / (self.alpha + self.beta)
    }
}

/// Possible and observed edge counts of a graph.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct EdgeSummary {
    pub n: u64,
    pub s: u64,
}

impl EdgeSummary {
    pub fn new(n: u64, s: u64) -> Result<Self> {
        if s > n {
            return Err(Error::Domain(format!(
                "{s} observed edges among {n} possible"
            )));
        }
        Ok(Self { n, s })
    }
}

/// Log-evidence of the single-probability model with a Beta(α, β) prior:
/// log B(α+s, β+n−s) − log B(α, β). With the flat prior this equals
/// −log[(n+1)·C(n, s)].
pub fn log_evidence_er(es: EdgeSummary, prior: &BetaParams) -> f64 {
    let (n, s) = (es.n as f64, es.s as f64);
    ln_beta(prior.alpha + s, prior.beta + n - s) - ln_beta(prior.alpha, prior.beta)
}

/// Posterior mode of the edge probability, clamped into [0, 1].
pub fn map_er(es: EdgeSummary, prior: &BetaParams) -> Result<f64> {
    let denom = prior.alpha + prior.beta + es.n as f64 - 2.0;
    if denom <= 0.0 {
        return Err(Error::Domain(format!(
            "posterior mode undefined: α+β+n = {} ≤ 2",
            prior.alpha + prior.beta + es.n as f64
        )));
    }
    Ok(((prior.alpha + es.s as f64 - 1.0) / denom).clamp(0.0, 1.0))
}

/// Log-evidence through the MAP identity
/// log E = log f(A|p) − log ρ(p|A) + log ρ(p), evaluated at the posterior
/// mode. The identity holds at any interior p; [`log_evidence_er`] is the
/// direct route and the two must agree to 10⁻⁸.
pub fn log_evidence_er_via_map(es: EdgeSummary, prior: &BetaParams) -> Result<f64> {
    let p = map_er(es, prior)?;
    if p <= 0.0 || p >= 1.0 {
        return Err(Error::Boundary(format!(
            "posterior mode {p} is on the boundary; use the closed form"
        )));
    }
    Ok(log_evidence_er_identity_at(es, prior, p))
}

/// The MAP-identity route evaluated at an arbitrary interior p.
pub fn log_evidence_er_identity_at(es: EdgeSummary, prior: &BetaParams, p: f64) -> f64 {
    let (n, s) = (es.n as f64, es.s as f64);
    let log_lik = s * p.ln() + (n - s) * (1.0 - p).ln();
    let log_prior = (prior.alpha - 1.0) * p.ln() + (prior.beta - 1.0) * (1.0 - p).ln()
        - ln_beta(prior.alpha, prior.beta);
    let (pa, pb) = (prior.alpha + s, prior.beta + n - s);
    let log_post = (pa - 1.0) * p.ln() + (pb - 1.0) * (1.0 - p).ln() - ln_beta(pa, pb);
    log_lik - log_post + log_prior
}

/// Log-evidence of the independent-edge model: each admissible pair i has
/// its own Beta(αᵢ, βᵢ) prior, and the integral factorizes into
/// Σ aᵢ·log(αᵢ/(αᵢ+βᵢ)) + Σ (1−aᵢ)·log(βᵢ/(αᵢ+βᵢ)).
///
/// Accumulated with compensated summation: with the matched Beta(1/n, 1/n)
/// priors every term is log(1/2) and the total must stay at −n·log 2 to
/// round-off accuracy even for n in the millions.
pub fn log_evidence_ie(a: &[u8], priors: &[BetaParams]) -> Result<f64> {
    if a.len() != priors.len() {
        return Err(Error::Domain(format!(
            "{} edge indicators but {} priors",
            a.len(),
            priors.len()
        )));
    }
    let mut sum = KahanSum::new();
    for (&ai, pr) in a.iter().zip(priors.iter()) {
        let total = pr.alpha + pr.beta;
        sum.add(if ai == 1 {
            (pr.alpha / total).ln()
        } else {
            (pr.beta / total).ln()
        });
    }
    Ok(sum.value())
}

/// The per-edge priors Beta(1/n, 1/n) induced by matching the flat
/// single-probability prior up to the independent-edge model.
pub fn matched_ie_priors(n: u64) -> Vec<BetaParams> {
    let shape = 1.0 / n as f64;
    vec![
        BetaParams {
            alpha: shape,
            beta: shape,
        };
        n as usize
    ]
}

/// Log Bayes factor of the independent-edge model over the flat-prior
/// single-probability model when every edge prior has mean λ:
/// s·log λ + (n−s)·log(1−λ) + log(n+1) + log C(n, s).
pub fn log_bayes_factor_ie_er(es: EdgeSummary, lambda: f64) -> Result<f64> {
    if !(lambda > 0.0 && lambda < 1.0) {
        return Err(Error::Domain(format!(
            "prior mean {lambda} outside (0,1)"
        )));
    }
    let (n, s) = (es.n as f64, es.s as f64);
    Ok(s * lambda.ln()
        + (n - s) * (1.0 - lambda).ln()
        + (n + 1.0).ln()
        + ln_binomial(es.n, es.s))
}

/// The independent-edge BIC, which depends only on the graph size:
/// −(n/2)·log n_v.
pub fn bic_ie(n_v: u64, loops_allowed: bool) -> f64 {
    let n = if loops_allowed {
        n_v * (n_v + 1) / 2
    } else {
        n_v * (n_v - 1) / 2
    };
    -0.5 * n as f64 * (n_v as f64).ln()
}

/// Output of [`ie_selection_lower_bound`]: the probability bound together
/// with the admissible bands it assumes.
#[derive(Clone, Copy, Debug)]
pub struct IeBound {
    /// Lower bound on the probability of selecting the independent-edge
    /// model when it is true.
    pub probability: f64,
    /// Every edge probability must lie inside this open band.
    pub p_band: (f64, f64),
    /// The summed edge probabilities must lie inside this band.
    pub sum_band: (f64, f64),
}

/// Lower bound P(Z² ≤ (1−n^{−δ/2})²·log n) − ε for selecting the
/// independent-edge model, valid when ε > 3.166/√n and δ > 0 and the edge
/// probabilities respect the returned bands.
pub fn ie_selection_lower_bound(n: u64, eps: f64, delta: f64) -> Result<IeBound> {
    let nf = n as f64;
    let eps_floor = 3.166 / nf.sqrt();
    if eps.is_nan() || eps <= eps_floor {
        return Err(Error::Domain(format!(
            "ε = {eps} must exceed 3.166/√n = {eps_floor}"
        )));
    }
    if delta.is_nan() || delta <= 0.0 {
        return Err(Error::Domain(format!("δ = {delta} must be positive")));
    }
    let shrink = 1.0 - nf.powf(-0.5 * delta);
    let threshold = shrink * shrink * nf.ln();
    let probability = normal_square_cdf(threshold) - eps;
    let band = 1.5830 / (eps * nf.sqrt());
    let half_width = (nf.powf(1.0 - delta) * nf.ln()).sqrt();
    Ok(IeBound {
        probability,
        p_band: (band, 1.0 - band),
        sum_band: (0.5 * (nf - half_width), 0.5 * (nf + half_width)),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flat_prior_evidence_small_instance() {
        // ∫ p²(1−p) dp = 1/12.
        let es = EdgeSummary::new(3, 2).unwrap();
        let le = log_evidence_er(es, &BetaParams::uniform());
        assert!((le - (1.0f64 / 12.0).ln()).abs() < 1e-12);
    }

    #[test]
    fn flat_prior_extremes_give_reciprocal_count() {
        for n in [1u64, 3, 10, 100] {
            for s in [0, n] {
                let es = EdgeSummary::new(n, s).unwrap();
                let le = log_evidence_er(es, &BetaParams::uniform());
                assert!((le + ((n + 1) as f64).ln()).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn beta_symmetry() {
        let es = EdgeSummary::new(20, 7).unwrap();
        let flipped = EdgeSummary::new(20, 13).unwrap();
        let pr = BetaParams::new(2.0, 5.0).unwrap();
        let swapped = BetaParams::new(5.0, 2.0).unwrap();
        assert_eq!(
            log_evidence_er(es, &pr),
            log_evidence_er(flipped, &swapped)
        );
    }

    #[test]
    fn map_values_and_clamps() {
        let pr = BetaParams::uniform();
        assert!((map_er(EdgeSummary::new(3, 2).unwrap(), &pr).unwrap() - 2.0 / 3.0).abs() < 1e-15);
        assert_eq!(map_er(EdgeSummary::new(5, 5).unwrap(), &pr).unwrap(), 1.0);
        assert_eq!(map_er(EdgeSummary::new(5, 0).unwrap(), &pr).unwrap(), 0.0);
        // Sub-uniform shapes can push the mode past both ends.
        let tiny = BetaParams::new(0.01, 0.01).unwrap();
        assert_eq!(map_er(EdgeSummary::new(2, 2).unwrap(), &tiny).unwrap(), 1.0);
    }

    #[test]
    fn via_map_matches_closed_form() {
        let es = EdgeSummary::new(100, 37).unwrap();
        let pr = BetaParams::new(2.0, 5.0).unwrap();
        let a = log_evidence_er(es, &pr);
        let b = log_evidence_er_via_map(es, &pr).unwrap();
        assert!((a - b).abs() < 1e-8, "{a} vs {b}");
        // The identity holds away from the mode too.
        let c = log_evidence_er_identity_at(es, &pr, 0.5);
        assert!((a - c).abs() < 1e-10);
    }

    #[test]
    fn via_map_signals_boundary() {
        let es = EdgeSummary::new(4, 4).unwrap();
        assert!(matches!(
            log_evidence_er_via_map(es, &BetaParams::uniform()),
            Err(Error::Boundary(_))
        ));
    }

    #[test]
    fn matched_ie_evidence_is_constant() {
        let n = 10u64;
        let priors = matched_ie_priors(n);
        for a in [[1u8, 1, 0, 0, 1, 0, 1, 1, 1, 0], [0u8; 10], [1u8; 10]] {
            let le = log_evidence_ie(&a, &priors).unwrap();
            assert!((le + n as f64 * std::f64::consts::LN_2).abs() < 1e-12);
        }
    }

    #[test]
    fn single_edge_asymmetric_prior() {
        // ∫ p · 2p dp = 2/3.
        let le = log_evidence_ie(&[1], &[BetaParams::new(2.0, 1.0).unwrap()]).unwrap();
        assert!((le - (2.0f64 / 3.0).ln()).abs() < 1e-14);
        assert_eq!(log_evidence_ie(&[], &[]).unwrap(), 0.0);
    }

    #[test]
    fn bayes_factor_small_instances() {
        // n=3, s=2: E_IE = 1/8 vs E_ER = 1/12, factor 3/2.
        let bf = log_bayes_factor_ie_er(EdgeSummary::new(3, 2).unwrap(), 0.5).unwrap();
        assert!((bf - 1.5f64.ln()).abs() < 1e-12);
        // Complete graph: factor 1/2, the flat model wins.
        let bf = log_bayes_factor_ie_er(EdgeSummary::new(3, 3).unwrap(), 0.5).unwrap();
        assert!((bf - 0.5f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn bayes_factor_concave_with_argmax_at_density() {
        let es = EdgeSummary::new(40, 10).unwrap();
        let grid: Vec<f64> = (1..100).map(|i| i as f64 / 100.0).collect();
        let vals: Vec<f64> = grid
            .iter()
            .map(|&l| log_bayes_factor_ie_er(es, l).unwrap())
            .collect();
        for w in vals.windows(3) {
            assert!(w[0] - 2.0 * w[1] + w[2] <= 1e-9);
        }
        let best = grid[vals
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.partial_cmp(b.1).unwrap())
            .unwrap()
            .0];
        assert!((best - 0.25).abs() < 0.011);
    }

    #[test]
    fn bic_ie_values() {
        assert_eq!(bic_ie(1, true), 0.0);
        assert!((bic_ie(3, true) + 3.0 * 3.0f64.ln()).abs() < 1e-12);
        assert!((bic_ie(4, false) + 3.0 * 4.0f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn bound_monotonicity_and_preconditions() {
        let n = 5050u64;
        assert!(ie_selection_lower_bound(n, 0.01, 0.5).is_err());
        assert!(ie_selection_lower_bound(n, 0.1, 0.0).is_err());
        let b1 = ie_selection_lower_bound(n, 0.1, 0.3).unwrap().probability;
        let b2 = ie_selection_lower_bound(n, 0.1, 0.8).unwrap().probability;
        assert!(b2 > b1, "bound must grow with δ");
        let c1 = ie_selection_lower_bound(n, 0.1, 0.5).unwrap().probability;
        let c2 = ie_selection_lower_bound(n, 0.2, 0.5).unwrap().probability;
        assert!((c1 - c2 - 0.1).abs() < 1e-12, "bound moves one-for-one in ε");
    }

    #[test]
    fn bound_frozen_value() {
        // n_v = 100 with loops: n = 5050.
        let b = ie_selection_lower_bound(5050, 0.1, 0.5).unwrap();
        assert!((b.probability - 0.8899390221376541).abs() < 1e-12);
        assert!((b.p_band.0 - 0.2227589826616104).abs() < 1e-12);
    }
}
