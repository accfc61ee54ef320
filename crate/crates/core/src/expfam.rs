//! Canonical exponential families with conjugate priors: evidence,
//! flexibility, information criteria, and hyperparameter matching between
//! nested families.
//!
//! A family is described by its log-partition A(θ) on an open parameter
//! space, the first two derivatives of A, and (when available) the log
//! normalizer log H(τ, m) of the conjugate prior
//! ρ(θ) = H(τ, m) · exp(⟨τ, θ⟩ − m·A(θ)). The only concrete family shipped
//! here is the weighted product-Bernoulli family, which covers independent
//! edge indicators, replicated Bernoulli trials, and the one-parameter
//! graph model obtained by tying all edges together.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::special::{ln_beta, logit, sigmoid};

/// A canonical exponential family: densities h(x)·exp(⟨θ, T(x)⟩ − A(θ)).
pub trait ExpFamily {
    /// Dimension k of the canonical parameter.
    fn rank(&self) -> usize;

    /// Log-partition A(θ).
    fn log_partition(&self, theta: &[f64]) -> f64;

    /// Gradient Ȧ(θ), the mean of T under θ.
    fn log_partition_grad(&self, theta: &[f64]) -> Vec<f64>;

    /// Hessian Ä(θ), the covariance of T under θ; symmetric PSD.
    fn log_partition_hess(&self, theta: &[f64]) -> DMatrix<f64>;

    /// log H(τ, m), the log normalizer of the conjugate prior.
    ///
    /// Errors with [`Error::UndefinedEvidence`] when (τ, m) lies outside
    /// the proper-prior domain and [`Error::Unsupported`] when the family
    /// has no analytic normalizer.
    fn log_normalizer(&self, tau: &[f64], m: f64) -> Result<f64>;

    /// Analytic Ȧ⁻¹ when available; `None` falls back to the safeguarded
    /// Newton solver.
    fn mean_inverse(&self, target: &[f64]) -> Option<Vec<f64>>;

    /// Whether `t` is strictly interior to the convex support of T.
    fn stat_interior(&self, t: &[f64]) -> bool;
}

/// Weighted product-Bernoulli family: A(θ) = Σᵢ cᵢ·log(1 + exp θᵢ).
///
/// Weight cᵢ counts how many exchangeable Bernoulli trials coordinate i
/// aggregates, so Tᵢ ranges over [0, cᵢ]. The conjugate prior factorizes
/// into Beta(τᵢ, m·cᵢ − τᵢ) distributions on the per-trial success
/// probabilities.
#[derive(Clone, Debug)]
pub struct BernoulliFamily {
    weights: Vec<f64>,
}

/// log(1 + e^t) without overflow.
fn softplus(t: f64) -> f64 {
    if t > 0.0 {
        t + (-t).exp().ln_1p()
    } else {
        t.exp().ln_1p()
    }
}

impl BernoulliFamily {
    /// One Bernoulli coordinate per trial.
    pub fn single() -> Self {
        Self {
            weights: vec![1.0],
        }
    }

    /// One coordinate aggregating `n` exchangeable trials
    /// (A(θ) = n·log(1 + e^θ)).
    pub fn replicated(n: f64) -> Self {
        assert!(n > 0.0);
        Self { weights: vec![n] }
    }

    /// `k` independent unit-weight coordinates.
    pub fn product(k: usize) -> Self {
        Self {
            weights: vec![1.0; k],
        }
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// The per-trial Beta shapes (αᵢ, βᵢ) = (τᵢ, m·cᵢ − τᵢ) implied by a
    /// conjugate hyperparameter.
    pub fn beta_shapes(&self, h: &ConjugateHyper) -> Vec<(f64, f64)> {
        self.weights
            .iter()
            .zip(h.tau.iter())
            .map(|(&c, &t)| (t, h.m * c - t))
            .collect()
    }
}

impl ExpFamily for BernoulliFamily {
    fn rank(&self) -> usize {
        self.weights.len()
    }

    fn log_partition(&self, theta: &[f64]) -> f64 {
        self.weights
            .iter()
            .zip(theta.iter())
            .map(|(&c, &t)| c * softplus(t))
            .sum()
    }

    fn log_partition_grad(&self, theta: &[f64]) -> Vec<f64> {
        self.weights
            .iter()
            .zip(theta.iter())
            .map(|(&c, &t)| c * sigmoid(t))
            .collect()
    }

    fn log_partition_hess(&self, theta: &[f64]) -> DMatrix<f64> {
        let k = self.rank();
        let mut h = DMatrix::zeros(k, k);
        for i in 0..k {
            let s = sigmoid(theta[i]);
            h[(i, i)] = self.weights[i] * s * (1.0 - s);
        }
        h
    }

    fn log_normalizer(&self, tau: &[f64], m: f64) -> Result<f64> {
        if tau.len() != self.rank() {
            return Err(Error::Domain(format!(
                "hyperparameter has {} coordinates, family has {}",
                tau.len(),
                self.rank()
            )));
        }
        let mut lh = 0.0;
        for (i, (&c, &t)) in self.weights.iter().zip(tau.iter()).enumerate() {
            let b = m * c - t;
            if !(t > 0.0 && b > 0.0) {
                return Err(Error::UndefinedEvidence(format!(
                    "conjugate hyperparameter ({t}, {b}) of coordinate {} is improper",
                    i + 1
                )));
            }
            lh -= ln_beta(t, b);
        }
        Ok(lh)
    }

    fn mean_inverse(&self, target: &[f64]) -> Option<Vec<f64>> {
        Some(
            self.weights
                .iter()
                .zip(target.iter())
                .map(|(&c, &t)| logit(t / c))
                .collect(),
        )
    }

    fn stat_interior(&self, t: &[f64]) -> bool {
        self.weights
            .iter()
            .zip(t.iter())
            .all(|(&c, &v)| v > 0.0 && v < c)
    }
}

/// Conjugate-prior hyperparameters (τ, m): a prior sufficient statistic
/// and a prior sample size.
#[derive(Clone, Debug, PartialEq)]
pub struct ConjugateHyper {
    pub tau: Vec<f64>,
    pub m: f64,
}

impl ConjugateHyper {
    pub fn new(tau: Vec<f64>, m: f64) -> Self {
        Self { tau, m }
    }

    /// Hyperparameter of a unit-weight Bernoulli coordinate matching a
    /// Beta(α, β) prior on the success probability.
    pub fn from_beta(alpha: f64, beta: f64) -> Self {
        Self {
            tau: vec![alpha],
            m: alpha + beta,
        }
    }
}

/// Observed data reduced to what the family needs: ΣT(xᵢ), the observation
/// count, and Σ log h(xᵢ).
#[derive(Clone, Debug)]
pub struct DataSummary {
    pub t_sum: Vec<f64>,
    pub n_obs: f64,
    pub log_h_sum: f64,
}

impl DataSummary {
    pub fn new(t_sum: Vec<f64>, n_obs: f64) -> Self {
        Self {
            t_sum,
            n_obs,
            log_h_sum: 0.0,
        }
    }

    /// `s` successes among `n` Bernoulli trials of a single coordinate.
    pub fn bernoulli_counts(s: f64, n: f64) -> Self {
        Self::new(vec![s], n)
    }
}

/// Conjugate update: (τ, m) + data → (τ + ΣT, m + n).
pub fn posterior_update(h: &ConjugateHyper, t_sum: &[f64], n_obs: f64) -> ConjugateHyper {
    ConjugateHyper {
        tau: h
            .tau
            .iter()
            .zip(t_sum.iter())
            .map(|(&a, &b)| a + b)
            .collect(),
        m: h.m + n_obs,
    }
}

/// Log-likelihood ⟨θ, ΣT⟩ − n·A(θ) + Σ log h.
pub fn log_likelihood<F: ExpFamily + ?Sized>(f: &F, data: &DataSummary, theta: &[f64]) -> f64 {
    let dot: f64 = theta
        .iter()
        .zip(data.t_sum.iter())
        .map(|(&a, &b)| a * b)
        .sum();
    data.log_h_sum + dot - data.n_obs * f.log_partition(theta)
}

/// Log-evidence Σ log h + log H(τ, m) − log H(τ + ΣT, m + n).
pub fn log_evidence<F: ExpFamily + ?Sized>(
    f: &F,
    h: &ConjugateHyper,
    data: &DataSummary,
) -> Result<f64> {
    let post = posterior_update(h, &data.t_sum, data.n_obs);
    Ok(data.log_h_sum + f.log_normalizer(&h.tau, h.m)? - f.log_normalizer(&post.tau, post.m)?)
}

/// Log-density of the conjugate prior in θ-space:
/// log ρ(θ) = log H(τ, m) + ⟨τ, θ⟩ − m·A(θ).
pub fn log_prior_density<F: ExpFamily + ?Sized>(
    f: &F,
    h: &ConjugateHyper,
    theta: &[f64],
) -> Result<f64> {
    let dot: f64 = theta
        .iter()
        .zip(h.tau.iter())
        .map(|(&a, &b)| a * b)
        .sum();
    Ok(f.log_normalizer(&h.tau, h.m)? + dot - h.m * f.log_partition(theta))
}

/// The flexibility penalty at θ: the log posterior-to-prior density ratio,
/// which satisfies log-evidence = log-likelihood(θ) − flexibility(θ) at every
/// θ, not only at the MAP.
pub fn flexibility<F: ExpFamily + ?Sized>(
    f: &F,
    h: &ConjugateHyper,
    data: &DataSummary,
    theta: &[f64],
) -> Result<f64> {
    let post = posterior_update(h, &data.t_sum, data.n_obs);
    let dot: f64 = theta
        .iter()
        .zip(data.t_sum.iter())
        .map(|(&a, &b)| a * b)
        .sum();
    Ok(f.log_normalizer(&post.tau, post.m)? - f.log_normalizer(&h.tau, h.m)? + dot
        - data.n_obs * f.log_partition(theta))
}

/// MAP estimate θ̂ = Ȧ⁻¹((ΣT + τ) / (n + m)).
pub fn map_estimate<F: ExpFamily + ?Sized>(
    f: &F,
    h: &ConjugateHyper,
    data: &DataSummary,
) -> Result<Vec<f64>> {
    let denom = data.n_obs + h.m;
    let target: Vec<f64> = data
        .t_sum
        .iter()
        .zip(h.tau.iter())
        .map(|(&t, &tau)| (t + tau) / denom)
        .collect();
    invert_mean(f, &target)
}

/// Maximum-likelihood estimate θ̂ = Ȧ⁻¹(ΣT / n).
pub fn mle_estimate<F: ExpFamily + ?Sized>(f: &F, data: &DataSummary) -> Result<Vec<f64>> {
    let target: Vec<f64> = data.t_sum.iter().map(|&t| t / data.n_obs).collect();
    invert_mean(f, &target)
}

fn invert_mean<F: ExpFamily + ?Sized>(f: &F, target: &[f64]) -> Result<Vec<f64>> {
    if !f.stat_interior(target) {
        return Err(Error::Boundary(format!(
            "mean statistic {target:?} is on the boundary of the support"
        )));
    }
    match f.mean_inverse(target) {
        Some(theta) => Ok(theta),
        None => mean_inverse_newton(f, target),
    }
}

/// Solves Ȧ(θ) = target numerically to 10⁻¹² on the statistic scale:
/// bracketing bisection-safeguarded Newton for rank-1 families, damped
/// Newton otherwise.
pub fn mean_inverse_newton<F: ExpFamily + ?Sized>(f: &F, target: &[f64]) -> Result<Vec<f64>> {
    if !f.stat_interior(target) {
        return Err(Error::Boundary(format!(
            "mean statistic {target:?} is on the boundary of the support"
        )));
    }
    let scale = target
        .iter()
        .fold(1.0f64, |acc, &t| acc.max(t.abs()));
    let tol = 1e-12 * scale;
    if f.rank() == 1 {
        return scalar_newton(f, target[0], tol).map(|t| vec![t]);
    }
    let mut theta = vec![0.0; f.rank()];
    let mut resid = residual(f, &theta, target);
    let mut rnorm = inf_norm(&resid);
    for _ in 0..200 {
        if rnorm < tol {
            return Ok(theta);
        }
        let hess = f.log_partition_hess(&theta);
        let r = nalgebra::DVector::from_column_slice(&resid);
        let step = hess
            .lu()
            .solve(&r)
            .ok_or_else(|| Error::Numeric("singular curvature in mean inversion".into()))?;
        let mut t = 1.0;
        loop {
            let cand: Vec<f64> = theta
                .iter()
                .zip(step.iter())
                .map(|(&th, &d)| th - t * d)
                .collect();
            let cr = residual(f, &cand, target);
            let crn = inf_norm(&cr);
            if crn < rnorm {
                theta = cand;
                resid = cr;
                rnorm = crn;
                break;
            }
            t *= 0.5;
            if t < 1e-18 {
                return Err(Error::Numeric(
                    "mean inversion stalled before reaching tolerance".into(),
                ));
            }
        }
    }
    if rnorm < tol {
        Ok(theta)
    } else {
        Err(Error::Numeric("mean inversion did not converge".into()))
    }
}

fn residual<F: ExpFamily + ?Sized>(f: &F, theta: &[f64], target: &[f64]) -> Vec<f64> {
    f.log_partition_grad(theta)
        .iter()
        .zip(target.iter())
        .map(|(&g, &t)| g - t)
        .collect()
}

fn inf_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0f64, |a, &x| a.max(x.abs()))
}

fn scalar_newton<F: ExpFamily + ?Sized>(f: &F, target: f64, tol: f64) -> Result<f64> {
    let g = |t: f64| f.log_partition_grad(&[t])[0];
    // Ȧ is increasing (A convex); expand a bracket around the root.
    let (mut lo, mut hi) = (-1.0f64, 1.0f64);
    while g(lo) >= target {
        lo *= 2.0;
        if lo < -1e6 {
            return Err(Error::Numeric("mean inversion bracket ran away".into()));
        }
    }
    while g(hi) <= target {
        hi *= 2.0;
        if hi > 1e6 {
            return Err(Error::Numeric("mean inversion bracket ran away".into()));
        }
    }
    let mut t = 0.5 * (lo + hi);
    for _ in 0..200 {
        let r = g(t) - target;
        if r.abs() < tol {
            return Ok(t);
        }
        if r > 0.0 {
            hi = t;
        } else {
            lo = t;
        }
        let d = f.log_partition_hess(&[t])[(0, 0)];
        let newton = t - r / d;
        t = if newton.is_finite() && newton > lo && newton < hi {
            newton
        } else {
            0.5 * (lo + hi)
        };
    }
    Err(Error::Numeric("mean inversion did not converge".into()))
}

/// Prior-corrected BIC: log L(θ̂) + log ρ(θ̂) − (k/2)·log n.
pub fn prior_corrected_bic<F: ExpFamily + ?Sized>(
    f: &F,
    h: &ConjugateHyper,
    data: &DataSummary,
) -> Result<f64> {
    let theta = map_estimate(f, h, data)?;
    Ok(log_likelihood(f, data, &theta) + log_prior_density(f, h, &theta)?
        - 0.5 * f.rank() as f64 * data.n_obs.ln())
}

/// Plain BIC: log L(θ̂_MLE) − (k/2)·log n.
pub fn bic_plain<F: ExpFamily + ?Sized>(f: &F, data: &DataSummary) -> Result<f64> {
    let theta = mle_estimate(f, data)?;
    Ok(log_likelihood(f, data, &theta) - 0.5 * f.rank() as f64 * data.n_obs.ln())
}

/// The Kashyap penalty
/// κ(θ̂) = (k/2)·log n − log ρ(θ̂) + ½·log|Ä(θ̂)/(2π)|,
/// the large-n limit of the flexibility at the MAP.
pub fn kashyap_penalty<F: ExpFamily + ?Sized>(
    f: &F,
    h: &ConjugateHyper,
    theta_hat: &[f64],
    n_obs: f64,
) -> Result<f64> {
    let k = f.rank() as f64;
    let hess = f.log_partition_hess(theta_hat);
    let chol = nalgebra::Cholesky::new(hess)
        .ok_or_else(|| Error::Numeric("curvature Ä(θ̂) is not positive definite".into()))?;
    let log_det: f64 = chol.l().diagonal().iter().map(|d| 2.0 * d.ln()).sum();
    Ok(0.5 * k * n_obs.ln() - log_prior_density(f, h, theta_hat)?
        + 0.5 * (log_det - k * (2.0 * std::f64::consts::PI).ln()))
}

/// flexibility(θ̂) − (k/2)·log n; converges to
/// −log ρ(θ₀) + ½·log|Ä(θ₀)/(2π)| as the observation count grows.
pub fn bic_flexibility_gap<F: ExpFamily + ?Sized>(
    f: &F,
    h: &ConjugateHyper,
    data: &DataSummary,
) -> Result<f64> {
    let theta = map_estimate(f, h, data)?;
    Ok(flexibility(f, h, data, &theta)? - 0.5 * f.rank() as f64 * data.n_obs.ln())
}

/// Evidence under the (improper) flat prior on θ:
/// Σ log h − log H(ΣT, n). Errors when the posterior normalizer is
/// undefined (for Bernoulli coordinates: all-success or all-failure data).
pub fn flat_prior_log_evidence<F: ExpFamily + ?Sized>(
    f: &F,
    data: &DataSummary,
) -> Result<f64> {
    Ok(data.log_h_sum - f.log_normalizer(&data.t_sum, data.n_obs)?)
}

/// A full-rank linear map M embedding a nested family's parameter space
/// into a larger one via θ = Mᵀη.
#[derive(Clone, Debug)]
pub struct NestingMap {
    m: DMatrix<f64>,
}

impl NestingMap {
    /// Validates full row rank: smallest singular value must exceed
    /// 10⁻¹⁰ times the largest.
    pub fn new(m: DMatrix<f64>) -> Result<Self> {
        if m.nrows() == 0 || m.ncols() == 0 || m.nrows() > m.ncols() {
            return Err(Error::Domain(format!(
                "nesting map must be ℓ×k with 0 < ℓ ≤ k, found {}×{}",
                m.nrows(),
                m.ncols()
            )));
        }
        let sv = m.clone().svd(false, false).singular_values;
        let max = sv.iter().cloned().fold(0.0f64, f64::max);
        let min = sv.iter().cloned().fold(f64::INFINITY, f64::min);
        if min.is_nan() || min <= 1e-10 * max {
            return Err(Error::Numeric(format!(
                "nesting map is rank deficient (singular values {min:.3e}..{max:.3e})"
            )));
        }
        Ok(Self { m })
    }

    /// The 1×k map that ties all k coordinates together (all-ones row).
    pub fn tie_all(k: usize) -> Self {
        Self {
            m: DMatrix::from_element(1, k, 1.0),
        }
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.m
    }

    pub fn nested_rank(&self) -> usize {
        self.m.nrows()
    }

    pub fn full_rank(&self) -> usize {
        self.m.ncols()
    }
}

/// Projects full-family hyperparameters onto the nested family:
/// (τ, m) ↦ (Mτ, m). This is the KL-optimal nested prior.
pub fn match_down(h: &ConjugateHyper, map: &NestingMap) -> Result<(Vec<f64>, f64)> {
    if h.tau.len() != map.full_rank() {
        return Err(Error::Domain(format!(
            "hyperparameter has {} coordinates, map expects {}",
            h.tau.len(),
            map.full_rank()
        )));
    }
    let tau = nalgebra::DVector::from_column_slice(&h.tau);
    let upsilon = map.matrix() * tau;
    Ok((upsilon.iter().cloned().collect(), h.m))
}

/// Lifts nested-family hyperparameters to the full family:
/// (υ, w) ↦ (Mᵀ(MMᵀ)⁻¹υ, w). This is the KL-optimal full prior.
pub fn match_up(upsilon: &[f64], w: f64, map: &NestingMap) -> Result<ConjugateHyper> {
    if upsilon.len() != map.nested_rank() {
        return Err(Error::Domain(format!(
            "nested hyperparameter has {} coordinates, map expects {}",
            upsilon.len(),
            map.nested_rank()
        )));
    }
    let m = map.matrix();
    let gram = m * m.transpose();
    let u = nalgebra::DVector::from_column_slice(upsilon);
    // A 1×1 Gram system solved by plain division stays exact for the
    // all-ones map, where τᵢ = υ/k must come out bit-identical to 1/k.
    let z = if gram.nrows() == 1 {
        if gram[(0, 0)] == 0.0 {
            return Err(Error::Numeric("MMᵀ is numerically singular".into()));
        }
        nalgebra::DVector::from_element(1, u[0] / gram[(0, 0)])
    } else {
        nalgebra::Cholesky::new(gram)
            .ok_or_else(|| Error::Numeric("MMᵀ is numerically singular".into()))?
            .solve(&u)
    };
    let tau = m.transpose() * z;
    Ok(ConjugateHyper {
        tau: tau.iter().cloned().collect(),
        m: w,
    })
}
