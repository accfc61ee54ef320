//! Adaptive Gauss-Legendre quadrature.
//!
//! Two flavors are provided: a signed linear-space integrator, and a
//! log-space integrator for positive integrands whose values would overflow
//! f64 (evidence integrands have exponents in the thousands). Both refine a
//! panel list globally, always splitting the panel with the largest
//! disagreement between a 15-point rule and an embedded-cost 7-point rule.

use crate::error::{Error, Result};
use crate::special::log_sum_exp;

const GL7_NODES: [f64; 7] = [
    -0.9491079123427585,
    -0.7415311855993945,
    -0.4058451513773972,
    0.0,
    0.4058451513773972,
    0.7415311855993945,
    0.9491079123427585,
];
const GL7_WEIGHTS: [f64; 7] = [
    0.12948496616887065,
    0.2797053914892766,
    0.3818300505051183,
    0.41795918367346896,
    0.3818300505051183,
    0.2797053914892766,
    0.12948496616887065,
];
const GL15_NODES: [f64; 15] = [
    -0.9879925180204854,
    -0.937273392400706,
    -0.8482065834104272,
    -0.7244177313601701,
    -0.5709721726085388,
    -0.3941513470775634,
    -0.20119409399743451,
    0.0,
    0.20119409399743451,
    0.3941513470775634,
    0.5709721726085388,
    0.7244177313601701,
    0.8482065834104272,
    0.937273392400706,
    0.9879925180204854,
];
const GL15_WEIGHTS: [f64; 15] = [
    0.030753241996118647,
    0.07036604748810807,
    0.10715922046717177,
    0.1395706779261539,
    0.16626920581699378,
    0.18616100001556188,
    0.19843148532711125,
    0.2025782419255609,
    0.19843148532711125,
    0.18616100001556188,
    0.16626920581699378,
    0.1395706779261539,
    0.10715922046717177,
    0.07036604748810807,
    0.030753241996118647,
];

const MAX_PANELS: usize = 4000;

/// A point of the open unit interval with its complement and both logs
/// precomputed in a cancellation-free way, so integrands with endpoint
/// singularities like x^(α−1) (1−x)^(β−1) can be evaluated accurately.
#[derive(Clone, Copy, Debug)]
pub struct UnitPoint {
    pub x: f64,
    /// 1 − x, computed without cancellation.
    pub xc: f64,
    pub ln_x: f64,
    pub ln_xc: f64,
}

fn panel_pair<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let mut i15 = 0.0;
    for (t, w) in GL15_NODES.iter().zip(GL15_WEIGHTS.iter()) {
        i15 += w * f(c + h * t);
    }
    let mut i7 = 0.0;
    for (t, w) in GL7_NODES.iter().zip(GL7_WEIGHTS.iter()) {
        i7 += w * f(c + h * t);
    }
    (h * i15, h * i7)
}

fn log_panel_pair<F: Fn(f64) -> f64>(log_f: &F, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let ln_h = h.ln();
    let mut t15 = [0.0f64; 15];
    for (i, (t, w)) in GL15_NODES.iter().zip(GL15_WEIGHTS.iter()).enumerate() {
        t15[i] = ln_h + w.ln() + log_f(c + h * t);
    }
    let mut t7 = [0.0f64; 7];
    for (i, (t, w)) in GL7_NODES.iter().zip(GL7_WEIGHTS.iter()).enumerate() {
        t7[i] = ln_h + w.ln() + log_f(c + h * t);
    }
    (log_sum_exp(&t15), log_sum_exp(&t7))
}

struct Panel {
    a: f64,
    b: f64,
    hi: f64,
    lo: f64,
}

/// Adaptive signed integral of `f` over [a, b].
///
/// The panel list is refined until the summed 15-vs-7-point discrepancy
/// drops below `tol · max(Σ|panel|, 1)`, so `tol` acts relatively for
/// integrals of magnitude above one and absolutely below that.
pub fn integral<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, tol: f64) -> Result<f64> {
    let (hi, lo) = panel_pair(&f, a, b);
    let mut panels = vec![Panel { a, b, hi, lo }];
    loop {
        let scale: f64 = panels.iter().map(|p| p.hi.abs()).sum::<f64>().max(1.0);
        let mut err = 0.0;
        let mut worst = 0usize;
        let mut worst_err = -1.0;
        for (i, p) in panels.iter().enumerate() {
            let e = (p.hi - p.lo).abs();
            if !e.is_finite() {
                return Err(Error::Numeric("non-finite integrand panel".into()));
            }
            err += e;
            if e > worst_err {
                worst_err = e;
                worst = i;
            }
        }
        if err <= tol * scale {
            return Ok(panels.iter().map(|p| p.hi).sum());
        }
        if panels.len() >= MAX_PANELS {
            return Err(Error::Numeric(format!(
                "adaptive quadrature did not reach tolerance {tol:.1e} within {MAX_PANELS} panels"
            )));
        }
        let Panel { a, b, .. } = panels.swap_remove(worst);
        let m = 0.5 * (a + b);
        let (hi, lo) = panel_pair(&f, a, m);
        panels.push(Panel { a, b: m, hi, lo });
        let (hi, lo) = panel_pair(&f, m, b);
        panels.push(Panel { a: m, b, hi, lo });
    }
}

/// Adaptive integral of exp(log_f) over [a, b], returned as a log.
///
/// All arithmetic stays in log space (panels combine through log-sum-exp),
/// so the integrand may peak at exp(±thousands). Refinement stops when the
/// relative linear-space discrepancy falls below `tol`, which bounds the
/// absolute error of the returned log by roughly `tol`.
pub fn log_integral<F: Fn(f64) -> f64>(log_f: F, a: f64, b: f64, tol: f64) -> Result<f64> {
    let (hi, lo) = log_panel_pair(&log_f, a, b);
    let mut panels = vec![Panel { a, b, hi, lo }];
    loop {
        let shift = panels
            .iter()
            .map(|p| p.hi.max(p.lo))
            .fold(f64::NEG_INFINITY, f64::max);
        if shift == f64::NEG_INFINITY {
            return Ok(f64::NEG_INFINITY);
        }
        if !shift.is_finite() {
            return Err(Error::Numeric("non-finite log integrand".into()));
        }
        let mut total = 0.0;
        let mut err = 0.0;
        let mut worst = 0usize;
        let mut worst_err = -1.0;
        for (i, p) in panels.iter().enumerate() {
            let v15 = (p.hi - shift).exp();
            let v7 = (p.lo - shift).exp();
            total += v15;
            let e = (v15 - v7).abs();
            err += e;
            if e > worst_err {
                worst_err = e;
                worst = i;
            }
        }
        if err <= tol * total {
            return Ok(shift + total.ln());
        }
        if panels.len() >= MAX_PANELS {
            return Err(Error::Numeric(format!(
                "adaptive log quadrature did not reach tolerance {tol:.1e} within {MAX_PANELS} panels"
            )));
        }
        let Panel { a, b, .. } = panels.swap_remove(worst);
        let m = 0.5 * (a + b);
        let (hi, lo) = log_panel_pair(&log_f, a, m);
        panels.push(Panel { a, b: m, hi, lo });
        let (hi, lo) = log_panel_pair(&log_f, m, b);
        panels.push(Panel { a: m, b, hi, lo });
    }
}

/// Adaptive log-space integral of exp(log_f) over the open unit interval.
///
/// Uses the substitution x = sin²u over u ∈ [0, π/2], whose Jacobian
/// sin(2u) vanishes at both endpoints and removes the integrable
/// singularities of beta-like kernels with shapes ≥ 1/2. The integrand
/// receives a [`UnitPoint`] carrying ln x and ln(1−x) computed from the
/// trigonometric form, which stays accurate at both ends.
pub fn log_integral_unit<F: Fn(&UnitPoint) -> f64>(log_f: F, tol: f64) -> Result<f64> {
    let g = |u: f64| {
        let (s, c) = u.sin_cos();
        let p = UnitPoint {
            x: s * s,
            xc: c * c,
            ln_x: 2.0 * s.ln(),
            ln_xc: 2.0 * c.ln(),
        };
        log_f(&p) + std::f64::consts::LN_2 + s.ln() + c.ln()
    };
    log_integral(g, 0.0, std::f64::consts::FRAC_PI_2, tol)
}
