//! Structural properties of the conjugate exponential-family layer:
//! the evidence identity, conjugacy, derivative consistency, hyperparameter
//! matching, and the large-sample behavior of the Occam penalty.

use graph_evidence::expfam::{
    bic_flexibility_gap, flexibility, kashyap_penalty, log_evidence, log_likelihood,
    log_prior_density, map_estimate, match_down, match_up, mean_inverse_newton, posterior_update,
    BernoulliFamily, ConjugateHyper, DataSummary, ExpFamily, NestingMap,
};
use graph_evidence::quadrature::{integral, log_integral};
use graph_evidence::special::{ln_beta, logit, sigmoid};
use nalgebra::DMatrix;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn families() -> Vec<BernoulliFamily> {
    vec![
        BernoulliFamily::single(),
        BernoulliFamily::replicated(7.0),
        BernoulliFamily::product(3),
    ]
}

/// A proper hyperparameter: τᵢ strictly inside (0, m·cᵢ).
fn proper_hyper(f: &BernoulliFamily, rng: &mut ChaCha8Rng) -> ConjugateHyper {
    let m = 0.5 + 3.0 * rng.random::<f64>();
    let tau = f
        .weights()
        .iter()
        .map(|&c| m * c * (0.1 + 0.8 * rng.random::<f64>()))
        .collect();
    ConjugateHyper::new(tau, m)
}

fn random_data(f: &BernoulliFamily, rng: &mut ChaCha8Rng) -> DataSummary {
    let n = (1 + rng.random_range(0..40)) as f64;
    let t = f
        .weights()
        .iter()
        .map(|&c| n * c * rng.random::<f64>())
        .collect();
    DataSummary::new(t, n)
}

#[test]
fn evidence_identity_holds_at_every_parameter() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for f in families() {
        let h = proper_hyper(&f, &mut rng);
        let data = random_data(&f, &mut rng);
        let le = log_evidence(&f, &h, &data).unwrap();
        for _ in 0..200 {
            let theta: Vec<f64> = (0..f.rank())
                .map(|_| -6.0 + 12.0 * rng.random::<f64>())
                .collect();
            let ll = log_likelihood(&f, &data, &theta);
            let fx = flexibility(&f, &h, &data, &theta).unwrap();
            assert!(
                (le - (ll - fx)).abs() < 1e-10 * le.abs().max(1.0),
                "identity violated at θ = {theta:?}: {le} vs {}",
                ll - fx
            );
        }
    }
}

#[test]
fn posterior_density_is_prior_times_likelihood_over_evidence() {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    for f in families() {
        let h = proper_hyper(&f, &mut rng);
        let data = random_data(&f, &mut rng);
        let post = posterior_update(&h, &data.t_sum, data.n_obs);
        let le = log_evidence(&f, &h, &data).unwrap();
        for step in 0..13 {
            let t = -3.0 + 0.5 * step as f64;
            let theta = vec![t; f.rank()];
            let lhs = log_prior_density(&f, &post, &theta).unwrap();
            let rhs = log_prior_density(&f, &h, &theta).unwrap()
                + log_likelihood(&f, &data, &theta)
                - le;
            assert!(
                (lhs - rhs).abs() < 1e-9 * lhs.abs().max(1.0),
                "conjugacy violated at θ = {t}: {lhs} vs {rhs}"
            );
        }
    }
}

#[test]
fn log_partition_derivatives_match_finite_differences() {
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    let step = 1e-5;
    for f in families() {
        for _ in 0..20 {
            let theta: Vec<f64> = (0..f.rank())
                .map(|_| -4.0 + 8.0 * rng.random::<f64>())
                .collect();
            let grad = f.log_partition_grad(&theta);
            let hess = f.log_partition_hess(&theta);
            for i in 0..f.rank() {
                let mut up = theta.clone();
                let mut dn = theta.clone();
                up[i] += step;
                dn[i] -= step;
                let fd = (f.log_partition(&up) - f.log_partition(&dn)) / (2.0 * step);
                assert!(
                    (fd - grad[i]).abs() < 1e-5 * grad[i].abs().max(1.0),
                    "gradient coordinate {i}: fd {fd} vs analytic {}",
                    grad[i]
                );
                let gu = f.log_partition_grad(&up);
                let gd = f.log_partition_grad(&dn);
                for j in 0..f.rank() {
                    let fdh = (gu[j] - gd[j]) / (2.0 * step);
                    assert!(
                        (fdh - hess[(j, i)]).abs() < 1e-4 * hess[(j, i)].abs().max(1.0),
                        "hessian ({j},{i}): fd {fdh} vs analytic {}",
                        hess[(j, i)]
                    );
                }
                // Convexity: positive curvature in every coordinate.
                assert!(hess[(i, i)] > 0.0);
            }
        }
    }
}

#[test]
fn tied_hyper_match_is_exact_for_the_flat_prior() {
    for n in [3usize, 10, 250] {
        let map = NestingMap::tie_all(n);
        let nf = n as f64;
        // Flat prior on the shared probability: per-trial Beta(1,1), i.e.
        // nested hyper υ = 1, w = 2/n on the n-trial family.
        let h = match_up(&[1.0], 2.0 / nf, &map).unwrap();
        let full = BernoulliFamily::product(n);
        for (a, b) in full.beta_shapes(&h) {
            assert_eq!(a.to_bits(), (1.0 / nf).to_bits(), "shape α at n = {n}");
            assert_eq!(b.to_bits(), (1.0 / nf).to_bits(), "shape β at n = {n}");
        }
        let (ups, w) = match_down(&h, &map).unwrap();
        assert!((ups[0] - 1.0).abs() < 1e-12);
        assert_eq!(w, 2.0 / nf);
    }
}

#[test]
fn general_matching_round_trips() {
    let m = NestingMap::new(DMatrix::from_row_slice(
        2,
        4,
        &[1.0, 1.0, 0.0, 0.5, 0.0, 2.0, 1.0, -1.0],
    ))
    .unwrap();
    let ups = [0.8, 1.7];
    let w = 3.0;
    let h = match_up(&ups, w, &m).unwrap();
    let (back, wb) = match_down(&h, &m).unwrap();
    for (a, b) in back.iter().zip(ups.iter()) {
        assert!((a - b).abs() < 1e-12);
    }
    assert_eq!(wb, w);
}

#[test]
fn matched_nested_prior_minimizes_kl_divergence() {
    // Full family: two unit-weight coordinates with hyper τ = (1.2, 0.7),
    // m = 2.5. Restricted to the tied line, its density is the nested
    // conjugate prior with (υ*, w*) = (τ₁+τ₂, m); any other nested hyper
    // sits strictly farther in KL. Working in probability space, nested
    // hyper (υ, w) is the Beta(υ, 2w−υ) distribution.
    let full_hyper = ConjugateHyper::new(vec![1.2, 0.7], 2.5);
    let map = NestingMap::tie_all(2);
    let (ups, w) = match_down(&full_hyper, &map).unwrap();
    let (a_star, b_star) = (ups[0], 2.0 * w - ups[0]);
    assert!((a_star - 1.9).abs() < 1e-14);

    // Reference density: the restricted full prior, normalized by
    // quadrature rather than by the beta function.
    let log_kernel = move |p: f64| (a_star - 1.0) * p.ln() + (b_star - 1.0) * (1.0 - p).ln();
    let log_z = log_integral(log_kernel, 0.0, 1.0, 1e-12).unwrap();
    assert!((log_z - ln_beta(a_star, b_star)).abs() < 1e-10);

    let kl = |a: f64, b: f64| -> f64 {
        let lq = move |p: f64| (a - 1.0) * p.ln() + (b - 1.0) * (1.0 - p).ln() - ln_beta(a, b);
        integral(
            |p| {
                let q = lq(p);
                q.exp() * (q - (log_kernel(p) - log_z))
            },
            0.0,
            1.0,
            1e-10,
        )
        .unwrap()
    };

    let at_match = kl(a_star, b_star);
    assert!(at_match.abs() < 1e-6, "matched KL should vanish: {at_match}");
    for (da, db) in [(0.3, 0.0), (-0.3, 0.0), (0.0, 0.4), (-0.2, 0.3)] {
        let off = kl(a_star + da, b_star + db);
        assert!(
            off > at_match + 1e-3,
            "perturbation ({da},{db}) should cost KL: {off} vs {at_match}"
        );
    }
}

#[test]
fn newton_inversion_agrees_with_the_analytic_inverse() {
    let mut rng = ChaCha8Rng::seed_from_u64(14);
    for trial in 0..100 {
        let f = match trial % 3 {
            0 => BernoulliFamily::single(),
            1 => BernoulliFamily::replicated(1.0 + 30.0 * rng.random::<f64>()),
            _ => BernoulliFamily::product(1 + rng.random_range(0..5)),
        };
        let target: Vec<f64> = f
            .weights()
            .iter()
            .map(|&c| c * (0.02 + 0.96 * rng.random::<f64>()))
            .collect();
        let theta = mean_inverse_newton(&f, &target).unwrap();
        for ((&th, &t), &c) in theta.iter().zip(target.iter()).zip(f.weights().iter()) {
            assert!((th - logit(t / c)).abs() < 1e-9, "θ {th} vs {}", logit(t / c));
            assert!(
                (c * sigmoid(th) - t).abs() < 1e-12 * c,
                "statistic mismatch: {} vs {t}",
                c * sigmoid(th)
            );
        }
    }
}

#[test]
fn penalty_gap_approaches_its_limit() {
    let f = BernoulliFamily::single();
    let h = ConjugateHyper::from_beta(1.0, 1.0);
    for (p0, limit) in [
        (0.5f64, -0.22579135264472738),
        (0.3, -0.13861465907233872),
    ] {
        let expected =
            -0.5 * (p0 * (1.0 - p0)).ln() - 0.5 * (2.0 * std::f64::consts::PI).ln();
        assert!((expected - limit).abs() < 1e-15);
        let mut prev = f64::INFINITY;
        for n in [1_000u64, 10_000, 100_000] {
            let s = (p0 * n as f64).round();
            let data = DataSummary::bernoulli_counts(s, n as f64);
            let gap = bic_flexibility_gap(&f, &h, &data).unwrap();
            let err = (gap - limit).abs();
            assert!(err < prev, "gap error should shrink with n: {err} vs {prev}");
            prev = err;
        }
        assert!(prev < 0.01, "gap error at n = 10⁵: {prev}");
    }
}

#[test]
fn kashyap_penalty_is_the_flexibility_limit() {
    let f = BernoulliFamily::single();
    let h = ConjugateHyper::from_beta(1.0, 1.0);
    let n = 100_000.0;
    let data = DataSummary::bernoulli_counts(50_000.0, n);
    let theta = map_estimate(&f, &h, &data).unwrap();
    let fx = flexibility(&f, &h, &data, &theta).unwrap();
    let kp = kashyap_penalty(&f, &h, &theta, n).unwrap();
    assert!((fx - kp).abs() < 1e-4, "flexibility {fx} vs penalty {kp}");
}
