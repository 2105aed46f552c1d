mod common;

use common::*;
use gpfc_core::gp::{self, grad_log_marginal_likelihood};
use gpfc_core::kernels::{build_cross, build_gram, eval_kernel, grad_gram};
use gpfc_core::metrics::{crps_gaussian, mae, test_log_likelihood};
use gpfc_core::priors::{grad_log_prior, log_prior};
use gpfc_core::trainer::{map_objective, map_objective_and_gradient};
use gpfc_core::{default_priors, HyperParams, KernelSpec, Term};

#[test]
fn full_composition_at_half_year_lag() {
    let spec = full_spec();
    let theta = default_priors().medians();
    for x1 in [0.0, 1.25, 4.0] {
        let got = eval_kernel(&spec, &theta, x1, x1 + 0.5).unwrap();
        let expect = oracle_kernel(&spec, &theta, x1, x1 + 0.5, true);
        assert!((got - expect).abs() <= 1e-12, "{got} vs {expect}");
    }
    // PER + LIN + RBF + SM1 + SM2 at prior medians, evaluated term by term
    // with Python's math module
    for (x1, frozen) in [(0.0, 0.8487914847684894), (1.25, 1.3368887100931797)] {
        let got = eval_kernel(&spec, &theta, x1, x1 + 0.5).unwrap();
        assert!((got - frozen).abs() <= 1e-12, "{got} vs {frozen}");
    }
}

#[test]
fn gram_and_cross_match_elementwise_oracle() {
    let spec = full_spec();
    let theta = default_priors().medians();
    let mut r = rng(4);
    let xs = random_points(&mut r, 4, 5.0);
    let gram = build_gram(&spec, &theta, &xs).unwrap();
    let oracle = oracle_matrix(&spec, &theta, &xs, &xs, true);
    assert!((gram - oracle).amax() <= 1e-12);

    let xs_star = random_points(&mut r, 2, 5.0);
    let xs3 = &xs[..3];
    let cross = build_cross(&spec, &theta, &xs_star, xs3).unwrap();
    let oracle = oracle_matrix(&spec, &theta, &xs_star, xs3, false);
    assert_eq!(cross.shape(), (2, 3));
    assert!((cross - oracle).amax() <= 1e-12);
}

#[test]
fn gram_derivatives_match_finite_differences() {
    let h = 1e-5;
    let mut r = rng(6);
    for (name, spec) in gradient_specs() {
        let theta = random_theta(&mut r, 0.5);
        let xs = random_points(&mut r, 6, 4.0);
        let grads = grad_gram(&spec, &theta, &xs).unwrap();
        let u = theta.to_log_vec(&spec);
        for k in 0..u.len() {
            let at = |delta: f64| {
                let mut v = u.clone();
                v[k] += delta;
                build_gram(&spec, &theta.with_log_vec(&spec, &v), &xs).unwrap()
            };
            let fd = (at(h) - at(-h)) / (2.0 * h);
            let err = (&grads[k] - fd).amax();
            assert!(err <= 1e-5, "{name} param {k}: {err}");
        }
    }
}

#[test]
fn log_marginal_likelihood_matches_dense_oracle() {
    let spec = full_spec();
    let mut r = rng(5);
    let theta = random_theta(&mut r, 0.5);
    let xs = random_points(&mut r, 5, 3.0);
    let ys = random_values(&mut r, 5);
    let got = gp::log_marginal_likelihood(&spec, &theta, &xs, &ys).unwrap();
    let expect = dense_log_marginal(&spec, &theta, &xs, &ys);
    assert!((got - expect).abs() <= 1e-8, "{got} vs {expect}");
}

#[test]
fn predictions_match_dense_oracle() {
    let spec = full_spec();
    let mut r = rng(7);
    for n in [3, 4] {
        let theta = random_theta(&mut r, 0.5);
        let pts = random_points(&mut r, n + 2, 3.0);
        let (xs, xs_star) = pts.split_at(n);
        let ys = random_values(&mut r, n);
        let state = gp::fit(&spec, &theta, xs, &ys).unwrap();
        let pred = state.predict(xs_star).unwrap();
        let (mean, latent, obs) = dense_predict(&spec, &theta, xs, &ys, xs_star);
        for i in 0..xs_star.len() {
            assert!((pred.mean[i] - mean[i]).abs() <= 1e-8);
            assert!((pred.latent_variance[i] - latent[i]).abs() <= 1e-8);
            assert!((pred.variance[i] - obs[i]).abs() <= 1e-8);
        }
    }
}

#[test]
fn lml_gradient_matches_finite_differences() {
    let spec = full_spec();
    let mut r = rng(8);
    let theta = random_theta(&mut r, 0.5);
    let xs = random_points(&mut r, 8, 3.0);
    let ys = random_values(&mut r, 8);
    let g = grad_log_marginal_likelihood(&spec, &theta, &xs, &ys).unwrap();
    let u = theta.to_log_vec(&spec);
    let f = |v: &[f64]| {
        gp::log_marginal_likelihood(&spec, &theta.with_log_vec(&spec, v), &xs, &ys).unwrap()
    };
    let fd = central_diff(f, &u, 1e-5);
    for (k, (a, b)) in g.iter().zip(&fd).enumerate() {
        assert!(rel_err(*a, *b, 1.0) <= 1e-5, "param {k}: {a} vs {b}");
    }
}

#[test]
fn lml_gradient_vanishes_at_scanned_optimum() {
    // one trainable parameter: white-noise variance. Locate the maximizer by
    // a golden-section scan of the likelihood alone, then check the gradient.
    let spec = KernelSpec::new(vec![Term::Wn]).unwrap();
    let xs: Vec<f64> = (0..7).map(|i| i as f64).collect();
    let ys = [0.3, -1.2, 0.8, 0.1, 2.0, -0.4, 0.9];
    let lml = |u: f64| {
        let mut t = HyperParams::splat(1.0);
        t.s2_noise = u.exp();
        gp::log_marginal_likelihood(&spec, &t, &xs, &ys).unwrap()
    };
    let (mut a, mut b) = (-5.0f64, 5.0f64);
    let phi = (5f64.sqrt() - 1.0) / 2.0;
    for _ in 0..200 {
        let c = b - phi * (b - a);
        let d = a + phi * (b - a);
        if lml(c) > lml(d) {
            b = d;
        } else {
            a = c;
        }
    }
    let mut t = HyperParams::splat(1.0);
    t.s2_noise = (0.5 * (a + b)).exp();
    let g = grad_log_marginal_likelihood(&spec, &t, &xs, &ys).unwrap();
    assert!(g[0].abs() <= 1e-6, "{}", g[0]);
}

#[test]
fn log_prior_matches_density_oracle() {
    let priors = default_priors();
    let spec = full_spec();
    let mut r = rng(9);
    for _ in 0..20 {
        let theta = random_theta(&mut r, 1.5);
        let got = log_prior(&priors, &spec, &theta).unwrap();
        let expect = oracle_log_prior(&priors, &spec, &theta);
        assert!((got - expect).abs() <= 1e-12, "{got} vs {expect}");
    }
}

#[test]
fn log_prior_gradient_matches_finite_differences() {
    let priors = default_priors();
    let spec = full_spec();
    let mut r = rng(10);
    for _ in 0..10 {
        let theta = random_theta(&mut r, 1.0);
        let g = grad_log_prior(&priors, &spec, &theta).unwrap();
        let u = theta.to_log_vec(&spec);
        let f = |v: &[f64]| oracle_log_prior(&priors, &spec, &theta.with_log_vec(&spec, v));
        let fd = central_diff(f, &u, 1e-5);
        for (a, b) in g.iter().zip(&fd) {
            assert!((a - b).abs() <= 1e-7, "{a} vs {b}");
        }
    }
}

#[test]
fn map_objective_is_component_sum() {
    let spec = full_spec();
    let priors = default_priors();
    let theta = priors.medians();
    let xs: Vec<f64> = (0..24).map(|i| i as f64 / 12.0).collect();
    let ys: Vec<f64> = xs
        .iter()
        .map(|x| (2.0 * std::f64::consts::PI * x).sin())
        .collect();
    let got = map_objective(&spec, &priors, &theta, &xs, &ys).unwrap();
    let expect =
        dense_log_marginal(&spec, &theta, &xs, &ys) + oracle_log_prior(&priors, &spec, &theta);
    assert!((got - expect).abs() <= 1e-8, "{got} vs {expect}");
    let (v, _) = map_objective_and_gradient(&spec, &priors, &theta, &xs, &ys).unwrap();
    assert!((v - got).abs() <= 1e-12);
}

#[test]
fn crps_matches_quadrature() {
    let mut r = rng(11);
    for _ in 0..30 {
        let mu = 3.0 * normal(&mut r);
        let sigma = (0.8 * normal(&mut r)).exp();
        let y = mu + sigma * 2.0 * normal(&mut r).clamp(-2.0, 2.0);
        let closed = crps_gaussian(y, mu, sigma).unwrap();
        let quad = crps_quadrature(y, mu, sigma);
        assert!((closed - quad).abs() <= 1e-6, "{closed} vs {quad}");
    }
}

#[test]
fn crps_is_proper_by_monte_carlo() {
    let (mu, sigma) = (0.5, 1.2);
    let cases = [(0.5, 2.0), (0.5, 0.6), (1.5, 1.2), (-0.5, 1.5), (1.0, 0.9)];
    let mut r = rng(12);
    let draws: Vec<f64> = (0..100_000).map(|_| mu + sigma * normal(&mut r)).collect();
    for (mu2, sigma2) in cases {
        let diffs: Vec<f64> = draws
            .iter()
            .map(|&y| crps_gaussian(y, mu2, sigma2).unwrap() - crps_gaussian(y, mu, sigma).unwrap())
            .collect();
        let n = diffs.len() as f64;
        let mean = diffs.iter().sum::<f64>() / n;
        let var = diffs.iter().map(|d| (d - mean).powi(2)).sum::<f64>() / (n - 1.0);
        let se = (var / n).sqrt();
        assert!(
            mean > 3.0 * se,
            "({mu2}, {sigma2}): mean diff {mean}, se {se}"
        );
    }
}

#[test]
fn mae_and_ll_match_recomputation() {
    let mut r = rng(13);
    let y = random_values(&mut r, 18);
    let mu = random_values(&mut r, 18);
    let var: Vec<f64> = (0..18).map(|_| (0.5 * normal(&mut r)).exp()).collect();
    let mut total = 0.0;
    for i in 0..18 {
        total += (y[i] - mu[i]).abs();
    }
    assert!((mae(&y, &mu).unwrap() - total / 18.0).abs() <= 1e-15);
    let ll: f64 = (0..18)
        .map(|i| gaussian_logpdf(y[i], mu[i], var[i]))
        .sum::<f64>()
        / 18.0;
    assert!((test_log_likelihood(&y, &mu, &var).unwrap() - ll).abs() <= 1e-12);
}
