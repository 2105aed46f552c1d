//! Independent reference implementations used as test oracles. Nothing here
//! calls into the library's kernel, inference or scoring code paths.
#![allow(dead_code)]

use std::f64::consts::PI;

use gpfc_core::{default_priors, HyperParams, KernelSpec, ParamId, PriorSpec, Term};
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use statrs::distribution::{ContinuousCDF, Normal};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn normal(rng: &mut ChaCha8Rng) -> f64 {
    StandardNormal.sample(rng)
}

pub fn full_spec() -> KernelSpec {
    KernelSpec::new(vec![
        Term::Per { period: 1.0 },
        Term::Lin,
        Term::Rbf,
        Term::Sm1,
        Term::Sm2,
        Term::Wn,
    ])
    .unwrap()
}

/// Each base term paired with white noise, plus the full composition.
pub fn gradient_specs() -> Vec<(&'static str, KernelSpec)> {
    let single = |t: Term| KernelSpec::new(vec![t, Term::Wn]).unwrap();
    vec![
        ("LIN", single(Term::Lin)),
        ("RBF", single(Term::Rbf)),
        ("PER", single(Term::Per { period: 1.0 })),
        ("PER2", single(Term::Per2 { period: 0.25 })),
        ("SM1", single(Term::Sm1)),
        ("SM2", single(Term::Sm2)),
        ("WN", KernelSpec::new(vec![Term::Wn]).unwrap()),
        ("FULL", full_spec()),
    ]
}

/// θ drawn around the prior medians: log θ = ν + spread·N(0, 1).
pub fn random_theta(rng: &mut ChaCha8Rng, spread: f64) -> HyperParams {
    let priors = default_priors();
    let mut theta = HyperParams::splat(1.0);
    for id in ParamId::ALL {
        let p = priors.for_param(id);
        theta.set(id, (p.nu + spread * normal(rng)).exp());
    }
    theta
}

/// `n` distinct time points on a monthly grid within `years`.
pub fn random_points(rng: &mut ChaCha8Rng, n: usize, years: f64) -> Vec<f64> {
    let slots = (years * 12.0) as usize;
    let mut picked: Vec<usize> = Vec::new();
    while picked.len() < n {
        let s = rng.random_range(0..slots);
        if !picked.contains(&s) {
            picked.push(s);
        }
    }
    picked.into_iter().map(|s| s as f64 / 12.0).collect()
}

pub fn random_values(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| normal(rng)).collect()
}

/// Scalar re-implementation of every closed-form term.
pub fn oracle_term(term: &Term, t: &HyperParams, x1: f64, x2: f64) -> f64 {
    let d = x1 - x2;
    match *term {
        Term::Lin => t.s2_bias + t.s2_lin * x1 * x2,
        Term::Rbf => t.s2_rbf * (-d * d / (2.0 * t.ell_rbf.powi(2))).exp(),
        Term::Per { period } => {
            t.s2_per * (-2.0 * (PI * d.abs() / period).sin().powi(2) / t.ell_per.powi(2)).exp()
        }
        Term::Per2 { period } => {
            t.s2_per2 * (-2.0 * (PI * d.abs() / period).sin().powi(2) / t.ell_per2.powi(2)).exp()
        }
        Term::Sm1 => t.s2_sm1 * (-d * d / (2.0 * t.ell_sm1.powi(2))).exp() * (d / t.tau_sm1).cos(),
        Term::Sm2 => t.s2_sm2 * (-d * d / (2.0 * t.ell_sm2.powi(2))).exp() * (d / t.tau_sm2).cos(),
        Term::Wn => {
            if x1 == x2 {
                t.s2_noise
            } else {
                0.0
            }
        }
    }
}

pub fn oracle_kernel(spec: &KernelSpec, t: &HyperParams, x1: f64, x2: f64, noise: bool) -> f64 {
    spec.terms()
        .iter()
        .filter(|term| noise || **term != Term::Wn)
        .map(|term| oracle_term(term, t, x1, x2))
        .sum()
}

pub fn oracle_matrix(
    spec: &KernelSpec,
    t: &HyperParams,
    a: &[f64],
    b: &[f64],
    noise: bool,
) -> DMatrix<f64> {
    DMatrix::from_fn(a.len(), b.len(), |i, j| {
        oracle_kernel(spec, t, a[i], b[j], noise)
    })
}

/// Multivariate normal log-density via explicit inverse and determinant.
pub fn dense_log_marginal(spec: &KernelSpec, t: &HyperParams, xs: &[f64], ys: &[f64]) -> f64 {
    let k = oracle_matrix(spec, t, xs, xs, true);
    let det = k.clone().lu().determinant();
    let inv = k.try_inverse().expect("invertible");
    let y = DVector::from_column_slice(ys);
    let quad = (y.transpose() * &inv * &y)[(0, 0)];
    -0.5 * quad - 0.5 * det.ln() - 0.5 * xs.len() as f64 * (2.0 * PI).ln()
}

/// Predictive mean, latent variance and observation variance via an
/// explicit inverse.
pub fn dense_predict(
    spec: &KernelSpec,
    t: &HyperParams,
    xs: &[f64],
    ys: &[f64],
    xs_star: &[f64],
) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
    let k = oracle_matrix(spec, t, xs, xs, true);
    let inv = k.try_inverse().expect("invertible");
    let ks = oracle_matrix(spec, t, xs_star, xs, false);
    let y = DVector::from_column_slice(ys);
    let mean = &ks * &inv * &y;
    let cov = oracle_matrix(spec, t, xs_star, xs_star, false) - &ks * &inv * ks.transpose();
    let latent: Vec<f64> = (0..xs_star.len()).map(|i| cov[(i, i)]).collect();
    let obs = latent.iter().map(|v| v + t.s2_noise).collect();
    (mean.iter().copied().collect(), latent, obs)
}

/// Lognormal density written directly from its definition.
pub fn lognormal_pdf(x: f64, nu: f64, lambda: f64) -> f64 {
    let z = x.ln() - nu;
    (-(z * z) / (2.0 * lambda)).exp() / (x * (2.0 * PI * lambda).sqrt())
}

pub fn oracle_log_prior(priors: &PriorSpec, spec: &KernelSpec, t: &HyperParams) -> f64 {
    spec.trainable()
        .iter()
        .map(|&id| {
            let p = priors.for_param(id);
            lognormal_pdf(t.get(id), p.nu, p.lambda).ln()
        })
        .sum()
}

/// Central differences of `f` in log-space around `u`.
pub fn central_diff(f: impl Fn(&[f64]) -> f64, u: &[f64], h: f64) -> Vec<f64> {
    (0..u.len())
        .map(|k| {
            let mut up = u.to_vec();
            let mut dn = u.to_vec();
            up[k] += h;
            dn[k] -= h;
            (f(&up) - f(&dn)) / (2.0 * h)
        })
        .collect()
}

/// Relative error with a floor on the denominator for near-zero entries.
pub fn rel_err(analytic: f64, reference: f64, floor: f64) -> f64 {
    (analytic - reference).abs() / reference.abs().max(analytic.abs()).max(floor)
}

/// CRPS = ∫ (F(z) − 1{z ≥ y})² dz by composite Simpson on
/// [μ−10σ, y] and [y, μ+10σ].
pub fn crps_quadrature(y: f64, mu: f64, sigma: f64) -> f64 {
    let dist = Normal::new(mu, sigma).unwrap();
    let lo = mu - 10.0 * sigma;
    let hi = mu + 10.0 * sigma;
    let simpson = |a: f64, b: f64, f: &dyn Fn(f64) -> f64| {
        let n = 4000;
        let h = (b - a) / n as f64;
        let mut s = f(a) + f(b);
        for i in 1..n {
            let x = a + i as f64 * h;
            s += if i % 2 == 1 { 4.0 } else { 2.0 } * f(x);
        }
        s * h / 3.0
    };
    let below = |z: f64| dist.cdf(z).powi(2);
    let above = |z: f64| (1.0 - dist.cdf(z)).powi(2);
    simpson(lo, y, &below) + simpson(y, hi, &above)
}

pub fn gaussian_logpdf(y: f64, mu: f64, var: f64) -> f64 {
    let d = (-(y - mu).powi(2) / (2.0 * var)).exp() / (2.0 * PI * var).sqrt();
    d.ln()
}
