//! Exact GP inference with a zero mean function.

use std::f64::consts::PI;

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};

use crate::error::{Error, Result};
use crate::kernels::{self, HyperParams, KernelSpec};

/// Relative jitter schedule, as a multiple of mean(diag K): 0 first, then
/// 1e-8 growing ×10 until 1e-2.
const JITTER_START: f64 = 1e-8;
const JITTER_MAX: f64 = 1e-2;

/// Negative predictive variances above this are treated as round-off.
const NEGATIVE_VARIANCE_SLACK: f64 = 1e-10;

fn check_inputs(xs: &[f64], ys: &[f64]) -> Result<()> {
    if xs.len() != ys.len() {
        return Err(Error::LengthMismatch {
            what: "inputs and targets",
            left: xs.len(),
            right: ys.len(),
        });
    }
    if xs.is_empty() {
        return Err(Error::TooFewPoints {
            required: 1,
            got: 0,
        });
    }
    if let Some(i) = ys.iter().position(|y| !y.is_finite()) {
        return Err(Error::NonFiniteInput(i));
    }
    Ok(())
}

/// Cholesky factorization with the adaptive jitter schedule. Returns the
/// factor and the absolute jitter that was added to the diagonal.
pub(crate) fn factorize(k: DMatrix<f64>) -> Result<(Cholesky<f64, Dyn>, f64)> {
    if let Some(chol) = Cholesky::new(k.clone()) {
        return Ok((chol, 0.0));
    }
    let n = k.nrows();
    let scale = (k.diagonal().sum() / n as f64).abs().max(f64::MIN_POSITIVE);
    let mut rel = JITTER_START;
    while rel <= JITTER_MAX * (1.0 + 1e-9) {
        let jitter = rel * scale;
        let mut kj = k.clone();
        for i in 0..n {
            kj[(i, i)] += jitter;
        }
        if let Some(chol) = Cholesky::new(kj) {
            return Ok((chol, jitter));
        }
        rel *= 10.0;
    }
    Err(Error::IllConditioned {
        jitter: JITTER_MAX * scale,
    })
}

fn lml_from_factor(chol: &Cholesky<f64, Dyn>, y: &DVector<f64>, alpha: &DVector<f64>) -> f64 {
    let n = y.len() as f64;
    let log_det_half: f64 = chol.l_dirty().diagonal().iter().map(|d| d.ln()).sum();
    -0.5 * y.dot(alpha) - log_det_half - 0.5 * n * (2.0 * PI).ln()
}

/// Cached factorization of the training covariance.
#[derive(Debug, Clone)]
pub struct FitState {
    spec: KernelSpec,
    theta: HyperParams,
    xs: Vec<f64>,
    chol: Cholesky<f64, Dyn>,
    alpha: DVector<f64>,
    jitter: f64,
    log_marginal_likelihood: f64,
}

/// Per-point predictive marginals.
#[derive(Debug, Clone, PartialEq)]
pub struct PredictiveDistribution {
    pub mean: Vec<f64>,
    /// Variance of the latent function f*.
    pub latent_variance: Vec<f64>,
    /// Variance of a new observation: latent variance plus noise variance.
    pub variance: Vec<f64>,
}

impl PredictiveDistribution {
    pub fn len(&self) -> usize {
        self.mean.len()
    }

    pub fn is_empty(&self) -> bool {
        self.mean.is_empty()
    }
}

impl FitState {
    pub fn xs(&self) -> &[f64] {
        &self.xs
    }

    /// Lower-triangular Cholesky factor of K(X, X) + jitter·I.
    pub fn cholesky_factor(&self) -> DMatrix<f64> {
        self.chol.l()
    }

    /// α = (K + jitter·I)⁻¹ y.
    pub fn alpha(&self) -> &DVector<f64> {
        &self.alpha
    }

    pub fn jitter(&self) -> f64 {
        self.jitter
    }

    pub fn log_marginal_likelihood(&self) -> f64 {
        self.log_marginal_likelihood
    }

    pub fn theta(&self) -> &HyperParams {
        &self.theta
    }

    pub fn spec(&self) -> &KernelSpec {
        &self.spec
    }

    /// Predictive mean and diagonal variances at `xs_star`.
    pub fn predict(&self, xs_star: &[f64]) -> Result<PredictiveDistribution> {
        let m = xs_star.len();
        if m == 0 {
            return Ok(PredictiveDistribution {
                mean: Vec::new(),
                latent_variance: Vec::new(),
                variance: Vec::new(),
            });
        }
        let cross = kernels::build_cross(&self.spec, &self.theta, xs_star, &self.xs)?;
        let prior_var = kernels::latent_diag(&self.spec, &self.theta, xs_star)?;
        let mean = &cross * &self.alpha;
        let v = self
            .chol
            .l_dirty()
            .solve_lower_triangular(&cross.transpose())
            .expect("cholesky factor has a positive diagonal");
        let noise = self.theta.s2_noise;
        let mut latent = Vec::with_capacity(m);
        for (i, kss) in prior_var.iter().enumerate() {
            let explained = v.column(i).norm_squared();
            let mut var = kss - explained;
            if var < 0.0 {
                if var < -NEGATIVE_VARIANCE_SLACK {
                    return Err(Error::NegativeVariance(var));
                }
                var = 0.0;
            }
            latent.push(var);
        }
        let variance = latent.iter().map(|v| v + noise).collect();
        Ok(PredictiveDistribution {
            mean: mean.iter().copied().collect(),
            latent_variance: latent,
            variance,
        })
    }
}

/// Factorizes K(X, X) and caches what prediction needs.
pub fn fit(spec: &KernelSpec, theta: &HyperParams, xs: &[f64], ys: &[f64]) -> Result<FitState> {
    check_inputs(xs, ys)?;
    let k = kernels::build_gram(spec, theta, xs)?;
    let (chol, jitter) = factorize(k)?;
    let y = DVector::from_column_slice(ys);
    let alpha = chol.solve(&y);
    let lml = lml_from_factor(&chol, &y, &alpha);
    Ok(FitState {
        spec: spec.clone(),
        theta: *theta,
        xs: xs.to_vec(),
        chol,
        alpha,
        jitter,
        log_marginal_likelihood: lml,
    })
}

/// Free-function form of [`FitState::predict`].
pub fn predict(state: &FitState, xs_star: &[f64]) -> Result<PredictiveDistribution> {
    state.predict(xs_star)
}

/// log N(y; 0, K(X, X)).
pub fn log_marginal_likelihood(
    spec: &KernelSpec,
    theta: &HyperParams,
    xs: &[f64],
    ys: &[f64],
) -> Result<f64> {
    check_inputs(xs, ys)?;
    let k = kernels::build_gram(spec, theta, xs)?;
    let (chol, _) = factorize(k)?;
    let y = DVector::from_column_slice(ys);
    let alpha = chol.solve(&y);
    Ok(lml_from_factor(&chol, &y, &alpha))
}

/// Log marginal likelihood and its gradient with respect to log θ,
/// computed from a single factorization.
pub(crate) fn lml_and_grad(
    spec: &KernelSpec,
    theta: &HyperParams,
    xs: &[f64],
    ys: &[f64],
) -> Result<(f64, Vec<f64>)> {
    check_inputs(xs, ys)?;
    let k = kernels::build_gram(spec, theta, xs)?;
    let (chol, _) = factorize(k)?;
    let y = DVector::from_column_slice(ys);
    let alpha = chol.solve(&y);
    let lml = lml_from_factor(&chol, &y, &alpha);
    // W = ααᵀ − K⁻¹; ∂lml/∂θ_k = ½ tr(W ∂K/∂θ_k)
    let mut w = chol.inverse();
    w.neg_mut();
    w.ger(1.0, &alpha, &alpha, 1.0);
    let grad = kernels::contract_grad_gram(spec, theta, xs, &w)
        .into_iter()
        .map(|g| 0.5 * g)
        .collect();
    Ok((lml, grad))
}

/// Gradient of [`log_marginal_likelihood`] with respect to log θ, in the
/// layout of [`KernelSpec::trainable`].
pub fn grad_log_marginal_likelihood(
    spec: &KernelSpec,
    theta: &HyperParams,
    xs: &[f64],
    ys: &[f64],
) -> Result<Vec<f64>> {
    lml_and_grad(spec, theta, xs, ys).map(|(_, g)| g)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernels::Term;

    fn wn() -> KernelSpec {
        KernelSpec::new(vec![Term::Wn]).unwrap()
    }

    fn rbf() -> KernelSpec {
        KernelSpec::new(vec![Term::Rbf, Term::Wn]).unwrap()
    }

    #[test]
    fn standard_normal_at_zero() {
        let mut t = HyperParams::splat(1.0);
        t.s2_noise = 1.0;
        let lml = log_marginal_likelihood(&wn(), &t, &[0.0], &[0.0]).unwrap();
        assert!((lml + 0.5 * (2.0 * PI).ln()).abs() < 1e-15);
        assert!((lml - -0.9189385332046727).abs() < 1e-12);
    }

    #[test]
    fn identity_covariance_two_points() {
        let t = HyperParams::splat(1.0);
        let lml = log_marginal_likelihood(&wn(), &t, &[0.0, 1.0], &[1.0, -1.0]).unwrap();
        assert!((lml - (-1.0 - (2.0 * PI).ln())).abs() < 1e-14);
    }

    #[test]
    fn white_noise_gradient_closed_form() {
        let mut t = HyperParams::splat(1.0);
        t.s2_noise = 0.7;
        let xs = [0.0, 0.1, 0.2, 0.3, 0.4];
        let ys = [0.5, -1.0, 0.3, 2.0, -0.2];
        let g = grad_log_marginal_likelihood(&wn(), &t, &xs, &ys).unwrap();
        let yty: f64 = ys.iter().map(|y| y * y).sum();
        let expect = -(xs.len() as f64) / 2.0 + yty / (2.0 * 0.7);
        assert!((g[0] - expect).abs() < 1e-12);
    }

    #[test]
    fn one_point_fit_shrinks_toward_zero() {
        let mut t = HyperParams::splat(1.0);
        t.s2_rbf = 1.0;
        t.s2_noise = 0.25;
        let state = fit(&rbf(), &t, &[0.0], &[2.0]).unwrap();
        let pred = state.predict(&[0.0]).unwrap();
        // posterior mean = 1/(1 + 0.25) · 2
        assert!((pred.mean[0] - 1.6).abs() < 1e-12);
        assert!((pred.latent_variance[0] - 0.2).abs() < 1e-12);
        assert!((pred.variance[0] - 0.45).abs() < 1e-12);
    }

    #[test]
    fn empty_test_set() {
        let t = HyperParams::splat(1.0);
        let state = fit(&rbf(), &t, &[0.0, 1.0], &[1.0, 2.0]).unwrap();
        assert!(state.predict(&[]).unwrap().is_empty());
    }

    #[test]
    fn noiseless_interpolation() {
        let mut t = HyperParams::splat(1.0);
        t.s2_noise = 1e-12;
        let state = fit(&rbf(), &t, &[0.3], &[1.7]).unwrap();
        let pred = state.predict(&[0.3]).unwrap();
        assert!((pred.mean[0] - 1.7).abs() < 1e-5);
    }

    #[test]
    fn far_extrapolation_reverts_to_prior() {
        let mut t = HyperParams::splat(1.0);
        t.s2_rbf = 1.3;
        t.ell_rbf = 0.5;
        t.s2_noise = 0.1;
        let xs: Vec<f64> = (0..20).map(|i| i as f64 / 12.0).collect();
        let ys: Vec<f64> = xs.iter().map(|x| (6.0 * x).sin()).collect();
        let state = fit(&rbf(), &t, &xs, &ys).unwrap();
        let pred = state.predict(&[xs[19] + 20.0 * t.ell_rbf]).unwrap();
        assert!(pred.mean[0].abs() < 1e-6);
        assert!((pred.latent_variance[0] - 1.3).abs() < 1e-6);
    }

    #[test]
    fn fit_state_invariants() {
        let mut t = HyperParams::splat(0.5);
        t.ell_rbf = 0.3;
        let xs = [0.0, 0.2, 0.5, 0.9, 1.4];
        let ys = [0.1, 0.5, -0.3, 0.8, 1.1];
        let state = fit(&rbf(), &t, &xs, &ys).unwrap();
        let l = state.cholesky_factor();
        for i in 0..5 {
            assert!(l[(i, i)] > 0.0);
            for j in i + 1..5 {
                assert_eq!(l[(i, j)], 0.0);
            }
        }
        let back = &l * l.transpose() * state.alpha();
        for i in 0..5 {
            assert!((back[i] - ys[i]).abs() <= 1e-8 * ys[i].abs().max(1.0));
        }
        let again = fit(&rbf(), &t, &xs, &ys).unwrap();
        assert_eq!(
            again.log_marginal_likelihood(),
            state.log_marginal_likelihood()
        );
    }

    #[test]
    fn jitter_rescues_singular_gram() {
        let spec = KernelSpec::new(vec![Term::Lin, Term::Wn]).unwrap();
        let mut t = HyperParams::splat(1.0);
        t.s2_noise = 1e-300;
        let xs: Vec<f64> = (0..6).map(|i| i as f64).collect();
        let state = fit(&spec, &t, &xs, &[0.0, 1.0, 2.0, 3.0, 4.0, 5.0]).unwrap();
        assert!(state.jitter() > 0.0);
    }

    #[test]
    fn input_errors() {
        let t = HyperParams::splat(1.0);
        assert!(matches!(
            log_marginal_likelihood(&rbf(), &t, &[0.0, 1.0], &[0.0]),
            Err(Error::LengthMismatch { .. })
        ));
        assert!(matches!(
            log_marginal_likelihood(&rbf(), &t, &[], &[]),
            Err(Error::TooFewPoints { .. })
        ));
        assert!(log_marginal_likelihood(&rbf(), &t, &[0.0], &[f64::NAN]).is_err());
    }
}
