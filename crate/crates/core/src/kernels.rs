//! Base kernels, their additive composition and covariance assembly.
//!
//! Time is measured in years. All kernels are one-dimensional:
//!
//! | term | k(x1, x2), r = x1 - x2 |
//! |------|------------------------|
//! | LIN  | s_b² + s_l²·x1·x2 |
//! | RBF  | s_r²·exp(-r²/(2ℓ_r²)) |
//! | PER  | s_p²·exp(-2·sin²(π·abs(r)/p)/ℓ_p²) |
//! | SM   | s_m²·exp(-r²/(2ℓ_m²))·cos(r/τ_m) |
//! | WN   | s_v²·δ(x1 = x2) |
//!
//! The SM cosine has no 2π factor: `tau` is the period divided by 2π.
//!
//! Gradients are taken with respect to the natural log of each trainable
//! hyperparameter, which is the coordinate system the trainer optimizes in.

use std::f64::consts::PI;
use std::fmt;

use nalgebra::DMatrix;

use crate::error::{Error, Result};

/// One additive component of the composition.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Term {
    Lin,
    Rbf,
    /// Periodic kernel with a fixed period in years.
    Per {
        period: f64,
    },
    /// Second periodic kernel, for series with two seasonal cycles.
    Per2 {
        period: f64,
    },
    Sm1,
    Sm2,
    Wn,
}

impl Term {
    pub fn name(&self) -> &'static str {
        match self {
            Term::Lin => "LIN",
            Term::Rbf => "RBF",
            Term::Per { .. } => "PER",
            Term::Per2 { .. } => "PER2",
            Term::Sm1 => "SM1",
            Term::Sm2 => "SM2",
            Term::Wn => "WN",
        }
    }

    /// Trainable hyperparameters owned by this term, in layout order.
    pub fn params(&self) -> &'static [ParamId] {
        use ParamId::*;
        match self {
            Term::Lin => &[S2Lin, S2Bias],
            Term::Rbf => &[S2Rbf, EllRbf],
            Term::Per { .. } => &[S2Per, EllPer],
            Term::Per2 { .. } => &[S2Per2, EllPer2],
            Term::Sm1 => &[S2Sm1, EllSm1, TauSm1],
            Term::Sm2 => &[S2Sm2, EllSm2, TauSm2],
            Term::Wn => &[S2Noise],
        }
    }

    fn same_kind(&self, other: &Term) -> bool {
        std::mem::discriminant(self) == std::mem::discriminant(other)
    }
}

/// Identifier of a single trainable hyperparameter.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ParamId {
    S2Lin,
    S2Bias,
    S2Rbf,
    EllRbf,
    S2Per,
    EllPer,
    S2Per2,
    EllPer2,
    S2Sm1,
    EllSm1,
    TauSm1,
    S2Sm2,
    EllSm2,
    TauSm2,
    S2Noise,
}

impl ParamId {
    pub const ALL: [ParamId; 15] = [
        ParamId::S2Lin,
        ParamId::S2Bias,
        ParamId::S2Rbf,
        ParamId::EllRbf,
        ParamId::S2Per,
        ParamId::EllPer,
        ParamId::S2Per2,
        ParamId::EllPer2,
        ParamId::S2Sm1,
        ParamId::EllSm1,
        ParamId::TauSm1,
        ParamId::S2Sm2,
        ParamId::EllSm2,
        ParamId::TauSm2,
        ParamId::S2Noise,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            ParamId::S2Lin => "s2_lin",
            ParamId::S2Bias => "s2_bias",
            ParamId::S2Rbf => "s2_rbf",
            ParamId::EllRbf => "ell_rbf",
            ParamId::S2Per => "s2_per",
            ParamId::EllPer => "ell_per",
            ParamId::S2Per2 => "s2_per2",
            ParamId::EllPer2 => "ell_per2",
            ParamId::S2Sm1 => "s2_sm1",
            ParamId::EllSm1 => "ell_sm1",
            ParamId::TauSm1 => "tau_sm1",
            ParamId::S2Sm2 => "s2_sm2",
            ParamId::EllSm2 => "ell_sm2",
            ParamId::TauSm2 => "tau_sm2",
            ParamId::S2Noise => "s2_noise",
        }
    }

    pub fn from_name(name: &str) -> Option<ParamId> {
        ParamId::ALL.iter().copied().find(|p| p.name() == name)
    }

    pub fn is_variance(&self) -> bool {
        matches!(
            self,
            ParamId::S2Lin
                | ParamId::S2Bias
                | ParamId::S2Rbf
                | ParamId::S2Per
                | ParamId::S2Per2
                | ParamId::S2Sm1
                | ParamId::S2Sm2
                | ParamId::S2Noise
        )
    }
}

impl fmt::Display for ParamId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Full set of kernel hyperparameters. Fields of terms absent from the
/// active [`KernelSpec`] are carried along but ignored.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HyperParams {
    pub s2_lin: f64,
    pub s2_bias: f64,
    pub s2_rbf: f64,
    pub ell_rbf: f64,
    pub s2_per: f64,
    pub ell_per: f64,
    pub s2_per2: f64,
    pub ell_per2: f64,
    pub s2_sm1: f64,
    pub ell_sm1: f64,
    pub tau_sm1: f64,
    pub s2_sm2: f64,
    pub ell_sm2: f64,
    pub tau_sm2: f64,
    pub s2_noise: f64,
}

impl HyperParams {
    /// Every parameter set to `value`.
    pub fn splat(value: f64) -> Self {
        let mut theta = HyperParams {
            s2_lin: 0.0,
            s2_bias: 0.0,
            s2_rbf: 0.0,
            ell_rbf: 0.0,
            s2_per: 0.0,
            ell_per: 0.0,
            s2_per2: 0.0,
            ell_per2: 0.0,
            s2_sm1: 0.0,
            ell_sm1: 0.0,
            tau_sm1: 0.0,
            s2_sm2: 0.0,
            ell_sm2: 0.0,
            tau_sm2: 0.0,
            s2_noise: 0.0,
        };
        for id in ParamId::ALL {
            theta.set(id, value);
        }
        theta
    }

    pub fn get(&self, id: ParamId) -> f64 {
        match id {
            ParamId::S2Lin => self.s2_lin,
            ParamId::S2Bias => self.s2_bias,
            ParamId::S2Rbf => self.s2_rbf,
            ParamId::EllRbf => self.ell_rbf,
            ParamId::S2Per => self.s2_per,
            ParamId::EllPer => self.ell_per,
            ParamId::S2Per2 => self.s2_per2,
            ParamId::EllPer2 => self.ell_per2,
            ParamId::S2Sm1 => self.s2_sm1,
            ParamId::EllSm1 => self.ell_sm1,
            ParamId::TauSm1 => self.tau_sm1,
            ParamId::S2Sm2 => self.s2_sm2,
            ParamId::EllSm2 => self.ell_sm2,
            ParamId::TauSm2 => self.tau_sm2,
            ParamId::S2Noise => self.s2_noise,
        }
    }

    pub fn set(&mut self, id: ParamId, value: f64) {
        let slot = match id {
            ParamId::S2Lin => &mut self.s2_lin,
            ParamId::S2Bias => &mut self.s2_bias,
            ParamId::S2Rbf => &mut self.s2_rbf,
            ParamId::EllRbf => &mut self.ell_rbf,
            ParamId::S2Per => &mut self.s2_per,
            ParamId::EllPer => &mut self.ell_per,
            ParamId::S2Per2 => &mut self.s2_per2,
            ParamId::EllPer2 => &mut self.ell_per2,
            ParamId::S2Sm1 => &mut self.s2_sm1,
            ParamId::EllSm1 => &mut self.ell_sm1,
            ParamId::TauSm1 => &mut self.tau_sm1,
            ParamId::S2Sm2 => &mut self.s2_sm2,
            ParamId::EllSm2 => &mut self.ell_sm2,
            ParamId::TauSm2 => &mut self.tau_sm2,
            ParamId::S2Noise => &mut self.s2_noise,
        };
        *slot = value;
    }

    /// Natural logs of the trainable parameters of `spec`, in layout order.
    pub fn to_log_vec(&self, spec: &KernelSpec) -> Vec<f64> {
        spec.trainable()
            .iter()
            .map(|&id| self.get(id).ln())
            .collect()
    }

    /// Inverse of [`HyperParams::to_log_vec`]; parameters outside `spec`
    /// keep their current value.
    pub fn with_log_vec(&self, spec: &KernelSpec, u: &[f64]) -> HyperParams {
        let mut theta = *self;
        for (&id, &v) in spec.trainable().iter().zip(u) {
            theta.set(id, v.exp());
        }
        theta
    }

    /// Checks positivity of every parameter used by `spec`.
    pub fn validate(&self, spec: &KernelSpec) -> Result<()> {
        for &id in spec.trainable() {
            let value = self.get(id);
            if !(value.is_finite() && value > 0.0) {
                return Err(Error::InvalidHyperParameter {
                    name: id.name(),
                    value,
                });
            }
        }
        Ok(())
    }
}

/// Declarative description of the additive composition.
#[derive(Debug, Clone, PartialEq)]
pub struct KernelSpec {
    terms: Vec<Term>,
    trainable: Vec<ParamId>,
}

impl KernelSpec {
    /// Builds a spec. White noise must be present exactly once; each kind of
    /// term may appear at most once; periods must be finite and positive.
    pub fn new(terms: Vec<Term>) -> Result<Self> {
        for (i, term) in terms.iter().enumerate() {
            if terms[..i].iter().any(|t| t.same_kind(term)) {
                return Err(Error::InvalidSpec(format!(
                    "term {} appears more than once",
                    term.name()
                )));
            }
            if let Term::Per { period } | Term::Per2 { period } = term {
                if !(period.is_finite() && *period > 0.0) {
                    return Err(Error::InvalidSpec(format!(
                        "{} period must be finite and positive, got {period}",
                        term.name()
                    )));
                }
            }
        }
        if !terms.contains(&Term::Wn) {
            return Err(Error::InvalidSpec(
                "white-noise term is required".to_string(),
            ));
        }
        let trainable = terms
            .iter()
            .flat_map(|t| t.params().iter().copied())
            .collect();
        Ok(KernelSpec { terms, trainable })
    }

    pub fn terms(&self) -> &[Term] {
        &self.terms
    }

    /// Trainable hyperparameters in layout order (term order, then the
    /// order given by [`Term::params`]).
    pub fn trainable(&self) -> &[ParamId] {
        &self.trainable
    }

    pub fn n_trainable(&self) -> usize {
        self.trainable.len()
    }

    pub fn contains(&self, id: ParamId) -> bool {
        self.trainable.contains(&id)
    }
}

#[inline]
fn sq_exp(r: f64, ell: f64) -> f64 {
    (-(r * r) / (2.0 * ell * ell)).exp()
}

/// Value of a single term, excluding white noise unless `same_point`.
#[inline]
fn term_value(term: &Term, theta: &HyperParams, x1: f64, x2: f64, same_point: bool) -> f64 {
    let r = (x1 - x2).abs();
    match *term {
        Term::Lin => theta.s2_bias + theta.s2_lin * (x1 * x2),
        Term::Rbf => theta.s2_rbf * sq_exp(r, theta.ell_rbf),
        Term::Per { period } => {
            let s = (PI * r / period).sin();
            theta.s2_per * (-2.0 * s * s / (theta.ell_per * theta.ell_per)).exp()
        }
        Term::Per2 { period } => {
            let s = (PI * r / period).sin();
            theta.s2_per2 * (-2.0 * s * s / (theta.ell_per2 * theta.ell_per2)).exp()
        }
        Term::Sm1 => theta.s2_sm1 * sq_exp(r, theta.ell_sm1) * (r / theta.tau_sm1).cos(),
        Term::Sm2 => theta.s2_sm2 * sq_exp(r, theta.ell_sm2) * (r / theta.tau_sm2).cos(),
        Term::Wn => {
            if same_point {
                theta.s2_noise
            } else {
                0.0
            }
        }
    }
}

/// Writes ∂k/∂(log θ) for every trainable parameter of `spec` into `out`,
/// following the layout of [`KernelSpec::trainable`].
#[inline]
fn pair_gradient(
    spec: &KernelSpec,
    theta: &HyperParams,
    x1: f64,
    x2: f64,
    include_noise: bool,
    out: &mut [f64],
) {
    let r = (x1 - x2).abs();
    let mut k = 0;
    for term in &spec.terms {
        match *term {
            Term::Lin => {
                out[k] = theta.s2_lin * (x1 * x2);
                out[k + 1] = theta.s2_bias;
                k += 2;
            }
            Term::Rbf => {
                let ell2 = theta.ell_rbf * theta.ell_rbf;
                let v = theta.s2_rbf * sq_exp(r, theta.ell_rbf);
                out[k] = v;
                out[k + 1] = v * r * r / ell2;
                k += 2;
            }
            Term::Per { period } | Term::Per2 { period } => {
                let (s2, ell) = if matches!(term, Term::Per { .. }) {
                    (theta.s2_per, theta.ell_per)
                } else {
                    (theta.s2_per2, theta.ell_per2)
                };
                let s = (PI * r / period).sin();
                let ell2 = ell * ell;
                let v = s2 * (-2.0 * s * s / ell2).exp();
                out[k] = v;
                out[k + 1] = v * 4.0 * s * s / ell2;
                k += 2;
            }
            Term::Sm1 | Term::Sm2 => {
                let (s2, ell, tau) = if *term == Term::Sm1 {
                    (theta.s2_sm1, theta.ell_sm1, theta.tau_sm1)
                } else {
                    (theta.s2_sm2, theta.ell_sm2, theta.tau_sm2)
                };
                let env = s2 * sq_exp(r, ell);
                let phase = r / tau;
                let v = env * phase.cos();
                out[k] = v;
                out[k + 1] = v * r * r / (ell * ell);
                out[k + 2] = env * phase.sin() * phase;
                k += 3;
            }
            Term::Wn => {
                out[k] = if include_noise && x1 == x2 {
                    theta.s2_noise
                } else {
                    0.0
                };
                k += 1;
            }
        }
    }
}

fn check_finite(xs: &[f64]) -> Result<()> {
    match xs.iter().position(|x| !x.is_finite()) {
        Some(i) => Err(Error::NonFiniteInput(i)),
        None => Ok(()),
    }
}

#[inline]
fn eval_unchecked(spec: &KernelSpec, theta: &HyperParams, x1: f64, x2: f64, noise: bool) -> f64 {
    let same = noise && x1 == x2;
    spec.terms
        .iter()
        .map(|t| term_value(t, theta, x1, x2, same))
        .sum()
}

/// Covariance k(x1, x2) of the full composition, white noise included.
pub fn eval_kernel(spec: &KernelSpec, theta: &HyperParams, x1: f64, x2: f64) -> Result<f64> {
    theta.validate(spec)?;
    let v = eval_unchecked(spec, theta, x1, x2, true);
    if v.is_finite() {
        Ok(v)
    } else {
        Err(Error::NonFiniteKernel { x1, x2 })
    }
}

/// Value of one term at (x1, x2), with white noise active on equal points.
pub fn eval_term(term: &Term, theta: &HyperParams, x1: f64, x2: f64) -> f64 {
    term_value(term, theta, x1, x2, x1 == x2)
}

/// Gram matrix K(X, X), white noise on the diagonal and on duplicate points.
pub fn build_gram(spec: &KernelSpec, theta: &HyperParams, xs: &[f64]) -> Result<DMatrix<f64>> {
    theta.validate(spec)?;
    check_finite(xs)?;
    let n = xs.len();
    let mut m = DMatrix::zeros(n, n);
    for j in 0..n {
        for i in j..n {
            let v = eval_unchecked(spec, theta, xs[i], xs[j], true);
            if !v.is_finite() {
                return Err(Error::NonFiniteKernel {
                    x1: xs[i],
                    x2: xs[j],
                });
            }
            m[(i, j)] = v;
            m[(j, i)] = v;
        }
    }
    Ok(m)
}

/// Cross-covariance K(X*, X) of the latent function (no white noise), m×n.
pub fn build_cross(
    spec: &KernelSpec,
    theta: &HyperParams,
    xs_star: &[f64],
    xs: &[f64],
) -> Result<DMatrix<f64>> {
    theta.validate(spec)?;
    check_finite(xs_star)?;
    check_finite(xs)?;
    let mut m = DMatrix::zeros(xs_star.len(), xs.len());
    for (i, &a) in xs_star.iter().enumerate() {
        for (j, &b) in xs.iter().enumerate() {
            let v = eval_unchecked(spec, theta, a, b, false);
            if !v.is_finite() {
                return Err(Error::NonFiniteKernel { x1: a, x2: b });
            }
            m[(i, j)] = v;
        }
    }
    Ok(m)
}

/// Latent prior variance k(x, x) without white noise, one per point.
pub fn latent_diag(spec: &KernelSpec, theta: &HyperParams, xs: &[f64]) -> Result<Vec<f64>> {
    theta.validate(spec)?;
    check_finite(xs)?;
    Ok(xs
        .iter()
        .map(|&x| eval_unchecked(spec, theta, x, x, false))
        .collect())
}

/// ∂K/∂(log θ_k) for every trainable parameter, in layout order.
pub fn grad_gram(spec: &KernelSpec, theta: &HyperParams, xs: &[f64]) -> Result<Vec<DMatrix<f64>>> {
    theta.validate(spec)?;
    check_finite(xs)?;
    let n = xs.len();
    let p = spec.n_trainable();
    let mut grads = vec![DMatrix::zeros(n, n); p];
    let mut buf = vec![0.0; p];
    for j in 0..n {
        for i in j..n {
            pair_gradient(spec, theta, xs[i], xs[j], true, &mut buf);
            for (g, &d) in grads.iter_mut().zip(&buf) {
                g[(i, j)] = d;
                g[(j, i)] = d;
            }
        }
    }
    Ok(grads)
}

/// Computes Σ_ij w_ij · ∂K_ij/∂(log θ_k) for each k without materializing
/// the derivative matrices. `weights` must be symmetric.
pub(crate) fn contract_grad_gram(
    spec: &KernelSpec,
    theta: &HyperParams,
    xs: &[f64],
    weights: &DMatrix<f64>,
) -> Vec<f64> {
    let n = xs.len();
    let p = spec.n_trainable();
    let mut acc = vec![0.0; p];
    let mut buf = vec![0.0; p];
    for j in 0..n {
        for i in j..n {
            pair_gradient(spec, theta, xs[i], xs[j], true, &mut buf);
            let w = if i == j {
                weights[(i, j)]
            } else {
                2.0 * weights[(i, j)]
            };
            for (a, &d) in acc.iter_mut().zip(&buf) {
                *a += w * d;
            }
        }
    }
    acc
}
