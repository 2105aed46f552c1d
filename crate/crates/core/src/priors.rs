//! Lognormal hyperparameter priors.
//!
//! `LogNormal { nu, lambda }` means log θ ~ Normal(mean = nu, variance = lambda).
//! All variance-type hyperparameters (noise and the LIN bias included) share
//! one prior; lengthscales and SM τ parameters share one `lambda`.

use std::f64::consts::PI;
use std::fmt::Write as _;

use statrs::function::erf::erf_inv;

use crate::error::{Error, Result};
use crate::kernels::{HyperParams, KernelSpec, ParamId};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LogNormal {
    /// Mean of log θ.
    pub nu: f64,
    /// Variance of log θ.
    pub lambda: f64,
}

impl LogNormal {
    pub const fn new(nu: f64, lambda: f64) -> Self {
        LogNormal { nu, lambda }
    }

    pub fn median(&self) -> f64 {
        self.nu.exp()
    }

    /// Quantile of θ at probability `p` in (0, 1).
    pub fn quantile(&self, p: f64) -> f64 {
        let z = std::f64::consts::SQRT_2 * erf_inv(2.0 * p - 1.0);
        (self.nu + z * self.lambda.sqrt()).exp()
    }

    /// Log density of θ evaluated at u = log θ.
    fn ln_pdf_at_log(&self, u: f64) -> f64 {
        let d = u - self.nu;
        -u - 0.5 * (2.0 * PI * self.lambda).ln() - d * d / (2.0 * self.lambda)
    }

    /// ∂/∂u of [`LogNormal::ln_pdf_at_log`].
    fn grad_at_log(&self, u: f64) -> f64 {
        -1.0 - (u - self.nu) / self.lambda
    }
}

/// Prior configuration. The second periodic block reuses `ell_per`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PriorSpec {
    pub variance: LogNormal,
    pub ell_per: LogNormal,
    pub ell_rbf: LogNormal,
    pub ell_sm1: LogNormal,
    pub tau_sm1: LogNormal,
    pub ell_sm2: LogNormal,
    pub tau_sm2: LogNormal,
}

const KEYS: [&str; 7] = [
    "variance", "ell_per", "ell_rbf", "ell_sm1", "tau_sm1", "ell_sm2", "tau_sm2",
];

/// The calibrated defaults.
pub fn default_priors() -> PriorSpec {
    PriorSpec {
        variance: LogNormal::new(-1.5, 1.0),
        ell_per: LogNormal::new(0.2, 1.0),
        ell_rbf: LogNormal::new(1.1, 1.0),
        ell_sm1: LogNormal::new(-0.7, 1.0),
        tau_sm1: LogNormal::new(0.5, 1.0),
        ell_sm2: LogNormal::new(1.1, 1.0),
        tau_sm2: LogNormal::new(1.6, 1.0),
    }
}

impl Default for PriorSpec {
    fn default() -> Self {
        default_priors()
    }
}

impl PriorSpec {
    /// Validates the invariants: finite `nu`, positive `lambda`, and one
    /// shared `lambda` across all lengthscale-type entries.
    pub fn validate(&self) -> Result<()> {
        for (key, p) in KEYS.iter().zip(self.entries()) {
            if !p.nu.is_finite() || !(p.lambda.is_finite() && p.lambda > 0.0) {
                return Err(Error::InvalidPrior(format!(
                    "{key}: need finite nu and lambda > 0, got ({}, {})",
                    p.nu, p.lambda
                )));
            }
        }
        let shared = self.ell_per.lambda;
        for (key, p) in KEYS.iter().zip(self.entries()).skip(1) {
            if p.lambda != shared {
                return Err(Error::InvalidPrior(format!(
                    "lengthscale priors must share lambda: {key} has {} but ell_per has {shared}",
                    p.lambda
                )));
            }
        }
        Ok(())
    }

    fn entries(&self) -> [LogNormal; 7] {
        [
            self.variance,
            self.ell_per,
            self.ell_rbf,
            self.ell_sm1,
            self.tau_sm1,
            self.ell_sm2,
            self.tau_sm2,
        ]
    }

    fn entry_mut(&mut self, key: &str) -> Option<&mut LogNormal> {
        Some(match key {
            "variance" => &mut self.variance,
            "ell_per" => &mut self.ell_per,
            "ell_rbf" => &mut self.ell_rbf,
            "ell_sm1" => &mut self.ell_sm1,
            "tau_sm1" => &mut self.tau_sm1,
            "ell_sm2" => &mut self.ell_sm2,
            "tau_sm2" => &mut self.tau_sm2,
            _ => return None,
        })
    }

    pub fn for_param(&self, id: ParamId) -> LogNormal {
        match id {
            ParamId::EllPer | ParamId::EllPer2 => self.ell_per,
            ParamId::EllRbf => self.ell_rbf,
            ParamId::EllSm1 => self.ell_sm1,
            ParamId::TauSm1 => self.tau_sm1,
            ParamId::EllSm2 => self.ell_sm2,
            ParamId::TauSm2 => self.tau_sm2,
            _ => self.variance,
        }
    }

    /// Hyperparameters at the prior medians, exp(nu).
    pub fn medians(&self) -> HyperParams {
        let mut theta = HyperParams::splat(1.0);
        for id in ParamId::ALL {
            theta.set(id, self.for_param(id).median());
        }
        theta
    }

    /// Log-space prior means for the trainable parameters of `spec`.
    pub fn log_means(&self, spec: &KernelSpec) -> Vec<f64> {
        spec.trainable()
            .iter()
            .map(|&id| self.for_param(id).nu)
            .collect()
    }

    /// Prior variances of log θ for the trainable parameters of `spec`.
    pub fn log_variances(&self, spec: &KernelSpec) -> Vec<f64> {
        spec.trainable()
            .iter()
            .map(|&id| self.for_param(id).lambda)
            .collect()
    }

    /// Plain-text form: one `name = nu, lambda` line per entry.
    pub fn to_config_string(&self) -> String {
        let mut out =
            String::from("# lognormal priors: name = nu, lambda (log theta ~ N(nu, lambda))\n");
        for (key, p) in KEYS.iter().zip(self.entries()) {
            let _ = writeln!(out, "{key} = {:?}, {:?}", p.nu, p.lambda);
        }
        out
    }

    /// Parses the plain-text form. Keys not mentioned keep their default.
    pub fn from_config_str(text: &str) -> Result<Self> {
        let mut spec = default_priors();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let bad = |msg: &str| Error::InvalidPrior(format!("line {}: {msg}", lineno + 1));
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| bad("expected `name = nu, lambda`"))?;
            let key = key.trim();
            let (nu, lambda) = value
                .split_once(',')
                .ok_or_else(|| bad("expected two comma-separated numbers"))?;
            let nu: f64 = nu.trim().parse().map_err(|_| bad("nu is not a number"))?;
            let lambda: f64 = lambda
                .trim()
                .parse()
                .map_err(|_| bad("lambda is not a number"))?;
            let slot = spec
                .entry_mut(key)
                .ok_or_else(|| bad(&format!("unknown prior `{key}`")))?;
            *slot = LogNormal::new(nu, lambda);
        }
        spec.validate()?;
        Ok(spec)
    }
}

fn log_theta(spec: &KernelSpec, theta: &HyperParams) -> Result<Vec<f64>> {
    spec.trainable()
        .iter()
        .map(|&id| {
            let v = theta.get(id);
            if v.is_finite() && v > 0.0 {
                Ok(v.ln())
            } else {
                Err(Error::InvalidHyperParameter {
                    name: id.name(),
                    value: v,
                })
            }
        })
        .collect()
}

/// Σ_k log LogN(θ_k; ν_k, λ_k) over the trainable parameters of `spec`.
pub fn log_prior(priors: &PriorSpec, spec: &KernelSpec, theta: &HyperParams) -> Result<f64> {
    let u = log_theta(spec, theta)?;
    Ok(log_prior_at_log(priors, spec, &u))
}

/// Gradient of [`log_prior`] with respect to u = log θ.
pub fn grad_log_prior(
    priors: &PriorSpec,
    spec: &KernelSpec,
    theta: &HyperParams,
) -> Result<Vec<f64>> {
    let u = log_theta(spec, theta)?;
    Ok(grad_log_prior_at_log(priors, spec, &u))
}

pub(crate) fn log_prior_at_log(priors: &PriorSpec, spec: &KernelSpec, u: &[f64]) -> f64 {
    spec.trainable()
        .iter()
        .zip(u)
        .map(|(&id, &ui)| priors.for_param(id).ln_pdf_at_log(ui))
        .sum()
}

pub(crate) fn grad_log_prior_at_log(priors: &PriorSpec, spec: &KernelSpec, u: &[f64]) -> Vec<f64> {
    spec.trainable()
        .iter()
        .zip(u)
        .map(|(&id, &ui)| priors.for_param(id).grad_at_log(ui))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernels::Term;

    fn noise_only() -> KernelSpec {
        KernelSpec::new(vec![Term::Wn]).unwrap()
    }

    #[test]
    fn defaults_are_the_calibrated_constants() {
        let p = default_priors();
        assert_eq!(p.variance, LogNormal::new(-1.5, 1.0));
        assert_eq!(p.ell_per, LogNormal::new(0.2, 1.0));
        assert_eq!(p.ell_rbf, LogNormal::new(1.1, 1.0));
        assert_eq!(p.ell_sm1, LogNormal::new(-0.7, 1.0));
        assert_eq!(p.tau_sm1, LogNormal::new(0.5, 1.0));
        assert_eq!(p.ell_sm2, LogNormal::new(1.1, 1.0));
        assert_eq!(p.tau_sm2, LogNormal::new(1.6, 1.0));
        p.validate().unwrap();
    }

    #[test]
    fn reported_quantiles() {
        let p = default_priors();
        assert!((p.variance.median() - 0.2231).abs() < 1e-4);
        assert!((p.ell_rbf.median() - 3.0042).abs() < 1e-4);
        // exp(1.6 + 1.645) = 25.66, which the calibration table rounds to 25.8
        assert!((p.tau_sm2.quantile(0.95) - 25.66).abs() < 0.01);
    }

    #[test]
    fn second_periodic_shares_priors() {
        let p = default_priors();
        assert_eq!(p.for_param(ParamId::EllPer2), p.ell_per);
        assert_eq!(p.for_param(ParamId::S2Per2), p.variance);
        assert_eq!(p.for_param(ParamId::S2Bias), p.variance);
        assert_eq!(p.for_param(ParamId::S2Noise), p.variance);
    }

    #[test]
    fn density_at_log_mean() {
        let p = default_priors();
        let spec = noise_only();
        let mut theta = HyperParams::splat(1.0);
        theta.s2_noise = (-1.5f64).exp();
        let lp = log_prior(&p, &spec, &theta).unwrap();
        let expect = 1.5 - 0.5 * (2.0 * PI).ln();
        assert!((lp - expect).abs() < 1e-14);

        let full = KernelSpec::new(vec![
            Term::Per { period: 1.0 },
            Term::Lin,
            Term::Rbf,
            Term::Sm1,
            Term::Sm2,
            Term::Wn,
        ])
        .unwrap();
        let lp = log_prior(&p, &full, &p.medians()).unwrap();
        let expect: f64 = full
            .trainable()
            .iter()
            .map(|&id| {
                let d = p.for_param(id);
                -d.nu - 0.5 * (2.0 * PI * d.lambda).ln()
            })
            .sum();
        assert!((lp - expect).abs() < 1e-12);
    }

    #[test]
    fn gradient_closed_forms() {
        let p = default_priors();
        let spec = noise_only();
        let g = grad_log_prior_at_log(&p, &spec, &[-1.5]);
        assert_eq!(g, vec![-1.0]);
        let g = grad_log_prior_at_log(&p, &spec, &[-0.5]);
        assert_eq!(g, vec![-2.0]);
    }

    #[test]
    fn domain_errors() {
        let mut theta = HyperParams::splat(1.0);
        theta.s2_noise = 0.0;
        assert!(log_prior(&default_priors(), &noise_only(), &theta).is_err());
        theta.s2_noise = -1.0;
        assert!(grad_log_prior(&default_priors(), &noise_only(), &theta).is_err());
    }

    #[test]
    fn config_text_roundtrip() {
        let p = default_priors();
        let text = p.to_config_string();
        assert_eq!(PriorSpec::from_config_str(&text).unwrap(), p);

        let custom = PriorSpec::from_config_str("variance = -2.0, 0.5 # tighter\n").unwrap();
        assert_eq!(custom.variance, LogNormal::new(-2.0, 0.5));
        assert_eq!(custom.ell_rbf, p.ell_rbf);
    }

    #[test]
    fn config_errors() {
        assert!(PriorSpec::from_config_str("foo = 1, 1").is_err());
        assert!(PriorSpec::from_config_str("variance = 1").is_err());
        assert!(PriorSpec::from_config_str("variance = 1, 0").is_err());
        assert!(PriorSpec::from_config_str("variance = x, 1").is_err());
        // breaks the shared-lambda invariant
        assert!(PriorSpec::from_config_str("ell_rbf = 1.1, 2.0").is_err());
    }
}
