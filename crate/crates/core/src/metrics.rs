//! Point and probabilistic forecast scores: MAE, Gaussian CRPS and the
//! average predictive log-likelihood of the test observations.

use std::f64::consts::{FRAC_1_SQRT_2, PI};

use statrs::function::erf::erfc;

use crate::error::{Error, Result};

const FRAC_1_SQRT_PI: f64 = 0.564_189_583_547_756_3;

#[derive(Debug, Clone, PartialEq)]
pub struct ScoreReport {
    pub mae: f64,
    pub crps: f64,
    pub ll: f64,
    pub abs_errors: Vec<f64>,
    pub crps_steps: Vec<f64>,
    pub ll_steps: Vec<f64>,
}

fn check_lengths(a: usize, b: usize, what: &'static str) -> Result<()> {
    if a != b {
        return Err(Error::LengthMismatch {
            what,
            left: a,
            right: b,
        });
    }
    if a == 0 {
        return Err(Error::TooFewPoints {
            required: 1,
            got: 0,
        });
    }
    Ok(())
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

/// Standard normal CDF.
pub fn std_normal_cdf(z: f64) -> f64 {
    0.5 * erfc(-z * FRAC_1_SQRT_2)
}

/// Standard normal density.
pub fn std_normal_pdf(z: f64) -> f64 {
    (-0.5 * z * z).exp() / (2.0 * PI).sqrt()
}

/// Mean absolute error.
pub fn mae(y: &[f64], mu: &[f64]) -> Result<f64> {
    check_lengths(y.len(), mu.len(), "actuals and means")?;
    Ok(y.iter().zip(mu).map(|(a, b)| (a - b).abs()).sum::<f64>() / y.len() as f64)
}

/// CRPS of N(mu, sigma²) at `y`, as a loss (non-negative).
pub fn crps_gaussian(y: f64, mu: f64, sigma: f64) -> Result<f64> {
    if !sigma.is_finite() || sigma <= 0.0 {
        return Err(Error::InvalidScale(sigma));
    }
    let z = (y - mu) / sigma;
    Ok(sigma * (z * (2.0 * std_normal_cdf(z) - 1.0) + 2.0 * std_normal_pdf(z) - FRAC_1_SQRT_PI))
}

/// Gaussian log-density of each observation, averaged over steps.
pub fn test_log_likelihood(y: &[f64], mu: &[f64], sigma2: &[f64]) -> Result<f64> {
    Ok(mean(&log_likelihood_steps(y, mu, sigma2)?))
}

fn log_likelihood_steps(y: &[f64], mu: &[f64], sigma2: &[f64]) -> Result<Vec<f64>> {
    check_lengths(y.len(), mu.len(), "actuals and means")?;
    check_lengths(y.len(), sigma2.len(), "actuals and variances")?;
    y.iter()
        .zip(mu)
        .zip(sigma2)
        .map(|((&a, &m), &s2)| {
            if !s2.is_finite() || s2 <= 0.0 {
                return Err(Error::InvalidScale(s2));
            }
            let r = a - m;
            Ok(-0.5 * (2.0 * PI * s2).ln() - r * r / (2.0 * s2))
        })
        .collect()
}

/// All three scores for one forecast. `variance` holds per-step
/// predictive variances.
pub fn score(y: &[f64], mu: &[f64], variance: &[f64]) -> Result<ScoreReport> {
    check_lengths(y.len(), mu.len(), "actuals and means")?;
    check_lengths(y.len(), variance.len(), "actuals and variances")?;
    let abs_errors: Vec<f64> = y.iter().zip(mu).map(|(a, b)| (a - b).abs()).collect();
    let crps_steps = y
        .iter()
        .zip(mu)
        .zip(variance)
        .map(|((&a, &m), &v)| crps_gaussian(a, m, v.sqrt()))
        .collect::<Result<Vec<_>>>()?;
    let ll_steps = log_likelihood_steps(y, mu, variance)?;
    Ok(ScoreReport {
        mae: mean(&abs_errors),
        crps: mean(&crps_steps),
        ll: mean(&ll_steps),
        abs_errors,
        crps_steps,
        ll_steps,
    })
}
