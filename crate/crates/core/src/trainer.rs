//! MAP estimation of the kernel hyperparameters.
//!
//! The objective is log p(y | X, θ) + log p(θ), maximized over u = log θ
//! with BFGS and a backtracking (Armijo) line search. A failed Cholesky
//! factorization scores −∞ so the line search simply backs off.

use std::time::{Duration, Instant};

use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::gp;
use crate::kernels::{HyperParams, KernelSpec};
use crate::priors::{self, PriorSpec};

/// Smallest training set accepted by [`train`].
pub const MIN_TRAIN_POINTS: usize = 4;

/// Largest per-coordinate move of one line-search trial, in log units.
const MAX_LOG_STEP: f64 = 3.0;
const ARMIJO_C1: f64 = 1e-4;
const MAX_BACKTRACKS: usize = 40;

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub max_iterations: usize,
    /// Stop when the largest absolute gradient entry falls below this.
    pub grad_tolerance: f64,
    /// Stop when an accepted step changes the objective by less than
    /// `objective_tolerance · (1 + |objective|)`.
    pub objective_tolerance: f64,
    pub restarts: usize,
    /// Seed for the perturbed starting points of restarts after the first.
    pub seed: Option<u64>,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            max_iterations: 200,
            grad_tolerance: 1e-5,
            objective_tolerance: 1e-9,
            restarts: 1,
            seed: None,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = |t: f64| t > 0.0;
        if !positive(self.grad_tolerance) || !positive(self.objective_tolerance) {
            return Err(Error::InvalidConfig("tolerances must be > 0".into()));
        }
        if self.restarts < 1 {
            return Err(Error::InvalidConfig("restarts must be >= 1".into()));
        }
        Ok(())
    }

    /// Applies `key = value` lines (`#` starts a comment) on top of `self`.
    pub fn apply_config_str(mut self, text: &str) -> Result<Self> {
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let bad = |msg: String| Error::InvalidConfig(format!("line {}: {msg}", lineno + 1));
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| bad("expected `key = value`".into()))?;
            let (key, value) = (key.trim(), value.trim());
            let num = |v: &str| -> Result<f64> {
                v.parse::<f64>()
                    .map_err(|_| bad(format!("`{key}` expects a number, got `{v}`")))
            };
            let int = |v: &str| -> Result<u64> {
                v.parse::<u64>()
                    .map_err(|_| bad(format!("`{key}` expects an integer, got `{v}`")))
            };
            match key {
                "max_iterations" => self.max_iterations = int(value)? as usize,
                "grad_tolerance" => self.grad_tolerance = num(value)?,
                "objective_tolerance" => self.objective_tolerance = num(value)?,
                "restarts" => self.restarts = int(value)? as usize,
                "seed" => self.seed = Some(int(value)?),
                other => return Err(bad(format!("unknown key `{other}`"))),
            }
        }
        self.validate()?;
        Ok(self)
    }
}

/// Why the optimizer stopped.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Termination {
    GradientTolerance,
    ObjectiveTolerance,
    /// No step along the steepest-ascent direction improved the objective.
    LineSearchStalled,
    MaxIterations,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainResult {
    pub theta: HyperParams,
    pub objective: f64,
    /// Objective at the prior medians, where the first restart starts.
    pub initial_objective: f64,
    pub iterations: usize,
    pub converged: bool,
    pub termination: Termination,
    /// Objective after each accepted step of the winning restart.
    pub trace: Vec<f64>,
    pub duration: Duration,
}

/// log p(y | X, θ) + log p(θ). A covariance that cannot be factorized even
/// with maximal jitter scores −∞.
pub fn map_objective(
    spec: &KernelSpec,
    priors: &PriorSpec,
    theta: &HyperParams,
    xs: &[f64],
    ys: &[f64],
) -> Result<f64> {
    let prior = priors::log_prior(priors, spec, theta)?;
    match gp::log_marginal_likelihood(spec, theta, xs, ys) {
        Ok(lml) => Ok(lml + prior),
        Err(Error::IllConditioned { .. }) => Ok(f64::NEG_INFINITY),
        Err(e) => Err(e),
    }
}

/// Objective and its gradient with respect to u = log θ.
pub fn map_objective_and_gradient(
    spec: &KernelSpec,
    priors: &PriorSpec,
    theta: &HyperParams,
    xs: &[f64],
    ys: &[f64],
) -> Result<(f64, Vec<f64>)> {
    theta.validate(spec)?;
    let u = theta.to_log_vec(spec);
    let (lml, mut grad) = gp::lml_and_grad(spec, theta, xs, ys)?;
    let prior = priors::log_prior_at_log(priors, spec, &u);
    for (g, p) in grad
        .iter_mut()
        .zip(priors::grad_log_prior_at_log(priors, spec, &u))
    {
        *g += p;
    }
    Ok((lml + prior, grad))
}

struct Problem<'a> {
    spec: &'a KernelSpec,
    priors: &'a PriorSpec,
    base: HyperParams,
    xs: &'a [f64],
    ys: &'a [f64],
}

impl Problem<'_> {
    fn theta(&self, u: &[f64]) -> HyperParams {
        self.base.with_log_vec(self.spec, u)
    }

    /// Value only, −∞ for anything that cannot be evaluated.
    fn value(&self, u: &[f64]) -> f64 {
        if u.iter().any(|v| !v.is_finite()) {
            return f64::NEG_INFINITY;
        }
        match map_objective(self.spec, self.priors, &self.theta(u), self.xs, self.ys) {
            Ok(v) if v.is_finite() => v,
            _ => f64::NEG_INFINITY,
        }
    }

    fn value_and_grad(&self, u: &[f64]) -> Option<(f64, DVector<f64>)> {
        let (v, g) =
            map_objective_and_gradient(self.spec, self.priors, &self.theta(u), self.xs, self.ys)
                .ok()?;
        if v.is_finite() && g.iter().all(|x| x.is_finite()) {
            Some((v, DVector::from_vec(g)))
        } else {
            None
        }
    }
}

struct RunOutcome {
    u: DVector<f64>,
    objective: f64,
    iterations: usize,
    termination: Termination,
    trace: Vec<f64>,
}

fn max_abs(v: &DVector<f64>) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

/// BFGS ascent from `u0`. Works on φ = −objective internally.
fn bfgs(problem: &Problem<'_>, u0: DVector<f64>, cfg: &TrainConfig) -> Result<RunOutcome> {
    let p = u0.len();
    let (f0, g0) = problem
        .value_and_grad(u0.as_slice())
        .ok_or(Error::IllConditioned { jitter: f64::NAN })?;
    let mut u = u0;
    let mut phi = -f0;
    let mut grad = -g0;
    let mut h = DMatrix::<f64>::identity(p, p);
    let mut fresh_h = true;
    let mut trace = vec![f0];
    let mut iterations = 0;
    let mut termination = Termination::MaxIterations;

    while iterations < cfg.max_iterations {
        if max_abs(&grad) < cfg.grad_tolerance {
            termination = Termination::GradientTolerance;
            break;
        }
        let mut dir = -(&h * &grad);
        let mut slope = dir.dot(&grad);
        if slope.is_nan() || slope >= 0.0 {
            h.fill_with_identity();
            fresh_h = true;
            dir = -grad.clone();
            slope = dir.dot(&grad);
        }
        let biggest = max_abs(&dir);
        if biggest > MAX_LOG_STEP {
            dir *= MAX_LOG_STEP / biggest;
            slope *= MAX_LOG_STEP / biggest;
        }

        let mut step = 1.0;
        let mut accepted = None;
        for _ in 0..MAX_BACKTRACKS {
            let trial = &u + step * &dir;
            let phi_trial = -problem.value(trial.as_slice());
            if phi_trial.is_finite() && phi_trial <= phi + ARMIJO_C1 * step * slope {
                accepted = Some(trial);
                break;
            }
            step *= 0.5;
        }
        let Some(u_new) = accepted else {
            if fresh_h {
                termination = Termination::LineSearchStalled;
                break;
            }
            h.fill_with_identity();
            fresh_h = true;
            continue;
        };
        let Some((f_new, g_new)) = problem.value_and_grad(u_new.as_slice()) else {
            // value succeeded but the gradient pass did not; treat as a stall
            termination = Termination::LineSearchStalled;
            break;
        };
        iterations += 1;
        let phi_new = -f_new;
        let grad_new = -g_new;
        let s = &u_new - &u;
        let yv = &grad_new - &grad;
        let sy = s.dot(&yv);
        if sy > 1e-10 * s.norm() * yv.norm() {
            if fresh_h {
                h *= sy / yv.dot(&yv);
            }
            let rho = 1.0 / sy;
            let hy = &h * &yv;
            let yhy = yv.dot(&hy);
            // H ← H − ρ(H y sᵀ + s yᵀ H) + (ρ² yᵀHy + ρ) s sᵀ
            h.ger(-rho, &hy, &s, 1.0);
            h.ger(-rho, &s, &hy, 1.0);
            h.ger(rho * rho * yhy + rho, &s, &s, 1.0);
            fresh_h = false;
        }
        let change = (phi - phi_new).abs();
        u = u_new;
        phi = phi_new;
        grad = grad_new;
        trace.push(-phi);
        if change < cfg.objective_tolerance * (1.0 + phi.abs()) {
            termination = Termination::ObjectiveTolerance;
            break;
        }
    }
    if termination == Termination::MaxIterations && max_abs(&grad) < cfg.grad_tolerance {
        termination = Termination::GradientTolerance;
    }
    Ok(RunOutcome {
        u,
        objective: -phi,
        iterations,
        termination,
        trace,
    })
}

/// MAP training from the prior medians, optionally with extra restarts
/// from seeded perturbations of the starting point.
pub fn train(
    spec: &KernelSpec,
    priors: &PriorSpec,
    xs: &[f64],
    ys: &[f64],
    cfg: &TrainConfig,
) -> Result<TrainResult> {
    let start = Instant::now();
    cfg.validate()?;
    priors.validate()?;
    if xs.len() != ys.len() {
        return Err(Error::LengthMismatch {
            what: "inputs and targets",
            left: xs.len(),
            right: ys.len(),
        });
    }
    if xs.len() < MIN_TRAIN_POINTS {
        return Err(Error::TooFewPoints {
            required: MIN_TRAIN_POINTS,
            got: xs.len(),
        });
    }
    let problem = Problem {
        spec,
        priors,
        base: priors.medians(),
        xs,
        ys,
    };
    let u_init = DVector::from_vec(priors.log_means(spec));
    let initial_objective = problem.value(u_init.as_slice());
    if !initial_objective.is_finite() {
        return Err(Error::IllConditioned { jitter: f64::NAN });
    }

    let mut best = bfgs(&problem, u_init.clone(), cfg)?;
    if cfg.restarts > 1 {
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed.unwrap_or(0));
        let sds: Vec<f64> = priors
            .log_variances(spec)
            .iter()
            .map(|l| l.sqrt())
            .collect();
        for _ in 1..cfg.restarts {
            let u0 = DVector::from_iterator(
                u_init.len(),
                u_init.iter().zip(&sds).map(|(m, sd)| {
                    let z: f64 = StandardNormal.sample(&mut rng);
                    m + sd * z
                }),
            );
            // restarts that start in an unusable region are skipped
            if let Ok(run) = bfgs(&problem, u0, cfg) {
                if run.objective > best.objective {
                    best = run;
                }
            }
        }
    }

    let converged = best.termination != Termination::MaxIterations;
    Ok(TrainResult {
        theta: problem.theta(best.u.as_slice()),
        objective: best.objective,
        initial_objective,
        iterations: best.iterations,
        converged,
        termination: best.termination,
        trace: best.trace,
        duration: start.elapsed(),
    })
}
