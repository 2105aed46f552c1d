use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("hyperparameter `{name}` must be finite and strictly positive, got {value}")]
    InvalidHyperParameter { name: &'static str, value: f64 },

    #[error("kernel evaluation produced a non-finite value at ({x1}, {x2})")]
    NonFiniteKernel { x1: f64, x2: f64 },

    #[error("kernel spec is invalid: {0}")]
    InvalidSpec(String),

    #[error("covariance matrix is not positive definite even with jitter {jitter:e}")]
    IllConditioned { jitter: f64 },

    #[error("length mismatch: {what} ({left} vs {right})")]
    LengthMismatch {
        what: &'static str,
        left: usize,
        right: usize,
    },

    #[error("need at least {required} observations, got {got}")]
    TooFewPoints { required: usize, got: usize },

    #[error("input contains a non-finite value at index {0}")]
    NonFiniteInput(usize),

    #[error("series is constant; cannot standardize")]
    ConstantSeries,

    #[error("steps per year must be finite and positive, got {0}")]
    InvalidFrequency(f64),

    #[error("predictive variance is negative ({0:e}) beyond round-off")]
    NegativeVariance(f64),

    #[error("scale must be strictly positive, got {0}")]
    InvalidScale(f64),

    #[error("invalid prior: {0}")]
    InvalidPrior(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("horizon must be at least 1")]
    EmptyHorizon,
}
