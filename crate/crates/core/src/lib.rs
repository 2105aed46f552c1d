//! Automatic time-series forecasting with Gaussian processes.
//!
//! A fixed additive kernel composition (periodic + linear + RBF + two
//! spectral-mixture components + white noise) is fitted to each series by
//! MAP estimation under lognormal hyperparameter priors. Components that a
//! series does not need are switched off by training itself, through small
//! variances or long lengthscales, so no kernel search is performed.
//!
//! ```no_run
//! use gpfc_core::{forecast, Frequency, TimeSeries, TrainConfig};
//!
//! let values: Vec<f64> = (0..120).map(|i| (i as f64 / 12.0 * 6.283).sin()).collect();
//! let ts = TimeSeries::new(values, Frequency::Monthly);
//! let (fc, trained) = forecast(&ts, 18, &TrainConfig::default()).unwrap();
//! println!("{:?} after {} iterations", fc.mean, trained.iterations);
//! ```

pub mod error;
pub mod forecaster;
pub mod gp;
pub mod kernels;
pub mod metrics;
pub mod priors;
pub mod trainer;

pub use error::{Error, Result};
pub use forecaster::{
    default_spec, forecast, make_time_index, Forecast, Forecaster, Frequency, SeasonalMode,
    Standardizer, TimeSeries,
};
pub use gp::{fit, log_marginal_likelihood, FitState, PredictiveDistribution};
pub use kernels::{HyperParams, KernelSpec, ParamId, Term};
pub use metrics::{crps_gaussian, mae, test_log_likelihood, ScoreReport};
pub use priors::{default_priors, LogNormal, PriorSpec};
pub use trainer::{map_objective, train, TrainConfig, TrainResult};
