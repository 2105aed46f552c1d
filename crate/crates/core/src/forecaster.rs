//! End-to-end forecasting: standardize, index time in years, train, predict,
//! and map the predictive moments back to the original scale.

use crate::error::{Error, Result};
use crate::gp;
use crate::kernels::{KernelSpec, Term};
use crate::priors::{default_priors, PriorSpec};
use crate::trainer::{self, TrainConfig, TrainResult};

/// Minimum series length accepted for training.
pub const MIN_SERIES_LEN: usize = 8;

/// Weeks per year, used for the weekly period of the double-seasonal spec.
pub const WEEKS_PER_YEAR: f64 = 52.18;
pub const DAYS_PER_YEAR: f64 = 365.25;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Frequency {
    Monthly,
    Quarterly,
    /// Arbitrary sampling rate, given in steps per year.
    Custom(f64),
}

impl Frequency {
    /// Six-hour steps: 4 per day over 365.25 days.
    pub const SIX_HOURLY: Frequency = Frequency::Custom(4.0 * DAYS_PER_YEAR);

    pub fn steps_per_year(&self) -> f64 {
        match *self {
            Frequency::Monthly => 12.0,
            Frequency::Quarterly => 4.0,
            Frequency::Custom(s) => s,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let s = self.steps_per_year();
        if s.is_finite() && s > 0.0 {
            Ok(())
        } else {
            Err(Error::InvalidFrequency(s))
        }
    }

    /// Default test/forecast horizon: 18 monthly, 8 quarterly, 42 otherwise.
    pub fn default_horizon(&self) -> usize {
        match self {
            Frequency::Monthly => 18,
            Frequency::Quarterly => 8,
            Frequency::Custom(_) => 42,
        }
    }

    /// Steps in one yearly season, rounded, never below 1.
    pub fn season_length(&self) -> usize {
        (self.steps_per_year().round() as usize).max(1)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TimeSeries {
    pub values: Vec<f64>,
    pub frequency: Frequency,
    /// Time of the first observation, in (decimal) years. Only used to
    /// label forecasts; the model always indexes from zero.
    pub start: Option<f64>,
}

impl TimeSeries {
    pub fn new(values: Vec<f64>, frequency: Frequency) -> Self {
        TimeSeries {
            values,
            frequency,
            start: None,
        }
    }

    pub fn with_start(mut self, start: f64) -> Self {
        self.start = Some(start);
        self
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Checks finiteness and the minimum training length.
    pub fn validate(&self) -> Result<()> {
        self.frequency.validate()?;
        if let Some(i) = self.values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFiniteInput(i));
        }
        if self.values.len() < MIN_SERIES_LEN {
            return Err(Error::TooFewPoints {
                required: MIN_SERIES_LEN,
                got: self.values.len(),
            });
        }
        Ok(())
    }

    /// Splits off the last `test_len` observations.
    pub fn split(&self, test_len: usize) -> (TimeSeries, Vec<f64>) {
        let cut = self.values.len().saturating_sub(test_len);
        let train = TimeSeries {
            values: self.values[..cut].to_vec(),
            frequency: self.frequency,
            start: self.start,
        };
        (train, self.values[cut..].to_vec())
    }
}

/// Time points i / steps_per_year for steps `from..to`.
pub fn time_points(frequency: Frequency, from: usize, to: usize) -> Result<Vec<f64>> {
    frequency.validate()?;
    let spy = frequency.steps_per_year();
    Ok((from..to).map(|i| i as f64 / spy).collect())
}

/// Year-unit index of every observation of `ts`.
pub fn make_time_index(ts: &TimeSeries) -> Result<Vec<f64>> {
    time_points(ts.frequency, 0, ts.len())
}

/// Affine map to zero mean and unit (population) variance.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Standardizer {
    pub mean: f64,
    pub sd: f64,
}

impl Standardizer {
    pub fn fit(values: &[f64]) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::TooFewPoints {
                required: 1,
                got: 0,
            });
        }
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
        let sd = var.sqrt();
        if !sd.is_finite() || sd <= 1e-12 * mean.abs().max(1e-300) {
            return Err(Error::ConstantSeries);
        }
        Ok(Standardizer { mean, sd })
    }

    pub fn transform(&self, v: f64) -> f64 {
        (v - self.mean) / self.sd
    }

    pub fn inverse(&self, z: f64) -> f64 {
        z * self.sd + self.mean
    }

    pub fn transform_all(&self, values: &[f64]) -> Vec<f64> {
        values.iter().map(|&v| self.transform(v)).collect()
    }

    pub fn inverse_variance(&self, var: f64) -> f64 {
        var * self.sd * self.sd
    }

    pub fn transform_variance(&self, var: f64) -> f64 {
        var / (self.sd * self.sd)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SeasonalMode {
    /// One yearly periodic term.
    #[default]
    Single,
    /// Weekly and daily periodic terms, for sub-daily data.
    Double,
}

/// The fixed composition for `mode`, white noise included.
pub fn default_spec(mode: SeasonalMode) -> KernelSpec {
    let mut terms = match mode {
        SeasonalMode::Single => vec![Term::Per { period: 1.0 }],
        SeasonalMode::Double => vec![
            Term::Per {
                period: 1.0 / WEEKS_PER_YEAR,
            },
            Term::Per2 {
                period: 1.0 / DAYS_PER_YEAR,
            },
        ],
    };
    terms.extend([Term::Lin, Term::Rbf, Term::Sm1, Term::Sm2, Term::Wn]);
    KernelSpec::new(terms).expect("default composition is valid")
}

/// Predictive marginals for the steps following the training data.
#[derive(Debug, Clone, PartialEq)]
pub struct Forecast {
    /// Absolute step index of each forecast (first training point is 0).
    pub steps: Vec<usize>,
    /// Time of each forecast in years, offset by the series start if known.
    pub times: Vec<f64>,
    /// Mean in original units.
    pub mean: Vec<f64>,
    /// Observation variance in original units.
    pub variance: Vec<f64>,
    pub standardized_mean: Vec<f64>,
    pub standardized_variance: Vec<f64>,
    pub standardizer: Standardizer,
}

impl Forecast {
    pub fn horizon(&self) -> usize {
        self.mean.len()
    }

    /// Builds a forecast for the steps following `ts` from standardized moments.
    pub fn from_standardized(
        ts: &TimeSeries,
        standardizer: Standardizer,
        standardized_mean: Vec<f64>,
        standardized_variance: Vec<f64>,
    ) -> Result<Self> {
        let n = ts.len();
        let h = standardized_mean.len();
        let mut times = time_points(ts.frequency, n, n + h)?;
        if let Some(start) = ts.start {
            times.iter_mut().for_each(|t| *t += start);
        }
        Ok(Forecast {
            steps: (n..n + h).collect(),
            times,
            mean: standardized_mean
                .iter()
                .map(|&z| standardizer.inverse(z))
                .collect(),
            variance: standardized_variance
                .iter()
                .map(|&v| standardizer.inverse_variance(v))
                .collect(),
            standardized_mean,
            standardized_variance,
            standardizer,
        })
    }
}

/// Forecasting pipeline with a fixed composition, priors and training setup.
#[derive(Debug, Clone)]
pub struct Forecaster {
    pub spec: KernelSpec,
    pub priors: PriorSpec,
    pub config: TrainConfig,
}

impl Default for Forecaster {
    fn default() -> Self {
        Forecaster::new(SeasonalMode::Single)
    }
}

impl Forecaster {
    pub fn new(mode: SeasonalMode) -> Self {
        Forecaster {
            spec: default_spec(mode),
            priors: default_priors(),
            config: TrainConfig::default(),
        }
    }

    pub fn with_spec(mut self, spec: KernelSpec) -> Self {
        self.spec = spec;
        self
    }

    pub fn with_priors(mut self, priors: PriorSpec) -> Self {
        self.priors = priors;
        self
    }

    pub fn with_config(mut self, config: TrainConfig) -> Self {
        self.config = config;
        self
    }

    /// Trains on all of `ts` and forecasts the next `horizon` steps.
    pub fn forecast(&self, ts: &TimeSeries, horizon: usize) -> Result<(Forecast, TrainResult)> {
        if horizon == 0 {
            return Err(Error::EmptyHorizon);
        }
        ts.validate()?;
        let standardizer = Standardizer::fit(&ts.values)?;
        let ys = standardizer.transform_all(&ts.values);
        let xs = make_time_index(ts)?;
        let trained = trainer::train(&self.spec, &self.priors, &xs, &ys, &self.config)?;
        if !trained.converged {
            log::warn!(
                "training stopped after {} iterations without converging ({:?})",
                trained.iterations,
                trained.termination
            );
        }
        let state = gp::fit(&self.spec, &trained.theta, &xs, &ys)?;
        let xs_star = time_points(ts.frequency, ts.len(), ts.len() + horizon)?;
        let pred = state.predict(&xs_star)?;
        let forecast = Forecast::from_standardized(ts, standardizer, pred.mean, pred.variance)?;
        Ok((forecast, trained))
    }
}

/// Single-seasonal forecast with the default priors.
pub fn forecast(
    ts: &TimeSeries,
    horizon: usize,
    cfg: &TrainConfig,
) -> Result<(Forecast, TrainResult)> {
    Forecaster::new(SeasonalMode::Single)
        .with_config(cfg.clone())
        .forecast(ts, horizon)
}
