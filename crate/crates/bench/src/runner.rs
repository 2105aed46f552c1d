//! Batch evaluation: split, forecast, score and aggregate every series.

use std::time::{Duration, Instant};

use gpfc_core::metrics::score;
use gpfc_core::trainer::Termination;
use gpfc_core::{
    default_priors, Forecast, Forecaster, HyperParams, PriorSpec, ScoreReport, SeasonalMode,
    TrainConfig,
};
use rayon::prelude::*;

use crate::baseline::seasonal_naive;
use crate::dataset::{Dataset, Series};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct BenchConfig {
    pub mode: SeasonalMode,
    pub train: TrainConfig,
    pub priors: PriorSpec,
    /// Worker threads; each series is fitted on a single thread.
    pub parallelism: usize,
    /// Score in original units instead of training-standardized units.
    pub original_units: bool,
}

impl Default for BenchConfig {
    fn default() -> Self {
        BenchConfig {
            mode: SeasonalMode::Single,
            train: TrainConfig::default(),
            priors: default_priors(),
            parallelism: 1,
            original_units: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SeriesResult {
    pub name: String,
    pub train_len: usize,
    pub test_len: usize,
    pub scores: ScoreReport,
    pub forecast: Forecast,
    pub theta: HyperParams,
    pub iterations: usize,
    pub converged: bool,
    pub termination: Termination,
    pub train_seconds: f64,
    /// Seasonal-naive scores, or the reason the baseline could not run.
    pub baseline: std::result::Result<ScoreReport, String>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SeriesFailure {
    pub name: String,
    pub reason: String,
}

/// Medians over the series that were actually scored.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct MetricMedians {
    pub mae: f64,
    pub crps: f64,
    pub ll: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Aggregate {
    pub n_series: usize,
    pub n_scored: usize,
    pub n_failed: usize,
    pub n_converged: usize,
    pub gp: Option<MetricMedians>,
    pub baseline: Option<MetricMedians>,
    pub n_baseline: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Timing {
    pub total_seconds: f64,
    pub median_train_seconds: f64,
    pub max_train_seconds: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchReport {
    /// Scored series, in dataset order.
    pub results: Vec<SeriesResult>,
    /// Series that could not be scored, in dataset order.
    pub failures: Vec<SeriesFailure>,
    pub aggregate: Aggregate,
    pub timing: Timing,
}

impl BenchReport {
    /// Copy with every wall-clock measurement zeroed, for reproducibility
    /// comparisons.
    pub fn without_timing(&self) -> BenchReport {
        let mut out = self.clone();
        out.results.iter_mut().for_each(|r| r.train_seconds = 0.0);
        out.timing = Timing::default();
        out
    }

    pub fn all_succeeded(&self) -> bool {
        self.failures.is_empty()
    }
}

/// Median of a non-empty slice; the mean of the middle pair for even
/// lengths.
pub fn median(values: &[f64]) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let mid = v.len() / 2;
    Some(if v.len() % 2 == 1 {
        v[mid]
    } else {
        0.5 * (v[mid - 1] + v[mid])
    })
}

fn medians<'a>(reports: impl Iterator<Item = &'a ScoreReport> + Clone) -> Option<MetricMedians> {
    let pick = |f: fn(&ScoreReport) -> f64| median(&reports.clone().map(f).collect::<Vec<_>>());
    Some(MetricMedians {
        mae: pick(|r| r.mae)?,
        crps: pick(|r| r.crps)?,
        ll: pick(|r| r.ll)?,
    })
}

fn scored(actual: &[f64], fc: &Forecast, original_units: bool) -> gpfc_core::Result<ScoreReport> {
    if original_units {
        score(actual, &fc.mean, &fc.variance)
    } else {
        let z = fc.standardizer.transform_all(actual);
        score(&z, &fc.standardized_mean, &fc.standardized_variance)
    }
}

fn run_one(
    item: &Series,
    forecaster: &Forecaster,
    original_units: bool,
) -> std::result::Result<SeriesResult, String> {
    let n = item.series.len();
    if item.test_len >= n {
        return Err(format!(
            "test length {} leaves no training data (length {n})",
            item.test_len
        ));
    }
    let (train, test) = item.series.split(item.test_len);
    let (forecast, trained) = forecaster
        .forecast(&train, item.test_len)
        .map_err(|e| e.to_string())?;
    let scores = scored(&test, &forecast, original_units).map_err(|e| e.to_string())?;
    let baseline = seasonal_naive(&train, item.test_len)
        .map_err(|e| e.to_string())
        .and_then(|fc| scored(&test, &fc, original_units).map_err(|e| e.to_string()));
    Ok(SeriesResult {
        name: item.name.clone(),
        train_len: train.len(),
        test_len: item.test_len,
        scores,
        forecast,
        theta: trained.theta,
        iterations: trained.iterations,
        converged: trained.converged,
        termination: trained.termination,
        train_seconds: trained.duration.as_secs_f64(),
        baseline,
    })
}

/// Forecasts and scores every series. Per-series failures are collected,
/// never fatal; the result set does not depend on `parallelism`.
pub fn run_benchmark(ds: &Dataset, cfg: &BenchConfig) -> Result<BenchReport> {
    if cfg.parallelism == 0 {
        return Err(Error::Invalid("parallelism must be at least 1".into()));
    }
    cfg.train.validate()?;
    cfg.priors.validate()?;
    let forecaster = Forecaster::new(cfg.mode)
        .with_priors(cfg.priors)
        .with_config(cfg.train.clone());
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.parallelism)
        .build()
        .map_err(|e| Error::Invalid(format!("cannot start worker pool: {e}")))?;

    let start = Instant::now();
    let outcomes: Vec<_> = pool.install(|| {
        ds.series()
            .par_iter()
            .map(|item| run_one(item, &forecaster, cfg.original_units))
            .collect()
    });
    let total = start.elapsed();

    let mut results = Vec::new();
    let mut failures = Vec::new();
    for (item, outcome) in ds.series().iter().zip(outcomes) {
        match outcome {
            Ok(r) => results.push(r),
            Err(reason) => {
                log::warn!("series `{}` failed: {reason}", item.name);
                failures.push(SeriesFailure {
                    name: item.name.clone(),
                    reason,
                })
            }
        }
    }
    Ok(assemble(results, failures, total))
}

fn assemble(
    results: Vec<SeriesResult>,
    failures: Vec<SeriesFailure>,
    total: Duration,
) -> BenchReport {
    let baseline_scores: Vec<&ScoreReport> = results
        .iter()
        .filter_map(|r| r.baseline.as_ref().ok())
        .collect();
    let train_seconds: Vec<f64> = results.iter().map(|r| r.train_seconds).collect();
    let aggregate = Aggregate {
        n_series: results.len() + failures.len(),
        n_scored: results.len(),
        n_failed: failures.len(),
        n_converged: results.iter().filter(|r| r.converged).count(),
        gp: medians(results.iter().map(|r| &r.scores)),
        baseline: medians(baseline_scores.iter().copied()),
        n_baseline: baseline_scores.len(),
    };
    let timing = Timing {
        total_seconds: total.as_secs_f64(),
        median_train_seconds: median(&train_seconds).unwrap_or(0.0),
        max_train_seconds: train_seconds.iter().copied().fold(0.0, f64::max),
    };
    BenchReport {
        results,
        failures,
        aggregate,
        timing,
    }
}
