//! Report rendering: an aligned text table or line-delimited JSON records.

use std::fmt::Write as _;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::runner::BenchReport;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Format {
    #[default]
    Table,
    Jsonl,
}

impl FromStr for Format {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "table" => Ok(Format::Table),
            "jsonl" => Ok(Format::Jsonl),
            other => Err(Error::Invalid(format!(
                "unknown format `{other}` (table|jsonl)"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeriesRecord {
    pub series: String,
    pub mae: f64,
    pub crps: f64,
    pub ll: f64,
    pub train_seconds: f64,
    pub converged: bool,
    pub iterations: usize,
    pub train_len: usize,
    pub test_len: usize,
    pub baseline_mae: Option<f64>,
    pub baseline_crps: Option<f64>,
    pub baseline_ll: Option<f64>,
    pub baseline_error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FailureRecord {
    pub series: String,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AggregateRecord {
    pub n_series: usize,
    pub n_scored: usize,
    pub n_failed: usize,
    pub n_converged: usize,
    pub median_mae: Option<f64>,
    pub median_crps: Option<f64>,
    pub median_ll: Option<f64>,
    pub n_baseline: usize,
    pub baseline_median_mae: Option<f64>,
    pub baseline_median_crps: Option<f64>,
    pub baseline_median_ll: Option<f64>,
    pub total_seconds: f64,
    pub median_train_seconds: f64,
    pub max_train_seconds: f64,
}

/// One line of the machine-readable report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "record", rename_all = "snake_case")]
pub enum Record {
    Series(SeriesRecord),
    Failure(FailureRecord),
    Aggregate(AggregateRecord),
}

/// Flattens a report: series in order, then failures, then the aggregate.
pub fn records(report: &BenchReport) -> Vec<Record> {
    let mut out: Vec<Record> = report
        .results
        .iter()
        .map(|r| {
            let base = r.baseline.as_ref().ok();
            Record::Series(SeriesRecord {
                series: r.name.clone(),
                mae: r.scores.mae,
                crps: r.scores.crps,
                ll: r.scores.ll,
                train_seconds: r.train_seconds,
                converged: r.converged,
                iterations: r.iterations,
                train_len: r.train_len,
                test_len: r.test_len,
                baseline_mae: base.map(|b| b.mae),
                baseline_crps: base.map(|b| b.crps),
                baseline_ll: base.map(|b| b.ll),
                baseline_error: r.baseline.as_ref().err().cloned(),
            })
        })
        .collect();
    out.extend(report.failures.iter().map(|f| {
        Record::Failure(FailureRecord {
            series: f.name.clone(),
            reason: f.reason.clone(),
        })
    }));
    let a = &report.aggregate;
    out.push(Record::Aggregate(AggregateRecord {
        n_series: a.n_series,
        n_scored: a.n_scored,
        n_failed: a.n_failed,
        n_converged: a.n_converged,
        median_mae: a.gp.map(|m| m.mae),
        median_crps: a.gp.map(|m| m.crps),
        median_ll: a.gp.map(|m| m.ll),
        n_baseline: a.n_baseline,
        baseline_median_mae: a.baseline.map(|m| m.mae),
        baseline_median_crps: a.baseline.map(|m| m.crps),
        baseline_median_ll: a.baseline.map(|m| m.ll),
        total_seconds: report.timing.total_seconds,
        median_train_seconds: report.timing.median_train_seconds,
        max_train_seconds: report.timing.max_train_seconds,
    }));
    out
}

/// Renders `report` in the requested format.
pub fn emit_report(report: &BenchReport, format: Format) -> String {
    match format {
        Format::Table => table(report),
        Format::Jsonl => jsonl(report),
    }
}

fn jsonl(report: &BenchReport) -> String {
    let mut out = String::new();
    for r in records(report) {
        out.push_str(&serde_json::to_string(&r).expect("records contain finite numbers"));
        out.push('\n');
    }
    out
}

/// Parses line-delimited records, skipping blank lines.
pub fn parse_records(text: &str) -> Result<Vec<Record>> {
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| {
            serde_json::from_str(l).map_err(|e| Error::parse(i as u64 + 1, e.to_string()))
        })
        .collect()
}

fn table(report: &BenchReport) -> String {
    let width = report
        .results
        .iter()
        .map(|r| r.name.len())
        .chain(std::iter::once("series".len()))
        .max()
        .unwrap_or(6);
    let mut s = String::new();
    let _ = writeln!(
        s,
        "{:<width$}  {:>10}  {:>10}  {:>10}  {:>13}  {:>9}",
        "series", "mae", "crps", "ll", "train_seconds", "converged"
    );
    for r in &report.results {
        let _ = writeln!(
            s,
            "{:<width$}  {:>10.4}  {:>10.4}  {:>10.4}  {:>13.3}  {:>9}",
            r.name,
            r.scores.mae,
            r.scores.crps,
            r.scores.ll,
            r.train_seconds,
            if r.converged { "yes" } else { "no" }
        );
    }
    if !report.failures.is_empty() {
        let _ = writeln!(s, "\nfailures");
        for f in &report.failures {
            let _ = writeln!(s, "  {}: {}", f.name, f.reason);
        }
    }
    let a = &report.aggregate;
    let _ = writeln!(s, "\naggregate");
    let _ = writeln!(
        s,
        "  scored        {} of {} ({} failed, {} converged)",
        a.n_scored, a.n_series, a.n_failed, a.n_converged
    );
    match a.gp {
        None => {
            let _ = writeln!(s, "  no series scored");
        }
        Some(gp) => {
            let _ = writeln!(
                s,
                "  {:<12}  {:>10}  {:>14}",
                "median", "gp", "seasonal_naive"
            );
            let base = |f: fn(&crate::runner::MetricMedians) -> f64| {
                a.baseline
                    .as_ref()
                    .map_or("-".to_string(), |b| format!("{:.4}", f(b)))
            };
            let _ = writeln!(
                s,
                "  {:<12}  {:>10.4}  {:>14}",
                "mae",
                gp.mae,
                base(|m| m.mae)
            );
            let _ = writeln!(
                s,
                "  {:<12}  {:>10.4}  {:>14}",
                "crps",
                gp.crps,
                base(|m| m.crps)
            );
            let _ = writeln!(s, "  {:<12}  {:>10.4}  {:>14}", "ll", gp.ll, base(|m| m.ll));
        }
    }
    let t = &report.timing;
    let _ = writeln!(
        s,
        "  seconds       total {:.3}, median train {:.3}, max train {:.3}",
        t.total_seconds, t.median_train_seconds, t.max_train_seconds
    );
    s
}
