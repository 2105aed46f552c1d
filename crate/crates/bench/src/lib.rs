//! Benchmark harness around `gpfc-core`: CSV datasets, a batch runner with
//! a seasonal-naive baseline, and text or JSON-lines reports.
//!
//! ```no_run
//! use gpfc_bench::{emit_report, run_benchmark, synthetic_dataset, BenchConfig, Format, SynthConfig};
//!
//! let ds = synthetic_dataset(&SynthConfig::default()).unwrap();
//! let report = run_benchmark(&ds, &BenchConfig::default()).unwrap();
//! print!("{}", emit_report(&report, Format::Table));
//! ```

pub mod baseline;
pub mod dataset;
pub mod error;
pub mod report;
pub mod runner;
pub mod synth;

pub use baseline::seasonal_naive;
pub use dataset::{load_csv, read_csv, save_csv, write_csv, Dataset, Layout, LoadOptions, Series};
pub use error::{Error, Result};
pub use report::{emit_report, parse_records, records, Format, Record};
pub use runner::{run_benchmark, BenchConfig, BenchReport, SeriesFailure, SeriesResult};
pub use synth::{synthetic_dataset, SynthConfig};
