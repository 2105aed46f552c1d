use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("line {line}: {message}")]
    Parse { line: u64, message: String },

    #[error("line {line}: duplicate step {step} for series `{series}` (first seen on line {first_line})")]
    DuplicateStep {
        series: String,
        step: i64,
        line: u64,
        first_line: u64,
    },

    #[error("duplicate series name `{0}`")]
    DuplicateSeries(String),

    #[error("series `{series}` has a gap: step {missing} is missing")]
    Gap { series: String, missing: i64 },

    #[error("{0}")]
    Invalid(String),

    #[error(transparent)]
    Core(#[from] gpfc_core::Error),

    #[error("csv: {0}")]
    Csv(#[from] csv::Error),

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn parse(line: u64, message: impl Into<String>) -> Self {
        Error::Parse {
            line,
            message: message.into(),
        }
    }
}
