use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("slit configuration must not be empty")]
    EmptyConfiguration,

    #[error("missing data for configuration {label}")]
    MissingConfiguration { label: String },

    #[error("normalization denominator for {label} is zero")]
    ZeroDenominator { label: String },

    #[error("time-tag stream {stream} is not sorted at index {index}")]
    UnsortedStream { stream: usize, index: usize },

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("inconsistent counts: {coincidences} coincidences exceed {singles} singles")]
    InconsistentCounts { singles: u64, coincidences: u64 },

    #[error("malformed data: {0}")]
    Format(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("entry {label}: {source}")]
    Entry {
        label: String,
        #[source]
        source: Box<Error>,
    },

    #[error("{regime} set {set}: {source}")]
    Set {
        regime: &'static str,
        set: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("configuration: {0}")]
    Config(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn in_set(self, regime: &'static str, set: usize) -> Self {
        Error::Set {
            regime,
            set,
            source: Box::new(self),
        }
    }

    pub(crate) fn in_entry(self, label: impl Into<String>) -> Self {
        Error::Entry {
            label: label.into(),
            source: Box::new(self),
        }
    }
}
