use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },

    #[error("invalid generator: LFSR state must be nonzero")]
    InvalidGenerator,

    #[error("cannot bundle an empty list of hypervectors")]
    EmptyBundle,

    #[error("cannot threshold an empty vote accumulator")]
    EmptyAccumulator,

    #[error("uniform draw range must be positive")]
    EmptyRange,

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("calibration requires at least one warm-up vector")]
    EmptyWarmup,

    #[error("non-finite value at row {row}, feature {feature}")]
    NonFinite { row: usize, feature: usize },

    #[error("item memory is not calibrated")]
    Uncalibrated,

    #[error("feature vector has length {got}, expected {expected}")]
    FeatureLength { expected: usize, got: usize },

    #[error("length mismatch: {what} ({left} vs {right})")]
    LengthMismatch {
        what: &'static str,
        left: usize,
        right: usize,
    },

    #[error("empty input: {0}")]
    EmptyInput(&'static str),

    #[error("format error at byte {offset}: {message}")]
    Format { offset: u64, message: String },

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("at stream index {index}: {source}")]
    Stream {
        index: usize,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn format(offset: u64, message: impl Into<String>) -> Self {
        Error::Format {
            offset,
            message: message.into(),
        }
    }
}
