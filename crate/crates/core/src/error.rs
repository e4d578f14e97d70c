use std::path::PathBuf;

use thiserror::Error;

/// Errors raised anywhere in the navigation stack.
#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("degenerate wheel geometry: {0}")]
    DegenerateGeometry(String),

    #[error("filter diverged: {0}")]
    Divergence(String),

    #[error("empty input: {0}")]
    EmptyInput(&'static str),

    #[error("invalid trajectory spec: {0}")]
    InvalidSpec(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("{file}: schema mismatch: {message}")]
    Schema { file: PathBuf, message: String },

    #[error("{file}: timestamps not strictly increasing at row {row}")]
    NonMonotonic { file: PathBuf, row: usize },

    #[error("{file}: sample rate {measured_hz:.3} Hz outside {expected_hz} Hz +/- 1%")]
    RateOutOfTolerance {
        file: PathBuf,
        measured_hz: f64,
        expected_hz: f64,
    },

    #[error("missing sensor stream: {0}")]
    MissingStream(String),

    #[error("stream {stream}: no sample within 2 ms of epoch t = {t:.6} s")]
    Unsynchronized { stream: String, t: f64 },

    #[error("calibration window shows motion: {0}")]
    CalibrationMotion(String),

    #[error("insufficient overlap between estimate and ground truth ({0} common samples)")]
    InsufficientOverlap(usize),

    #[error("misaligned inputs: {0}")]
    Misaligned(String),

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("csv error on {path}: {source}")]
    Csv {
        path: PathBuf,
        #[source]
        source: csv::Error,
    },
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn csv(path: impl Into<PathBuf>, source: csv::Error) -> Self {
        Error::Csv {
            path: path.into(),
            source,
        }
    }

    /// Coarse failure class, used by the command line front end to pick an exit code.
    pub fn class(&self) -> ErrorClass {
        match self {
            Error::InvalidSpec(_) | Error::Config(_) => ErrorClass::Config,
            Error::Divergence(_) | Error::DegenerateGeometry(_) | Error::Domain(_) => {
                ErrorClass::Numerical
            }
            Error::Io { .. } => ErrorClass::Io,
            Error::Csv { source, .. } if source.is_io_error() => ErrorClass::Io,
            _ => ErrorClass::Data,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorClass {
    Config,
    Data,
    Numerical,
    Io,
}
