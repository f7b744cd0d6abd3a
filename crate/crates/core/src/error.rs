use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("I/O error on {}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("non-monotonic at line {line} (t = {t})")]
    NonMonotonic { line: usize, t: f64 },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("unknown marker id {0:?}")]
    UnknownMarker(String),

    #[error("unknown camera id {0:?}")]
    UnknownCamera(String),

    #[error("insufficient calibration data: {0} paired epochs, need at least 10")]
    InsufficientCalibrationData(usize),

    #[error("cost function is not finite at the initial point")]
    NonFiniteCost,

    #[error("observation covariance is not symmetric positive semi-definite")]
    NonPsdCovariance,

    #[error("non-positive time step {0}")]
    NonPositiveDt(f64),
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// I/O failures as opposed to validation failures; the CLI maps them to different exit codes.
    pub fn is_io(&self) -> bool {
        matches!(self, Error::Io { .. })
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
