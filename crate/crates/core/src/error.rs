use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("non-monotone timestamps at index {index}")]
    NonMonotone { index: usize },

    #[error("length mismatch: channel `{channel}` has {found} samples, expected {expected}")]
    LengthMismatch {
        channel: &'static str,
        expected: usize,
        found: usize,
    },

    #[error("recording too short: {found} samples, need at least {needed}")]
    TooShort { found: usize, needed: usize },

    #[error("invalid sample rate {0} Hz")]
    InvalidRate(f64),

    #[error("non-finite value in channel `{channel}` at index {index}")]
    NonFinite { channel: &'static str, index: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("empty input: {0}")]
    Empty(&'static str),

    #[error("all gaze samples are missing")]
    AllMissing,

    #[error("no target transitions found")]
    NoTransitions,

    #[error("insufficient data: {0}")]
    Insufficient(String),

    #[error("no usable fixations in recording `{0}`")]
    NoUsableFixations(String),

    #[error("timestamp {t} ms outside source span [{start}, {end}] ms")]
    OutOfSpan { t: f64, start: f64, end: f64 },

    #[error("calibration curve slope {0} is not positive")]
    NonPositiveSlope(f64),

    #[error("duplicate recording id `{0}`")]
    DuplicateId(String),

    #[error("unknown format tag `{0}`")]
    UnknownFormat(String),

    #[error("{path}:{line}: {message}")]
    Malformed {
        path: PathBuf,
        line: u64,
        message: String,
    },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn param(msg: impl Into<String>) -> Self {
        Error::InvalidParameter(msg.into())
    }
}
