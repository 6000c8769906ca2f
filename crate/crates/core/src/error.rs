use std::path::PathBuf;

use thiserror::Error;

use crate::replay::ReplayResult;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("arm {arm} out of range for {arms} arms")]
    ArmOutOfRange { arm: usize, arms: usize },

    #[error("reward must be 0 or 1, got {0}")]
    InvalidReward(u8),

    #[error(
        "load distribution is degenerate (l_min == l_max == {value}); \
         run with a constant normalized load instead"
    )]
    DegenerateLoad { value: f64 },

    #[error("not enough load samples: need at least {needed}, got {got}")]
    TooFewSamples { needed: usize, got: usize },

    #[error("every load value is missing; cannot impute a mean")]
    AllMissing,

    #[error("empty input: {0}")]
    Empty(&'static str),

    #[error("mismatched trajectory lengths: expected {expected}, got {got}")]
    LengthMismatch { expected: usize, got: usize },

    #[error(
        "replay did not converge: {} of {} valid events after {cycles} passes over the log",
        partial.valid_steps(), target
    )]
    NonConvergence {
        target: usize,
        cycles: usize,
        partial: Box<ReplayResult>,
    },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: {message}")]
    Format { path: PathBuf, message: String },

    #[error("csv: {0}")]
    Csv(#[from] csv::Error),

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),

    #[error("config: {0}")]
    Config(String),
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
