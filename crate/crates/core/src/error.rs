use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch in {what}: expected {expected}, got {got}")]
    DimensionMismatch {
        what: &'static str,
        expected: usize,
        got: usize,
    },

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("invalid chain at joint {joint}: {reason}")]
    InvalidChain { joint: usize, reason: String },

    #[error("mass matrix is not positive definite at q = {q:?}")]
    NotPositiveDefinite { q: Vec<f64> },

    #[error("Cholesky factorization failed after jitter escalation (max jitter {jitter:e})")]
    Factorization { jitter: f64 },

    #[error("all {restarts} optimizer restarts failed: {last}")]
    AllRestartsFailed { restarts: usize, last: String },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("joint {joint} requires a neighbor torque for this feature scheme")]
    MissingNeighborTorque { joint: usize },

    #[error("sample lacks the position history required by derivative-free features")]
    MissingHistory,

    #[error("semi-parametric variants need a kinematic chain")]
    MissingChain,

    #[error("dataset has {got} usable rows, need at least {need}")]
    DegenerateDataset { got: usize, need: usize },

    #[error("missing column `{0}`")]
    MissingColumn(String),

    #[error("{path}:{line}: {msg}")]
    Parse {
        path: PathBuf,
        line: usize,
        msg: String,
    },

    #[error("config: {0}")]
    Config(String),

    #[error("nRMSE undefined: ground truth has zero range")]
    ZeroRange,

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn dim(what: &'static str, expected: usize, got: usize) -> Self {
        Error::DimensionMismatch { what, expected, got }
    }
}

pub(crate) fn check_len(what: &'static str, expected: usize, got: usize) -> Result<()> {
    if expected == got {
        Ok(())
    } else {
        Err(Error::dim(what, expected, got))
    }
}

pub(crate) fn check_finite(what: &'static str, values: &[f64]) -> Result<()> {
    if values.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(Error::NonFinite(what))
    }
}
