use std::path::PathBuf;

use thiserror::Error;

use crate::trajectory::VehicleId;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{path}: missing required column '{column}'")]
    Schema { path: PathBuf, column: String },
    #[error("{path}: malformed value in column '{column}' at row {row}: '{value}'")]
    Parse {
        path: PathBuf,
        column: String,
        row: usize,
        value: String,
    },
    #[error("integrity error for vehicle {vehicle_id}: {detail}")]
    Integrity {
        vehicle_id: VehicleId,
        detail: String,
    },
    #[error("cannot infer travel direction (zero mean velocity) for vehicles {0:?}")]
    AmbiguousDirection(Vec<VehicleId>),
    #[error("frame range [{lo}, {hi}] outside track span [{first}, {last}]")]
    Range {
        lo: i64,
        hi: i64,
        first: i64,
        last: i64,
    },
    #[error("domain error: {0}")]
    Domain(String),
    #[error("shape mismatch: expected {expected}, got {got}")]
    Shape { expected: usize, got: usize },
    #[error("usage error: {0}")]
    Usage(String),
    #[error("config error: {0}")]
    Config(String),
    #[error("training diverged at epoch {epoch}: {detail}")]
    Divergence { epoch: usize, detail: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }
}
