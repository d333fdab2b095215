//! Batch pipeline over highD-layout recordings: extraction, DTW pairing,
//! metric comparison, AIRL training and grid exports.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod pipeline;

pub use config::{Overrides, PipelineConfig, ResolvedConfig};
pub use pipeline::{run, Command};

use cfpp_core::Error as CoreError;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error("stage '{stage}' has not produced {missing}; run it first")]
    MissingStage {
        stage: &'static str,
        missing: String,
    },
    #[error("data error: {0}")]
    Data(String),
    #[error("training diverged: {0}")]
    Divergence(String),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::MissingStage { .. } => 3,
            CliError::Data(_) => 4,
            CliError::Divergence(_) => 5,
            CliError::Io(_) => 1,
        }
    }
}

impl From<CoreError> for CliError {
    fn from(e: CoreError) -> Self {
        match e {
            CoreError::Config(m) | CoreError::Usage(m) => CliError::Config(m),
            CoreError::Divergence { .. } => CliError::Divergence(e.to_string()),
            CoreError::Io(io) => CliError::Io(io),
            other => CliError::Data(other.to_string()),
        }
    }
}
