use std::path::Path;

use hifloc_core::features::{FeatureError, SimError};
use hifloc_core::neuralnet::NetError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("usage: {0}")]
    Usage(String),
    #[error("configuration: {0}")]
    Config(String),
    #[error("simulation: {0}")]
    Simulation(String),
    #[error("training: {0}")]
    Training(#[from] NetError),
    #[error("{path}: {message}")]
    Io { path: String, message: String },
    #[error("{path}: {message}")]
    Format { path: String, message: String },
}

impl HarnessError {
    pub fn io(path: &Path, err: impl std::fmt::Display) -> Self {
        HarnessError::Io {
            path: path.display().to_string(),
            message: err.to_string(),
        }
    }

    pub fn format(path: &Path, message: impl Into<String>) -> Self {
        HarnessError::Format {
            path: path.display().to_string(),
            message: message.into(),
        }
    }

    /// Process exit status: 2 usage, 3 simulation, 4 training divergence,
    /// 5 file input/output.
    pub fn exit_code(&self) -> i32 {
        match self {
            HarnessError::Usage(_) | HarnessError::Config(_) => 2,
            HarnessError::Simulation(_) => 3,
            HarnessError::Training(NetError::NonFiniteLoss | NetError::LineSearchFailure) => 4,
            HarnessError::Training(_) => 2,
            HarnessError::Io { .. } | HarnessError::Format { .. } => 5,
        }
    }
}

impl From<FeatureError> for HarnessError {
    fn from(e: FeatureError) -> Self {
        HarnessError::Simulation(e.to_string())
    }
}

impl From<SimError> for HarnessError {
    fn from(e: SimError) -> Self {
        HarnessError::Simulation(e.to_string())
    }
}
