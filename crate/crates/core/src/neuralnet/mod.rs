//! Feedforward regression network and its training functions.

use thiserror::Error;

pub mod mlp;
pub mod optim;
pub mod train;

pub use mlp::{init_mlp, Activation, Architecture, Batch, MlpModel};
pub use optim::{Cgb, CgbParams, Gdx, GdxParams, Objective, Scg, ScgParams};
pub use train::{
    train, train_cgb, train_gdx, train_scg, EpochRecord, OptimizerKind, StopReason, TrainConfig, TrainingData,
    TrainingReport,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
pub enum NetError {
    #[error("every layer needs at least one unit and there must be a hidden layer")]
    BadTopology,
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("empty batch")]
    EmptyBatch,
    #[error("loss became non-finite")]
    NonFiniteLoss,
    #[error("line search found no acceptable step")]
    LineSearchFailure,
    #[error("invalid training configuration: {0}")]
    InvalidConfig(&'static str),
}
