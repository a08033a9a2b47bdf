//! Graph-conditioned Gaussian predictor over QAOA angles.

pub mod checkpoint;
pub mod loss;
pub mod model;
pub mod tensor;
pub mod train;

use thiserror::Error;

pub use checkpoint::{
    load_checkpoint, read_checkpoint, save_checkpoint, write_checkpoint, Checkpoint,
};
pub use model::{GaussianPrediction, GinModel, GraphInput, HeadKind, ModelShape};
pub use train::{
    batch_loss, log_csv, train, LossBreakdown, LossWeights, TrainedModel, TrainingConfig,
    TrainingLogRow,
};

#[derive(Debug, Error, PartialEq)]
pub enum PredictorError {
    #[error("node features have {got} columns, model expects {expected}")]
    FeatureDim { expected: usize, got: usize },
    #[error("parameter vector has {got} entries, layout needs {expected}")]
    ParamCount { expected: usize, got: usize },
    #[error("target has {got} angles, model predicts {expected}")]
    TargetDim { expected: usize, got: usize },
    #[error("training set is empty")]
    EmptyDataset,
    #[error("non-finite {phase} loss {value} at epoch {epoch}")]
    NonFiniteLoss { epoch: usize, phase: u8, value: f64 },
    #[error("invalid training config: {0}")]
    BadConfig(String),
    #[error("checkpoint header field `{field}`: expected {expected}, found {got}")]
    HeaderMismatch {
        field: String,
        expected: String,
        got: String,
    },
    #[error("malformed checkpoint: {0}")]
    Malformed(String),
    #[error("checkpoint truncated: expected {expected} bytes of weights, found {got}")]
    Truncated { expected: usize, got: usize },
    #[error("io: {0}")]
    Io(String),
}

impl From<std::io::Error> for PredictorError {
    fn from(e: std::io::Error) -> Self {
        PredictorError::Io(e.to_string())
    }
}
