//! Experiment harness: datasets, reference targets, training, evaluation,
//! aggregation and plug-in bounds.

pub mod bounds;
pub mod config;
pub mod dataset;
pub mod experiments;
pub mod pipeline;
pub mod report;
pub mod targets;

use thiserror::Error;

use crate::baselines::BaselineError;
use crate::calibration::CalibrationError;
use crate::graph::GraphError;
use crate::predictor::PredictorError;
use crate::qaoa::QaoaError;
use crate::search::SearchError;
use crate::stats::StatsError;

pub use config::ExperimentConfig;
pub use dataset::{Record, Split};

#[derive(Debug, Error)]
pub enum BenchError {
    #[error("config: {0}")]
    Config(String),
    #[error("parse: {0}")]
    Parse(String),
    #[error("record {0} has no target angles; run `targets` first")]
    MissingTarget(String),
    #[error("missing input: {0}")]
    Missing(String),
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Search(#[from] SearchError),
    #[error(transparent)]
    Baseline(#[from] BaselineError),
    #[error(transparent)]
    Predictor(#[from] PredictorError),
    #[error(transparent)]
    Calibration(#[from] CalibrationError),
    #[error(transparent)]
    Stats(#[from] StatsError),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}

impl From<QaoaError> for BenchError {
    fn from(e: QaoaError) -> Self {
        BenchError::Search(e.into())
    }
}
