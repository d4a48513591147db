//! The `apimine` pipeline behind the command line: extract call sequences
//! from micro-IR files, train per-key models into a store, recommend, and
//! evaluate.

pub mod commands;
pub mod config;
pub mod store;

pub use config::PipelineConfig;
pub use store::{Format, ModelStore, StoreError};

use apimine_core::CorpusError;
use apimine_eval::EvalError;
use apimine_model::ModelError;

/// Exit status 2 for bad input, 3 for everything else.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Input(String),
    #[error("internal error: {0}")]
    Internal(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Input(_) => 2,
            CliError::Internal(_) => 3,
        }
    }
}

impl From<StoreError> for CliError {
    fn from(e: StoreError) -> Self {
        match e {
            StoreError::Io { .. } => CliError::Internal(e.to_string()),
            StoreError::Corrupt { .. } | StoreError::NotAStore(_) | StoreError::NoModel { .. } => CliError::Input(e.to_string()),
        }
    }
}

impl From<CorpusError> for CliError {
    fn from(e: CorpusError) -> Self {
        CliError::Input(e.to_string())
    }
}

impl From<ModelError> for CliError {
    fn from(e: ModelError) -> Self {
        match e {
            ModelError::OutOfVocabulary(_) | ModelError::BadPosition { .. } | ModelError::Format(_) => {
                CliError::Input(e.to_string())
            }
            _ => CliError::Internal(e.to_string()),
        }
    }
}

impl From<EvalError> for CliError {
    fn from(e: EvalError) -> Self {
        match e {
            EvalError::Model(m) => m.into(),
            other => CliError::Input(other.to_string()),
        }
    }
}
