//! Evaluation protocol: occurrence-level corpus splits, next-call and
//! fill-the-hole top-k accuracy, the validation log-likelihood curve over K,
//! and side-by-side comparison of the hidden Markov model with the n-gram
//! baseline.

pub mod compare;
pub mod split;
pub mod synthetic;
pub mod tasks;

pub use compare::{compare_models, evaluate_key, fit_key, sensitivity_curve, Comparison, EvalConfig, KeyModels, KeyResult};
pub use split::{split_corpus, Split, SplitOptions};
pub use tasks::{eval_task1, eval_task2, hole_positions, EvalReport, ModelKind, Scorer, Task};

use apimine_model::ModelError;

/// Sequences with occurrence counts.
pub type Counted = Vec<(Vec<String>, u64)>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum EvalError {
    #[error("{total} occurrences, below the threshold of {min}")]
    BelowThreshold { total: u64, min: u64 },
    #[error("invalid split fractions: {0}")]
    BadFractions(String),
    #[error(transparent)]
    Model(#[from] ModelError),
}
