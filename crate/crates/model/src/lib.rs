//! Usage models over API call sequences: a hidden Markov model trained with
//! count-weighted Baum-Welch, an additively smoothed n-gram baseline, and
//! call recommendation under either.

pub mod fb;
pub mod hapi;
pub mod io;
pub mod ngram;
pub mod recommend;
mod scalar;
pub mod train;
mod vocab;

pub use fb::{backward, forward, forward_backward, posteriors, sequence_loglik, sequence_loglik_named};
pub use fb::{FbTables, ForwardTables, PosteriorStats};
pub use hapi::{HapiModel, TrainMeta};
pub use ngram::NgramModel;
pub use recommend::{next_api_call, next_api_call_ngram, top_k, Recommendation};
pub use scalar::Real;
pub use train::{select_k, train, train_from, weighted_loglik, Selection, TrainOptions, TrainOutcome, TrainSet};
pub use vocab::Vocab;

pub type Hapi = HapiModel<f64>;
pub type Hapi32 = HapiModel<f32>;
pub type Ngram = NgramModel<f64>;
pub type Ngram32 = NgramModel<f32>;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ModelError {
    #[error("out-of-vocabulary call: {0}")]
    OutOfVocabulary(String),
    #[error("invalid model: {0}")]
    InvalidModel(String),
    #[error("empty vocabulary")]
    EmptyVocabulary,
    #[error("empty sequence")]
    EmptySequence,
    #[error("empty training set")]
    EmptyTrainSet,
    #[error("every training sequence has length 1; transitions cannot be estimated")]
    DegenerateTrainSet,
    #[error("empty validation set")]
    EmptyValidation,
    #[error("training and validation vocabularies differ")]
    VocabMismatch,
    #[error("training failed for every K: {0}")]
    AllKFailed(String),
    #[error("sequence has zero probability under the model")]
    ImpossibleSequence,
    #[error("position {position} is out of range for length {len}")]
    BadPosition { position: usize, len: usize },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("model file: {0}")]
    Format(String),
}

/// Mixes a named stream into a base seed so independent consumers of one
/// configured seed do not share random draws.
pub fn derive_seed(seed: u64, stream: &str) -> u64 {
    // FNV-1a over the name, then a splitmix64 finalizer.
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in stream.bytes() {
        h ^= u64::from(b);
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    let mut z = seed ^ h;
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}
