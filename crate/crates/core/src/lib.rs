//! Program-analysis half of the API usage miner: parse method listings,
//! build control-flow graphs, enumerate per-path usage graphs and extract
//! counted API call sequences.

pub mod arus;
pub mod cfg;
pub mod corpus;
pub mod extract;
pub mod ir;

pub use arus::{build_arus, Arus, ArusError};
pub use cfg::{build_cfg, count_branch_nodes, Cfg};
pub use corpus::{ApiSequence, Corpus, CorpusError, ObjectKey};
pub use extract::{
    aggregate_corpus, extract_method, extract_multi, extract_single, usage_dependent_sets,
    ApiFilter, ExtractConfig, MethodOutcome, SkipReason,
};
pub use ir::{parse_corpus_file, parse_method, Method, ParseError};
