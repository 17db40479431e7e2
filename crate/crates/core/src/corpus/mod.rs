//! Few-shot knowledge-graph corpora: tuple I/O, seeded per-relation
//! sampling, and prompt formatting of relations.

mod export;
mod kg;
mod prompts;
pub mod rng;
mod sample;

use std::path::{Path, PathBuf};

pub use export::{
    export_raw_split, export_split, format_pairs, parse_pairs, Manifest, MANIFEST_FILE, PRETRAIN_FILE, TRAIN_FILE, VALID_FILE,
};
pub use kg::{load_kg, parse_kg, write_kg, KnowledgeTuple};
pub use prompts::{format_tuple, FormatMode, Formatter, PromptInventory, PLACEHOLDER};
pub use sample::{sample_few_shot, sample_few_shot_with_pool, FewShotSpec, FewShotSplit};

#[derive(Debug, thiserror::Error)]
pub enum CorpusError {
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("line {line}: expected 3 tab-separated columns, found {found}")]
    BadColumnCount { line: usize, found: usize },
    #[error("line {line}: column {column} is empty")]
    EmptyField { line: usize, column: usize },
    #[error("{0}")]
    InvalidField(String),
    #[error("relation {relation}: need {needed} tuples, only {available} available")]
    InsufficientExamples { relation: String, needed: usize, available: usize },
    #[error("unknown relation `{0}`")]
    UnknownRelation(String),
    #[error("relation `{0}` listed twice")]
    DuplicateRelation(String),
    #[error("template for `{relation}`: {reason}")]
    InvalidTemplate { relation: String, reason: String },
    #[error("cannot shuffle prompts: {0}")]
    NoDerangement(String),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

impl CorpusError {
    pub(crate) fn io(path: &Path, source: std::io::Error) -> Self {
        CorpusError::Io { path: path.to_owned(), source }
    }
}
