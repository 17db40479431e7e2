//! Scoring generated tails against reference tails: BLEU-1, ROUGE-L,
//! METEOR (exact + stem matching) and CIDEr, aggregated across runs.

mod cider;
mod metrics;
pub mod porter;
mod runs;
mod tokenize;

use std::path::PathBuf;

pub use cider::{cider, CiderIdf};
pub use metrics::{align, bleu1, bleu1_single, lcs_len, meteor_lite, meteor_single, rouge_l, rouge_l_single};
pub use runs::{
    build_records, evaluate_runs, load_generations, load_references, parse_generations, parse_references, score_corpus,
    CorpusScores, Generation, Metric, MetricReport, MetricSummary, References,
};
pub use tokenize::tokenize;

#[derive(Debug, thiserror::Error)]
pub enum EvalError {
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("line {line}: expected 3 tab-separated columns, found {found}")]
    BadColumnCount { line: usize, found: usize },
    #[error("line {line}: column {column} is empty")]
    EmptyField { line: usize, column: usize },
    #[error("no records to score")]
    EmptyCorpus,
    #[error("no runs to aggregate")]
    NoRuns,
    #[error("runs report different metric sets")]
    MetricMismatch,
    #[error("no references for ({head}, {relation}) from generation line {line}")]
    MissingReferences { head: String, relation: String, line: usize },
    #[error("({head}, {relation}) generated twice (lines {first} and {second})")]
    DuplicateGeneration { head: String, relation: String, first: usize, second: usize },
    #[error("unknown metric `{0}` (expected bleu1, meteor, rougeL or cider)")]
    UnknownMetric(String),
}

/// A candidate tail paired with every reference tail for its (head, relation).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GenerationRecord {
    pub head: String,
    pub relation: String,
    pub candidate: Vec<String>,
    pub references: Vec<Vec<String>>,
}

impl GenerationRecord {
    /// `references` must be nonempty.
    pub fn new(head: impl Into<String>, relation: impl Into<String>, candidate: Vec<String>, references: Vec<Vec<String>>) -> Self {
        assert!(!references.is_empty(), "a record needs at least one reference");
        Self { head: head.into(), relation: relation.into(), candidate, references }
    }

    /// Tokenizes raw candidate and reference strings.
    pub fn from_text<S: AsRef<str>>(head: &str, relation: &str, candidate: &str, references: &[S]) -> Self {
        Self::new(head, relation, tokenize(candidate), references.iter().map(|r| tokenize(r.as_ref())).collect())
    }
}
