//! Tools for studying how fine-tuning moves transformer parameters.
//!
//! * [`tensor_io`] reads and writes the checkpoint container;
//! * [`arch_map`] maps tensor names to (component, layer, matrix kind) cells;
//! * [`drift`] computes normalized L1, angular and change-distribution
//!   measures between matching matrices;
//! * [`report`] renders diff reports as SVG heatmaps and CSV;
//! * [`corpus`] builds seeded few-shot knowledge-graph training corpora;
//! * [`gen_eval`] scores generated tails with BLEU-1, ROUGE-L, METEOR and CIDEr;
//! * [`cli`] wires everything into the `ckpt-drift` executable.

pub mod arch_map;
pub mod cli;
pub mod corpus;
pub mod drift;
pub mod gen_eval;
pub mod numfmt;
pub mod report;
pub mod tensor_io;
