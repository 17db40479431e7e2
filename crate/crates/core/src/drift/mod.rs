//! Parameter-change measures and checkpoint diffing.

mod diff;
mod json;
mod measures;

pub use diff::{diff_checkpoint_files, diff_checkpoints, DiffCell, DiffReport};
pub use measures::{
    angular_change, auc, change_distribution, l1_change, measure_pair, AngularChange, ChangeDistribution,
    MatrixMeasures, MatrixPair, DEFAULT_QUANTUM,
};

use crate::arch_map::ArchMapError;
use crate::tensor_io::{Dtype, TensorIoError};

#[derive(Debug, thiserror::Error)]
pub enum MetricsError {
    #[error("`{name}` has shape {before:?} before and {after:?} after")]
    ShapeMismatch {
        name: String,
        before: [usize; 2],
        after: [usize; 2],
    },
    #[error("`{name}` has dtype {before} before and {after} after")]
    DtypeMismatch { name: String, before: Dtype, after: Dtype },
    #[error("pair joins differently named tensors `{before}` and `{after}`")]
    NameMismatch { before: String, after: String },
    #[error("`{0}` has no counterpart in the other checkpoint")]
    MissingCounterpart(String),
    #[error("rounding quantum must be positive and finite, got {0}")]
    InvalidQuantum(f64),
    #[error("changes in `{name}` exceed the exactly representable range at quantum {quantum}")]
    QuantumTooFine { name: String, quantum: f64 },
    #[error(transparent)]
    TensorIo(#[from] TensorIoError),
    #[error(transparent)]
    ArchMap(#[from] ArchMapError),
    #[error("malformed report: {0}")]
    MalformedReport(String),
}
