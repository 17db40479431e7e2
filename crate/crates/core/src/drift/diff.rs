use std::collections::BTreeSet;
use std::path::Path;

use rayon::prelude::*;

use super::measures::{check_quantum, measure_pair, MatrixAccumulator, MatrixMeasures, MatrixPair};
use super::MetricsError;
use crate::arch_map::{group_names, Grouping, ParamLocator, RuleTable};
use crate::tensor_io::{Checkpoint, ContainerReader, Dtype, Scalar, TensorEntry};

/// Scalars per streamed block when diffing container files.
const STREAM_BLOCK_ELEMS: usize = 1 << 18;

/// Measures for one classified matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct DiffCell {
    pub locator: ParamLocator,
    pub rows: usize,
    pub cols: usize,
    pub d_l1: f64,
    pub d_ang: f64,
    pub auc: f64,
    pub zero_rows: usize,
}

impl DiffCell {
    fn new(locator: ParamLocator, m: MatrixMeasures) -> Self {
        Self {
            locator,
            rows: m.rows,
            cols: m.cols,
            d_l1: m.d_l1,
            d_ang: m.d_ang,
            auc: m.auc,
            zero_rows: m.zero_rows,
        }
    }
}

/// Per-matrix measures for one pretrained/fine-tuned checkpoint pair.
/// Cells are ordered by locator (component, layer, kind).
#[derive(Debug, Clone, PartialEq)]
pub struct DiffReport {
    pub before: String,
    pub after: String,
    pub quantum: f64,
    pub cells: Vec<DiffCell>,
    pub unclassified: Vec<String>,
}

impl DiffReport {
    pub fn cell(&self, locator: &ParamLocator) -> Option<&DiffCell> {
        self.cells
            .binary_search_by(|c| c.locator.cmp(locator))
            .ok()
            .map(|i| &self.cells[i])
    }

    pub fn locators(&self) -> impl Iterator<Item = &ParamLocator> {
        self.cells.iter().map(|c| &c.locator)
    }
}

/// Classifies both name sets and checks every classified name has a partner.
fn pair_groupings<'a>(
    before: impl IntoIterator<Item = &'a str>,
    after: impl IntoIterator<Item = &'a str>,
    rules: &RuleTable,
) -> Result<(Grouping, Vec<String>), MetricsError> {
    let g_before = group_names(before, rules)?;
    let g_after = group_names(after, rules)?;
    let names_before: BTreeSet<&String> = g_before.located.values().collect();
    let names_after: BTreeSet<&String> = g_after.located.values().collect();
    if let Some(missing) = names_before.symmetric_difference(&names_after).next() {
        return Err(MetricsError::MissingCounterpart((*missing).clone()));
    }
    let unclassified: BTreeSet<String> = g_before
        .unclassified
        .iter()
        .chain(&g_after.unclassified)
        .cloned()
        .collect();
    Ok((g_before, unclassified.into_iter().collect()))
}

fn path_label(ckpt: &Checkpoint) -> String {
    ckpt.source_path().map(|p| p.display().to_string()).unwrap_or_default()
}

/// Diffs two in-memory checkpoints.
///
/// Matrices are measured concurrently on the current rayon pool; cell order
/// and values do not depend on the pool size.
pub fn diff_checkpoints(
    before: &Checkpoint,
    after: &Checkpoint,
    rules: &RuleTable,
    quantum: f64,
) -> Result<DiffReport, MetricsError> {
    check_quantum(quantum)?;
    let (grouping, unclassified) = pair_groupings(before.names(), after.names(), rules)?;
    let jobs: Vec<(&ParamLocator, &String)> = grouping.located.iter().collect();
    let cells = jobs
        .par_iter()
        .map(|(locator, name)| {
            let b = before.get(name).expect("grouped name exists");
            let a = after.get(name).ok_or_else(|| MetricsError::MissingCounterpart((*name).clone()))?;
            let pair = MatrixPair::new(b, a)?;
            Ok(DiffCell::new((*locator).clone(), measure_pair(&pair, quantum)?))
        })
        .collect::<Result<Vec<_>, MetricsError>>()?;
    Ok(DiffReport {
        before: path_label(before),
        after: path_label(after),
        quantum,
        cells,
        unclassified,
    })
}

fn stream_matrix<T: Scalar>(
    before: &mut ContainerReader,
    after: &mut ContainerReader,
    entry: &TensorEntry,
    quantum: f64,
) -> Result<MatrixMeasures, MetricsError> {
    let mut acc = MatrixAccumulator::new(&entry.name, entry.rows, entry.cols, quantum)?;
    let rows_per_block = (STREAM_BLOCK_ELEMS / entry.cols).max(1);
    let mut buf_b: Vec<T> = Vec::new();
    let mut buf_a: Vec<T> = Vec::new();
    let mut row = 0;
    while row < entry.rows {
        let n = rows_per_block.min(entry.rows - row);
        let first = row * entry.cols;
        before.read_block(entry, first, n * entry.cols, &mut buf_b)?;
        after.read_block(entry, first, n * entry.cols, &mut buf_a)?;
        acc.push_rows(&buf_b, &buf_a)?;
        row += n;
    }
    Ok(acc.finish())
}

/// Diffs two container files without materializing them.
///
/// Matrices are visited one at a time in locator order and streamed in row
/// blocks; rows within a block are processed on the current rayon pool. Peak
/// heap use is about one 4-byte key per element of the largest matrix plus
/// fixed-size block buffers. Results are bit-identical to
/// [`diff_checkpoints`] on the same inputs.
pub fn diff_checkpoint_files(
    before_path: impl AsRef<Path>,
    after_path: impl AsRef<Path>,
    rules: &RuleTable,
    quantum: f64,
) -> Result<DiffReport, MetricsError> {
    check_quantum(quantum)?;
    let (before_path, after_path) = (before_path.as_ref(), after_path.as_ref());
    let mut before = ContainerReader::open(before_path)?;
    let mut after = ContainerReader::open(after_path)?;
    let (grouping, unclassified) = {
        let names_b = before.index().entries().iter().map(|e| e.name.as_str());
        let names_a = after.index().entries().iter().map(|e| e.name.as_str());
        pair_groupings(names_b, names_a, rules)?
    };

    let mut cells = Vec::with_capacity(grouping.located.len());
    for (locator, name) in &grouping.located {
        let eb = before.seek_tensor(name)?;
        let ea = after.seek_tensor(name)?;
        if (eb.rows, eb.cols) != (ea.rows, ea.cols) {
            return Err(MetricsError::ShapeMismatch {
                name: name.clone(),
                before: [eb.rows, eb.cols],
                after: [ea.rows, ea.cols],
            });
        }
        if eb.dtype != ea.dtype {
            return Err(MetricsError::DtypeMismatch {
                name: name.clone(),
                before: eb.dtype,
                after: ea.dtype,
            });
        }
        let measures = match eb.dtype {
            Dtype::F32 => stream_matrix::<f32>(&mut before, &mut after, &eb, quantum)?,
            Dtype::F64 => stream_matrix::<f64>(&mut before, &mut after, &eb, quantum)?,
        };
        cells.push(DiffCell::new(locator.clone(), measures));
    }
    Ok(DiffReport {
        before: before_path.display().to_string(),
        after: after_path.display().to_string(),
        quantum,
        cells,
        unclassified,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::arch_map::{Component, MatrixKind};
    use crate::tensor_io::{save_checkpoint, Tensor};

    fn t5_pair() -> (Checkpoint, Checkpoint) {
        let names = [
            "encoder.block.0.layer.0.SelfAttention.q.weight",
            "decoder.block.1.layer.0.SelfAttention.k.weight",
            "decoder.block.1.layer.1.EncDecAttention.v.weight",
            "shared.weight",
        ];
        let mut before = Checkpoint::new();
        let mut after = Checkpoint::new();
        for (i, name) in names.iter().enumerate() {
            let vals: Vec<f32> = (0..12).map(|j| ((i * 12 + j) as f32 * 0.37).sin()).collect();
            let moved: Vec<f32> = vals.iter().enumerate().map(|(j, v)| v + 0.01 * j as f32 * i as f32).collect();
            before.insert(Tensor::from_f32(*name, 3, 4, vals).unwrap()).unwrap();
            after.insert(Tensor::from_f32(*name, 3, 4, moved).unwrap()).unwrap();
        }
        (before, after)
    }

    #[test]
    fn identical_checkpoints_have_zero_change() {
        let (before, _) = t5_pair();
        let report = diff_checkpoints(&before, &before, &RuleTable::t5_default(), 1e-5).unwrap();
        assert_eq!(report.cells.len(), 3);
        for c in &report.cells {
            assert_eq!((c.d_l1, c.d_ang, c.auc), (0.0, 0.0, 0.5));
        }
        assert_eq!(report.unclassified, ["shared.weight"]);
    }

    #[test]
    fn cells_are_in_locator_order() {
        let (before, after) = t5_pair();
        let report = diff_checkpoints(&before, &after, &RuleTable::t5_default(), 1e-5).unwrap();
        let locs: Vec<_> = report.locators().cloned().collect();
        let mut sorted = locs.clone();
        sorted.sort();
        assert_eq!(locs, sorted);
        assert_eq!(locs[0].component, Component::Encoder);
        assert_eq!(locs[2].kind, MatrixKind::Xv);
    }

    #[test]
    fn missing_counterpart_is_an_error() {
        let (before, mut after) = t5_pair();
        after
            .insert(Tensor::from_f32("encoder.block.0.layer.0.SelfAttention.k.weight", 1, 1, vec![0.0]).unwrap())
            .unwrap();
        assert!(matches!(
            diff_checkpoints(&before, &after, &RuleTable::t5_default(), 1e-5),
            Err(MetricsError::MissingCounterpart(n)) if n.contains("SelfAttention.k")
        ));
    }

    #[test]
    fn streaming_matches_in_memory() {
        let (before, after) = t5_pair();
        let dir = tempfile::tempdir().unwrap();
        let (pb, pa) = (dir.path().join("b.ckpt"), dir.path().join("a.ckpt"));
        save_checkpoint(&before, &pb).unwrap();
        save_checkpoint(&after, &pa).unwrap();
        let rules = RuleTable::t5_default();
        let streamed = diff_checkpoint_files(&pb, &pa, &rules, 1e-5).unwrap();
        let in_memory = diff_checkpoints(&before, &after, &rules, 1e-5).unwrap();
        assert_eq!(streamed.cells, in_memory.cells);
        assert_eq!(streamed.unclassified, in_memory.unclassified);
    }

    #[test]
    fn streaming_detects_shape_mismatch() {
        let name = "encoder.block.0.layer.0.SelfAttention.q.weight";
        let before = Checkpoint::from_tensors([Tensor::from_f32(name, 2, 2, vec![0.0; 4]).unwrap()]).unwrap();
        let after = Checkpoint::from_tensors([Tensor::from_f32(name, 1, 4, vec![0.0; 4]).unwrap()]).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let (pb, pa) = (dir.path().join("b.ckpt"), dir.path().join("a.ckpt"));
        save_checkpoint(&before, &pb).unwrap();
        save_checkpoint(&after, &pa).unwrap();
        assert!(matches!(
            diff_checkpoint_files(&pb, &pa, &RuleTable::t5_default(), 1e-5),
            Err(MetricsError::ShapeMismatch { .. })
        ));
        assert!(matches!(
            diff_checkpoints(&before, &after, &RuleTable::t5_default(), 1e-5),
            Err(MetricsError::ShapeMismatch { .. })
        ));
    }
}
