use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::kg::write_file;
use super::{CorpusError, FewShotSplit, Formatter, KnowledgeTuple};

pub const TRAIN_FILE: &str = "train.tsv";
pub const VALID_FILE: &str = "valid.tsv";
pub const PRETRAIN_FILE: &str = "pretrain.tsv";
pub const MANIFEST_FILE: &str = "manifest.json";

/// Provenance written next to every exported split.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Manifest {
    pub counts: BTreeMap<String, usize>,
    pub holdout: Vec<String>,
    /// A format mode, or `raw` for three-column tuple files.
    pub mode: String,
    pub n: usize,
    pub seed: u64,
}

impl Manifest {
    fn for_split(split: &FewShotSplit, mode: String) -> Self {
        let mut counts = BTreeMap::from([("train".to_owned(), split.train.len()), ("valid".to_owned(), split.validation.len())]);
        if !split.spec.holdout.is_empty() {
            counts.insert("pretrain".to_owned(), split.pretrain.len());
        }
        Self {
            counts,
            holdout: split.spec.holdout.iter().cloned().collect(),
            mode,
            n: split.spec.n,
            seed: split.spec.seed,
        }
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("manifest serializes");
        s.push('\n');
        s
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, CorpusError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| CorpusError::io(path, e))?;
        Ok(serde_json::from_str(&text)?)
    }
}

fn split_files(split: &FewShotSplit) -> Vec<(&'static str, &[KnowledgeTuple])> {
    let mut files = vec![(TRAIN_FILE, split.train.as_slice()), (VALID_FILE, split.validation.as_slice())];
    if !split.spec.holdout.is_empty() {
        files.push((PRETRAIN_FILE, split.pretrain.as_slice()));
    }
    files
}

/// Renders tuples as `input_text⟶target_text` lines.
pub fn format_pairs(tuples: &[KnowledgeTuple], formatter: &Formatter) -> Result<String, CorpusError> {
    let mut text = String::new();
    for t in tuples {
        let (input, target) = formatter.format(t)?;
        for field in [&input, &target] {
            if field.contains(['\t', '\n', '\r']) {
                return Err(CorpusError::InvalidField(format!("{field:?} contains a tab or line break")));
            }
        }
        text.push_str(&input);
        text.push('\t');
        text.push_str(&target);
        text.push('\n');
    }
    Ok(text)
}

/// Reads back a two-column file written by [`export_split`].
pub fn parse_pairs(text: &str) -> Result<Vec<(String, String)>, CorpusError> {
    text.lines()
        .enumerate()
        .map(|(i, line)| {
            let line = line.strip_suffix('\r').unwrap_or(line);
            match line.split_once('\t') {
                Some((a, b)) if !b.contains('\t') => Ok((a.to_owned(), b.to_owned())),
                _ => Err(CorpusError::BadColumnCount { line: i + 1, found: line.split('\t').count() }),
            }
        })
        .collect()
}

/// Writes formatted `train.tsv`, `valid.tsv` (and `pretrain.tsv` in holdout
/// mode) plus `manifest.json` into `out_dir`. Returns the paths written.
pub fn export_split(split: &FewShotSplit, formatter: &Formatter, out_dir: impl AsRef<Path>) -> Result<Vec<PathBuf>, CorpusError> {
    let out_dir = out_dir.as_ref();
    // format everything before touching the disk
    let mut rendered = Vec::new();
    for (name, tuples) in split_files(split) {
        rendered.push((name, format_pairs(tuples, formatter)?));
    }
    let manifest = Manifest::for_split(split, formatter.mode().to_string());
    rendered.push((MANIFEST_FILE, manifest.to_json()));
    write_all(out_dir, rendered)
}

/// Writes the split as three-column tuple files (the `load_kg` format) plus
/// a manifest with mode `raw`.
pub fn export_raw_split(split: &FewShotSplit, out_dir: impl AsRef<Path>) -> Result<Vec<PathBuf>, CorpusError> {
    let out_dir = out_dir.as_ref();
    let mut rendered = Vec::new();
    for (name, tuples) in split_files(split) {
        let mut text = String::new();
        for t in tuples {
            text.push_str(&format!("{}\t{}\t{}\n", t.head, t.relation, t.tail));
        }
        rendered.push((name, text));
    }
    rendered.push((MANIFEST_FILE, Manifest::for_split(split, "raw".into()).to_json()));
    write_all(out_dir, rendered)
}

fn write_all(out_dir: &Path, files: Vec<(&str, String)>) -> Result<Vec<PathBuf>, CorpusError> {
    std::fs::create_dir_all(out_dir).map_err(|e| CorpusError::io(out_dir, e))?;
    let mut written = Vec::new();
    for (name, text) in files {
        let path = out_dir.join(name);
        write_file(&path, text.as_bytes())?;
        written.push(path);
    }
    Ok(written)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{load_kg, sample_few_shot, FewShotSpec, FormatMode, PromptInventory};

    fn fixture() -> Vec<KnowledgeTuple> {
        let nat = PromptInventory::natural();
        nat.relations()
            .flat_map(|r| (0..6).map(move |i| KnowledgeTuple::new(format!("thing {i}"), r, format!("{r} tail {i}"))))
            .collect()
    }

    #[test]
    fn natural_export_has_69_training_lines() {
        let dir = tempfile::tempdir().unwrap();
        let split = sample_few_shot(&fixture(), &FewShotSpec::new(3, 7).with_validation()).unwrap();
        let f = Formatter::new(&PromptInventory::natural(), FormatMode::Natural).unwrap();
        let written = export_split(&split, &f, dir.path()).unwrap();
        assert_eq!(written.len(), 3);
        let train = std::fs::read_to_string(dir.path().join(TRAIN_FILE)).unwrap();
        assert_eq!(train.lines().count(), 69);
        let pairs = parse_pairs(&train).unwrap();
        for (pair, t) in pairs.iter().zip(&split.train) {
            assert_eq!(pair, &f.format(t).unwrap());
        }
        let m = Manifest::load(dir.path().join(MANIFEST_FILE)).unwrap();
        assert_eq!((m.seed, m.n, m.mode.as_str()), (7, 3, "natural"));
        assert_eq!(m.counts["train"], 69);
    }

    #[test]
    fn re_export_is_byte_identical() {
        let a = tempfile::tempdir().unwrap();
        let b = tempfile::tempdir().unwrap();
        let split = sample_few_shot(&fixture(), &FewShotSpec::new(2, 1)).unwrap();
        let f = Formatter::new(&PromptInventory::natural(), FormatMode::Shuffled { seed: 4 }).unwrap();
        export_split(&split, &f, a.path()).unwrap();
        export_split(&split, &f, b.path()).unwrap();
        for name in [TRAIN_FILE, VALID_FILE, MANIFEST_FILE] {
            assert_eq!(std::fs::read(a.path().join(name)).unwrap(), std::fs::read(b.path().join(name)).unwrap());
        }
        let m = std::fs::read_to_string(a.path().join(MANIFEST_FILE)).unwrap();
        assert!(m.contains("\"mode\": \"shuffled:4\""));
    }

    #[test]
    fn holdout_writes_pretrain() {
        let dir = tempfile::tempdir().unwrap();
        let spec = FewShotSpec::new(1, 1).with_holdout(["xWant", "AtLocation"]);
        let split = sample_few_shot(&fixture(), &spec).unwrap();
        let f = Formatter::new(&PromptInventory::natural(), FormatMode::Embedding).unwrap();
        export_split(&split, &f, dir.path()).unwrap();
        let pre = std::fs::read_to_string(dir.path().join(PRETRAIN_FILE)).unwrap();
        assert_eq!(pre.lines().count(), 21 * 6);
        let m = Manifest::load(dir.path().join(MANIFEST_FILE)).unwrap();
        assert_eq!(m.holdout, ["AtLocation", "xWant"]);
        assert_eq!(m.counts["pretrain"], 126);
    }

    #[test]
    fn raw_export_round_trips() {
        let dir = tempfile::tempdir().unwrap();
        let split = sample_few_shot(&fixture(), &FewShotSpec::new(3, 2).with_validation()).unwrap();
        export_raw_split(&split, dir.path()).unwrap();
        let train = load_kg(dir.path().join(TRAIN_FILE)).unwrap();
        let valid = load_kg(dir.path().join(VALID_FILE)).unwrap();
        assert!(train.iter().zip(&split.train).all(|(a, b)| a.same_fact(b)));
        assert!(valid.iter().zip(&split.validation).all(|(a, b)| a.same_fact(b)));
        assert_eq!(train.len(), split.train.len());
    }

    #[test]
    fn pair_parse_errors() {
        assert!(parse_pairs("a\tb\tc\n").is_err());
        assert!(parse_pairs("ab\n").is_err());
        assert_eq!(parse_pairs("").unwrap(), vec![]);
    }
}
