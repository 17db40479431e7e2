use std::fs;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use super::CorpusError;

/// One `head⟶relation⟶tail` line of a knowledge graph.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct KnowledgeTuple {
    pub head: String,
    pub relation: String,
    pub tail: String,
    /// 1-based line in the source file; 0 for tuples built in memory.
    pub line: usize,
}

impl KnowledgeTuple {
    pub fn new(head: impl Into<String>, relation: impl Into<String>, tail: impl Into<String>) -> Self {
        Self { head: head.into(), relation: relation.into(), tail: tail.into(), line: 0 }
    }

    /// Same (head, relation, tail), ignoring where it came from.
    pub fn same_fact(&self, other: &Self) -> bool {
        self.head == other.head && self.relation == other.relation && self.tail == other.tail
    }
}

/// Parses three-column TSV text. Duplicate lines are kept; order is preserved.
pub fn parse_kg(text: &str) -> Result<Vec<KnowledgeTuple>, CorpusError> {
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        out.push(parse_line(line, i + 1)?);
    }
    Ok(out)
}

fn parse_line(line: &str, lineno: usize) -> Result<KnowledgeTuple, CorpusError> {
    let line = line.strip_suffix('\r').unwrap_or(line);
    let cols: Vec<&str> = line.split('\t').collect();
    if cols.len() != 3 {
        return Err(CorpusError::BadColumnCount { line: lineno, found: cols.len() });
    }
    if let Some(pos) = cols.iter().position(|c| c.trim().is_empty()) {
        return Err(CorpusError::EmptyField { line: lineno, column: pos + 1 });
    }
    Ok(KnowledgeTuple {
        head: cols[0].to_owned(),
        relation: cols[1].to_owned(),
        tail: cols[2].to_owned(),
        line: lineno,
    })
}

pub fn load_kg(path: impl AsRef<Path>) -> Result<Vec<KnowledgeTuple>, CorpusError> {
    let path = path.as_ref();
    let file = fs::File::open(path).map_err(|e| CorpusError::io(path, e))?;
    let mut out = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| CorpusError::io(path, e))?;
        out.push(parse_line(&line, i + 1)?);
    }
    Ok(out)
}

pub fn write_kg(tuples: &[KnowledgeTuple], path: impl AsRef<Path>) -> Result<(), CorpusError> {
    let mut text = String::new();
    for t in tuples {
        for field in [&t.head, &t.relation, &t.tail] {
            if field.contains(['\t', '\n', '\r']) {
                return Err(CorpusError::InvalidField(format!("{field:?} contains a tab or line break")));
            }
        }
        text.push_str(&t.head);
        text.push('\t');
        text.push_str(&t.relation);
        text.push('\t');
        text.push_str(&t.tail);
        text.push('\n');
    }
    write_file(path.as_ref(), text.as_bytes())
}

pub(crate) fn write_file(path: &Path, bytes: &[u8]) -> Result<(), CorpusError> {
    let mut f = fs::File::create(path).map_err(|e| CorpusError::io(path, e))?;
    f.write_all(bytes).map_err(|e| CorpusError::io(path, e))
}
