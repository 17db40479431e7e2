use std::collections::HashMap;
use std::fmt::{self, Write as _};
use std::path::Path;
use std::str::FromStr;

use rayon::prelude::*;

use super::{bleu1, cider, meteor_lite, rouge_l, tokenize, EvalError, GenerationRecord};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Metric {
    Bleu1,
    Meteor,
    RougeL,
    Cider,
}

impl Metric {
    pub const ALL: [Metric; 4] = [Metric::Bleu1, Metric::Meteor, Metric::RougeL, Metric::Cider];

    pub fn as_str(self) -> &'static str {
        match self {
            Metric::Bleu1 => "bleu1",
            Metric::Meteor => "meteor",
            Metric::RougeL => "rougeL",
            Metric::Cider => "cider",
        }
    }

    /// Parses a comma-separated list, e.g. `bleu1,rougeL`.
    pub fn parse_list(s: &str) -> Result<Vec<Metric>, EvalError> {
        let mut out: Vec<Metric> = s.split(',').map(str::trim).filter(|p| !p.is_empty()).map(str::parse).collect::<Result<_, _>>()?;
        out.sort();
        out.dedup();
        Ok(out)
    }
}

impl fmt::Display for Metric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Metric {
    type Err = EvalError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Metric::ALL
            .into_iter()
            .find(|m| m.as_str() == s || (s == "rouge_l" && *m == Metric::RougeL))
            .ok_or_else(|| EvalError::UnknownMetric(s.to_owned()))
    }
}

/// One line of a generations file.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Generation {
    pub head: String,
    pub relation: String,
    pub candidate: String,
    pub line: usize,
}

/// Reference tails grouped by (head, relation), keys in first-seen order.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct References {
    order: Vec<(String, String)>,
    tails: HashMap<(String, String), Vec<String>>,
}

impl References {
    pub fn get(&self, head: &str, relation: &str) -> Option<&[String]> {
        self.tails.get(&(head.to_owned(), relation.to_owned())).map(Vec::as_slice)
    }

    pub fn keys(&self) -> impl Iterator<Item = (&str, &str)> {
        self.order.iter().map(|(h, r)| (h.as_str(), r.as_str()))
    }

    pub fn len(&self) -> usize {
        self.order.len()
    }

    pub fn is_empty(&self) -> bool {
        self.order.is_empty()
    }
}

fn split3(line: &str, lineno: usize, allow_empty_last: bool) -> Result<[&str; 3], EvalError> {
    let line = line.strip_suffix('\r').unwrap_or(line);
    let cols: Vec<&str> = line.split('\t').collect();
    let [h, r, t] = cols[..] else {
        return Err(EvalError::BadColumnCount { line: lineno, found: cols.len() });
    };
    for (i, c) in [h, r, t].iter().enumerate() {
        if c.trim().is_empty() && !(allow_empty_last && i == 2) {
            return Err(EvalError::EmptyField { line: lineno, column: i + 1 });
        }
    }
    Ok([h, r, t])
}

/// `head⟶relation⟶candidate` lines. An empty candidate is allowed and
/// scores zero on every metric.
pub fn parse_generations(text: &str) -> Result<Vec<Generation>, EvalError> {
    text.lines()
        .enumerate()
        .map(|(i, line)| {
            let [h, r, c] = split3(line, i + 1, true)?;
            Ok(Generation { head: h.into(), relation: r.into(), candidate: c.into(), line: i + 1 })
        })
        .collect()
}

/// `head⟶relation⟶tail` lines, several per key.
pub fn parse_references(text: &str) -> Result<References, EvalError> {
    let mut refs = References::default();
    for (i, line) in text.lines().enumerate() {
        let [h, r, t] = split3(line, i + 1, false)?;
        let key = (h.to_owned(), r.to_owned());
        let entry = refs.tails.entry(key.clone()).or_insert_with(|| {
            refs.order.push(key);
            Vec::new()
        });
        entry.push(t.to_owned());
    }
    Ok(refs)
}

fn read(path: &Path) -> Result<String, EvalError> {
    std::fs::read_to_string(path).map_err(|source| EvalError::Io { path: path.to_owned(), source })
}

pub fn load_generations(path: impl AsRef<Path>) -> Result<Vec<Generation>, EvalError> {
    parse_generations(&read(path.as_ref())?)
}

pub fn load_references(path: impl AsRef<Path>) -> Result<References, EvalError> {
    parse_references(&read(path.as_ref())?)
}

/// Pairs each generation with its references, tokenizing both sides.
pub fn build_records(generations: &[Generation], references: &References) -> Result<Vec<GenerationRecord>, EvalError> {
    let mut seen: HashMap<(&str, &str), usize> = HashMap::new();
    generations
        .iter()
        .map(|g| {
            if let Some(first) = seen.insert((&g.head, &g.relation), g.line) {
                return Err(EvalError::DuplicateGeneration {
                    head: g.head.clone(),
                    relation: g.relation.clone(),
                    first,
                    second: g.line,
                });
            }
            let tails = references.get(&g.head, &g.relation).ok_or_else(|| EvalError::MissingReferences {
                head: g.head.clone(),
                relation: g.relation.clone(),
                line: g.line,
            })?;
            Ok(GenerationRecord::new(&g.head, &g.relation, tokenize(&g.candidate), tails.iter().map(|t| tokenize(t)).collect()))
        })
        .collect()
}

/// Corpus values of one run: record-level scores averaged over records.
#[derive(Debug, Clone, PartialEq)]
pub struct CorpusScores {
    pub records: usize,
    pub values: Vec<(Metric, f64)>,
}

impl CorpusScores {
    pub fn get(&self, metric: Metric) -> Option<f64> {
        self.values.iter().find(|(m, _)| *m == metric).map(|&(_, v)| v)
    }
}

pub fn score_corpus(records: &[GenerationRecord], metrics: &[Metric]) -> Result<CorpusScores, EvalError> {
    if records.is_empty() {
        return Err(EvalError::EmptyCorpus);
    }
    let n = records.len() as f64;
    let mean_of = |f: fn(&GenerationRecord) -> f64| {
        let per: Vec<f64> = records.par_iter().map(f).collect();
        per.iter().sum::<f64>() / n
    };
    let mut values = Vec::new();
    for &m in metrics {
        let v = match m {
            Metric::Bleu1 => mean_of(bleu1),
            Metric::Meteor => mean_of(meteor_lite),
            Metric::RougeL => mean_of(rouge_l),
            Metric::Cider => cider(records)?.1,
        };
        values.push((m, v));
    }
    Ok(CorpusScores { records: records.len(), values })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MetricSummary {
    pub mean: f64,
    /// Sample standard deviation (n − 1); 0 for a single run.
    pub std: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MetricReport {
    pub runs: usize,
    /// True when there was one run and `std` is 0 by convention only.
    pub single_run: bool,
    pub metrics: Vec<(Metric, MetricSummary)>,
}

impl MetricReport {
    pub fn get(&self, metric: Metric) -> Option<MetricSummary> {
        self.metrics.iter().find(|(m, _)| *m == metric).map(|&(_, s)| s)
    }

    /// Fixed key order, six decimals.
    pub fn to_json(&self) -> String {
        let mut s = String::from("{\n");
        let _ = writeln!(s, "  \"runs\": {},", self.runs);
        let _ = write!(s, "  \"single_run\": {}", self.single_run);
        for (m, sum) in &self.metrics {
            let _ = write!(s, ",\n  \"{}\": {{\"mean\": {:.6}, \"std\": {:.6}}}", m, sum.mean, sum.std);
        }
        s.push_str("\n}\n");
        s
    }
}

/// Mean and sample standard deviation of each metric over runs. Every run
/// must report the same metrics.
pub fn evaluate_runs(runs: &[CorpusScores]) -> Result<MetricReport, EvalError> {
    let first = runs.first().ok_or(EvalError::NoRuns)?;
    let names = |r: &CorpusScores| r.values.iter().map(|(m, _)| *m).collect::<Vec<_>>();
    if runs.iter().any(|r| names(r) != names(first)) {
        return Err(EvalError::MetricMismatch);
    }
    let k = runs.len() as f64;
    let metrics = first
        .values
        .iter()
        .map(|&(m, _)| {
            let xs: Vec<f64> = runs.iter().map(|r| r.get(m).expect("checked above")).collect();
            let mean = xs.iter().sum::<f64>() / k;
            let std = if runs.len() > 1 {
                (xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (k - 1.0)).sqrt()
            } else {
                0.0
            };
            (m, MetricSummary { mean, std })
        })
        .collect();
    Ok(MetricReport { runs: runs.len(), single_run: runs.len() == 1, metrics })
}
