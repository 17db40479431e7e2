use std::collections::BTreeMap;

use rayon::prelude::*;

use super::{EvalError, GenerationRecord};

const MAX_N: usize = 4;

type NGram<'a> = &'a [String];

fn ngram_counts(tokens: &[String]) -> BTreeMap<NGram<'_>, f64> {
    let mut m = BTreeMap::new();
    for n in 1..=MAX_N {
        for w in tokens.windows(n) {
            *m.entry(w).or_insert(0.0) += 1.0;
        }
    }
    m
}

/// Document frequencies over reference sets, one document per record.
#[derive(Debug)]
pub struct CiderIdf<'a> {
    df: BTreeMap<NGram<'a>, f64>,
    log_docs: f64,
}

impl<'a> CiderIdf<'a> {
    pub fn build(records: &'a [GenerationRecord]) -> Result<Self, EvalError> {
        if records.is_empty() {
            return Err(EvalError::EmptyCorpus);
        }
        let mut df: BTreeMap<NGram<'a>, f64> = BTreeMap::new();
        for rec in records {
            let mut seen: Vec<NGram<'a>> = rec.references.iter().flat_map(|r| ngram_counts(r).into_keys()).collect();
            seen.sort_unstable();
            seen.dedup();
            for g in seen {
                *df.entry(g).or_insert(0.0) += 1.0;
            }
        }
        Ok(Self { df, log_docs: (records.len() as f64).ln() })
    }

    /// Per-order TF-IDF vectors and their norms.
    fn vectorize<'t>(&self, tokens: &'t [String]) -> ([BTreeMap<NGram<'t>, f64>; MAX_N], [f64; MAX_N]) {
        let mut vecs: [BTreeMap<NGram<'t>, f64>; MAX_N] = Default::default();
        let mut norms = [0.0; MAX_N];
        for (g, tf) in ngram_counts(tokens) {
            let df = self.df.get(g).copied().unwrap_or(0.0).max(1.0);
            let v = tf * (self.log_docs - df.ln());
            vecs[g.len() - 1].insert(g, v);
            norms[g.len() - 1] += v * v;
        }
        (vecs, norms.map(f64::sqrt))
    }

    /// Mean over n of the cosine with each reference, averaged over
    /// references, times 10.
    pub fn score(&self, record: &GenerationRecord) -> f64 {
        let (cv, cn) = self.vectorize(&record.candidate);
        let mut sims: Vec<[f64; MAX_N]> = record
            .references
            .iter()
            .map(|reference| {
                let (rv, rn) = self.vectorize(reference);
                std::array::from_fn(|n| {
                    let dot: f64 = cv[n].iter().map(|(g, v)| v * rv[n].get(g).copied().unwrap_or(0.0)).sum();
                    if cn[n] != 0.0 && rn[n] != 0.0 {
                        dot / (cn[n] * rn[n])
                    } else {
                        dot
                    }
                })
            })
            .collect();
        // summing in a canonical order keeps the score bit-identical under
        // any permutation of the references
        sims.sort_by(|a, b| a.iter().zip(b).map(|(x, y)| x.total_cmp(y)).find(|o| o.is_ne()).unwrap_or(std::cmp::Ordering::Equal));
        let mut total = [0.0; MAX_N];
        for s in &sims {
            for n in 0..MAX_N {
                total[n] += s[n];
            }
        }
        let mean_over_n = total.iter().sum::<f64>() / MAX_N as f64;
        mean_over_n / record.references.len() as f64 * 10.0
    }
}

/// Plain CIDEr (no length penalty, no count clipping): per-record scores and
/// their mean.
pub fn cider(records: &[GenerationRecord]) -> Result<(Vec<f64>, f64), EvalError> {
    let idf = CiderIdf::build(records)?;
    let scores: Vec<f64> = records.par_iter().map(|r| idf.score(r)).collect();
    let mean = scores.iter().sum::<f64>() / scores.len() as f64;
    Ok((scores, mean))
}
