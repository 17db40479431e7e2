use std::collections::{BTreeMap, BTreeSet};

use super::rng::SplitMix64;
use super::{CorpusError, KnowledgeTuple};

/// Per-relation training budget and how to draw it.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct FewShotSpec {
    /// Examples per relation.
    pub n: usize,
    pub seed: u64,
    /// When nonempty, only these relations are sampled; every tuple of the
    /// remaining relations goes to the pretraining pool.
    pub holdout: BTreeSet<String>,
    /// Also draw `n` validation tuples per relation.
    pub validation: bool,
}

impl FewShotSpec {
    pub fn new(n: usize, seed: u64) -> Self {
        Self { n, seed, ..Self::default() }
    }

    pub fn with_validation(mut self) -> Self {
        self.validation = true;
        self
    }

    pub fn with_holdout<I: IntoIterator<Item = S>, S: Into<String>>(mut self, relations: I) -> Self {
        self.holdout = relations.into_iter().map(Into::into).collect();
        self
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FewShotSplit {
    pub train: Vec<KnowledgeTuple>,
    pub validation: Vec<KnowledgeTuple>,
    /// Empty unless holdout relations were requested.
    pub pretrain: Vec<KnowledgeTuple>,
    pub spec: FewShotSpec,
}

impl FewShotSplit {
    /// Tuples per relation in the training set.
    pub fn train_counts(&self) -> BTreeMap<&str, usize> {
        let mut m = BTreeMap::new();
        for t in &self.train {
            *m.entry(t.relation.as_str()).or_insert(0) += 1;
        }
        m
    }
}

fn by_relation(kg: &[KnowledgeTuple]) -> BTreeMap<&str, Vec<usize>> {
    let mut m: BTreeMap<&str, Vec<usize>> = BTreeMap::new();
    for (i, t) in kg.iter().enumerate() {
        m.entry(t.relation.as_str()).or_default().push(i);
    }
    m
}

/// Draws train (and validation) tuples from `kg` itself.
pub fn sample_few_shot(kg: &[KnowledgeTuple], spec: &FewShotSpec) -> Result<FewShotSplit, CorpusError> {
    sample_impl(kg, None, spec)
}

/// Like [`sample_few_shot`], but validation tuples come from a separate pool
/// (for instance an official dev split) instead of the training graph.
pub fn sample_few_shot_with_pool(
    kg: &[KnowledgeTuple],
    validation_pool: &[KnowledgeTuple],
    spec: &FewShotSpec,
) -> Result<FewShotSplit, CorpusError> {
    sample_impl(kg, Some(validation_pool), spec)
}

// Per relation, in sorted relation order: a generator keyed by
// `seed ^ fnv1a64(relation)` partially shuffles that relation's indices;
// the first n become train, the next n validation. Each draw is then put back
// into graph order so the output does not depend on shuffle positions.
fn sample_impl(
    kg: &[KnowledgeTuple],
    pool: Option<&[KnowledgeTuple]>,
    spec: &FewShotSpec,
) -> Result<FewShotSplit, CorpusError> {
    let groups = by_relation(kg);
    if let Some(unknown) = spec.holdout.iter().find(|r| !groups.contains_key(r.as_str())) {
        return Err(CorpusError::UnknownRelation(unknown.clone()));
    }
    let pool_groups = pool.map(by_relation);
    let n = spec.n;
    let same_pool_validation = spec.validation && pool.is_none();
    let needed = if same_pool_validation { 2 * n } else { n };

    let mut split = FewShotSplit { train: Vec::new(), validation: Vec::new(), pretrain: Vec::new(), spec: spec.clone() };
    for (&relation, indices) in &groups {
        if !spec.holdout.is_empty() && !spec.holdout.contains(relation) {
            continue;
        }
        if indices.len() < needed {
            return Err(CorpusError::InsufficientExamples {
                relation: relation.to_owned(),
                needed,
                available: indices.len(),
            });
        }
        let mut rng = SplitMix64::for_relation(spec.seed, relation);
        let mut order = indices.clone();
        rng.partial_shuffle(&mut order, needed);
        let mut train = order[..n].to_vec();
        train.sort_unstable();
        split.train.extend(train.iter().map(|&i| kg[i].clone()));

        if same_pool_validation {
            let mut valid = order[n..2 * n].to_vec();
            valid.sort_unstable();
            split.validation.extend(valid.iter().map(|&i| kg[i].clone()));
        } else if spec.validation {
            let (pool, pool_groups) = (pool.expect("separate pool"), pool_groups.as_ref().expect("separate pool"));
            let empty = Vec::new();
            let candidates = pool_groups.get(relation).unwrap_or(&empty);
            if candidates.len() < n {
                return Err(CorpusError::InsufficientExamples {
                    relation: format!("{relation} (validation pool)"),
                    needed: n,
                    available: candidates.len(),
                });
            }
            let mut order = candidates.clone();
            rng.partial_shuffle(&mut order, n);
            let mut valid = order[..n].to_vec();
            valid.sort_unstable();
            split.validation.extend(valid.iter().map(|&i| pool[i].clone()));
        }
    }
    if !spec.holdout.is_empty() {
        split.pretrain = kg.iter().filter(|t| !spec.holdout.contains(&t.relation)).cloned().collect();
    }
    Ok(split)
}
