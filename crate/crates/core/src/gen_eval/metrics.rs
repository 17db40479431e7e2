use std::collections::HashMap;

use super::porter::stem;
use super::GenerationRecord;

fn max_over_refs(record: &GenerationRecord, f: impl Fn(&[String], &[String]) -> f64) -> f64 {
    record.references.iter().map(|r| f(&record.candidate, r)).fold(0.0, f64::max)
}

fn counts(tokens: &[String]) -> HashMap<&str, usize> {
    let mut m = HashMap::new();
    for t in tokens {
        *m.entry(t.as_str()).or_insert(0) += 1;
    }
    m
}

/// Clipped unigram precision times brevity penalty against one reference.
pub fn bleu1_single(candidate: &[String], reference: &[String]) -> f64 {
    if candidate.is_empty() {
        return 0.0;
    }
    let refs = counts(reference);
    let clipped: usize = counts(candidate)
        .iter()
        .map(|(tok, &n)| n.min(refs.get(tok).copied().unwrap_or(0)))
        .sum();
    let (c, r) = (candidate.len() as f64, reference.len() as f64);
    let bp = (1.0 - r / c).min(0.0).exp();
    clipped as f64 / c * bp
}

/// Best single-reference BLEU-1 over the record's references.
pub fn bleu1(record: &GenerationRecord) -> f64 {
    max_over_refs(record, bleu1_single)
}

pub fn lcs_len(a: &[String], b: &[String]) -> usize {
    let mut row = vec![0usize; b.len() + 1];
    for x in a {
        let mut diag = 0;
        for (j, y) in b.iter().enumerate() {
            let up = row[j + 1];
            row[j + 1] = if x == y { diag + 1 } else { up.max(row[j]) };
            diag = up;
        }
    }
    row[b.len()]
}

pub fn rouge_l_single(candidate: &[String], reference: &[String]) -> f64 {
    let lcs = lcs_len(candidate, reference);
    if lcs == 0 {
        return 0.0;
    }
    let p = lcs as f64 / candidate.len() as f64;
    let r = lcs as f64 / reference.len() as f64;
    2.0 * p * r / (p + r)
}

/// LCS-based F1, best over references.
pub fn rouge_l(record: &GenerationRecord) -> f64 {
    max_over_refs(record, rouge_l_single)
}

/// Candidate position → reference position, built in two passes: exact
/// token equality, then equal Porter stems among tokens still unmatched.
/// A token prefers the reference slot right after its predecessor's match,
/// otherwise the earliest free one.
pub fn align(candidate: &[String], reference: &[String]) -> Vec<Option<usize>> {
    let mut cand_to_ref = vec![None; candidate.len()];
    let mut ref_used = vec![false; reference.len()];
    let cand_stems: Vec<String> = candidate.iter().map(|t| stem(t)).collect();
    let ref_stems: Vec<String> = reference.iter().map(|t| stem(t)).collect();
    let stages: [(&[String], &[String]); 2] = [(candidate, reference), (&cand_stems, &ref_stems)];
    for (cand, refs) in stages {
        for i in 0..cand.len() {
            if cand_to_ref[i].is_some() {
                continue;
            }
            let free = |j: usize| !ref_used[j] && refs[j] == cand[i];
            let preferred = i
                .checked_sub(1)
                .and_then(|p| cand_to_ref[p])
                .map(|j: usize| j + 1)
                .filter(|&j| j < refs.len() && free(j));
            if let Some(j) = preferred.or_else(|| (0..refs.len()).find(|&j| free(j))) {
                cand_to_ref[i] = Some(j);
                ref_used[j] = true;
            }
        }
    }
    cand_to_ref
}

/// METEOR with exact and stem matching only (no synonym or paraphrase
/// tables): Fmean = 10PR/(R+9P) scaled by 1 − 0.5·(chunks/m)³.
pub fn meteor_single(candidate: &[String], reference: &[String]) -> f64 {
    let alignment = align(candidate, reference);
    let matched: Vec<(usize, usize)> = alignment.iter().enumerate().filter_map(|(i, j)| j.map(|j| (i, j))).collect();
    let m = matched.len();
    if m == 0 {
        return 0.0;
    }
    let chunks = 1 + matched.windows(2).filter(|w| !(w[1].0 == w[0].0 + 1 && w[1].1 == w[0].1 + 1)).count();
    let p = m as f64 / candidate.len() as f64;
    let r = m as f64 / reference.len() as f64;
    let fmean = 10.0 * p * r / (r + 9.0 * p);
    let frag = chunks as f64 / m as f64;
    fmean * (1.0 - 0.5 * frag.powi(3))
}

pub fn meteor_lite(record: &GenerationRecord) -> f64 {
    max_over_refs(record, meteor_single)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn t(s: &str) -> Vec<String> {
        s.split_whitespace().map(str::to_owned).collect()
    }

    fn rec(c: &str, refs: &[&str]) -> GenerationRecord {
        GenerationRecord::new("h", "r", t(c), refs.iter().map(|r| t(r)).collect())
    }

    fn close(a: f64, b: f64) -> bool {
        (a - b).abs() < 1e-12
    }

    #[test]
    fn bleu_examples() {
        assert_eq!(bleu1(&rec("the cat sat", &["the cat sat"])), 1.0);
        assert!(close(bleu1(&rec("the cat sat", &["the cat"])), 2.0 / 3.0));
        assert!(close(bleu1(&rec("the", &["the cat sat"])), (-2.0f64).exp()));
        assert_eq!(bleu1(&rec("", &["the"])), 0.0);
        // clipping: "the the the" vs one "the"
        assert!(close(bleu1(&rec("the the the", &["the cat sat"])), 1.0 / 3.0));
    }

    #[test]
    fn rouge_examples() {
        assert_eq!(rouge_l(&rec("a b c d", &["a b c d"])), 1.0);
        assert!(close(rouge_l(&rec("a b c d", &["a c d"])), 2.0 * 0.75 / 1.75));
        assert_eq!(rouge_l(&rec("a b", &["c d"])), 0.0);
        assert_eq!(rouge_l(&rec("", &["c d"])), 0.0);
    }

    #[test]
    fn meteor_examples() {
        assert_eq!(meteor_lite(&rec("a b", &["c d"])), 0.0);
        assert_eq!(meteor_lite(&rec("go to the store", &["go to the store"])), 1.0 - 0.5 / 64.0);
        assert!(meteor_lite(&rec("running", &["runs"])) > 0.0);
        // one match, one chunk: Fmean=1, penalty 0.5
        assert_eq!(meteor_lite(&rec("running", &["runs"])), 0.5);
    }

    #[test]
    fn meteor_counts_chunks() {
        // matches at (0,0) (1,1) | (2,3): two chunks of three matches
        let s = meteor_single(&t("a b c"), &t("a b x c"));
        let (p, r) = (1.0, 0.75);
        let fmean = 10.0 * p * r / (r + 9.0 * p);
        assert!(close(s, fmean * (1.0 - 0.5 * (2.0f64 / 3.0).powi(3))));
    }

    #[test]
    fn alignment_prefers_adjacency() {
        // the second "a" follows the first match rather than taking slot 0
        assert_eq!(align(&t("b a"), &t("a b a")), [Some(1), Some(2)]);
        assert_eq!(align(&t("x running"), &t("runs x")), [Some(1), Some(0)]);
    }

    #[test]
    fn lcs_basics() {
        assert_eq!(lcs_len(&t("a b c d"), &t("a c d")), 3);
        assert_eq!(lcs_len(&t("a b"), &t("")), 0);
        assert_eq!(lcs_len(&t("a b a b"), &t("b a b a")), 3);
    }

    #[test]
    fn identical_to_any_reference_is_one() {
        let r = rec("to go home", &["stay put", "to go home"]);
        assert_eq!(bleu1(&r), 1.0);
        assert_eq!(rouge_l(&r), 1.0);
    }
}
