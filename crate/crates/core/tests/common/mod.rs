//! Independent oracles and fixtures shared by the integration tests.
//!
//! The measure oracles are direct transcriptions of the definitions: no
//! pairwise summation, no integer keys, no scaling tricks.
#![allow(dead_code)]

use std::f64::consts::PI;
use std::path::PathBuf;

use ckpt_drift::corpus::rng::SplitMix64;
use ckpt_drift::tensor_io::{Checkpoint, Tensor};

pub fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(name)
}

/// (1/mn) Σ |after − before|
pub fn oracle_l1(before: &[f64], after: &[f64]) -> f64 {
    let mut s = 0.0;
    for i in 0..before.len() {
        s += (after[i] - before[i]).abs();
    }
    s / before.len() as f64
}

/// (1/(m'π)) Σ_rows arccos(clamp(cos)), zero-norm rows skipped.
pub fn oracle_ang(before: &[f64], after: &[f64], cols: usize) -> (f64, usize) {
    let mut total = 0.0;
    let mut zero = 0;
    let rows = before.len() / cols;
    for r in 0..rows {
        let b = &before[r * cols..(r + 1) * cols];
        let a = &after[r * cols..(r + 1) * cols];
        let dot: f64 = b.iter().zip(a).map(|(x, y)| x * y).sum();
        let nb = b.iter().map(|x| x * x).sum::<f64>().sqrt();
        let na = a.iter().map(|x| x * x).sum::<f64>().sqrt();
        if nb == 0.0 || na == 0.0 {
            zero += 1;
            continue;
        }
        total += (dot / (nb * na)).clamp(-1.0, 1.0).acos();
    }
    let kept = rows - zero;
    if kept == 0 {
        (0.0, zero)
    } else {
        (total / (kept as f64 * PI), zero)
    }
}

/// Round |diff| to the quantum grid, then for each distinct rounded value
/// w_i: x = #{w ≤ w_i}/N, y = Σ{w ≤ w_i}/Σw; trapezoid from (0,0).
pub fn oracle_points(before: &[f64], after: &[f64], quantum: f64) -> Vec<(f64, f64)> {
    let w: Vec<f64> = before
        .iter()
        .zip(after)
        .map(|(b, a)| ((a - b).abs() / quantum).round() * quantum)
        .collect();
    let total: f64 = w.iter().sum();
    let mut thresholds = w.clone();
    thresholds.sort_by(|a, b| a.partial_cmp(b).unwrap());
    thresholds.dedup();
    let mut points = vec![(0.0, 0.0)];
    if total == 0.0 {
        points.push((1.0, 0.0));
        return points;
    }
    for t in thresholds {
        let below: Vec<f64> = w.iter().copied().filter(|&x| x <= t).collect();
        let x = below.len() as f64 / w.len() as f64;
        let y = below.iter().sum::<f64>() / total;
        points.push((x, y));
    }
    points
}

pub fn oracle_auc(before: &[f64], after: &[f64], quantum: f64) -> f64 {
    let p = oracle_points(before, after, quantum);
    if p.len() == 2 && p[1] == (1.0, 0.0) {
        return 0.5;
    }
    p.windows(2).map(|s| (s[1].0 - s[0].0) * (s[0].1 + s[1].1) / 2.0).sum()
}

pub fn rel_err(got: f64, want: f64) -> f64 {
    if want == 0.0 {
        got.abs()
    } else {
        ((got - want) / want).abs()
    }
}

/// Uniform in [lo, hi).
pub fn uniform(rng: &mut SplitMix64, lo: f64, hi: f64) -> f64 {
    lo + (hi - lo) * (rng.next_u64() >> 11) as f64 / (1u64 << 53) as f64
}

pub fn random_vec(rng: &mut SplitMix64, n: usize, lo: f64, hi: f64) -> Vec<f64> {
    (0..n).map(|_| uniform(rng, lo, hi)).collect()
}

pub const ENC_KINDS: [&str; 6] = ["q", "k", "v", "o", "wi", "wo"];
pub const DEC_KINDS: [&str; 10] = ["q", "k", "v", "o", "xq", "xk", "xv", "xo", "wi", "wo"];

pub fn t5_name(component: &str, layer: usize, kind: &str) -> String {
    let (sub, module) = match (component, kind) {
        (_, "q" | "k" | "v" | "o") => (0, format!("SelfAttention.{kind}")),
        ("decoder", "xq" | "xk" | "xv" | "xo") => (1, format!("EncDecAttention.{}", &kind[1..])),
        ("encoder", "wi" | "wo") => (1, format!("DenseReluDense.{kind}")),
        ("decoder", "wi" | "wo") => (2, format!("DenseReluDense.{kind}")),
        _ => panic!("no T5 tensor for {component} {kind}"),
    };
    format!("{component}.block.{layer}.layer.{sub}.{module}.weight")
}

/// A miniature T5: `layers` blocks on each side, every matrix `dim × dim`,
/// plus a layer norm and a shared embedding (which stays unclassified).
pub fn tiny_t5(layers: usize, dim: usize, seed: u64) -> Checkpoint {
    let mut rng = SplitMix64::new(seed);
    let mut tensors = Vec::new();
    for (component, kinds) in [("encoder", &ENC_KINDS[..]), ("decoder", &DEC_KINDS[..])] {
        for layer in 0..layers {
            for kind in kinds {
                let data: Vec<f32> = random_vec(&mut rng, dim * dim, -1.0, 1.0).into_iter().map(|x| x as f32).collect();
                tensors.push(Tensor::from_f32(t5_name(component, layer, kind), dim, dim, data).unwrap());
            }
            let ln = format!("{component}.block.{layer}.layer.0.layer_norm.weight");
            tensors.push(Tensor::vector_f32(ln, vec![1.0; dim]).unwrap());
        }
    }
    tensors.push(Tensor::from_f32("shared.weight", 8, dim, vec![0.5; 8 * dim]).unwrap());
    Checkpoint::from_tensors(tensors).unwrap()
}

/// Copy of `ckpt` with `name` shifted by `delta` in every entry.
pub fn perturbed(ckpt: &Checkpoint, name: &str, delta: f32) -> Checkpoint {
    Checkpoint::from_tensors(ckpt.tensors().map(|t| {
        if t.name() != name {
            return t.clone();
        }
        let data: Vec<f32> = t.to_f64_vec().into_iter().map(|x| x as f32 + delta).collect();
        Tensor::from_f32(t.name(), t.rows(), t.cols(), data).unwrap()
    }))
    .unwrap()
}

/// The BLEU-1 definition, counting over an explicit vocabulary.
pub fn brute_bleu1(cand: &[String], reference: &[String], vocab: &[&str]) -> f64 {
    if cand.is_empty() {
        return 0.0;
    }
    let count = |s: &[String], w: &str| s.iter().filter(|t| t.as_str() == w).count();
    let clipped: usize = vocab.iter().map(|w| count(cand, w).min(count(reference, w))).sum();
    let (c, r) = (cand.len() as f64, reference.len() as f64);
    let bp = if c > r { 1.0 } else { (1.0 - r / c).exp() };
    clipped as f64 / c * bp
}

/// Longest common subsequence by enumerating every candidate subsequence.
pub fn brute_lcs(cand: &[String], reference: &[String]) -> usize {
    let is_subseq = |sub: &[&String]| {
        let mut it = reference.iter();
        sub.iter().all(|s| it.any(|r| r == *s))
    };
    (0u32..1 << cand.len())
        .map(|mask| {
            let sub: Vec<&String> = (0..cand.len()).filter(|i| mask >> i & 1 == 1).map(|i| &cand[i]).collect();
            if is_subseq(&sub) {
                sub.len()
            } else {
                0
            }
        })
        .max()
        .unwrap_or(0)
}

pub fn brute_rouge_l(cand: &[String], reference: &[String]) -> f64 {
    let lcs = brute_lcs(cand, reference) as f64;
    if lcs == 0.0 {
        return 0.0;
    }
    let (p, r) = (lcs / cand.len() as f64, lcs / reference.len() as f64);
    2.0 * p * r / (p + r)
}

/// Every sequence of length ≤ `max_len` over `vocab`.
pub fn all_sequences(vocab: &[&str], max_len: usize) -> Vec<Vec<String>> {
    let mut out = vec![vec![]];
    let mut frontier: Vec<Vec<String>> = vec![vec![]];
    for _ in 0..max_len {
        let mut next = Vec::new();
        for s in &frontier {
            for w in vocab {
                let mut t = s.clone();
                t.push((*w).to_owned());
                next.push(t);
            }
        }
        out.extend(next.iter().cloned());
        frontier = next;
    }
    out
}

pub fn words(s: &str) -> Vec<String> {
    s.split_whitespace().map(str::to_owned).collect()
}
