//! Diffs a pre-trained / fine-tuned pair of small T5-shaped checkpoints and
//! prints every cell's three change measures.
//!
//! The "fine-tuned" copy moves the decoder more than the encoder and the
//! cross-attention most of all, the way few-shot tuning tends to.

use ckpt_drift::arch_map::RuleTable;
use ckpt_drift::corpus::rng::SplitMix64;
use ckpt_drift::drift::{diff_checkpoint_files, DEFAULT_QUANTUM};
use ckpt_drift::report::export_csv;
use ckpt_drift::tensor_io::{save_checkpoint, Checkpoint, Tensor};

const LAYERS: usize = 3;
const DIM: usize = 32;

fn names() -> Vec<String> {
    let mut out = Vec::new();
    for l in 0..LAYERS {
        for k in ["q", "k", "v", "o"] {
            out.push(format!("encoder.block.{l}.layer.0.SelfAttention.{k}.weight"));
            out.push(format!("decoder.block.{l}.layer.0.SelfAttention.{k}.weight"));
            out.push(format!("decoder.block.{l}.layer.1.EncDecAttention.{k}.weight"));
        }
        for k in ["wi", "wo"] {
            out.push(format!("encoder.block.{l}.layer.1.DenseReluDense.{k}.weight"));
            out.push(format!("decoder.block.{l}.layer.2.DenseReluDense.{k}.weight"));
        }
    }
    out.push("shared.weight".into());
    out
}

fn build(step: f32) -> Checkpoint {
    let mut rng = SplitMix64::new(42);
    let mut noise = SplitMix64::new(7);
    let unit = |r: &mut SplitMix64| (r.next_u64() >> 40) as f32 / (1u32 << 24) as f32 - 0.5;
    let tensors = names().into_iter().map(|name| {
        let scale = if name.contains("EncDec") {
            4.0
        } else if name.starts_with("decoder") {
            2.0
        } else if name.starts_with("encoder") {
            1.0
        } else {
            0.0
        };
        let data: Vec<f32> = (0..DIM * DIM).map(|_| unit(&mut rng) + step * scale * unit(&mut noise)).collect();
        Tensor::from_f32(name, DIM, DIM, data).unwrap()
    });
    Checkpoint::from_tensors(tensors).unwrap()
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let dir = std::env::temp_dir().join("ckpt-drift-diff");
    std::fs::create_dir_all(&dir)?;
    let (pt, ft) = (dir.join("pretrained.ckpt"), dir.join("finetuned.ckpt"));
    save_checkpoint(&build(0.0), &pt)?;
    save_checkpoint(&build(0.01), &ft)?;

    let report = diff_checkpoint_files(&pt, &ft, &RuleTable::t5_default(), DEFAULT_QUANTUM)?;
    println!("{:<22} {:>10} {:>10} {:>8}", "cell", "d_l1", "d_ang", "auc");
    for c in &report.cells {
        println!("{:<22} {:>10.3e} {:>10.3e} {:>8.4}", c.locator.to_string(), c.d_l1, c.d_ang, c.auc);
    }
    println!("unclassified: {:?}", report.unclassified);

    std::fs::write(dir.join("diff.json"), report.to_json())?;
    std::fs::write(dir.join("diff.csv"), export_csv(&report))?;
    println!("wrote {}", dir.display());
    Ok(())
}
