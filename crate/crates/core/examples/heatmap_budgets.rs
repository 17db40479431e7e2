//! One heatmap panel per training budget. Each budget's "fine-tuned"
//! checkpoint drifts further from the same pre-trained one; the shared colour
//! scale makes panels comparable, the per-panel scale shows each one's shape.
//!
//! Usage: cargo run --example heatmap_budgets [OUT_DIR]

use std::path::PathBuf;

use ckpt_drift::arch_map::RuleTable;
use ckpt_drift::corpus::rng::SplitMix64;
use ckpt_drift::drift::{diff_checkpoints, DiffReport, DEFAULT_QUANTUM};
use ckpt_drift::report::{aggregate_reports, render_heatmap, ColorScale, HeatmapSpec, Measure};
use ckpt_drift::tensor_io::{Checkpoint, Tensor};

const LAYERS: usize = 4;
const DIM: usize = 16;

fn matrices() -> Vec<(String, f32)> {
    // (name, relative sensitivity): later decoder layers move most
    let mut out = Vec::new();
    for l in 0..LAYERS {
        let depth = 1.0 + l as f32;
        for k in ["q", "k", "v", "o"] {
            out.push((format!("encoder.block.{l}.layer.0.SelfAttention.{k}.weight"), 0.5));
            out.push((format!("decoder.block.{l}.layer.0.SelfAttention.{k}.weight"), depth));
            out.push((format!("decoder.block.{l}.layer.1.EncDecAttention.{k}.weight"), 2.0 * depth));
        }
        for k in ["wi", "wo"] {
            out.push((format!("encoder.block.{l}.layer.1.DenseReluDense.{k}.weight"), 0.5));
            out.push((format!("decoder.block.{l}.layer.2.DenseReluDense.{k}.weight"), depth));
        }
    }
    out
}

fn checkpoint(step: f32, noise_seed: u64) -> Checkpoint {
    let mut base = SplitMix64::new(1);
    let mut noise = SplitMix64::new(noise_seed);
    let unit = |r: &mut SplitMix64| (r.next_u64() >> 40) as f32 / (1u32 << 24) as f32 - 0.5;
    Checkpoint::from_tensors(matrices().into_iter().map(|(name, s)| {
        let data: Vec<f32> = (0..DIM * DIM).map(|_| unit(&mut base) + step * s * unit(&mut noise)).collect();
        Tensor::from_f32(name, DIM, DIM, data).unwrap()
    }))
    .unwrap()
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let out = std::env::args().nth(1).map(PathBuf::from).unwrap_or_else(|| std::env::temp_dir().join("ckpt-drift-heatmaps"));
    std::fs::create_dir_all(&out)?;
    let pretrained = checkpoint(0.0, 0);
    let rules = RuleTable::t5_default();

    let budgets = [4usize, 16, 64];
    let mut reports: Vec<DiffReport> = Vec::new();
    for (i, n) in budgets.iter().enumerate() {
        let tuned = checkpoint(1e-3 * (*n as f32).sqrt(), 10 + i as u64);
        reports.push(diff_checkpoints(&pretrained, &tuned, &rules, DEFAULT_QUANTUM)?);
    }
    let labels: Vec<String> = budgets.iter().map(|n| format!("n = {n}")).collect();

    for (measure, scale, file) in [
        (Measure::L1, ColorScale::Shared, "l1_shared.svg"),
        (Measure::L1, ColorScale::PerPanel, "l1_per_panel.svg"),
        (Measure::Angular, ColorScale::Shared, "angular_shared.svg"),
        (Measure::Auc, ColorScale::PerPanel, "auc_per_panel.svg"),
    ] {
        let spec = HeatmapSpec { color_scale: scale, panel_labels: labels.clone(), ..HeatmapSpec::new(measure) };
        std::fs::write(out.join(file), render_heatmap(&reports, &spec)?)?;
    }

    // seeds of the same budget average into one panel
    let seeds: Vec<DiffReport> = (0..3)
        .map(|s| diff_checkpoints(&pretrained, &checkpoint(8e-3, 100 + s), &rules, DEFAULT_QUANTUM))
        .collect::<Result<_, _>>()?;
    let mean = aggregate_reports(&seeds)?;
    let spec = HeatmapSpec { panel_labels: vec!["n = 64, 3 seeds".into()], precision: Some(4), ..HeatmapSpec::new(Measure::L1) };
    std::fs::write(out.join("l1_mean_of_seeds.svg"), render_heatmap(&[mean], &spec)?)?;

    println!("wrote 5 SVGs to {}", out.display());
    Ok(())
}
