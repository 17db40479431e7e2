//! How concentrated is a change? The cumulative curve plots the fraction of
//! entries (x) against the fraction of total |change| they carry (y); the
//! area under it is 0.5 when every entry moves equally and shrinks toward 0
//! as a few entries take most of the mass.

use ckpt_drift::drift::{auc, change_distribution, MatrixPair};
use ckpt_drift::tensor_io::Tensor;

fn show(label: &str, diffs: &[f64]) {
    let before = Tensor::from_f64("w", 1, diffs.len(), vec![0.0; diffs.len()]).unwrap();
    let after = Tensor::from_f64("w", 1, diffs.len(), diffs.to_vec()).unwrap();
    let dist = change_distribution(&MatrixPair::new(&before, &after).unwrap(), 1e-5).unwrap();
    let pts: Vec<String> = dist.points().iter().map(|(x, y)| format!("({x:.3},{y:.3})")).collect();
    println!("{label:<12} auc={:.4}  {}", auc(&dist), pts.join(" "));
}

fn main() {
    show("uniform", &[1.0; 8]);
    show("two levels", &[1.0, 3.0]);
    show("one spike", &[0.0, 0.0, 0.0, 4.0]);
    show("geometric", &(0..10).map(|i| 2f64.powi(i)).collect::<Vec<_>>());
    show("no change", &[0.0; 4]);
    // below half a quantum everything rounds to zero
    show("sub-quantum", &[4e-6, 1e-6, 3e-6]);
}
