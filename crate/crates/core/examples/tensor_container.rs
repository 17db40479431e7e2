//! Writes a checkpoint two ways (whole, and streamed chunk by chunk), then
//! inspects the header without touching the payload.

use ckpt_drift::tensor_io::{load_checkpoint, read_index, save_checkpoint, Checkpoint, ContainerWriter, Dtype, Tensor, TensorLayout};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let dir = std::env::temp_dir().join("ckpt-drift-container");
    std::fs::create_dir_all(&dir)?;

    let ckpt = Checkpoint::from_tensors([
        Tensor::from_f32("proj.weight", 3, 4, (0..12).map(|i| i as f32 * 0.25).collect())?,
        Tensor::vector_f32("proj.bias", vec![0.0, 1.0, -1.0])?,
    ])?;
    let whole = dir.join("whole.ckpt");
    save_checkpoint(&ckpt, &whole)?;

    // Large tensors never need to be materialized: declare the layout, then
    // feed values in name order, in whatever chunk sizes are convenient.
    let streamed = dir.join("streamed.ckpt");
    let mut w = ContainerWriter::create(
        &streamed,
        vec![TensorLayout::new("big.weight", Dtype::F64, 1024, 512), TensorLayout::new("a.scale", Dtype::F64, 1, 8)],
    )?;
    w.write_values(&[1.0f64; 8])?;
    for row in 0..1024 {
        let values: Vec<f64> = (0..512).map(|c| ((row * 512 + c) as f64).sin()).collect();
        w.write_values(&values)?;
    }
    w.finish()?;

    for path in [&whole, &streamed] {
        let index = read_index(path)?;
        println!("{} ({} bytes, payload at {})", path.display(), index.file_len(), index.payload_start());
        for e in index.entries() {
            println!("  {:<12} {} [{}, {}] bytes {}..{}", e.name, e.dtype, e.rows, e.cols, e.begin, e.end);
        }
    }

    let back = load_checkpoint(&whole)?;
    assert_eq!(back.get("proj.weight").unwrap().get(2, 3), 2.75);
    println!("round trip ok: {} tensors", back.len());
    Ok(())
}
