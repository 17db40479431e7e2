//! Builds a few-shot training set from a knowledge graph: n examples per
//! relation, a disjoint validation draw, and the same tuples rendered under
//! each prompt style.
//!
//! Usage: cargo run --example few_shot_corpus [KG.tsv] [OUT_DIR]

use std::path::PathBuf;

use ckpt_drift::corpus::{
    export_split, load_kg, parse_kg, sample_few_shot, FewShotSpec, FormatMode, Formatter, PromptInventory,
};

const TINY_KG: &str = "\
nail\tAtLocation\twall
fork\tAtLocation\tkitchen drawer
pillow\tAtLocation\tbed
book\tAtLocation\tshelf
knife\tObjectUse\tcutting
video camera\tObjectUse\tvideo recording
umbrella\tObjectUse\tstaying dry
ladder\tObjectUse\treaching high places
PersonX bakes a cake\txWant\tto share it
PersonX goes running\txWant\tto drink water
PersonX loses a key\txWant\tto find it
PersonX gets a gift\txWant\tto say thanks
";

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut args = std::env::args().skip(1);
    let kg = match args.next() {
        Some(p) => load_kg(p)?,
        None => parse_kg(TINY_KG)?,
    };
    let out = args.next().map(PathBuf::from).unwrap_or_else(|| std::env::temp_dir().join("ckpt-drift-corpus"));

    let split = sample_few_shot(&kg, &FewShotSpec::new(2, 17).with_validation())?;
    println!("train per relation: {:?}", split.train_counts());
    println!("validation: {} tuples", split.validation.len());

    let natural = PromptInventory::natural();
    let paraphrase = PromptInventory::paraphrase();
    for mode in [FormatMode::Natural, FormatMode::Paraphrase, FormatMode::Shuffled { seed: 3 }, FormatMode::Embedding] {
        let inv = if mode == FormatMode::Paraphrase { &paraphrase } else { &natural };
        let f = Formatter::new(inv, mode)?;
        println!("\n[{mode}]");
        for t in split.train.iter().take(4) {
            let (input, target) = f.format(t)?;
            println!("  {input:<48} => {target}");
        }
    }

    let f = Formatter::new(&natural, FormatMode::Natural)?;
    for p in export_split(&split, &f, &out)? {
        println!("wrote {}", p.display());
    }
    Ok(())
}
