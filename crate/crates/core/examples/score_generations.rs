//! Scores generated tails against reference tails with BLEU-1, METEOR-lite,
//! ROUGE-L and CIDEr, then summarizes several runs as mean and std.

use ckpt_drift::gen_eval::{
    bleu1, build_records, cider, evaluate_runs, meteor_lite, parse_generations, parse_references, rouge_l, score_corpus, Metric,
};

const REFERENCES: &str = "\
PersonX bakes a cake\txWant\tto eat it
PersonX bakes a cake\txWant\tto share it with friends
knife\tObjectUse\tcutting bread
knife\tObjectUse\tslicing vegetables
nail\tAtLocation\twall
nail\tAtLocation\ttoolbox
";

const RUNS: [&str; 3] = [
    "PersonX bakes a cake\txWant\tto eat the cake\nknife\tObjectUse\tcutting bread\nnail\tAtLocation\tthe wall\n",
    "PersonX bakes a cake\txWant\tto share it\nknife\tObjectUse\tcutting things\nnail\tAtLocation\thardware store\n",
    "PersonX bakes a cake\txWant\tto sleep\nknife\tObjectUse\tslicing vegetables\nnail\tAtLocation\twall\n",
];

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let refs = parse_references(REFERENCES)?;

    let records = build_records(&parse_generations(RUNS[0])?, &refs)?;
    let (cider_scores, _) = cider(&records)?;
    println!("{:<24} {:<10} {:>6} {:>6} {:>6} {:>6}", "head", "relation", "bleu1", "meteor", "rougeL", "cider");
    for (r, c) in records.iter().zip(&cider_scores) {
        println!(
            "{:<24} {:<10} {:>6.3} {:>6.3} {:>6.3} {:>6.3}",
            r.head,
            r.relation,
            bleu1(r),
            meteor_lite(r),
            rouge_l(r),
            c
        );
    }

    let metrics = [Metric::Bleu1, Metric::Meteor, Metric::RougeL, Metric::Cider];
    let mut runs = Vec::new();
    for text in RUNS {
        runs.push(score_corpus(&build_records(&parse_generations(text)?, &refs)?, &metrics)?);
    }
    print!("\n{}", evaluate_runs(&runs)?.to_json());
    Ok(())
}
