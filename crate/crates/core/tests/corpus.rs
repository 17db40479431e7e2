mod common;

use std::collections::BTreeSet;

use ckpt_drift::corpus::{
    export_raw_split, export_split, format_tuple, load_kg, parse_pairs, sample_few_shot, FewShotSpec, FormatMode, Formatter,
    KnowledgeTuple, PromptInventory, TRAIN_FILE,
};
use common::fixture;

#[test]
fn fixture_has_23_relations() {
    let kg = load_kg(fixture("kg23.tsv")).unwrap();
    let relations: BTreeSet<&str> = kg.iter().map(|t| t.relation.as_str()).collect();
    let natural = PromptInventory::natural();
    let inventory: BTreeSet<&str> = natural.relations().collect();
    assert_eq!(relations, inventory);
}

#[test]
fn three_shot_split_is_69_pairs() {
    let kg = load_kg(fixture("kg23.tsv")).unwrap();
    let spec = FewShotSpec::new(3, 7).with_validation();
    let split = sample_few_shot(&kg, &spec).unwrap();
    assert_eq!(split.train.len(), 69);
    assert_eq!(split, sample_few_shot(&kg, &spec).unwrap());
    let lines: BTreeSet<usize> = split.train.iter().map(|t| t.line).collect();
    assert!(split.validation.iter().all(|t| !lines.contains(&t.line)));
    let other = sample_few_shot(&kg, &FewShotSpec::new(3, 8).with_validation()).unwrap();
    assert_ne!(split.train, other.train);
}

#[test]
fn prompts_read_as_sentences() {
    let inv = PromptInventory::natural();
    let cases = [
        (("nail", "AtLocation", "wall"), "You are likely to find nail in"),
        (("video camera", "ObjectUse", "video recording"), "video camera is used for"),
        (("PersonX bakes a cake", "xWant", "to share"), "After PersonX bakes a cake, PersonX would want"),
    ];
    for ((h, r, t), want) in cases {
        let (input, target) = format_tuple(&KnowledgeTuple::new(h, r, t), &inv, FormatMode::Natural).unwrap();
        assert_eq!((input.as_str(), target.as_str()), (want, t));
    }
    let (p, _) = format_tuple(&KnowledgeTuple::new("knife", "ObjectUse", "cutting"), &PromptInventory::paraphrase(), FormatMode::Paraphrase).unwrap();
    assert_eq!(p, "a knife can be used for");
}

#[test]
fn shuffled_mode_is_a_derangement_for_many_seeds() {
    let inv = PromptInventory::natural();
    for seed in 0..100 {
        let f = Formatter::new(&inv, FormatMode::Shuffled { seed }).unwrap();
        for (rel, template) in f.inventory().iter() {
            assert_ne!(Some(template), inv.template(rel), "seed {seed} kept {rel}");
        }
    }
}

#[test]
fn exports_are_reproducible_and_reparse() {
    let kg = load_kg(fixture("kg23.tsv")).unwrap();
    let split = sample_few_shot(&kg, &FewShotSpec::new(2, 3).with_holdout(["xNeed", "Desires"])).unwrap();
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let f = Formatter::new(&PromptInventory::natural(), FormatMode::Natural).unwrap();
    let written = export_split(&split, &f, a.path()).unwrap();
    export_split(&split, &f, b.path()).unwrap();
    assert_eq!(written.len(), 4);
    for p in &written {
        let name = p.file_name().unwrap();
        assert_eq!(std::fs::read(p).unwrap(), std::fs::read(b.path().join(name)).unwrap());
    }
    let pairs = parse_pairs(&std::fs::read_to_string(a.path().join(TRAIN_FILE)).unwrap()).unwrap();
    let expected: Vec<(String, String)> = split.train.iter().map(|t| f.format(t).unwrap()).collect();
    assert_eq!(pairs, expected);

    let raw = tempfile::tempdir().unwrap();
    export_raw_split(&split, raw.path()).unwrap();
    let back = load_kg(raw.path().join(TRAIN_FILE)).unwrap();
    assert!(back.iter().zip(&split.train).all(|(x, y)| x.same_fact(y)));
}
