use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::de::{Deserializer, MapAccess, Visitor};
use serde::Deserialize;

use super::rng::SplitMix64;
use super::{CorpusError, KnowledgeTuple};

pub const PLACEHOLDER: &str = "{}";

/// Give up on finding a fixed-point-free shuffle after this many tries.
const MAX_DERANGEMENT_TRIES: usize = 10_000;

/// Relation → template, each template holding exactly one `{}` for the head.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PromptInventory {
    templates: BTreeMap<String, String>,
}

impl PromptInventory {
    pub fn new<I, K, V>(entries: I) -> Result<Self, CorpusError>
    where
        I: IntoIterator<Item = (K, V)>,
        K: Into<String>,
        V: Into<String>,
    {
        let mut templates = BTreeMap::new();
        for (k, v) in entries {
            let (relation, template) = (k.into(), v.into());
            check_template(&relation, &template)?;
            if templates.insert(relation.clone(), template).is_some() {
                return Err(CorpusError::DuplicateRelation(relation));
            }
        }
        Ok(Self { templates })
    }

    pub fn from_json(text: &str) -> Result<Self, CorpusError> {
        let raw: OrderedPairs = serde_json::from_str(text)?;
        Self::new(raw.0)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, CorpusError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| CorpusError::io(path, e))?;
        Self::from_json(&text)
    }

    /// The 23 ATOMIC-2020 relation prompts.
    pub fn natural() -> Self {
        Self::from_json(include_str!("../../data/prompts_natural.json")).expect("shipped inventory is valid")
    }

    /// Reworded variants of [`PromptInventory::natural`].
    pub fn paraphrase() -> Self {
        Self::from_json(include_str!("../../data/prompts_paraphrase.json")).expect("shipped inventory is valid")
    }

    pub fn template(&self, relation: &str) -> Option<&str> {
        self.templates.get(relation).map(String::as_str)
    }

    pub fn relations(&self) -> impl Iterator<Item = &str> {
        self.templates.keys().map(String::as_str)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &str)> {
        self.templates.iter().map(|(k, v)| (k.as_str(), v.as_str()))
    }

    pub fn len(&self) -> usize {
        self.templates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.templates.is_empty()
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(&self.templates).expect("string map serializes");
        s.push('\n');
        s
    }

    /// Reassigns templates so that no relation keeps a template equal to its
    /// own. Shuffles with a generator seeded by `seed` until that holds.
    pub fn deranged(&self, seed: u64) -> Result<Self, CorpusError> {
        if self.templates.len() < 2 {
            return Err(CorpusError::NoDerangement(format!(
                "an inventory of {} relation(s) cannot be deranged",
                self.templates.len()
            )));
        }
        let original: Vec<&String> = self.templates.values().collect();
        let mut rng = SplitMix64::new(seed);
        for _ in 0..MAX_DERANGEMENT_TRIES {
            let mut perm = original.clone();
            rng.shuffle(&mut perm);
            if perm.iter().zip(&original).all(|(a, b)| a != b) {
                let templates = self.templates.keys().cloned().zip(perm.into_iter().cloned()).collect();
                return Ok(Self { templates });
            }
        }
        Err(CorpusError::NoDerangement(format!(
            "no fixed-point-free assignment found in {MAX_DERANGEMENT_TRIES} shuffles (too many identical templates?)"
        )))
    }
}

fn check_template(relation: &str, template: &str) -> Result<(), CorpusError> {
    let bad = |reason: &str| CorpusError::InvalidTemplate { relation: relation.to_owned(), reason: reason.to_owned() };
    if relation.is_empty() || relation.contains(['\t', '\n', '\r']) {
        return Err(bad("relation name is empty or contains a tab or line break"));
    }
    match template.matches(PLACEHOLDER).count() {
        1 => {}
        0 => return Err(bad("template has no `{}` placeholder")),
        _ => return Err(bad("template has more than one `{}` placeholder")),
    }
    if template.contains(['\t', '\n', '\r']) {
        return Err(bad("template contains a tab or line break"));
    }
    Ok(())
}

/// JSON object read as an ordered list of pairs so duplicate keys surface.
struct OrderedPairs(Vec<(String, String)>);

impl<'de> Deserialize<'de> for OrderedPairs {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        struct PairsVisitor;
        impl<'de> Visitor<'de> for PairsVisitor {
            type Value = OrderedPairs;
            fn expecting(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str("a JSON object mapping relations to templates")
            }
            fn visit_map<A: MapAccess<'de>>(self, mut map: A) -> Result<OrderedPairs, A::Error> {
                let mut pairs = Vec::new();
                while let Some(pair) = map.next_entry::<String, String>()? {
                    pairs.push(pair);
                }
                Ok(OrderedPairs(pairs))
            }
        }
        deserializer.deserialize_map(PairsVisitor)
    }
}

/// How the relation of a tuple is shown to the model.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FormatMode {
    /// Fill the relation's template.
    Natural,
    /// Same as natural; the caller supplies a paraphrased inventory.
    Paraphrase,
    /// Fill another relation's template (seeded derangement).
    Shuffled { seed: u64 },
    /// `head <Relation>`, leaving the relation to a fresh token embedding.
    Embedding,
}

impl fmt::Display for FormatMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FormatMode::Natural => f.write_str("natural"),
            FormatMode::Paraphrase => f.write_str("paraphrase"),
            FormatMode::Shuffled { seed } => write!(f, "shuffled:{seed}"),
            FormatMode::Embedding => f.write_str("embedding"),
        }
    }
}

impl FromStr for FormatMode {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "natural" => Ok(FormatMode::Natural),
            "paraphrase" => Ok(FormatMode::Paraphrase),
            "embedding" => Ok(FormatMode::Embedding),
            "shuffled" => Ok(FormatMode::Shuffled { seed: 0 }),
            _ => match s.strip_prefix("shuffled:") {
                Some(seed) => seed
                    .parse()
                    .map(|seed| FormatMode::Shuffled { seed })
                    .map_err(|_| format!("bad shuffle seed in `{s}`")),
                None => Err(format!("unknown mode `{s}` (expected natural, paraphrase, shuffled[:SEED] or embedding)")),
            },
        }
    }
}

/// An inventory prepared for one mode; build once, format many tuples.
#[derive(Debug, Clone)]
pub struct Formatter {
    mode: FormatMode,
    inventory: PromptInventory,
}

impl Formatter {
    pub fn new(inventory: &PromptInventory, mode: FormatMode) -> Result<Self, CorpusError> {
        let inventory = match mode {
            FormatMode::Shuffled { seed } => inventory.deranged(seed)?,
            _ => inventory.clone(),
        };
        Ok(Self { mode, inventory })
    }

    pub fn mode(&self) -> FormatMode {
        self.mode
    }

    /// The relation → template map actually applied.
    pub fn inventory(&self) -> &PromptInventory {
        &self.inventory
    }

    /// Returns `(input_text, target_text)`.
    pub fn format(&self, t: &KnowledgeTuple) -> Result<(String, String), CorpusError> {
        let input = match self.mode {
            FormatMode::Embedding => format!("{} <{}>", t.head, t.relation),
            _ => {
                let template = self
                    .inventory
                    .template(&t.relation)
                    .ok_or_else(|| CorpusError::UnknownRelation(t.relation.clone()))?;
                template.replacen(PLACEHOLDER, &t.head, 1)
            }
        };
        Ok((input, t.tail.clone()))
    }
}

pub fn format_tuple(t: &KnowledgeTuple, inv: &PromptInventory, mode: FormatMode) -> Result<(String, String), CorpusError> {
    Formatter::new(inv, mode)?.format(t)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn shipped_inventories() {
        let nat = PromptInventory::natural();
        let par = PromptInventory::paraphrase();
        assert_eq!(nat.len(), 23);
        assert_eq!(par.len(), 23);
        assert!(nat.relations().eq(par.relations()));
        assert_eq!(nat.template("AtLocation"), Some("You are likely to find {} in"));
        assert_eq!(nat.template("xReason"), Some("{}. The reason for PersonX doing this is"));
        assert_eq!(nat.template("oWant"), Some("as a result of {}, others would want"));
        assert_eq!(par.template("ObjectUse"), Some("a {} can be used for"));
        assert_eq!(par.template("oReact"), Some("As a result of {}, other feel"));
        for (_, t) in nat.iter().chain(par.iter()) {
            assert_eq!(t, t.trim());
        }
    }

    #[test]
    fn natural_examples() {
        let nat = PromptInventory::natural();
        let t = KnowledgeTuple::new("nail", "AtLocation", "wall");
        assert_eq!(format_tuple(&t, &nat, FormatMode::Natural).unwrap(), ("You are likely to find nail in".into(), "wall".into()));
        let t = KnowledgeTuple::new("video camera", "ObjectUse", "video recording");
        assert_eq!(
            format_tuple(&t, &nat, FormatMode::Natural).unwrap(),
            ("video camera is used for".into(), "video recording".into())
        );
    }

    #[test]
    fn embedding_mode() {
        let t = KnowledgeTuple::new("nail", "AtLocation", "wall");
        let empty = PromptInventory::new(Vec::<(String, String)>::new()).unwrap();
        assert_eq!(format_tuple(&t, &empty, FormatMode::Embedding).unwrap(), ("nail <AtLocation>".into(), "wall".into()));
    }

    #[test]
    fn unknown_relation() {
        let t = KnowledgeTuple::new("x", "Nope", "y");
        assert!(matches!(
            format_tuple(&t, &PromptInventory::natural(), FormatMode::Natural),
            Err(CorpusError::UnknownRelation(r)) if r == "Nope"
        ));
    }

    #[test]
    fn template_validation() {
        assert!(matches!(PromptInventory::new([("r", "no slot")]), Err(CorpusError::InvalidTemplate { .. })));
        assert!(matches!(PromptInventory::new([("r", "{} and {}")]), Err(CorpusError::InvalidTemplate { .. })));
        assert!(matches!(PromptInventory::from_json(r#"{"r":"{} a","r":"{} b"}"#), Err(CorpusError::DuplicateRelation(_))));
        assert!(PromptInventory::from_json("[1]").is_err());
    }

    #[test]
    fn derangement_needs_two_relations() {
        let one = PromptInventory::new([("r", "{} x")]).unwrap();
        assert!(matches!(one.deranged(1), Err(CorpusError::NoDerangement(_))));
        let same = PromptInventory::new([("a", "{} x"), ("b", "{} x")]).unwrap();
        assert!(matches!(same.deranged(1), Err(CorpusError::NoDerangement(_))));
        let two = PromptInventory::new([("a", "{} x"), ("b", "{} y")]).unwrap();
        let d = two.deranged(5).unwrap();
        assert_eq!(d.template("a"), Some("{} y"));
    }

    #[test]
    fn json_round_trip() {
        let nat = PromptInventory::natural();
        assert_eq!(PromptInventory::from_json(&nat.to_json()).unwrap(), nat);
    }

    #[test]
    fn mode_strings() {
        for m in [FormatMode::Natural, FormatMode::Paraphrase, FormatMode::Shuffled { seed: 42 }, FormatMode::Embedding] {
            assert_eq!(m.to_string().parse::<FormatMode>().unwrap(), m);
        }
        assert!("shuffled:x".parse::<FormatMode>().is_err());
    }

    proptest! {
        #[test]
        fn shuffled_is_a_derangement_and_a_bijection(seed in any::<u64>()) {
            let nat = PromptInventory::natural();
            let d = nat.deranged(seed).unwrap();
            let mut a: Vec<&str> = nat.iter().map(|(_, t)| t).collect();
            let mut b: Vec<&str> = d.iter().map(|(_, t)| t).collect();
            for (rel, t) in d.iter() {
                prop_assert_ne!(Some(t), nat.template(rel));
            }
            a.sort();
            b.sort();
            prop_assert_eq!(a, b);
        }

        #[test]
        fn output_has_no_placeholder(head in "[a-zA-Z ]{1,20}", idx in 0usize..23, mode in 0u8..4) {
            let nat = PromptInventory::natural();
            let rel = nat.relations().nth(idx).unwrap().to_owned();
            let mode = match mode {
                0 => FormatMode::Natural,
                1 => FormatMode::Paraphrase,
                2 => FormatMode::Shuffled { seed: idx as u64 },
                _ => FormatMode::Embedding,
            };
            let inv = if mode == FormatMode::Paraphrase { PromptInventory::paraphrase() } else { nat };
            let (input, target) = format_tuple(&KnowledgeTuple::new(head.clone(), rel, "t"), &inv, mode).unwrap();
            prop_assert!(!input.contains(PLACEHOLDER));
            prop_assert!(input.contains(&head));
            prop_assert_eq!(target, "t");
        }
    }
}
