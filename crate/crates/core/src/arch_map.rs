//! Maps tensor names onto (component, layer, matrix kind) cells.
//!
//! Classification is driven by a [`RuleTable`]: an ordered list of anchored
//! regular expressions, each tagged with the component and kind it denotes.
//! The first matching rule wins. A shipped table covers the T5 naming scheme.

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use regex::Regex;
use serde::{Deserialize, Serialize};

use crate::tensor_io::Checkpoint;

const T5_RULES: &str = include_str!("../data/t5_rules.json");

#[derive(Debug, thiserror::Error)]
pub enum ArchMapError {
    #[error("rule table is empty")]
    EmptyRuleTable,
    #[error("rule {index} is invalid: {reason}")]
    InvalidRule { index: usize, reason: String },
    #[error("rules file is not valid JSON: {0}")]
    Json(#[from] serde_json::Error),
    #[error("cannot read rules file: {0}")]
    Io(#[from] std::io::Error),
    #[error("`{name}` matched a rule whose layer capture `{capture}` is not a layer index")]
    BadLayerCapture { name: String, capture: String },
    #[error("`{first}` and `{second}` both map to {locator}")]
    LocatorCollision {
        locator: ParamLocator,
        first: String,
        second: String,
    },
    #[error("invalid locator: {0}")]
    InvalidLocator(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Component {
    Encoder,
    Decoder,
}

impl Component {
    pub const ALL: [Component; 2] = [Component::Encoder, Component::Decoder];

    pub fn as_str(self) -> &'static str {
        match self {
            Component::Encoder => "encoder",
            Component::Decoder => "decoder",
        }
    }
}

impl fmt::Display for Component {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Component {
    type Err = ArchMapError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "encoder" => Ok(Component::Encoder),
            "decoder" => Ok(Component::Decoder),
            _ => Err(ArchMapError::InvalidLocator(format!("unknown component `{s}`"))),
        }
    }
}

/// Transformer parameter matrix kinds. Declaration order is the column order
/// used everywhere a fixed ordering is needed.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum MatrixKind {
    Q,
    K,
    V,
    O,
    Xq,
    Xk,
    Xv,
    Xo,
    Wi,
    Wo,
    /// Anything outside the ten named kinds, tagged with the raw tensor name.
    Other(String),
}

impl MatrixKind {
    /// The ten named kinds in column order.
    pub const NAMED: [MatrixKind; 10] = [
        MatrixKind::Q,
        MatrixKind::K,
        MatrixKind::V,
        MatrixKind::O,
        MatrixKind::Xq,
        MatrixKind::Xk,
        MatrixKind::Xv,
        MatrixKind::Xo,
        MatrixKind::Wi,
        MatrixKind::Wo,
    ];

    pub fn is_cross_attention(&self) -> bool {
        matches!(self, MatrixKind::Xq | MatrixKind::Xk | MatrixKind::Xv | MatrixKind::Xo)
    }

    pub fn is_other(&self) -> bool {
        matches!(self, MatrixKind::Other(_))
    }

    /// Kinds that can appear in `component`, in column order.
    pub fn columns_for(component: Component) -> Vec<MatrixKind> {
        Self::NAMED
            .iter()
            .filter(|k| component == Component::Decoder || !k.is_cross_attention())
            .cloned()
            .collect()
    }

    fn short_name(&self) -> &'static str {
        match self {
            MatrixKind::Q => "q",
            MatrixKind::K => "k",
            MatrixKind::V => "v",
            MatrixKind::O => "o",
            MatrixKind::Xq => "xq",
            MatrixKind::Xk => "xk",
            MatrixKind::Xv => "xv",
            MatrixKind::Xo => "xo",
            MatrixKind::Wi => "wi",
            MatrixKind::Wo => "wo",
            MatrixKind::Other(_) => "other",
        }
    }
}

impl fmt::Display for MatrixKind {
    /// `other` kinds render as `other:<raw name>`.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MatrixKind::Other(name) => write!(f, "other:{name}"),
            k => f.write_str(k.short_name()),
        }
    }
}

impl FromStr for MatrixKind {
    type Err = ArchMapError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if let Some(name) = s.strip_prefix("other:") {
            return Ok(MatrixKind::Other(name.to_owned()));
        }
        MatrixKind::NAMED
            .iter()
            .find(|k| k.short_name() == s)
            .cloned()
            .ok_or_else(|| ArchMapError::InvalidLocator(format!("unknown matrix kind `{s}`")))
    }
}

/// A cell of the (component, layer, kind) taxonomy.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ParamLocator {
    pub component: Component,
    pub layer: u32,
    pub kind: MatrixKind,
}

impl ParamLocator {
    pub fn new(component: Component, layer: u32, kind: MatrixKind) -> Result<Self, ArchMapError> {
        if kind.is_cross_attention() && component != Component::Decoder {
            return Err(ArchMapError::InvalidLocator(format!(
                "cross-attention kind {kind} only exists in the decoder"
            )));
        }
        Ok(Self { component, layer, kind })
    }
}

impl fmt::Display for ParamLocator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {}, {})", self.component, self.layer, self.kind)
    }
}

/// Rules-file entry as it appears on disk.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RuleSpec {
    pub pattern: String,
    pub component: String,
    pub kind: String,
}

#[derive(Debug, Clone)]
enum RuleKind {
    Named(MatrixKind),
    Other,
}

#[derive(Debug, Clone)]
struct Rule {
    regex: Regex,
    has_layer: bool,
    component: Component,
    kind: RuleKind,
}

/// Ordered classification rules; the first match wins.
#[derive(Debug, Clone)]
pub struct RuleTable {
    rules: Vec<Rule>,
    specs: Vec<RuleSpec>,
}

impl RuleTable {
    pub fn new(specs: Vec<RuleSpec>) -> Result<Self, ArchMapError> {
        if specs.is_empty() {
            return Err(ArchMapError::EmptyRuleTable);
        }
        let mut rules = Vec::with_capacity(specs.len());
        for (index, spec) in specs.iter().enumerate() {
            let invalid = |reason: String| ArchMapError::InvalidRule { index, reason };
            let regex = Regex::new(&format!("^(?:{})$", spec.pattern)).map_err(|e| invalid(e.to_string()))?;
            let has_layer = regex.capture_names().flatten().any(|n| n == "layer");
            let component: Component = spec.component.parse().map_err(|e: ArchMapError| invalid(e.to_string()))?;
            let kind = if spec.kind == "other" {
                RuleKind::Other
            } else {
                let k: MatrixKind = spec.kind.parse().map_err(|e: ArchMapError| invalid(e.to_string()))?;
                if k.is_other() {
                    return Err(invalid("write `other` without a name suffix".into()));
                }
                if k.is_cross_attention() && component != Component::Decoder {
                    return Err(invalid(format!("kind {k} requires component decoder")));
                }
                RuleKind::Named(k)
            };
            rules.push(Rule { regex, has_layer, component, kind });
        }
        Ok(Self { rules, specs })
    }

    pub fn from_json(text: &str) -> Result<Self, ArchMapError> {
        let specs: Vec<RuleSpec> = serde_json::from_str(text)?;
        Self::new(specs)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, ArchMapError> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    /// The shipped table for T5-style tensor names.
    pub fn t5_default() -> Self {
        Self::from_json(T5_RULES).expect("shipped T5 rule table is valid")
    }

    pub fn specs(&self) -> &[RuleSpec] {
        &self.specs
    }

    pub fn len(&self) -> usize {
        self.rules.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rules.is_empty()
    }
}

/// Classifies a tensor name. `Ok(None)` means no rule matched.
///
/// Rules without a `layer` group assign layer 0.
pub fn classify_param(name: &str, rules: &RuleTable) -> Result<Option<ParamLocator>, ArchMapError> {
    for rule in &rules.rules {
        let Some(caps) = rule.regex.captures(name) else {
            continue;
        };
        let layer = if rule.has_layer {
            match caps.name("layer") {
                Some(m) => m.as_str().parse::<u32>().map_err(|_| ArchMapError::BadLayerCapture {
                    name: name.to_owned(),
                    capture: m.as_str().to_owned(),
                })?,
                None => {
                    return Err(ArchMapError::BadLayerCapture {
                        name: name.to_owned(),
                        capture: String::new(),
                    })
                }
            }
        } else {
            0
        };
        let kind = match &rule.kind {
            RuleKind::Named(k) => k.clone(),
            RuleKind::Other => MatrixKind::Other(name.to_owned()),
        };
        return Ok(Some(ParamLocator { component: rule.component, layer, kind }));
    }
    Ok(None)
}

/// Classified tensors keyed by locator, plus the names no rule matched.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Grouping {
    pub located: BTreeMap<ParamLocator, String>,
    pub unclassified: Vec<String>,
}

/// Groups an arbitrary sequence of tensor names.
pub fn group_names<'a>(
    names: impl IntoIterator<Item = &'a str>,
    rules: &RuleTable,
) -> Result<Grouping, ArchMapError> {
    let mut grouping = Grouping::default();
    for name in names {
        match classify_param(name, rules)? {
            Some(locator) => {
                if let Some(first) = grouping.located.get(&locator) {
                    return Err(ArchMapError::LocatorCollision {
                        locator,
                        first: first.clone(),
                        second: name.to_owned(),
                    });
                }
                grouping.located.insert(locator, name.to_owned());
            }
            None => grouping.unclassified.push(name.to_owned()),
        }
    }
    Ok(grouping)
}

pub fn group_checkpoint(ckpt: &Checkpoint, rules: &RuleTable) -> Result<Grouping, ArchMapError> {
    group_names(ckpt.names(), rules)
}
