//! DiffReport JSON: sorted keys, reals at 17 significant digits.

use std::fmt::Write as _;
use std::path::Path;

use serde::Deserialize;

use super::{DiffCell, DiffReport, MetricsError};
use crate::arch_map::{Component, MatrixKind, ParamLocator};
use crate::numfmt::sig17;

fn quote(s: &str) -> String {
    serde_json::to_string(s).expect("strings always serialize")
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawCell {
    component: String,
    layer: u32,
    kind: String,
    rows: usize,
    cols: usize,
    d_l1: f64,
    d_ang: f64,
    auc: f64,
    zero_rows: usize,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawReport {
    before: String,
    after: String,
    quantum: f64,
    cells: Vec<RawCell>,
    unclassified: Vec<String>,
}

impl DiffCell {
    pub(crate) fn json_fields(&self) -> String {
        format!(
            "{{\"auc\": {}, \"cols\": {}, \"component\": {}, \"d_ang\": {}, \"d_l1\": {}, \"kind\": {}, \"layer\": {}, \"rows\": {}, \"zero_rows\": {}}}",
            sig17(self.auc),
            self.cols,
            quote(self.locator.component.as_str()),
            sig17(self.d_ang),
            sig17(self.d_l1),
            quote(&self.locator.kind.to_string()),
            self.locator.layer,
            self.rows,
            self.zero_rows
        )
    }
}

impl DiffReport {
    /// Serializes with lexicographically sorted keys and one cell per line.
    pub fn to_json(&self) -> String {
        let mut out = String::from("{\n");
        let _ = writeln!(out, "  \"after\": {},", quote(&self.after));
        let _ = writeln!(out, "  \"before\": {},", quote(&self.before));
        if self.cells.is_empty() {
            out.push_str("  \"cells\": [],\n");
        } else {
            out.push_str("  \"cells\": [\n");
            for (i, c) in self.cells.iter().enumerate() {
                let sep = if i + 1 == self.cells.len() { "" } else { "," };
                let _ = writeln!(out, "    {}{sep}", c.json_fields());
            }
            out.push_str("  ],\n");
        }
        let _ = writeln!(out, "  \"quantum\": {},", sig17(self.quantum));
        let names: Vec<String> = self.unclassified.iter().map(|n| quote(n)).collect();
        let _ = writeln!(out, "  \"unclassified\": [{}]", names.join(", "));
        out.push_str("}\n");
        out
    }

    pub fn from_json(text: &str) -> Result<Self, MetricsError> {
        let raw: RawReport = serde_json::from_str(text).map_err(|e| MetricsError::MalformedReport(e.to_string()))?;
        let bad = |e: crate::arch_map::ArchMapError| MetricsError::MalformedReport(e.to_string());
        let mut cells = Vec::with_capacity(raw.cells.len());
        for c in raw.cells {
            let component: Component = c.component.parse().map_err(bad)?;
            let kind: MatrixKind = c.kind.parse().map_err(bad)?;
            let locator = ParamLocator::new(component, c.layer, kind).map_err(bad)?;
            cells.push(DiffCell {
                locator,
                rows: c.rows,
                cols: c.cols,
                d_l1: c.d_l1,
                d_ang: c.d_ang,
                auc: c.auc,
                zero_rows: c.zero_rows,
            });
        }
        if cells.windows(2).any(|w| w[0].locator >= w[1].locator) {
            return Err(MetricsError::MalformedReport(
                "cells are not in strictly ascending locator order".into(),
            ));
        }
        Ok(DiffReport {
            before: raw.before,
            after: raw.after,
            quantum: raw.quantum,
            cells,
            unclassified: raw.unclassified,
        })
    }

    pub fn read_json(path: impl AsRef<Path>) -> Result<Self, MetricsError> {
        let text = std::fs::read_to_string(path).map_err(crate::tensor_io::TensorIoError::from)?;
        Self::from_json(&text)
    }
}
