use std::collections::BTreeSet;
use std::fmt::{self, Write as _};
use std::str::FromStr;

use super::ReportError;
use crate::arch_map::{Component, MatrixKind, ParamLocator};
use crate::drift::{DiffCell, DiffReport};

const CELL_W: u32 = 44;
const CELL_H: u32 = 20;
const LABEL_W: u32 = 28;
const HEADER_H: u32 = 18;
const TITLE_H: u32 = 24;
const CAPTION_H: u32 = 20;
const GRID_GAP: u32 = 24;
const MARGIN: u32 = 12;

/// Lightest end of the ramp (lowest value).
const RAMP_LOW: [f64; 3] = [247.0, 251.0, 255.0];
/// Darkest end of the ramp (highest value).
const RAMP_HIGH: [f64; 3] = [8.0, 48.0, 107.0];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Measure {
    L1,
    Angular,
    Auc,
}

impl Measure {
    pub fn value(self, cell: &DiffCell) -> f64 {
        match self {
            Measure::L1 => cell.d_l1,
            Measure::Angular => cell.d_ang,
            Measure::Auc => cell.auc,
        }
    }

    fn title(self) -> &'static str {
        match self {
            Measure::L1 => "normalized L1 change",
            Measure::Angular => "angular change",
            Measure::Auc => "change-distribution AUC",
        }
    }
}

impl FromStr for Measure {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "l1" => Ok(Measure::L1),
            "angular" | "ang" => Ok(Measure::Angular),
            "auc" => Ok(Measure::Auc),
            _ => Err(format!("unknown measure `{s}` (expected l1, angular or auc)")),
        }
    }
}

impl fmt::Display for Measure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Measure::L1 => "l1",
            Measure::Angular => "angular",
            Measure::Auc => "auc",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ColorScale {
    /// Each component grid of each report spans its own min..max.
    PerPanel,
    /// One min..max across every grid, for cross-report comparison.
    Shared,
}

impl FromStr for ColorScale {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "per_panel" | "per-panel" => Ok(ColorScale::PerPanel),
            "shared" => Ok(ColorScale::Shared),
            _ => Err(format!("unknown color scale `{s}` (expected per_panel or shared)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct HeatmapSpec {
    pub measure: Measure,
    pub color_scale: ColorScale,
    /// One label per report; empty means "report 1", "report 2", ...
    pub panel_labels: Vec<String>,
    /// Digits after the decimal point in cell annotations; `None` omits them.
    pub precision: Option<usize>,
}

impl HeatmapSpec {
    pub fn new(measure: Measure) -> Self {
        Self {
            measure,
            color_scale: ColorScale::PerPanel,
            panel_labels: Vec::new(),
            precision: Some(3),
        }
    }
}

/// Maps `value` onto the single-hue ramp, linear between `min` and `max`.
pub fn color_for(value: f64, min: f64, max: f64) -> [u8; 3] {
    let t = if max > min { ((value - min) / (max - min)).clamp(0.0, 1.0) } else { 0.0 };
    let mut rgb = [0u8; 3];
    for (i, c) in rgb.iter_mut().enumerate() {
        *c = (RAMP_LOW[i] + (RAMP_HIGH[i] - RAMP_LOW[i]) * t).round() as u8;
    }
    rgb
}

fn xml_escape(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for ch in s.chars() {
        match ch {
            '&' => out.push_str("&amp;"),
            '<' => out.push_str("&lt;"),
            '>' => out.push_str("&gt;"),
            '"' => out.push_str("&quot;"),
            '\'' => out.push_str("&apos;"),
            c => out.push(c),
        }
    }
    out
}

struct Grid<'a> {
    component: Component,
    columns: Vec<MatrixKind>,
    layers: u32,
    cells: Vec<&'a DiffCell>,
}

impl<'a> Grid<'a> {
    fn lookup(&self, layer: u32, kind: &MatrixKind) -> Option<&'a DiffCell> {
        self.cells
            .iter()
            .find(|c| c.locator.layer == layer && &c.locator.kind == kind)
            .copied()
    }

    fn range(&self, measure: Measure) -> (f64, f64) {
        self.cells.iter().map(|c| measure.value(c)).fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| {
            (lo.min(v), hi.max(v))
        })
    }

    fn width(&self) -> u32 {
        LABEL_W + CELL_W * self.columns.len() as u32
    }

    fn height(&self) -> u32 {
        HEADER_H + CELL_H * self.layers + CAPTION_H
    }
}

fn grids_for(report: &DiffReport) -> Vec<Grid<'_>> {
    Component::ALL
        .iter()
        .filter_map(|&component| {
            let cells: Vec<&DiffCell> = report
                .cells
                .iter()
                .filter(|c| c.locator.component == component && !c.locator.kind.is_other())
                .collect();
            let max_layer = cells.iter().map(|c| c.locator.layer).max()?;
            Some(Grid {
                component,
                columns: MatrixKind::columns_for(component),
                layers: max_layer + 1,
                cells,
            })
        })
        .collect()
}

fn heatmap_locators(report: &DiffReport) -> BTreeSet<&ParamLocator> {
    report.locators().filter(|l| !l.kind.is_other()).collect()
}

/// Renders one band per report, each with an encoder and a decoder grid.
///
/// Rows are layers with layer 0 at the top; columns follow the fixed kind
/// order with cross-attention columns only in decoder grids. Cells absent
/// from a report are hatched. Output depends only on the inputs.
pub fn render_heatmap(reports: &[DiffReport], spec: &HeatmapSpec) -> Result<String, ReportError> {
    if reports.is_empty() {
        return Err(ReportError::EmptyReport("no reports given".into()));
    }
    if !spec.panel_labels.is_empty() && spec.panel_labels.len() != reports.len() {
        return Err(ReportError::LabelCount {
            labels: spec.panel_labels.len(),
            reports: reports.len(),
        });
    }
    let bands: Vec<Vec<Grid<'_>>> = reports.iter().map(grids_for).collect();
    if let Some(i) = bands.iter().position(Vec::is_empty) {
        return Err(ReportError::EmptyReport(format!(
            "report {} has no attention or feed-forward cells",
            i + 1
        )));
    }

    let shared_range = match spec.color_scale {
        ColorScale::PerPanel => None,
        ColorScale::Shared => {
            let first = heatmap_locators(&reports[0]);
            for (i, r) in reports.iter().enumerate().skip(1) {
                if heatmap_locators(r) != first {
                    return Err(ReportError::TaxonomyMismatch(format!(
                        "report {} covers different matrices than report 1",
                        i + 1
                    )));
                }
            }
            let range = bands.iter().flatten().map(|g| g.range(spec.measure)).fold(
                (f64::INFINITY, f64::NEG_INFINITY),
                |(lo, hi), (a, b)| (lo.min(a), hi.max(b)),
            );
            Some(range)
        }
    };

    let band_width = |grids: &[Grid<'_>]| {
        grids.iter().map(Grid::width).sum::<u32>() + GRID_GAP * (grids.len() as u32 - 1)
    };
    let band_height = |grids: &[Grid<'_>]| TITLE_H + grids.iter().map(Grid::height).max().unwrap_or(0);
    let width = 2 * MARGIN + bands.iter().map(|b| band_width(b)).max().unwrap_or(0);
    let height = 2 * MARGIN + TITLE_H + bands.iter().map(|b| band_height(b)).sum::<u32>();

    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{width}" height="{height}" viewBox="0 0 {width} {height}" font-family="sans-serif">"#
    );
    svg.push_str(concat!(
        "<defs>\n",
        r##"<pattern id="hatch" patternUnits="userSpaceOnUse" width="6" height="6"><rect width="6" height="6" fill="#ffffff"/><path d="M0,6 L6,0" stroke="#9e9e9e" stroke-width="1"/></pattern>"##,
        "\n</defs>\n"
    ));
    let _ = writeln!(
        svg,
        r#"<text class="title" x="{MARGIN}" y="{}" font-size="14">{}</text>"#,
        MARGIN + 14,
        xml_escape(spec.measure.title())
    );

    let mut y = MARGIN + TITLE_H;
    for (i, grids) in bands.iter().enumerate() {
        let label = spec
            .panel_labels
            .get(i)
            .cloned()
            .unwrap_or_else(|| format!("report {}", i + 1));
        let _ = writeln!(svg, r#"<g class="band" id="band-{i}">"#);
        let _ = writeln!(
            svg,
            r#"<text class="band-label" x="{MARGIN}" y="{}" font-size="12" font-weight="bold">{}</text>"#,
            y + 14,
            xml_escape(&label)
        );
        let mut x = MARGIN;
        for grid in grids {
            let range = shared_range.unwrap_or_else(|| grid.range(spec.measure));
            render_grid(&mut svg, grid, x, y + TITLE_H, range, spec);
            x += grid.width() + GRID_GAP;
        }
        svg.push_str("</g>\n");
        y += band_height(grids);
    }
    svg.push_str("</svg>\n");
    Ok(svg)
}

fn render_grid(svg: &mut String, grid: &Grid<'_>, x0: u32, y0: u32, (min, max): (f64, f64), spec: &HeatmapSpec) {
    let _ = writeln!(svg, r#"<g class="panel" data-component="{}">"#, grid.component);
    let _ = writeln!(
        svg,
        r#"<text class="panel-label" x="{x0}" y="{}" font-size="10">{}</text>"#,
        y0 + 12,
        grid.component
    );
    for (ci, kind) in grid.columns.iter().enumerate() {
        let cx = x0 + LABEL_W + CELL_W * ci as u32 + CELL_W / 2;
        let _ = writeln!(
            svg,
            r#"<text class="col-label" x="{cx}" y="{}" font-size="10" text-anchor="middle">{kind}</text>"#,
            y0 + 12
        );
    }
    for layer in 0..grid.layers {
        let cy = y0 + HEADER_H + CELL_H * layer;
        let _ = writeln!(
            svg,
            r#"<text class="row-label" x="{}" y="{}" font-size="10" text-anchor="end">{layer}</text>"#,
            x0 + LABEL_W - 4,
            cy + CELL_H / 2 + 4
        );
        for (ci, kind) in grid.columns.iter().enumerate() {
            let cx = x0 + LABEL_W + CELL_W * ci as u32;
            match grid.lookup(layer, kind) {
                Some(cell) => {
                    let v = spec.measure.value(cell);
                    let [r, g, b] = color_for(v, min, max);
                    let _ = writeln!(
                        svg,
                        r##"<rect class="cell" x="{cx}" y="{cy}" width="{CELL_W}" height="{CELL_H}" fill="#{r:02x}{g:02x}{b:02x}" stroke="#ffffff" stroke-width="1"/>"##
                    );
                    if let Some(p) = spec.precision {
                        // dark cells get light text
                        let ink = if (r as u32 + g as u32 + b as u32) < 384 { "#ffffff" } else { "#000000" };
                        let _ = writeln!(
                            svg,
                            r#"<text class="value" x="{}" y="{}" font-size="8" text-anchor="middle" fill="{ink}">{v:.p$}</text>"#,
                            cx + CELL_W / 2,
                            cy + CELL_H / 2 + 3
                        );
                    }
                }
                None => {
                    let _ = writeln!(
                        svg,
                        r##"<rect class="cell-missing" x="{cx}" y="{cy}" width="{CELL_W}" height="{CELL_H}" fill="url(#hatch)" stroke="#ffffff" stroke-width="1"/>"##
                    );
                }
            }
        }
    }
    let p = spec.precision.unwrap_or(3);
    let _ = writeln!(
        svg,
        r#"<text class="scale" x="{x0}" y="{}" font-size="9">min {min:.p$}  max {max:.p$}</text>"#,
        y0 + HEADER_H + CELL_H * grid.layers + 14
    );
    svg.push_str("</g>\n");
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn cell(component: Component, layer: u32, kind: MatrixKind, v: f64) -> DiffCell {
        DiffCell {
            locator: ParamLocator::new(component, layer, kind).unwrap(),
            rows: 2,
            cols: 2,
            d_l1: v,
            d_ang: v / 2.0,
            auc: 0.5 - v / 10.0,
            zero_rows: 0,
        }
    }

    fn report(cells: Vec<DiffCell>) -> DiffReport {
        let mut cells = cells;
        cells.sort_by(|a, b| a.locator.cmp(&b.locator));
        DiffReport {
            before: "pt".into(),
            after: "ft".into(),
            quantum: 1e-5,
            cells,
            unclassified: vec![],
        }
    }

    fn two_by_two(component: Component, base: f64) -> Vec<DiffCell> {
        vec![
            cell(component, 0, MatrixKind::Q, base),
            cell(component, 0, MatrixKind::K, base + 0.1),
            cell(component, 1, MatrixKind::Q, base + 0.2),
            cell(component, 1, MatrixKind::K, base + 0.3),
        ]
    }

    #[test]
    fn counts_colored_cells_per_panel() {
        let mut cells = two_by_two(Component::Encoder, 0.0);
        cells.extend(two_by_two(Component::Decoder, 1.0));
        let svg = render_heatmap(&[report(cells)], &HeatmapSpec::new(Measure::L1)).unwrap();
        assert_eq!(svg.matches(r#"<rect class="cell" "#).count(), 8);
        assert_eq!(svg.matches(r#"class="panel""#).count(), 2);
        // encoder 6 columns x 2 layers, decoder 10 x 2
        assert_eq!(svg.matches(r#"class="cell-missing""#).count(), (12 - 4) + (20 - 4));
    }

    #[test]
    fn single_component_single_panel() {
        let svg = render_heatmap(&[report(two_by_two(Component::Encoder, 0.0))], &HeatmapSpec::new(Measure::L1))
            .unwrap();
        assert_eq!(svg.matches(r#"<rect class="cell" "#).count(), 4);
        assert_eq!(svg.matches(r#"class="panel""#).count(), 1);
        assert!(!svg.contains(">xq<"));
    }

    #[test]
    fn all_zero_maps_to_minimum_color() {
        let cells: Vec<DiffCell> = two_by_two(Component::Decoder, 0.0)
            .into_iter()
            .map(|mut c| {
                c.d_l1 = 0.0;
                c
            })
            .collect();
        let svg = render_heatmap(&[report(cells)], &HeatmapSpec::new(Measure::L1)).unwrap();
        assert_eq!(svg.matches(r##"fill="#f7fbff""##).count(), 4);
    }

    #[test]
    fn rendering_is_deterministic() {
        let r = report(two_by_two(Component::Decoder, 0.2));
        let spec = HeatmapSpec::new(Measure::Angular);
        assert_eq!(render_heatmap(&[r.clone()], &spec).unwrap(), render_heatmap(&[r], &spec).unwrap());
    }

    #[test]
    fn other_kinds_are_left_out() {
        let mut cells = two_by_two(Component::Encoder, 0.0);
        cells.push(cell(Component::Encoder, 0, MatrixKind::Other("ln".into()), 9.0));
        let svg = render_heatmap(&[report(cells)], &HeatmapSpec::new(Measure::L1)).unwrap();
        assert_eq!(svg.matches(r#"<rect class="cell" "#).count(), 4);
        assert!(!svg.contains("9.000"));
    }

    #[test]
    fn errors() {
        let spec = HeatmapSpec::new(Measure::L1);
        assert!(matches!(render_heatmap(&[], &spec), Err(ReportError::EmptyReport(_))));
        let only_other = report(vec![cell(Component::Encoder, 0, MatrixKind::Other("x".into()), 1.0)]);
        assert!(matches!(render_heatmap(&[only_other], &spec), Err(ReportError::EmptyReport(_))));

        let a = report(two_by_two(Component::Encoder, 0.0));
        let b = report(two_by_two(Component::Decoder, 0.0));
        let shared = HeatmapSpec { color_scale: ColorScale::Shared, ..spec.clone() };
        assert!(matches!(render_heatmap(&[a.clone(), b.clone()], &shared), Err(ReportError::TaxonomyMismatch(_))));
        assert!(render_heatmap(&[a.clone(), b], &spec).is_ok());

        let labelled = HeatmapSpec { panel_labels: vec!["n=3".into()], ..spec };
        assert!(matches!(render_heatmap(&[a.clone(), a], &labelled), Err(ReportError::LabelCount { .. })));
    }

    #[test]
    fn shared_scale_spans_all_reports() {
        let low = report(two_by_two(Component::Encoder, 0.0));
        let high = report(two_by_two(Component::Encoder, 1.0));
        let spec = HeatmapSpec {
            color_scale: ColorScale::Shared,
            panel_labels: vec!["n=3".into(), "n=300".into()],
            ..HeatmapSpec::new(Measure::L1)
        };
        let svg = render_heatmap(&[low, high], &spec).unwrap();
        // global min only in the first band, global max only in the second
        assert_eq!(svg.matches(r##"fill="#f7fbff""##).count(), 1);
        assert_eq!(svg.matches(r##"fill="#08306b""##).count(), 1);
        assert!(svg.contains("n=300"));
    }

    #[test]
    fn labels_are_escaped() {
        let spec = HeatmapSpec { panel_labels: vec!["a<b & c".into()], ..HeatmapSpec::new(Measure::Auc) };
        let svg = render_heatmap(&[report(two_by_two(Component::Encoder, 0.0))], &spec).unwrap();
        assert!(svg.contains("a&lt;b &amp; c"));
    }

    #[test]
    fn layer_zero_is_on_top() {
        let svg = render_heatmap(&[report(two_by_two(Component::Encoder, 0.0))], &HeatmapSpec::new(Measure::L1))
            .unwrap();
        let row0 = svg.find(r#"class="row-label""#).unwrap();
        assert!(svg[row0..].contains(">0</text>"));
        let first_label_end = svg[row0..].find("</text>").unwrap();
        assert!(svg[row0..row0 + first_label_end].ends_with(">0"));
    }

    fn luminance([r, g, b]: [u8; 3]) -> f64 {
        0.2126 * r as f64 + 0.7152 * g as f64 + 0.0722 * b as f64
    }

    proptest! {
        #[test]
        fn color_ramp_is_monotone(a in -5.0f64..5.0, b in -5.0f64..5.0, lo in -5.0f64..0.0, span in 0.0f64..10.0) {
            let hi = lo + span;
            let (small, large) = if a <= b { (a, b) } else { (b, a) };
            let cs = color_for(small, lo, hi);
            let cl = color_for(large, lo, hi);
            for i in 0..3 {
                prop_assert!(cl[i] <= cs[i]);
            }
            prop_assert!(luminance(cl) <= luminance(cs));
        }
    }
}
