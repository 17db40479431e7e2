use super::ReportError;
use crate::arch_map::{Component, MatrixKind, ParamLocator};
use crate::drift::{DiffCell, DiffReport};
use crate::numfmt::sig17;

pub const CSV_HEADER: [&str; 9] = ["component", "layer", "kind", "rows", "cols", "d_l1", "d_ang", "auc", "zero_rows"];

/// One row per cell in locator order, reals at 17 significant digits.
pub fn export_csv(report: &DiffReport) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(CSV_HEADER).expect("writing to a Vec cannot fail");
    for c in &report.cells {
        w.write_record([
            c.locator.component.as_str().to_owned(),
            c.locator.layer.to_string(),
            c.locator.kind.to_string(),
            c.rows.to_string(),
            c.cols.to_string(),
            sig17(c.d_l1),
            sig17(c.d_ang),
            sig17(c.auc),
            c.zero_rows.to_string(),
        ])
        .expect("writing to a Vec cannot fail");
    }
    String::from_utf8(w.into_inner().expect("flushing a Vec cannot fail")).expect("csv output is UTF-8")
}

/// Parses the output of [`export_csv`] back into cells.
pub fn parse_csv(text: &str) -> Result<Vec<DiffCell>, ReportError> {
    let mut r = csv::ReaderBuilder::new().has_headers(true).from_reader(text.as_bytes());
    let header = r.headers()?.clone();
    if header.iter().ne(CSV_HEADER.iter().copied()) {
        return Err(ReportError::MalformedCsv { row: 1, reason: "unexpected header".into() });
    }
    let mut cells = Vec::new();
    for (i, rec) in r.records().enumerate() {
        let rec = rec?;
        let row = i + 2;
        let bad = |reason: String| ReportError::MalformedCsv { row, reason };
        let field = |j: usize| rec.get(j).unwrap_or_default();
        let num = |j: usize| field(j).parse::<f64>().map_err(|e| bad(format!("{}: {e}", CSV_HEADER[j])));
        let int = |j: usize| field(j).parse::<usize>().map_err(|e| bad(format!("{}: {e}", CSV_HEADER[j])));
        let component: Component = field(0).parse().map_err(|e: crate::arch_map::ArchMapError| bad(e.to_string()))?;
        let kind: MatrixKind = field(2).parse().map_err(|e: crate::arch_map::ArchMapError| bad(e.to_string()))?;
        let layer = field(1).parse::<u32>().map_err(|e| bad(format!("layer: {e}")))?;
        let locator = ParamLocator::new(component, layer, kind).map_err(|e| bad(e.to_string()))?;
        cells.push(DiffCell {
            locator,
            rows: int(3)?,
            cols: int(4)?,
            d_l1: num(5)?,
            d_ang: num(6)?,
            auc: num(7)?,
            zero_rows: int(8)?,
        });
    }
    Ok(cells)
}

/// Per-cell arithmetic mean of the three measures across runs.
///
/// Every report must cover the same locators with the same shapes, zero-row
/// counts and quantum. The result keeps the first report's `before` path and
/// joins the `after` paths with `;`.
pub fn aggregate_reports(reports: &[DiffReport]) -> Result<DiffReport, ReportError> {
    let first = reports
        .first()
        .ok_or_else(|| ReportError::EmptyReport("no reports to aggregate".into()))?;
    for (i, r) in reports.iter().enumerate().skip(1) {
        let mismatch = |what: &str| ReportError::TaxonomyMismatch(format!("report {} differs from report 1 in {what}", i + 1));
        if r.quantum != first.quantum {
            return Err(mismatch("rounding quantum"));
        }
        if r.cells.len() != first.cells.len() {
            return Err(mismatch("cell count"));
        }
        for (a, b) in first.cells.iter().zip(&r.cells) {
            if a.locator != b.locator {
                return Err(mismatch(&format!("locator {} vs {}", a.locator, b.locator)));
            }
            if (a.rows, a.cols) != (b.rows, b.cols) {
                return Err(mismatch(&format!("shape of {}", a.locator)));
            }
            if a.zero_rows != b.zero_rows {
                return Err(mismatch(&format!("zero-row count of {}", a.locator)));
            }
        }
    }

    let n = reports.len() as f64;
    let cells = first
        .cells
        .iter()
        .enumerate()
        .map(|(j, c)| {
            let mean = |f: fn(&DiffCell) -> f64| reports.iter().map(|r| f(&r.cells[j])).sum::<f64>() / n;
            DiffCell {
                d_l1: mean(|c| c.d_l1),
                d_ang: mean(|c| c.d_ang),
                auc: mean(|c| c.auc),
                ..c.clone()
            }
        })
        .collect();
    Ok(DiffReport {
        before: first.before.clone(),
        after: reports.iter().map(|r| r.after.as_str()).collect::<Vec<_>>().join(";"),
        quantum: first.quantum,
        cells,
        unclassified: first.unclassified.clone(),
    })
}
