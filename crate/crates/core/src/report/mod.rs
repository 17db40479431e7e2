//! Heatmap rendering, CSV export and cross-run aggregation of diff reports.

mod heatmap;
mod table;

pub use heatmap::{color_for, render_heatmap, ColorScale, HeatmapSpec, Measure};
pub use table::{aggregate_reports, export_csv, parse_csv, CSV_HEADER};

#[derive(Debug, thiserror::Error)]
pub enum ReportError {
    #[error("nothing to render: {0}")]
    EmptyReport(String),
    #[error("reports do not share a taxonomy: {0}")]
    TaxonomyMismatch(String),
    #[error("{labels} panel labels given for {reports} reports")]
    LabelCount { labels: usize, reports: usize },
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("malformed csv row {row}: {reason}")]
    MalformedCsv { row: usize, reason: String },
}
