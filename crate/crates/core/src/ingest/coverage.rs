use super::{IngestError, LinkageReport};
use crate::report::{percent_cell, render_table};

#[derive(Debug, Clone, PartialEq)]
pub struct CoverageOptions {
    /// Per-court success-rate cutoffs; a court counts when its rate is strictly above.
    pub thresholds: Vec<f64>,
}

impl Default for CoverageOptions {
    fn default() -> Self {
        Self {
            thresholds: vec![0.90, 0.60],
        }
    }
}

/// Plain-text coverage table with per-court threshold lines.
pub fn coverage_report(report: &LinkageReport, opts: &CoverageOptions) -> Result<String, IngestError> {
    report.validate()?;
    let total = report.total_admin as u64;
    let row = |label: &str, n: usize, decimals: u32| {
        vec![label.to_string(), n.to_string(), percent_cell(n as u64, total, decimals)]
    };
    let share_header = format!("% of {total}");
    let mut out = render_table(
        &["Download / linkage step", "n cases", &share_header],
        &[
            row("JSON dump (direct match)", report.matched_dump, 2),
            row("API re-download (matched via docket number)", report.matched_api, 2),
            row("Linked total", report.linked(), 2),
            row("Not linked (missing / corrupt / API errors)", report.unmatched, 1),
        ],
    );
    let courts = report.per_court.len();
    for t in &opts.thresholds {
        let above = report.per_court.values().filter(|c| c.rate > *t).count();
        out.push_str(&format!(
            "Courts with success rate above {}%: {above}/{courts}\n",
            crate::report::percent((t * 1e6).round() as u64, 1_000_000, 0).unwrap_or_default()
        ));
    }
    Ok(out)
}
