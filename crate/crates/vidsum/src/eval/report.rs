//! Evaluation report CSV: per-video rows plus a trailing summary block.

use super::crossval::EvalReport;
use crate::dataset::DatasetError;
use crate::util::atomic_write;
use std::fmt::Write as _;
use std::path::Path;

/// `video_id,fold,tau,rho` rows (undefined values left empty), then a
/// commented summary block with dataset means and the config fingerprint.
pub fn render_report_csv(report: &EvalReport) -> String {
    let mut s = String::from("video_id,fold,tau,rho\n");
    let cell = |v: Option<f64>| v.map(|v| v.to_string()).unwrap_or_default();
    for row in &report.rows {
        let _ = writeln!(
            s,
            "{},{},{},{}",
            row.video_id,
            row.fold,
            cell(row.tau),
            cell(row.rho)
        );
    }
    let _ = writeln!(s, "# summary");
    let _ = writeln!(s, "# videos,{}", report.rows.len());
    let _ = writeln!(s, "# folds,{}", report.folds);
    let _ = writeln!(s, "# mean_tau,{}", cell(report.mean_tau));
    let _ = writeln!(s, "# mean_rho,{}", cell(report.mean_rho));
    let _ = writeln!(s, "# undefined_comparisons,{}", report.undefined_comparisons);
    let _ = writeln!(s, "# config,{}", report.config_fingerprint);
    s
}

pub fn write_report_csv(path: &Path, report: &EvalReport) -> Result<(), DatasetError> {
    atomic_write(path, render_report_csv(report).as_bytes()).map_err(|source| DatasetError::Io {
        path: path.to_path_buf(),
        source,
    })
}
