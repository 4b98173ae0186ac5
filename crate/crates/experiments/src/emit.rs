//! CSV/JSON serialization and file output, with plot-ready companions.

use crate::sweep::{ExperimentTable, RunRecord};
use crate::uniformity::UniformityReport;
use crate::ExperimentError;
use serde::Serialize;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

/// On-disk / stdout representation of a result.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EmitFormat {
    Csv,
    Json,
}

/// Decimal form that parses back to the identical bits (17 significant
/// digits).
fn fmt_float(v: f64) -> String {
    format!("{v:.16e}")
}

/// Pretty JSON with keys in declaration order.
pub fn json_string<T: Serialize>(value: &T) -> String {
    serde_json::to_string_pretty(value).expect("reports are always serializable")
}

/// Accuracy table as RFC-4180 CSV, header first.
pub fn table_csv(table: &ExperimentTable) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["epsilon", "rmse", "sample_count", "mean_signed_error", "failures"])
        .expect("in-memory csv");
    for row in &table.rows {
        w.write_record([
            fmt_float(row.epsilon),
            fmt_float(row.rmse),
            row.sample_count.to_string(),
            fmt_float(row.mean_signed_error),
            row.failures.to_string(),
        ])
        .expect("in-memory csv");
    }
    String::from_utf8(w.into_inner().expect("in-memory csv")).expect("csv is utf-8")
}

/// Single-run record as one CSV row with header.
pub fn record_csv(record: &RunRecord) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record([
        "epsilon",
        "phi0",
        "i0",
        "xi_value",
        "xi_theory",
        "signed_error",
        "tau_e",
        "nu",
        "h_drift",
        "safe",
    ])
    .expect("in-memory csv");
    w.write_record([
        fmt_float(record.epsilon),
        fmt_float(record.phi0),
        fmt_float(record.i0),
        fmt_float(record.xi_value),
        fmt_float(record.xi_theory),
        fmt_float(record.signed_error),
        fmt_float(record.tau_e),
        fmt_float(record.nu),
        fmt_float(record.h_drift),
        record.safe.to_string(),
    ])
    .expect("in-memory csv");
    String::from_utf8(w.into_inner().expect("in-memory csv")).expect("csv is utf-8")
}

/// Distribution samples as CSV, one row per sample in draw order.
pub fn uniformity_csv(report: &UniformityReport) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["sample", "xi_frac"]).expect("in-memory csv");
    for (i, &s) in report.samples.iter().enumerate() {
        w.write_record([i.to_string(), fmt_float(s)]).expect("in-memory csv");
    }
    String::from_utf8(w.into_inner().expect("in-memory csv")).expect("csv is utf-8")
}

/// Log-log scaling data over rows without failures, with the fitted line in a
/// comment, for external plotting.
pub fn table_loglog(table: &ExperimentTable) -> String {
    let mut out = String::from("# ln(epsilon)  ln(rmse), rows without failures\n");
    match &table.fit {
        Some(fit) => {
            let _ = writeln!(
                out,
                "# fit: slope={} intercept={} residual={}",
                fmt_float(fit.slope),
                fmt_float(fit.intercept),
                fmt_float(fit.residual)
            );
        }
        None => out.push_str("# fit: none\n"),
    }
    for row in &table.rows {
        if row.failures == 0 && row.rmse.is_finite() && row.rmse > 0.0 {
            let _ = writeln!(out, "{}  {}", fmt_float(row.epsilon.ln()), fmt_float(row.rmse.ln()));
        }
    }
    out
}

/// Empirical CDF of the pseudophase samples, for external plotting.
pub fn uniformity_ecdf(report: &UniformityReport) -> String {
    let mut sorted = report.samples.clone();
    sorted.sort_by(|a, b| a.partial_cmp(b).expect("samples must not be NaN"));
    let n = sorted.len() as f64;
    let mut out = String::from("# pseudophase fraction (sorted)  cumulative probability\n");
    for (i, &s) in sorted.iter().enumerate() {
        let _ = writeln!(out, "{}  {}", fmt_float(s), fmt_float((i as f64 + 1.0) / n));
    }
    out
}

fn write_with_context(path: &Path, content: &str) -> Result<(), ExperimentError> {
    fs::write(path, content).map_err(|source| ExperimentError::Io {
        path: path.display().to_string(),
        source,
    })
}

/// `<stem><suffix>.dat` next to `path`.
fn companion_path(path: &Path, suffix: &str) -> PathBuf {
    let stem = path.file_stem().and_then(|s| s.to_str()).unwrap_or("out");
    path.with_file_name(format!("{stem}{suffix}.dat"))
}

/// Writes the accuracy table plus a `<stem>-loglog.dat` companion.
pub fn write_table(
    table: &ExperimentTable,
    path: &Path,
    format: EmitFormat,
) -> Result<(), ExperimentError> {
    let content = match format {
        EmitFormat::Csv => table_csv(table),
        EmitFormat::Json => json_string(table) + "\n",
    };
    write_with_context(path, &content)?;
    write_with_context(&companion_path(path, "-loglog"), &table_loglog(table))
}

/// Writes the distribution report plus a `<stem>-ecdf.dat` companion.
pub fn write_uniformity(
    report: &UniformityReport,
    path: &Path,
    format: EmitFormat,
) -> Result<(), ExperimentError> {
    let content = match format {
        EmitFormat::Csv => uniformity_csv(report),
        EmitFormat::Json => json_string(report) + "\n",
    };
    write_with_context(path, &content)?;
    write_with_context(&companion_path(path, "-ecdf"), &uniformity_ecdf(report))
}

/// Writes a single-run record (no companion).
pub fn write_record(
    record: &RunRecord,
    path: &Path,
    format: EmitFormat,
) -> Result<(), ExperimentError> {
    let content = match format {
        EmitFormat::Csv => record_csv(record),
        EmitFormat::Json => json_string(record) + "\n",
    };
    write_with_context(path, &content)
}
