use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::threshold::{reference_thresholds, ThresholdEntry, ThresholdReport};
use super::{sort_rows, ExperimentConfig, SweepRow};
use crate::compiler::LoweringPath;
use crate::error::{Error, Result};

pub const CSV_COLUMNS: [&str; 12] = [
    "word_len",
    "path",
    "opt_level",
    "residue",
    "expected_prob",
    "exact_prob",
    "shot_prob",
    "abs_error_exact",
    "abs_error_shot",
    "latency_ns",
    "replication",
    "seed",
];

const SIGNIFICANT_DIGITS: usize = 9;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportFormat {
    Csv,
    Json,
}

impl ReportFormat {
    /// `.json` selects JSON; anything else is CSV.
    pub fn from_path(path: &Path) -> Self {
        match path.extension().and_then(|e| e.to_str()) {
            Some(e) if e.eq_ignore_ascii_case("json") => ReportFormat::Json,
            _ => ReportFormat::Csv,
        }
    }
}

impl std::str::FromStr for ReportFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(ReportFormat::Csv),
            "json" => Ok(ReportFormat::Json),
            other => Err(Error::InvalidConfig(format!("unknown format {other:?}"))),
        }
    }
}

/// Rounds to nine significant digits.
fn sig(x: f64) -> f64 {
    if x == 0.0 || !x.is_finite() {
        return x;
    }
    format!("{:.*e}", SIGNIFICANT_DIGITS - 1, x)
        .parse()
        .expect("formatted float parses")
}

fn rounded(r: &SweepRow) -> SweepRow {
    SweepRow {
        expected_prob: sig(r.expected_prob),
        exact_prob: sig(r.exact_prob),
        shot_prob: sig(r.shot_prob),
        abs_error_exact: sig(r.abs_error_exact),
        abs_error_shot: sig(r.abs_error_shot),
        latency_ns: sig(r.latency_ns),
        ..r.clone()
    }
}

/// Per-word means over replications, marked with replication 0. Rows
/// from a single replication come back unchanged apart from the marker.
pub fn mean_rows(rows: &[SweepRow]) -> Vec<SweepRow> {
    let mut groups: BTreeMap<(LoweringPath, u8, u64), Vec<&SweepRow>> = BTreeMap::new();
    for r in rows.iter().filter(|r| r.replication != 0) {
        groups.entry((r.path, r.opt_level, r.word_len)).or_default().push(r);
    }
    groups
        .into_values()
        .map(|g| {
            let n = g.len() as f64;
            let mean = |f: fn(&SweepRow) -> f64| g.iter().map(|r| f(r)).sum::<f64>() / n;
            SweepRow {
                exact_prob: mean(|r| r.exact_prob),
                shot_prob: mean(|r| r.shot_prob),
                abs_error_exact: mean(|r| r.abs_error_exact),
                abs_error_shot: mean(|r| r.abs_error_shot),
                replication: 0,
                seed: 0,
                ..g[0].clone()
            }
        })
        .collect()
}

/// JSON report: rows plus everything needed to reproduce them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportDoc {
    pub config: ExperimentConfig,
    pub rows: Vec<SweepRow>,
    pub mean_rows: Vec<SweepRow>,
    pub thresholds: ThresholdReport,
    pub reference: ThresholdReport,
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> Error + '_ {
    move |source| Error::Io {
        path: path.to_owned(),
        source,
    }
}

fn csv_err(path: &Path) -> impl FnOnce(csv::Error) -> Error + '_ {
    move |source| Error::Csv {
        path: path.to_owned(),
        source,
    }
}

pub fn write_rows_csv<W: std::io::Write>(rows: &[SweepRow], out: W) -> std::result::Result<(), csv::Error> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(out);
    w.write_record(CSV_COLUMNS)?;
    let mut sorted: Vec<SweepRow> = rows.iter().map(rounded).collect();
    sort_rows(&mut sorted);
    for r in &sorted {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

/// Writes rows as CSV (exact column set) or as a JSON [`ReportDoc`].
pub fn emit_report(
    rows: &[SweepRow],
    report: &ThresholdReport,
    config: &ExperimentConfig,
    format: ReportFormat,
    destination: &Path,
) -> Result<()> {
    match format {
        ReportFormat::Csv => {
            let file = std::fs::File::create(destination).map_err(io_err(destination))?;
            write_rows_csv(rows, std::io::BufWriter::new(file)).map_err(csv_err(destination))
        }
        ReportFormat::Json => {
            let mut sorted: Vec<SweepRow> = rows.iter().map(rounded).collect();
            sort_rows(&mut sorted);
            let doc = ReportDoc {
                config: config.clone(),
                mean_rows: mean_rows(rows).iter().map(rounded).collect(),
                rows: sorted,
                thresholds: report.clone(),
                reference: reference_thresholds(),
            };
            let text = serde_json::to_string_pretty(&doc)?;
            std::fs::write(destination, text).map_err(io_err(destination))
        }
    }
}

pub fn load_json_report(path: &Path) -> Result<ReportDoc> {
    let text = std::fs::read_to_string(path).map_err(io_err(path))?;
    serde_json::from_str(&text).map_err(|source| Error::Json {
        path: path.to_owned(),
        source,
    })
}

/// Rows from a CSV or JSON report, chosen by extension.
pub fn load_rows(path: &Path) -> Result<Vec<SweepRow>> {
    match ReportFormat::from_path(path) {
        ReportFormat::Json => Ok(load_json_report(path)?.rows),
        ReportFormat::Csv => {
            let mut reader = csv::Reader::from_path(path).map_err(csv_err(path))?;
            let headers = reader.headers().map_err(csv_err(path))?.clone();
            if headers.iter().ne(CSV_COLUMNS) {
                return Err(Error::InvalidConfig(format!(
                    "{}: expected columns {}",
                    path.display(),
                    CSV_COLUMNS.join(",")
                )));
            }
            reader
                .deserialize()
                .collect::<std::result::Result<Vec<SweepRow>, _>>()
                .map_err(csv_err(path))
        }
    }
}

#[derive(Serialize)]
struct ThresholdCsvRow {
    path: LoweringPath,
    residue: u64,
    threshold: f64,
    max_word_len: String,
    reference: String,
}

fn reference_for(e: &ThresholdEntry, reference: &ThresholdReport) -> String {
    reference
        .get(e.path, e.residue, e.threshold)
        .map(|m| m.to_string())
        .unwrap_or_default()
}

/// Threshold table as CSV (`path,residue,threshold,max_word_len,reference`) or JSON.
pub fn emit_thresholds(report: &ThresholdReport, format: ReportFormat, destination: &Path) -> Result<()> {
    let reference = reference_thresholds();
    match format {
        ReportFormat::Csv => {
            let mut w = csv::Writer::from_path(destination).map_err(csv_err(destination))?;
            for e in &report.entries {
                w.serialize(ThresholdCsvRow {
                    path: e.path,
                    residue: e.residue,
                    threshold: e.threshold,
                    max_word_len: e.max_supported.to_string(),
                    reference: reference_for(e, &reference),
                })
                .map_err(csv_err(destination))?;
            }
            if report.entries.is_empty() {
                w.write_record(["path", "residue", "threshold", "max_word_len", "reference"])
                    .map_err(csv_err(destination))?;
            }
            w.flush().map_err(io_err(destination))
        }
        ReportFormat::Json => {
            #[derive(Serialize)]
            struct Doc<'a> {
                thresholds: &'a ThresholdReport,
                reference: ThresholdReport,
            }
            let text = serde_json::to_string_pretty(&Doc {
                thresholds: report,
                reference,
            })?;
            std::fs::write(destination, text).map_err(io_err(destination))
        }
    }
}

/// Plain-text table with the hardware reference alongside.
pub fn format_threshold_table(report: &ThresholdReport) -> String {
    let reference = reference_thresholds();
    let mut out = String::new();
    let _ = writeln!(
        out,
        "{:<14} {:>7} {:>9} {:>12} {:>10}",
        "path", "residue", "threshold", "max_len", "hardware"
    );
    for e in &report.entries {
        let _ = writeln!(
            out,
            "{:<14} {:>7} {:>8.0}% {:>12} {:>10}",
            e.path.as_str(),
            e.residue,
            e.threshold * 100.0,
            e.max_supported.to_string(),
            reference_for(e, &reference)
        );
    }
    out
}
