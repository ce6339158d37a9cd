//! CSV and JSON serialisation of per-sample reports, grouped summaries and
//! sweep curves.
//!
//! Floats use the shortest decimal that round-trips (`0.4`, `1.0`,
//! `0.5714285714285714`). Missing values are empty CSV cells or JSON `null`.
//! Degenerate scores are written as their resolved value; the `degeneracy`
//! column says which resolution applied.

use std::fs;
use std::path::Path;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::metrics::{Degeneracy, Score};
use crate::report::{MetricReport, SummaryRow, METRIC_NAMES};
use crate::synth::SweepCurve;

pub const SAMPLE_COLUMNS: [&str; 13] = [
    "sample_id",
    "m",
    "fg_m",
    "truth_object_count",
    "ari",
    "arp",
    "arr",
    "fg_ari",
    "fg_arp",
    "fg_arr",
    "rp",
    "rr",
    "degeneracy",
];

pub const SWEEP_COLUMNS: [&str; 5] = ["k", "ari", "arp", "arr", "degeneracy"];

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ReportFormat {
    Csv,
    Json,
}

/// A report tagged with the sample it belongs to.
#[derive(Clone, Debug, PartialEq)]
pub struct SampleReport {
    pub sample_id: String,
    pub report: MetricReport,
}

#[derive(Clone, Copy, Debug)]
pub enum ReportData<'a> {
    Samples(&'a [SampleReport]),
    Summary(&'a [SummaryRow]),
    Sweep(&'a SweepCurve),
}

/// Shortest round-trip decimal, always with a fraction or exponent.
pub fn format_float(value: f64) -> String {
    format!("{value:?}")
}

fn cell(value: Option<f64>) -> String {
    value.map(format_float).unwrap_or_default()
}

fn score_cell(score: Option<Score>) -> String {
    cell(score.map(|s| s.value))
}

#[derive(Serialize)]
struct SampleRecord<'a> {
    sample_id: &'a str,
    m: u64,
    fg_m: Option<u64>,
    truth_object_count: usize,
    ari: Option<f64>,
    arp: Option<f64>,
    arr: Option<f64>,
    fg_ari: Option<f64>,
    fg_arp: Option<f64>,
    fg_arr: Option<f64>,
    rp: Option<f64>,
    rr: Option<f64>,
    degeneracy: Degeneracy,
}

impl<'a> From<&'a SampleReport> for SampleRecord<'a> {
    fn from(sample: &'a SampleReport) -> Self {
        let r = &sample.report;
        let v = |s: Option<Score>| s.map(|s| s.value);
        Self {
            sample_id: &sample.sample_id,
            m: r.pixel_count,
            fg_m: r.fg_pixel_count,
            truth_object_count: r.truth_object_count,
            ari: v(r.ari),
            arp: v(r.arp),
            arr: v(r.arr),
            fg_ari: v(r.fg_ari),
            fg_arp: v(r.fg_arp),
            fg_arr: v(r.fg_arr),
            rp: v(r.rp_unadj),
            rr: v(r.rr_unadj),
            degeneracy: r.degeneracy,
        }
    }
}

#[derive(Serialize)]
struct SweepRecord {
    k: usize,
    ari: f64,
    arp: f64,
    arr: f64,
    degeneracy: Degeneracy,
}

fn summary_columns() -> Vec<String> {
    let mut columns = vec!["group".to_string(), "count".to_string()];
    for metric in METRIC_NAMES {
        for stat in ["n", "mean", "std", "degenerate"] {
            columns.push(format!("{metric}_{stat}"));
        }
    }
    columns
}

fn csv_string(header: &[String], rows: impl Iterator<Item = Vec<String>>) -> String {
    let mut writer = csv::Writer::from_writer(Vec::new());
    // Writing into a Vec cannot fail.
    writer.write_record(header).expect("in-memory write");
    for row in rows {
        writer.write_record(&row).expect("in-memory write");
    }
    String::from_utf8(writer.into_inner().expect("in-memory flush")).expect("utf-8 fields")
}

fn to_csv(data: ReportData<'_>) -> String {
    match data {
        ReportData::Samples(samples) => {
            let header: Vec<String> = SAMPLE_COLUMNS.iter().map(|c| c.to_string()).collect();
            csv_string(
                &header,
                samples.iter().map(|s| {
                    let r = &s.report;
                    vec![
                        s.sample_id.clone(),
                        r.pixel_count.to_string(),
                        r.fg_pixel_count.map(|m| m.to_string()).unwrap_or_default(),
                        r.truth_object_count.to_string(),
                        score_cell(r.ari),
                        score_cell(r.arp),
                        score_cell(r.arr),
                        score_cell(r.fg_ari),
                        score_cell(r.fg_arp),
                        score_cell(r.fg_arr),
                        score_cell(r.rp_unadj),
                        score_cell(r.rr_unadj),
                        r.degeneracy.as_str().to_string(),
                    ]
                }),
            )
        }
        ReportData::Summary(rows) => csv_string(
            &summary_columns(),
            rows.iter().map(|row| {
                let mut cells = vec![
                    row.truth_object_count
                        .map(|n| n.to_string())
                        .unwrap_or_else(|| "all".into()),
                    row.count.to_string(),
                ];
                for stats in &row.metrics {
                    cells.push(stats.n.to_string());
                    cells.push(cell(stats.mean));
                    cells.push(cell(stats.std));
                    cells.push(stats.degenerate.to_string());
                }
                cells
            }),
        ),
        ReportData::Sweep(curve) => {
            let header: Vec<String> = SWEEP_COLUMNS.iter().map(|c| c.to_string()).collect();
            csv_string(
                &header,
                curve.rows.iter().map(|row| {
                    vec![
                        row.k.to_string(),
                        format_float(row.ari.value),
                        format_float(row.arp.value),
                        format_float(row.arr.value),
                        row.degeneracy.as_str().to_string(),
                    ]
                }),
            )
        }
    }
}

fn to_json(data: ReportData<'_>) -> serde_json::Result<String> {
    let mut text = match data {
        ReportData::Samples(samples) => {
            let records: Vec<SampleRecord> = samples.iter().map(SampleRecord::from).collect();
            serde_json::to_string_pretty(&records)
        }
        ReportData::Summary(rows) => serde_json::to_string_pretty(rows),
        ReportData::Sweep(curve) => {
            let records: Vec<SweepRecord> = curve
                .rows
                .iter()
                .map(|row| SweepRecord {
                    k: row.k,
                    ari: row.ari.value,
                    arp: row.arp.value,
                    arr: row.arr.value,
                    degeneracy: row.degeneracy,
                })
                .collect();
            serde_json::to_string_pretty(&records)
        }
    }?;
    text.push('\n');
    Ok(text)
}

/// Serialises `data` in memory.
pub fn render_report(data: ReportData<'_>, format: ReportFormat) -> Result<String> {
    match format {
        ReportFormat::Csv => Ok(to_csv(data)),
        ReportFormat::Json => to_json(data).map_err(|source| Error::Json {
            path: "<memory>".into(),
            source,
        }),
    }
}

pub fn write_report(data: ReportData<'_>, path: &Path, format: ReportFormat) -> Result<()> {
    let text = render_report(data, format)?;
    fs::write(path, text).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}
