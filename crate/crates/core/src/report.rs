//! Report rendering: one row per experiment in ascending order of average
//! raw error, plus positive / negative / no-mitigation counts.

use std::fmt::Write as _;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{GemError, Result};
use crate::harness::ExperimentRecord;
use crate::metrics::Classification;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportFormat {
    Csv,
    Json,
}

impl FromStr for ReportFormat {
    type Err = GemError;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "csv" => Ok(ReportFormat::Csv),
            "json" => Ok(ReportFormat::Json),
            other => Err(GemError::Config(format!("unknown report format {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub experiment_id: usize,
    pub num_qubits: usize,
    pub depth: usize,
    pub avg_delta_v: f64,
    pub min_delta_v: f64,
    pub max_delta_v: f64,
    pub avg_delta_x: f64,
    pub min_delta_x: f64,
    pub max_delta_x: f64,
    pub delta_g: f64,
    pub classification: Classification,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Summary {
    pub positive: usize,
    pub negative: usize,
    pub none: usize,
    pub total: usize,
}

impl Summary {
    pub fn of(records: &[ExperimentRecord]) -> Self {
        records.iter().fold(Summary::default(), |mut s, r| {
            match r.classification {
                Classification::Positive => s.positive += 1,
                Classification::Negative => s.negative += 1,
                Classification::NoMitigation => s.none += 1,
            }
            s.total += 1;
            s
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub rows: Vec<ReportRow>,
    pub summary: Summary,
}

impl Report {
    pub fn new(records: &[ExperimentRecord]) -> Result<Self> {
        if records.is_empty() {
            return Err(GemError::Config("no records to report".into()));
        }
        let mut rows: Vec<ReportRow> = records
            .iter()
            .map(|r| ReportRow {
                experiment_id: r.experiment_id,
                num_qubits: r.num_qubits,
                depth: r.depth,
                avg_delta_v: r.avg_delta_v,
                min_delta_v: r.min_delta_v,
                max_delta_v: r.max_delta_v,
                avg_delta_x: r.avg_delta_x,
                min_delta_x: r.min_delta_x,
                max_delta_x: r.max_delta_x,
                delta_g: r.delta_g,
                classification: r.classification,
            })
            .collect();
        rows.sort_by(|a, b| {
            a.avg_delta_v
                .total_cmp(&b.avg_delta_v)
                .then(a.experiment_id.cmp(&b.experiment_id))
        });
        Ok(Report {
            rows,
            summary: Summary::of(records),
        })
    }
}

pub fn render_report(records: &[ExperimentRecord], format: ReportFormat) -> Result<String> {
    let report = Report::new(records)?;
    match format {
        ReportFormat::Json => {
            let mut s = serde_json::to_string_pretty(&report)?;
            s.push('\n');
            Ok(s)
        }
        ReportFormat::Csv => {
            let mut writer = csv::Writer::from_writer(Vec::new());
            for row in &report.rows {
                writer.serialize(row)?;
            }
            let bytes = writer
                .into_inner()
                .map_err(|e| GemError::Config(e.to_string()))?;
            let mut out = String::from_utf8(bytes).expect("csv output is utf-8");
            let s = report.summary;
            // Infallible: writing to a String.
            let _ = write!(
                out,
                "\nclassification,count\nPositive,{}\nNegative,{}\nNone,{}\nTotal,{}\n",
                s.positive, s.negative, s.none, s.total
            );
            Ok(out)
        }
    }
}

pub fn emit_report(records: &[ExperimentRecord], format: ReportFormat, path: &Path) -> Result<()> {
    let text = render_report(records, format)?;
    std::fs::write(path, text).map_err(|e| GemError::io(path, e))
}

pub fn write_records(records: &[ExperimentRecord], path: &Path) -> Result<()> {
    let text = serde_json::to_string_pretty(records)?;
    std::fs::write(path, text + "\n").map_err(|e| GemError::io(path, e))
}

pub fn read_records(path: &Path) -> Result<Vec<ExperimentRecord>> {
    let text = std::fs::read_to_string(path).map_err(|e| GemError::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| GemError::Parse {
        path: path.to_path_buf(),
        message: e.to_string(),
    })
}
