use std::fmt;
use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::run::{CellStatus, ReportBundle};
use crate::criteria::{self, CriteriaRecord};
use crate::error::{Error, Result};
use crate::mes::{build_report, MesReport, Weights};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReportFormat {
    /// `report.json`: the complete bundle.
    Json,
    /// `table.csv` (one summary row per cell) and `criteria.csv` (one row
    /// per repetition, the input format of `score`).
    Csv,
    /// `plotdata.csv`: long format `method, subset, repetition, criterion,
    /// value, status`.
    Plotdata,
}

impl ReportFormat {
    pub const ALL: [ReportFormat; 3] = [ReportFormat::Json, ReportFormat::Csv, ReportFormat::Plotdata];
}

impl fmt::Display for ReportFormat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ReportFormat::Json => "json",
            ReportFormat::Csv => "csv",
            ReportFormat::Plotdata => "plotdata",
        })
    }
}

impl FromStr for ReportFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        ReportFormat::ALL
            .into_iter()
            .find(|f| f.to_string() == s)
            .ok_or_else(|| Error::Config(format!("unknown report format {s:?}")))
    }
}

/// Criteria written to `plotdata.csv` for each repetition.
pub const PLOT_CRITERIA: [&str; 4] = ["correctness", "complexity", "responsiveness", "mes"];

fn create(path: &Path) -> Result<BufWriter<File>> {
    Ok(BufWriter::new(File::create(path).map_err(|e| Error::io(path, e))?))
}

/// Writes the requested formats into `dir` and returns the created paths.
pub fn emit_report(bundle: &ReportBundle, formats: &[ReportFormat], dir: &Path) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut written = Vec::new();
    for format in formats {
        match format {
            ReportFormat::Json => {
                let path = dir.join("report.json");
                let mut w = create(&path)?;
                w.write_all(bundle.to_json()?.as_bytes())
                    .and_then(|_| w.flush())
                    .map_err(|e| Error::io(&path, e))?;
                written.push(path);
            }
            ReportFormat::Csv => {
                let path = dir.join("table.csv");
                write_table(bundle, create(&path)?)?;
                written.push(path);
                let path = dir.join("criteria.csv");
                let records: Vec<CriteriaRecord> = bundle.cells.iter().filter_map(|c| c.record.clone()).collect();
                criteria::write_criteria_csv(&records, create(&path)?)?;
                written.push(path);
            }
            ReportFormat::Plotdata => {
                let path = dir.join("plotdata.csv");
                write_plotdata(bundle, create(&path)?)?;
                written.push(path);
            }
        }
    }
    Ok(written)
}

/// One row per cell; failed cells keep their row with empty metrics.
pub fn write_table<W: Write>(bundle: &ReportBundle, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let mut header: Vec<&str> = criteria::TABLE_HEADER.to_vec();
    header.extend(["mes", "mes_std", "rank", "status", "reason"]);
    w.write_record(&header)?;
    for cell in &bundle.cells {
        let score = bundle.report(&cell.subset).and_then(|r| r.method(&cell.method));
        let mut fields = match &cell.record {
            Some(rec) => criteria::table_fields(rec),
            None => {
                let mut f = vec![cell.method.clone(), cell.subset.clone()];
                f.resize(criteria::TABLE_HEADER.len(), String::new());
                f
            }
        };
        match score {
            Some(s) => fields.extend([
                format!("{:.6}", s.mes_mean),
                format!("{:.6}", s.mes_std),
                s.rank.to_string(),
            ]),
            None => fields.extend([String::new(), String::new(), String::new()]),
        }
        fields.push(match cell.status {
            CellStatus::Complete => "complete".into(),
            CellStatus::Failed => "failed".into(),
        });
        fields.push(cell.reason.clone().unwrap_or_default());
        w.write_record(&fields)?;
    }
    w.flush().map_err(|e| Error::io("<table csv>", e))?;
    Ok(())
}

/// `methods x subsets x repetitions x` [`PLOT_CRITERIA`] rows.
pub fn write_plotdata<W: Write>(bundle: &ReportBundle, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["method", "subset", "repetition", "criterion", "value", "status"])?;
    let reps = bundle.config.repetitions;
    for cell in &bundle.cells {
        let score = bundle.report(&cell.subset).and_then(|r| r.method(&cell.method));
        for r in 0..reps {
            let values: [Option<f64>; 4] = match (&cell.record, score) {
                (Some(rec), Some(s)) => {
                    let m = &rec.repetitions[r];
                    [
                        Some(m.corr),
                        Some(m.comp),
                        Some(m.resp_seconds),
                        Some(s.mes_per_repetition[r]),
                    ]
                }
                _ => [None; 4],
            };
            let status = if values[0].is_some() { "complete" } else { "failed" };
            for (name, v) in PLOT_CRITERIA.iter().zip(values) {
                w.write_record([
                    cell.method.as_str(),
                    cell.subset.as_str(),
                    &r.to_string(),
                    name,
                    &v.map(|v| v.to_string()).unwrap_or_default(),
                    status,
                ])?;
            }
        }
    }
    w.flush().map_err(|e| Error::io("<plotdata csv>", e))?;
    Ok(())
}

/// Recomputes one MES report per subset, in first-appearance order.
pub fn score_records(records: &[CriteriaRecord], weights: &Weights, alpha: f64) -> Result<Vec<MesReport>> {
    let mut subsets: Vec<&str> = Vec::new();
    for r in records {
        if !subsets.contains(&r.subset.as_str()) {
            subsets.push(&r.subset);
        }
    }
    subsets
        .into_iter()
        .map(|s| {
            let group: Vec<CriteriaRecord> = records.iter().filter(|r| r.subset == s).cloned().collect();
            build_report(s, &group, weights, alpha)
        })
        .collect()
}
