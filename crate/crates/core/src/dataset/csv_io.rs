use std::collections::HashMap;
use std::io::{Read, Write};
use std::path::Path;

use chrono::{Datelike, NaiveDate};

use super::{Dataset, Listing, Provenance};
use crate::error::{Error, Result, RowError};

/// Required columns, in canonical output order.
pub const CSV_HEADER: [&str; 7] = [
    "brand",
    "model",
    "series",
    "construction_year",
    "working_hours",
    "location",
    "price",
];

const OPTIONAL: [&str; 3] = ["source_id", "observed_at", "working_hours_imputed"];

const MIN_YEAR: i32 = 1950;

/// Reads a listings CSV, failing if any row is malformed. All malformed
/// cells are reported together.
pub fn ingest_csv(path: impl AsRef<Path>) -> Result<Dataset> {
    let (dataset, errors) = ingest_csv_lenient(path)?;
    if errors.is_empty() {
        Ok(dataset)
    } else {
        Err(Error::RowParse(errors))
    }
}

/// Like [`ingest_csv`] but skips malformed rows and returns their errors.
pub fn ingest_csv_lenient(path: impl AsRef<Path>) -> Result<(Dataset, Vec<RowError>)> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    ingest_reader(file)
}

pub fn ingest_reader<R: Read>(reader: R) -> Result<(Dataset, Vec<RowError>)> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(false)
        .trim(csv::Trim::All)
        .from_reader(reader);

    let headers = rdr.headers()?.clone();
    let index: HashMap<String, usize> = headers
        .iter()
        .enumerate()
        .map(|(i, h)| (h.trim().to_ascii_lowercase(), i))
        .collect();
    for name in CSV_HEADER {
        if !index.contains_key(name) {
            return Err(Error::MissingColumn(name.to_string()));
        }
    }
    let col = |name: &str| index.get(name).copied();
    let max_year = chrono::Utc::now().year();

    let mut rows = Vec::new();
    let mut errors = Vec::new();
    for (i, record) in rdr.records().enumerate() {
        let line = i + 2;
        let record = match record {
            Ok(r) => r,
            Err(e) => {
                errors.push(RowError {
                    line,
                    column: String::new(),
                    reason: e.to_string(),
                });
                continue;
            }
        };
        let cell = |name: &str| -> &str { col(name).and_then(|c| record.get(c)).unwrap_or("") };
        let mut row_errors = Vec::new();
        let mut fail = |column: &str, reason: String| {
            row_errors.push(RowError {
                line,
                column: column.to_string(),
                reason,
            })
        };

        let construction_year = match cell("construction_year") {
            "" => None,
            s => match s.parse::<f64>() {
                Ok(v) if v.fract() == 0.0 && (MIN_YEAR as f64..=max_year as f64).contains(&v) => Some(v as i32),
                Ok(v) => {
                    fail("construction_year", format!("{v} outside [{MIN_YEAR}, {max_year}]"));
                    None
                }
                Err(_) => {
                    fail("construction_year", format!("not a number: {s:?}"));
                    None
                }
            },
        };
        let working_hours = match cell("working_hours") {
            "" => None,
            s => match s.parse::<f64>() {
                Ok(v) if v.is_finite() && v >= 0.0 => Some(v),
                Ok(v) => {
                    fail("working_hours", format!("{v} is negative or not finite"));
                    None
                }
                Err(_) => {
                    fail("working_hours", format!("not a number: {s:?}"));
                    None
                }
            },
        };
        let price = match cell("price") {
            "" => {
                fail("price", "missing".into());
                f64::NAN
            }
            s => match s.parse::<f64>() {
                Ok(v) if v.is_finite() && v > 0.0 => v,
                Ok(v) => {
                    fail("price", format!("{v} is not positive"));
                    f64::NAN
                }
                Err(_) => {
                    fail("price", format!("not a number: {s:?}"));
                    f64::NAN
                }
            },
        };
        let observed_at = match cell("observed_at") {
            "" => None,
            s => match NaiveDate::parse_from_str(s, "%Y-%m-%d") {
                Ok(d) => Some(d),
                Err(e) => {
                    fail("observed_at", format!("{s:?}: {e}"));
                    None
                }
            },
        };
        let hours_imputed = match cell("working_hours_imputed").to_ascii_lowercase().as_str() {
            "" | "false" | "0" => false,
            "true" | "1" => true,
            other => {
                fail("working_hours_imputed", format!("not a boolean: {other:?}"));
                false
            }
        };

        if !row_errors.is_empty() {
            errors.extend(row_errors);
            continue;
        }
        let source_id = match cell("source_id") {
            "" => format!("row-{line}"),
            s => s.to_string(),
        };
        let series = match cell("series") {
            "" => None,
            s => Some(s.to_string()),
        };
        rows.push(Listing {
            brand: cell("brand").to_string(),
            model: cell("model").to_string(),
            series,
            construction_year,
            working_hours,
            location: cell("location").to_string(),
            price,
            source_id,
            observed_at,
            hours_imputed: hours_imputed && working_hours.is_some(),
        });
    }
    Ok((Dataset::new(rows, Provenance::Ingested), errors))
}

pub fn write_csv(d: &Dataset, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    write_csv_to(d, file)
}

/// Writes the canonical header plus `source_id,observed_at,working_hours_imputed`.
pub fn write_csv_to<W: Write>(d: &Dataset, writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    let header: Vec<&str> = CSV_HEADER.iter().chain(OPTIONAL.iter()).copied().collect();
    w.write_record(&header)?;
    for r in &d.rows {
        w.write_record([
            r.brand.clone(),
            r.model.clone(),
            r.series.clone().unwrap_or_default(),
            r.construction_year.map(|y| y.to_string()).unwrap_or_default(),
            r.working_hours.map(|h| h.to_string()).unwrap_or_default(),
            r.location.clone(),
            r.price.to_string(),
            r.source_id.clone(),
            r.observed_at.map(|d| d.to_string()).unwrap_or_default(),
            r.hours_imputed.to_string(),
        ])?;
    }
    w.flush().map_err(|e| Error::io("<csv writer>", e))?;
    Ok(())
}
