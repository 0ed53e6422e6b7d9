//! Listings, ingestion, the cleaning pipeline, feature subsets, holdout
//! splitting, and the seeded synthetic generator.

mod clean;
mod csv_io;
mod split;
mod synth;
mod table;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

pub use clean::{
    clean, deduplicate, default_key_sets, drop_incomplete, filter_outliers, filter_rare_models, impute_working_hours,
    CleanReport, CleaningConfig, OutlierConfig, RejectReason, Rejected, DEFAULT_LIFETIME_CAP_HOURS,
    DEFAULT_MIN_MODEL_COUNT, KEY_FIELDS,
};
pub use csv_io::{ingest_csv, ingest_csv_lenient, ingest_reader, write_csv, write_csv_to, CSV_HEADER};
pub use split::{holdout_split, Split};
pub use synth::{synth_generate, synth_generate_labeled, Injection, InjectionKind, SynthConfig, SynthOutput};
pub use table::{make_subsets, subset_table, Column, ColumnData, FeatureTable, SubsetId};

pub const SCHEMA_VERSION: u32 = 1;

/// One advertisement.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Listing {
    pub brand: String,
    pub model: String,
    pub series: Option<String>,
    pub construction_year: Option<i32>,
    pub working_hours: Option<f64>,
    pub location: String,
    /// Asking price in EUR.
    pub price: f64,
    /// Portal plus listing id; synthetic ids for generated data.
    pub source_id: String,
    pub observed_at: Option<NaiveDate>,
    /// Set when `working_hours` was filled in by imputation rather than observed.
    #[serde(default)]
    pub hours_imputed: bool,
}

impl Listing {
    /// Working hours that were actually reported, ignoring imputed values.
    pub fn observed_hours(&self) -> Option<f64> {
        if self.hours_imputed {
            None
        } else {
            self.working_hours
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Provenance {
    Ingested,
    Synthetic,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    pub rows: Vec<Listing>,
    pub schema_version: u32,
    pub provenance: Provenance,
}

impl Dataset {
    pub fn new(rows: Vec<Listing>, provenance: Provenance) -> Self {
        Dataset {
            rows,
            schema_version: SCHEMA_VERSION,
            provenance,
        }
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub(crate) fn with_rows(&self, rows: Vec<Listing>) -> Dataset {
        Dataset {
            rows,
            schema_version: self.schema_version,
            provenance: self.provenance,
        }
    }

    /// Distinct model labels in first-appearance order.
    pub fn models(&self) -> Vec<&str> {
        let mut seen = std::collections::HashSet::new();
        self.rows
            .iter()
            .filter(|r| seen.insert(r.model.as_str()))
            .map(|r| r.model.as_str())
            .collect()
    }
}
