use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::Dataset;
use crate::error::{Error, Result};
use crate::matrix::select;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum ColumnData {
    /// `None` marks an absent value (e.g. an optional series).
    Categorical(Vec<Option<String>>),
    /// `NaN` marks an absent value.
    Numeric(Vec<f64>),
}

impl ColumnData {
    pub fn len(&self) -> usize {
        match self {
            ColumnData::Categorical(v) => v.len(),
            ColumnData::Numeric(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    fn select(&self, idx: &[usize]) -> ColumnData {
        match self {
            ColumnData::Categorical(v) => ColumnData::Categorical(select(v, idx)),
            ColumnData::Numeric(v) => ColumnData::Numeric(select(v, idx)),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Column {
    pub name: String,
    pub data: ColumnData,
}

/// Raw (unencoded) feature columns of equal length.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureTable {
    columns: Vec<Column>,
    nrows: usize,
}

impl FeatureTable {
    pub fn new(columns: Vec<Column>) -> Result<Self> {
        let nrows = columns.first().map_or(0, |c| c.data.len());
        if let Some(c) = columns.iter().find(|c| c.data.len() != nrows) {
            return Err(Error::SchemaMismatch(format!(
                "column `{}` has {} rows, expected {nrows}",
                c.name,
                c.data.len()
            )));
        }
        Ok(FeatureTable { columns, nrows })
    }

    pub fn nrows(&self) -> usize {
        self.nrows
    }

    pub fn columns(&self) -> &[Column] {
        &self.columns
    }

    pub fn column_names(&self) -> Vec<&str> {
        self.columns.iter().map(|c| c.name.as_str()).collect()
    }

    pub fn select_rows(&self, idx: &[usize]) -> FeatureTable {
        FeatureTable {
            columns: self
                .columns
                .iter()
                .map(|c| Column {
                    name: c.name.clone(),
                    data: c.data.select(idx),
                })
                .collect(),
            nrows: idx.len(),
        }
    }

    /// Renders the table (plus an optional target column) as CSV text with a
    /// header row. Absent values are empty cells.
    pub fn to_csv_string(&self, target: Option<(&str, &[f64])>) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        let mut header: Vec<&str> = self.column_names();
        if let Some((name, _)) = target {
            header.push(name);
        }
        w.write_record(&header)?;
        for i in 0..self.nrows {
            let mut rec: Vec<String> = self
                .columns
                .iter()
                .map(|c| match &c.data {
                    ColumnData::Categorical(v) => v[i].clone().unwrap_or_default(),
                    ColumnData::Numeric(v) if v[i].is_nan() => String::new(),
                    ColumnData::Numeric(v) => v[i].to_string(),
                })
                .collect();
            if let Some((_, y)) = target {
                rec.push(y[i].to_string());
            }
            w.write_record(&rec)?;
        }
        let bytes = w.into_inner().map_err(|e| Error::io("<csv buffer>", e.into_error()))?;
        String::from_utf8(bytes).map_err(|e| Error::SchemaMismatch(e.to_string()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SubsetId {
    Basic,
    BasicSeries,
    BasicLocation,
    Full,
}

impl SubsetId {
    pub const ALL: [SubsetId; 4] = [
        SubsetId::Basic,
        SubsetId::BasicSeries,
        SubsetId::BasicLocation,
        SubsetId::Full,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            SubsetId::Basic => "basic",
            SubsetId::BasicSeries => "basic_series",
            SubsetId::BasicLocation => "basic_location",
            SubsetId::Full => "full",
        }
    }

    /// Feature columns; brand is never a feature.
    pub fn columns(self) -> &'static [&'static str] {
        match self {
            SubsetId::Basic => &["model", "working_hours", "construction_year"],
            SubsetId::BasicSeries => &["model", "working_hours", "construction_year", "series"],
            SubsetId::BasicLocation => &["model", "working_hours", "construction_year", "location"],
            SubsetId::Full => &["model", "working_hours", "construction_year", "series", "location"],
        }
    }
}

impl fmt::Display for SubsetId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for SubsetId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        SubsetId::ALL
            .into_iter()
            .find(|id| id.as_str() == s)
            .ok_or_else(|| Error::UnknownFeature(format!("feature subset {s:?}")))
    }
}

/// Feature table and price target for one subset.
pub fn subset_table(d: &Dataset, id: SubsetId) -> (FeatureTable, Vec<f64>) {
    let columns = id
        .columns()
        .iter()
        .map(|&name| {
            let data = match name {
                "model" => ColumnData::Categorical(d.rows.iter().map(|r| Some(r.model.clone())).collect()),
                "series" => ColumnData::Categorical(d.rows.iter().map(|r| r.series.clone()).collect()),
                "location" => ColumnData::Categorical(d.rows.iter().map(|r| Some(r.location.clone())).collect()),
                "working_hours" => {
                    ColumnData::Numeric(d.rows.iter().map(|r| r.working_hours.unwrap_or(f64::NAN)).collect())
                }
                "construction_year" => ColumnData::Numeric(
                    d.rows
                        .iter()
                        .map(|r| r.construction_year.map_or(f64::NAN, f64::from))
                        .collect(),
                ),
                _ => unreachable!(),
            };
            Column {
                name: name.to_string(),
                data,
            }
        })
        .collect();
    let table = FeatureTable::new(columns).expect("columns built from one dataset");
    let target = d.rows.iter().map(|r| r.price).collect();
    (table, target)
}

pub fn make_subsets(d: &Dataset) -> BTreeMap<SubsetId, (FeatureTable, Vec<f64>)> {
    SubsetId::ALL.into_iter().map(|id| (id, subset_table(d, id))).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::{Listing, Provenance};

    fn tiny(n: usize) -> Dataset {
        let rows = (0..n)
            .map(|i| Listing {
                brand: "Caterpillar".into(),
                model: format!("M{}", i % 2),
                series: None,
                construction_year: Some(2010 + i as i32),
                working_hours: Some(100.0 * i as f64),
                location: "DE".into(),
                price: 1000.0 + i as f64,
                source_id: i.to_string(),
                observed_at: None,
                hours_imputed: false,
            })
            .collect();
        Dataset::new(rows, Provenance::Synthetic)
    }

    #[test]
    fn four_subsets_with_expected_columns() {
        let subsets = make_subsets(&tiny(5));
        assert_eq!(subsets.keys().copied().collect::<Vec<_>>(), SubsetId::ALL.to_vec());
        let (basic, y) = &subsets[&SubsetId::Basic];
        assert_eq!(basic.nrows(), 5);
        assert_eq!(basic.columns().len(), 3);
        assert_eq!(y.len(), 5);
        let mut full = subsets[&SubsetId::Full].0.column_names();
        full.sort();
        let mut expect: Vec<&str> = SubsetId::Basic.columns().to_vec();
        expect.extend(["series", "location"]);
        expect.sort();
        assert_eq!(full, expect);
        assert!(subsets.values().all(|(t, _)| !t.column_names().contains(&"brand")));
    }

    #[test]
    fn subset_ids_parse() {
        for id in SubsetId::ALL {
            assert_eq!(id.as_str().parse::<SubsetId>().unwrap(), id);
        }
        assert!("nope".parse::<SubsetId>().is_err());
    }
}
