//! One-hot encoding of categorical columns and standard scaling of numeric
//! columns, fitted on training rows only.

use serde::{Deserialize, Serialize};

use crate::dataset::{ColumnData, FeatureTable};
use crate::error::{Error, Result};
use crate::matrix::Matrix;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum ColumnEncoder {
    /// Fit-time vocabulary in first-appearance order. Absent and unseen values
    /// encode as an all-zero block.
    OneHot { vocabulary: Vec<String> },
    /// `(x - mean) / std`; `std` is the population standard deviation, stored
    /// as 1.0 for constant columns. Absent values encode as 0 (the mean).
    Standard { mean: f64, std: f64 },
    /// Numeric column passed through untouched (scaling disabled).
    Identity,
}

impl ColumnEncoder {
    fn width(&self) -> usize {
        match self {
            ColumnEncoder::OneHot { vocabulary } => vocabulary.len(),
            ColumnEncoder::Standard { .. } | ColumnEncoder::Identity => 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Preprocessor {
    columns: Vec<(String, ColumnEncoder)>,
}

impl Preprocessor {
    pub fn fit(table: &FeatureTable) -> Result<Self> {
        Self::fit_with(table, true)
    }

    /// `scale_numeric = false` keeps numeric columns as-is (one-hot still applies).
    pub fn fit_with(table: &FeatureTable, scale_numeric: bool) -> Result<Self> {
        if table.nrows() == 0 {
            return Err(Error::EmptyTable);
        }
        let columns = table
            .columns()
            .iter()
            .map(|c| {
                let enc = match &c.data {
                    ColumnData::Categorical(values) => {
                        let mut vocabulary: Vec<String> = Vec::new();
                        for v in values.iter().flatten() {
                            if !vocabulary.contains(v) {
                                vocabulary.push(v.clone());
                            }
                        }
                        ColumnEncoder::OneHot { vocabulary }
                    }
                    ColumnData::Numeric(_) if !scale_numeric => ColumnEncoder::Identity,
                    ColumnData::Numeric(values) => {
                        let present: Vec<f64> = values.iter().copied().filter(|v| !v.is_nan()).collect();
                        let n = present.len().max(1) as f64;
                        let mean = present.iter().sum::<f64>() / n;
                        let var = present.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
                        let std = var.sqrt();
                        ColumnEncoder::Standard {
                            mean,
                            std: if std > 0.0 { std } else { 1.0 },
                        }
                    }
                };
                (c.name.clone(), enc)
            })
            .collect();
        Ok(Preprocessor { columns })
    }

    pub fn output_width(&self) -> usize {
        self.columns.iter().map(|(_, e)| e.width()).sum()
    }

    pub fn encoders(&self) -> &[(String, ColumnEncoder)] {
        &self.columns
    }

    pub fn transform(&self, table: &FeatureTable) -> Result<Matrix> {
        let names = table.column_names();
        if names.len() != self.columns.len() || names.iter().zip(&self.columns).any(|(a, (b, _))| a != b) {
            return Err(Error::SchemaMismatch(format!(
                "table columns {names:?} differ from fitted columns {:?}",
                self.columns.iter().map(|(n, _)| n).collect::<Vec<_>>()
            )));
        }
        let width = self.output_width();
        let mut out = Matrix::zeros(table.nrows(), width);
        let mut offset = 0;
        for (col, (name, enc)) in table.columns().iter().zip(&self.columns) {
            match (&col.data, enc) {
                (ColumnData::Categorical(values), ColumnEncoder::OneHot { vocabulary }) => {
                    for (i, v) in values.iter().enumerate() {
                        if let Some(k) = v.as_ref().and_then(|v| vocabulary.iter().position(|x| x == v)) {
                            out.set(i, offset + k, 1.0);
                        }
                    }
                }
                (ColumnData::Numeric(values), ColumnEncoder::Standard { mean, std }) => {
                    for (i, v) in values.iter().enumerate() {
                        let z = if v.is_nan() { 0.0 } else { (v - mean) / std };
                        out.set(i, offset, z);
                    }
                }
                (ColumnData::Numeric(values), ColumnEncoder::Identity) => {
                    for (i, v) in values.iter().enumerate() {
                        out.set(i, offset, if v.is_nan() { 0.0 } else { *v });
                    }
                }
                _ => {
                    return Err(Error::SchemaMismatch(format!("column `{name}` changed type since fit")));
                }
            }
            offset += enc.width();
        }
        Ok(out)
    }

    pub fn fit_transform(table: &FeatureTable) -> Result<(Self, Matrix)> {
        let p = Self::fit(table)?;
        let m = p.transform(table)?;
        Ok((p, m))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::Column;
    use proptest::prelude::*;

    fn table(cat: &[&str], num: &[f64]) -> FeatureTable {
        FeatureTable::new(vec![
            Column {
                name: "model".into(),
                data: ColumnData::Categorical(cat.iter().map(|s| Some(s.to_string())).collect()),
            },
            Column {
                name: "construction_year".into(),
                data: ColumnData::Numeric(num.to_vec()),
            },
        ])
        .unwrap()
    }

    #[test]
    fn year_mean_and_population_std() {
        let p = Preprocessor::fit(&table(&["A", "B", "A"], &[2010.0, 2012.0, 2014.0])).unwrap();
        match &p.encoders()[1].1 {
            ColumnEncoder::Standard { mean, std } => {
                assert_eq!(*mean, 2012.0);
                assert!((std - (8.0f64 / 3.0).sqrt()).abs() < 1e-12);
            }
            e => panic!("unexpected encoder {e:?}"),
        }
        match &p.encoders()[0].1 {
            ColumnEncoder::OneHot { vocabulary } => assert_eq!(vocabulary, &["A", "B"]),
            e => panic!("unexpected encoder {e:?}"),
        }
    }

    #[test]
    fn single_row_std_guard() {
        let p = Preprocessor::fit(&table(&["A"], &[2010.0])).unwrap();
        assert_eq!(p.encoders()[1].1, ColumnEncoder::Standard { mean: 2010.0, std: 1.0 });
    }

    #[test]
    fn empty_table_rejected() {
        assert!(matches!(Preprocessor::fit(&table(&[], &[])), Err(Error::EmptyTable)));
    }

    #[test]
    fn indicator_blocks() {
        let p = Preprocessor::fit(&table(&["A", "B"], &[1.0, 2.0])).unwrap();
        let m = p.transform(&table(&["A", "C"], &[1.0, 1.0])).unwrap();
        assert_eq!(&m.row(0)[..2], &[1.0, 0.0]);
        assert_eq!(&m.row(1)[..2], &[0.0, 0.0]);
    }

    #[test]
    fn schema_mismatch_detected() {
        let p = Preprocessor::fit(&table(&["A"], &[1.0])).unwrap();
        let other = FeatureTable::new(vec![Column {
            name: "model".into(),
            data: ColumnData::Categorical(vec![Some("A".into())]),
        }])
        .unwrap();
        assert!(matches!(p.transform(&other), Err(Error::SchemaMismatch(_))));
    }

    #[test]
    fn test_statistics_never_consulted() {
        let train = table(&["A", "B", "A"], &[2010.0, 2012.0, 2014.0]);
        let p = Preprocessor::fit(&train).unwrap();
        let shifted = table(&["A", "B", "A"], &[2110.0, 2112.0, 2114.0]);
        let m = p.transform(&shifted).unwrap();
        let std = (8.0f64 / 3.0).sqrt();
        assert!((m.get(0, 2) - 98.0 / std).abs() < 1e-9);
    }

    proptest! {
        #[test]
        fn scaled_columns_have_zero_mean_unit_std(
            rows in prop::collection::vec((0usize..4, -1e4f64..1e4), 2..60)
        ) {
            let cats: Vec<&str> = rows.iter().map(|(c, _)| ["A", "B", "C", "D"][*c]).collect();
            let nums: Vec<f64> = rows.iter().map(|(_, x)| *x).collect();
            let t = table(&cats, &nums);
            let (p, m) = Preprocessor::fit_transform(&t).unwrap();
            let width = p.output_width();
            for i in 0..m.nrows() {
                let block: f64 = m.row(i)[..width - 1].iter().sum();
                prop_assert_eq!(block, 1.0);
            }
            let col = m.col_values(width - 1);
            let n = col.len() as f64;
            let mean = col.iter().sum::<f64>() / n;
            let spread = nums.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
                - nums.iter().cloned().fold(f64::INFINITY, f64::min);
            prop_assert!(mean.abs() < 1e-9);
            if spread > 1e-6 {
                let std = (col.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n).sqrt();
                prop_assert!((std - 1.0).abs() < 1e-9);
            }
        }
    }
}
