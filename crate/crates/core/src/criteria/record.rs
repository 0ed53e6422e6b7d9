use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use super::{mean, sample_std, ExpertiseLevel, ResponseCategory};
use crate::error::{Error, Result};

/// Raw measurements of one train/evaluate cycle.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Repetition {
    /// Holdout MAPE.
    pub corr: f64,
    /// Training seconds.
    pub comp: f64,
    /// Mean seconds per single-row prediction.
    pub resp_seconds: f64,
}

impl Repetition {
    pub fn category(&self) -> ResponseCategory {
        ResponseCategory::from_seconds(self.resp_seconds)
    }
}

/// Criteria of one (method, feature subset) pair, aggregated over repetitions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CriteriaRecord {
    pub method: String,
    pub subset: String,
    pub s_corr: f64,
    pub s_comp: f64,
    pub s_resp: ResponseCategory,
    pub resp_seconds: f64,
    pub s_exp: ExpertiseLevel,
    /// Sample standard deviation of `corr` over repetitions; 0 for a single run.
    pub s_repr: f64,
    pub repetitions: Vec<Repetition>,
}

impl CriteriaRecord {
    pub fn from_repetitions(
        method: impl Into<String>,
        subset: impl Into<String>,
        expertise: ExpertiseLevel,
        repetitions: Vec<Repetition>,
    ) -> Result<Self> {
        if repetitions.is_empty() {
            return Err(Error::TooFewRepetitions(0));
        }
        for r in &repetitions {
            if !(r.corr >= 0.0 && r.comp >= 0.0 && r.resp_seconds >= 0.0) {
                return Err(Error::InvalidData(format!("negative or missing measurement {r:?}")));
            }
        }
        let corr: Vec<f64> = repetitions.iter().map(|r| r.corr).collect();
        let resp_seconds = mean(&repetitions.iter().map(|r| r.resp_seconds).collect::<Vec<_>>());
        Ok(CriteriaRecord {
            method: method.into(),
            subset: subset.into(),
            s_corr: mean(&corr),
            s_comp: mean(&repetitions.iter().map(|r| r.comp).collect::<Vec<_>>()),
            s_resp: ResponseCategory::from_seconds(resp_seconds),
            resp_seconds,
            s_exp: expertise,
            s_repr: sample_std(&corr),
            repetitions,
        })
    }

    pub fn comp_std(&self) -> f64 {
        sample_std(&self.repetitions.iter().map(|r| r.comp).collect::<Vec<_>>())
    }
}

pub(crate) const TABLE_HEADER: [&str; 9] = [
    "method",
    "subset",
    "correctness",
    "correctness_std",
    "complexity",
    "complexity_std",
    "expertise",
    "responsiveness",
    "reproducibility",
];

pub(crate) fn table_fields(r: &CriteriaRecord) -> Vec<String> {
    vec![
        r.method.clone(),
        r.subset.clone(),
        format!("{:.6}", r.s_corr),
        format!("{:.6}", r.s_repr),
        format!("{:.4}", r.s_comp),
        format!("{:.4}", r.comp_std()),
        r.s_exp.level().to_string(),
        r.s_resp.to_string(),
        format!("{:.6}", r.s_repr),
    ]
}

/// One summary row per record with an empty `mes` column.
pub fn write_table_csv<W: Write>(records: &[CriteriaRecord], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let mut header: Vec<&str> = TABLE_HEADER.to_vec();
    header.extend(["mes", "mes_std"]);
    w.write_record(&header)?;
    for r in records {
        let mut fields = table_fields(r);
        fields.extend([String::new(), String::new()]);
        w.write_record(&fields)?;
    }
    w.flush().map_err(|e| Error::io("<table csv>", e))?;
    Ok(())
}

#[derive(Debug, Serialize, Deserialize)]
struct RepetitionRow {
    method: String,
    subset: String,
    repetition: usize,
    correctness: f64,
    complexity: f64,
    responsiveness_seconds: f64,
    expertise: u8,
}

/// Long format: one row per (method, subset, repetition).
pub fn write_criteria_csv<W: Write>(records: &[CriteriaRecord], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for r in records {
        for (i, rep) in r.repetitions.iter().enumerate() {
            w.serialize(RepetitionRow {
                method: r.method.clone(),
                subset: r.subset.clone(),
                repetition: i,
                correctness: rep.corr,
                complexity: rep.comp,
                responsiveness_seconds: rep.resp_seconds,
                expertise: r.s_exp.level(),
            })?;
        }
    }
    w.flush().map_err(|e| Error::io("<criteria csv>", e))?;
    Ok(())
}

/// Inverse of [`write_criteria_csv`]; records keep first-appearance order.
pub fn read_criteria_csv<R: Read>(input: R) -> Result<Vec<CriteriaRecord>> {
    let mut groups: Vec<((String, String), u8, Vec<(usize, Repetition)>)> = Vec::new();
    for row in csv::Reader::from_reader(input).deserialize() {
        let row: RepetitionRow = row?;
        let key = (row.method, row.subset);
        let rep = Repetition {
            corr: row.correctness,
            comp: row.complexity,
            resp_seconds: row.responsiveness_seconds,
        };
        match groups.iter_mut().find(|g| g.0 == key) {
            Some(g) if g.1 != row.expertise => {
                return Err(Error::Config(format!(
                    "{}/{}: inconsistent expertise levels {} and {}",
                    key.0, key.1, g.1, row.expertise
                )))
            }
            Some(g) => g.2.push((row.repetition, rep)),
            None => groups.push((key, row.expertise, vec![(row.repetition, rep)])),
        }
    }
    groups
        .into_iter()
        .map(|((method, subset), exp, mut reps)| {
            reps.sort_by_key(|(i, _)| *i);
            CriteriaRecord::from_repetitions(
                method,
                subset,
                ExpertiseLevel::new(exp)?,
                reps.into_iter().map(|(_, r)| r).collect(),
            )
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn record(method: &str, corr: &[f64]) -> CriteriaRecord {
        let reps = corr
            .iter()
            .map(|&c| Repetition {
                corr: c,
                comp: 2.0,
                resp_seconds: 1e-4,
            })
            .collect();
        CriteriaRecord::from_repetitions(method, "full", ExpertiseLevel::MANUAL, reps).unwrap()
    }

    #[test]
    fn aggregates() {
        let r = record("forest", &[0.1, 0.2]);
        assert!((r.s_corr - 0.15).abs() < 1e-12);
        assert!((r.s_repr - 0.070710678).abs() < 1e-8);
        assert_eq!(r.s_resp, ResponseCategory::RealTime);
        assert_eq!(record("knn", &[0.3]).s_repr, 0.0);
    }

    #[test]
    fn criteria_csv_round_trip() {
        let records = vec![record("forest", &[0.1, 0.2, 0.15]), record("knn", &[0.3, 0.25])];
        let mut buf = Vec::new();
        write_criteria_csv(&records, &mut buf).unwrap();
        let back = read_criteria_csv(buf.as_slice()).unwrap();
        assert_eq!(back, records);
    }
}
