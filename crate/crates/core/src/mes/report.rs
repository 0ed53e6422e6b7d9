use std::io::Write;

use serde::{Deserialize, Serialize};

use super::{bounds, mes, normalize_table, rank, CriterionKind, PerCriterion, Weights};
use crate::criteria::{self, CriteriaRecord, TTest};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MethodScore {
    pub record: CriteriaRecord,
    /// Criteria of the repetition-averaged record, normalized across methods.
    pub normalized: PerCriterion,
    pub mes_per_repetition: Vec<f64>,
    pub mes_mean: f64,
    pub mes_std: f64,
    /// 1-based position in the ranking.
    pub rank: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SignificanceEntry {
    pub criterion: CriterionKind,
    pub a: String,
    pub b: String,
    pub test: TTest,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MesReport {
    pub subset: String,
    pub weights: Weights,
    /// Methods in ranking order.
    pub methods: Vec<MethodScore>,
    /// `(min, max)` per criterion over the averaged records.
    pub bounds: Vec<(CriterionKind, f64, f64)>,
    pub alpha: f64,
    /// Pairwise t-tests on per-repetition correctness and complexity.
    pub significance: Vec<SignificanceEntry>,
}

fn raw_criteria(r: &CriteriaRecord) -> PerCriterion {
    PerCriterion([
        r.s_corr,
        r.s_comp,
        r.s_resp.ordinal(),
        f64::from(r.s_exp.level()),
        r.s_repr,
    ])
}

fn raw_repetition(r: &CriteriaRecord, i: usize) -> PerCriterion {
    let rep = &r.repetitions[i];
    PerCriterion([
        rep.corr,
        rep.comp,
        rep.category().ordinal(),
        f64::from(r.s_exp.level()),
        r.s_repr,
    ])
}

/// Scores every record of one feature subset. MES is computed for each
/// repetition from that repetition's raw values (normalized across methods)
/// and summarized as mean and sample standard deviation.
pub fn build_report(subset: &str, records: &[CriteriaRecord], weights: &Weights, alpha: f64) -> Result<MesReport> {
    weights.validate()?;
    if records.is_empty() {
        return Err(Error::AllMethodsFailed);
    }
    let reps = records[0].repetitions.len();
    if let Some(r) = records.iter().find(|r| r.repetitions.len() != reps) {
        return Err(Error::InvalidData(format!(
            "{} has {} repetitions, expected {reps}",
            r.method,
            r.repetitions.len()
        )));
    }

    let raw: Vec<PerCriterion> = records.iter().map(raw_criteria).collect();
    let normalized = normalize_table(&raw);
    let mut per_rep = vec![Vec::with_capacity(reps); records.len()];
    for i in 0..reps {
        let rows: Vec<PerCriterion> = records.iter().map(|r| raw_repetition(r, i)).collect();
        for (m, n) in per_rep.iter_mut().zip(normalize_table(&rows)) {
            m.push(mes(&n, weights)?);
        }
    }
    let means: Vec<f64> = per_rep.iter().map(|v| criteria::mean(v)).collect();
    let names: Vec<&str> = records.iter().map(|r| r.method.as_str()).collect();
    let comps: Vec<f64> = records.iter().map(|r| r.s_comp).collect();
    let order = rank(&names, &means, &comps);

    let methods = order
        .iter()
        .enumerate()
        .map(|(pos, &i)| MethodScore {
            record: records[i].clone(),
            normalized: normalized[i],
            mes_per_repetition: per_rep[i].clone(),
            mes_mean: means[i],
            mes_std: criteria::sample_std(&per_rep[i]),
            rank: pos + 1,
        })
        .collect();

    let bounds = CriterionKind::ALL
        .iter()
        .map(|&c| {
            let (lo, hi) = bounds(&raw.iter().map(|r| r.get(c)).collect::<Vec<_>>());
            (c, lo, hi)
        })
        .collect();

    let mut significance = Vec::new();
    for (crit, pick) in [
        (
            CriterionKind::Corr,
            (|r: &criteria::Repetition| r.corr) as fn(&criteria::Repetition) -> f64,
        ),
        (CriterionKind::Comp, |r| r.comp),
    ] {
        for a in 0..records.len() {
            for b in a + 1..records.len() {
                let sa: Vec<f64> = records[a].repetitions.iter().map(pick).collect();
                let sb: Vec<f64> = records[b].repetitions.iter().map(pick).collect();
                significance.push(SignificanceEntry {
                    criterion: crit,
                    a: records[a].method.clone(),
                    b: records[b].method.clone(),
                    test: criteria::t_test(&sa, &sb, alpha)?,
                });
            }
        }
    }

    Ok(MesReport {
        subset: subset.to_string(),
        weights: *weights,
        methods,
        bounds,
        alpha,
        significance,
    })
}

impl MesReport {
    pub fn method(&self, name: &str) -> Option<&MethodScore> {
        self.methods.iter().find(|m| m.record.method == name)
    }

    /// Summary rows in ranking order, with MES and rank columns filled in.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let mut header: Vec<&str> = criteria::TABLE_HEADER.to_vec();
        header.extend(["mes", "mes_std", "rank"]);
        w.write_record(&header)?;
        for m in &self.methods {
            let mut fields = criteria::table_fields(&m.record);
            fields.extend([
                format!("{:.6}", m.mes_mean),
                format!("{:.6}", m.mes_std),
                m.rank.to_string(),
            ]);
            w.write_record(&fields)?;
        }
        w.flush().map_err(|e| Error::io("<mes csv>", e))?;
        Ok(())
    }
}
