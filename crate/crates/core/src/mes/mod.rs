//! Method Evaluation Score: a weighted mean of min-max normalized criteria.
//! Zero is best, one is worst.

mod report;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use report::{build_report, MesReport, MethodScore, SignificanceEntry};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CriterionKind {
    Corr,
    Comp,
    Resp,
    Exp,
    Repr,
}

impl CriterionKind {
    pub const ALL: [CriterionKind; 5] = [
        CriterionKind::Corr,
        CriterionKind::Comp,
        CriterionKind::Resp,
        CriterionKind::Exp,
        CriterionKind::Repr,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            CriterionKind::Corr => "corr",
            CriterionKind::Comp => "comp",
            CriterionKind::Resp => "resp",
            CriterionKind::Exp => "exp",
            CriterionKind::Repr => "repr",
        }
    }

    fn index(self) -> usize {
        self as usize
    }
}

impl fmt::Display for CriterionKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for CriterionKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        CriterionKind::ALL
            .into_iter()
            .find(|c| c.as_str() == s.trim())
            .ok_or_else(|| Error::InvalidWeights(format!("unknown criterion {s:?}")))
    }
}

/// One value per criterion, indexed by [`CriterionKind`].
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct PerCriterion(pub [f64; 5]);

impl PerCriterion {
    pub fn get(&self, c: CriterionKind) -> f64 {
        self.0[c.index()]
    }

    pub fn set(&mut self, c: CriterionKind, v: f64) {
        self.0[c.index()] = v;
    }

    pub fn from_pairs(pairs: &[(CriterionKind, f64)]) -> Self {
        let mut out = PerCriterion::default();
        for &(c, v) in pairs {
            out.set(c, v);
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Weights(pub PerCriterion);

impl Default for Weights {
    fn default() -> Self {
        Weights(PerCriterion::from_pairs(&[
            (CriterionKind::Corr, 50.0),
            (CriterionKind::Exp, 40.0),
            (CriterionKind::Comp, 10.0),
        ]))
    }
}

impl Weights {
    pub fn new(pairs: &[(CriterionKind, f64)]) -> Result<Self> {
        let w = Weights(PerCriterion::from_pairs(pairs));
        w.validate()?;
        Ok(w)
    }

    pub fn get(&self, c: CriterionKind) -> f64 {
        self.0.get(c)
    }

    pub fn sum(&self) -> f64 {
        self.0 .0.iter().sum()
    }

    pub fn validate(&self) -> Result<()> {
        if let Some(c) = CriterionKind::ALL
            .into_iter()
            .find(|&c| !(self.get(c) >= 0.0 && self.get(c).is_finite()))
        {
            return Err(Error::InvalidWeights(format!("{c} = {}", self.get(c))));
        }
        if self.sum() <= 0.0 {
            return Err(Error::ZeroWeightSum);
        }
        Ok(())
    }
}

/// Parses `corr=50,exp=40,comp=10`; unnamed criteria get weight 0.
impl FromStr for Weights {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let mut pairs = Vec::new();
        for part in s.split(',').map(str::trim).filter(|p| !p.is_empty()) {
            let (name, value) = part
                .split_once('=')
                .ok_or_else(|| Error::InvalidWeights(format!("expected name=value, got {part:?}")))?;
            let c: CriterionKind = name.parse()?;
            if pairs.iter().any(|(k, _)| *k == c) {
                return Err(Error::InvalidWeights(format!("{c} given twice")));
            }
            let v: f64 = value
                .trim()
                .parse()
                .map_err(|_| Error::InvalidWeights(format!("{c}: not a number: {value:?}")))?;
            pairs.push((c, v));
        }
        Weights::new(&pairs)
    }
}

impl fmt::Display for Weights {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = CriterionKind::ALL
            .iter()
            .map(|c| format!("{c}={}", self.get(*c)))
            .collect();
        f.write_str(&parts.join(","))
    }
}

/// `(x - min) / (max - min)`; all zeros when every value is equal.
pub fn minmax_normalize(values: &[f64]) -> Vec<f64> {
    let (lo, hi) = bounds(values);
    if hi > lo {
        values.iter().map(|v| (v - lo) / (hi - lo)).collect()
    } else {
        vec![0.0; values.len()]
    }
}

pub(crate) fn bounds(values: &[f64]) -> (f64, f64) {
    values.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
        (lo.min(v), hi.max(v))
    })
}

/// Weighted mean of normalized criteria.
pub fn mes(normalized: &PerCriterion, w: &Weights) -> Result<f64> {
    w.validate()?;
    let num: f64 = CriterionKind::ALL.iter().map(|&c| w.get(c) * normalized.get(c)).sum();
    Ok(num / w.sum())
}

/// Normalizes each criterion across the rows of `raw`, then scores every row.
pub fn mes_table(raw: &[PerCriterion], w: &Weights) -> Result<Vec<f64>> {
    normalize_table(raw).iter().map(|n| mes(n, w)).collect()
}

pub(crate) fn normalize_table(raw: &[PerCriterion]) -> Vec<PerCriterion> {
    let mut out = vec![PerCriterion::default(); raw.len()];
    for c in CriterionKind::ALL {
        let col: Vec<f64> = raw.iter().map(|r| r.get(c)).collect();
        for (o, v) in out.iter_mut().zip(minmax_normalize(&col)) {
            o.set(c, v);
        }
    }
    out
}

/// Indices ordered best first: ascending MES, then lower training time,
/// then method name.
pub fn rank(methods: &[&str], mes: &[f64], comp: &[f64]) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..methods.len()).collect();
    idx.sort_by(|&a, &b| {
        mes[a]
            .total_cmp(&mes[b])
            .then(comp[a].total_cmp(&comp[b]))
            .then(methods[a].cmp(methods[b]))
    });
    idx
}
