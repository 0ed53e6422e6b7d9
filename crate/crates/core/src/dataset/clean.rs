//! Cleaning steps: incomplete-row removal, duplicate elimination, outlier
//! filtering, working-hours imputation and the rare-model filter.

use std::cmp::Ordering;
use std::collections::{BTreeMap, HashMap};

use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal as StdNormal};

use super::{Dataset, Listing};
use crate::error::{Error, Result};

/// Fields usable in duplicate key sets.
pub const KEY_FIELDS: [&str; 9] = [
    "brand",
    "model",
    "series",
    "construction_year",
    "working_hours",
    "location",
    "price",
    "source_id",
    "observed_at",
];

pub const DEFAULT_LIFETIME_CAP_HOURS: f64 = 60_000.0;
pub const DEFAULT_MIN_MODEL_COUNT: usize = 150;

/// `[{source_id}, {model, series, construction_year, working_hours, price}]`
pub fn default_key_sets() -> Vec<Vec<String>> {
    vec![
        vec!["source_id".into()],
        ["model", "series", "construction_year", "working_hours", "price"]
            .into_iter()
            .map(String::from)
            .collect(),
    ]
}

/// Drops rows missing model, construction year or location.
pub fn drop_incomplete(d: &Dataset) -> (Dataset, usize) {
    let rows: Vec<Listing> = d
        .rows
        .iter()
        .filter(|r| !r.model.is_empty() && !r.location.is_empty() && r.construction_year.is_some())
        .cloned()
        .collect();
    let dropped = d.len() - rows.len();
    (d.with_rows(rows), dropped)
}

fn key_part(r: &Listing, field: &str) -> String {
    // Distinct prefixes keep `None` from colliding with any real value.
    fn opt<T: ToString>(v: Option<T>) -> String {
        v.map_or_else(|| "\0".to_string(), |x| format!("={}", x.to_string()))
    }
    match field {
        "brand" => format!("={}", r.brand),
        "model" => format!("={}", r.model),
        "series" => opt(r.series.as_ref()),
        "construction_year" => opt(r.construction_year),
        "working_hours" => opt(r.working_hours.map(f64::to_bits)),
        "location" => format!("={}", r.location),
        "price" => format!("={}", r.price.to_bits()),
        "source_id" => format!("={}", r.source_id),
        "observed_at" => opt(r.observed_at),
        _ => unreachable!("validated before use"),
    }
}

/// Earliest observation wins; undated rows lose to dated ones; ties go to
/// the lexicographically smallest source id.
fn survivor_order(a: &Listing, b: &Listing) -> Ordering {
    let date = match (a.observed_at, b.observed_at) {
        (Some(x), Some(y)) => x.cmp(&y),
        (Some(_), None) => Ordering::Less,
        (None, Some(_)) => Ordering::Greater,
        (None, None) => Ordering::Equal,
    };
    date.then_with(|| a.source_id.cmp(&b.source_id))
}

/// Collapses rows agreeing on every field of a key set, one key set at a
/// time. Survivors keep their original relative order.
pub fn deduplicate(d: &Dataset, key_sets: &[Vec<String>]) -> Result<Dataset> {
    for set in key_sets {
        for f in set {
            if !KEY_FIELDS.contains(&f.as_str()) {
                return Err(Error::UnknownFeature(f.clone()));
            }
        }
    }
    let mut rows = d.rows.clone();
    for set in key_sets {
        if set.is_empty() {
            continue;
        }
        let mut best: HashMap<Vec<String>, usize> = HashMap::new();
        for (i, r) in rows.iter().enumerate() {
            let key: Vec<String> = set.iter().map(|f| key_part(r, f)).collect();
            best.entry(key)
                .and_modify(|j| {
                    if survivor_order(r, &rows[*j]) == Ordering::Less {
                        *j = i;
                    }
                })
                .or_insert(i);
        }
        let mut keep = vec![false; rows.len()];
        for &i in best.values() {
            keep[i] = true;
        }
        rows = rows.into_iter().zip(keep).filter_map(|(r, k)| k.then_some(r)).collect();
    }
    Ok(d.with_rows(rows))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct OutlierConfig {
    /// Two-sided confidence level of the plausibility interval.
    pub confidence: f64,
    /// Per-model working-hours cap; models not listed use `default_lifetime_cap`.
    pub lifetime_caps: BTreeMap<String, f64>,
    pub default_lifetime_cap: Option<f64>,
}

impl Default for OutlierConfig {
    fn default() -> Self {
        OutlierConfig {
            confidence: 0.99,
            lifetime_caps: BTreeMap::new(),
            default_lifetime_cap: Some(DEFAULT_LIFETIME_CAP_HOURS),
        }
    }
}

impl OutlierConfig {
    pub fn with_confidence(confidence: f64) -> Self {
        OutlierConfig {
            confidence,
            ..Default::default()
        }
    }

    fn cap_for(&self, model: &str) -> Option<f64> {
        self.lifetime_caps.get(model).copied().or(self.default_lifetime_cap)
    }

    /// Two-sided standard-normal quantile, 2.5758 at 0.99.
    pub fn z_threshold(&self) -> f64 {
        StdNormal::standard().inverse_cdf(1.0 - (1.0 - self.confidence) / 2.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RejectReason {
    LifetimeCap,
    PriceZScore,
    HoursZScore,
}

impl RejectReason {
    pub fn as_str(self) -> &'static str {
        match self {
            RejectReason::LifetimeCap => "lifetime_cap",
            RejectReason::PriceZScore => "price_zscore",
            RejectReason::HoursZScore => "hours_zscore",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Rejected {
    pub listing: Listing,
    pub reason: RejectReason,
}

fn mean_std(values: impl Iterator<Item = f64> + Clone) -> (f64, f64, usize) {
    let n = values.clone().count();
    if n == 0 {
        return (0.0, 0.0, 0);
    }
    let mean = values.clone().sum::<f64>() / n as f64;
    let var = values.map(|v| (v - mean).powi(2)).sum::<f64>() / n as f64;
    (mean, var.sqrt(), n)
}

fn zscore(v: f64, mean: f64, std: f64) -> f64 {
    if std > 0.0 {
        (v - mean) / std
    } else {
        0.0
    }
}

/// Per-model plausibility filter.
///
/// Observed working hours above the model's lifetime cap are rejected first.
/// Then, within each model group of at least three rows, rows whose price or
/// observed working hours lie outside the two-sided normal interval at
/// `confidence` (population z-score) are rejected. The z-score pass is repeated
/// on the survivors until nothing changes, so the result is a fixed point and
/// filtering twice equals filtering once. Imputed hours take no part in either
/// test.
pub fn filter_outliers(d: &Dataset, cfg: &OutlierConfig) -> (Dataset, Vec<Rejected>) {
    let threshold = cfg.z_threshold();
    let mut status: Vec<Option<RejectReason>> = vec![None; d.len()];

    for (i, r) in d.rows.iter().enumerate() {
        if let (Some(h), Some(cap)) = (r.observed_hours(), cfg.cap_for(&r.model)) {
            if h > cap {
                status[i] = Some(RejectReason::LifetimeCap);
            }
        }
    }

    let mut groups: BTreeMap<&str, Vec<usize>> = BTreeMap::new();
    for (i, r) in d.rows.iter().enumerate() {
        groups.entry(r.model.as_str()).or_default().push(i);
    }

    for members in groups.values() {
        loop {
            let alive: Vec<usize> = members.iter().copied().filter(|&i| status[i].is_none()).collect();
            if alive.len() < 3 {
                break;
            }
            let prices = alive.iter().map(|&i| d.rows[i].price);
            let (pm, ps, _) = mean_std(prices);
            let hours = alive.iter().filter_map(|&i| d.rows[i].observed_hours());
            let (hm, hs, hn) = mean_std(hours);

            let mut changed = false;
            for &i in &alive {
                let r = &d.rows[i];
                if zscore(r.price, pm, ps).abs() > threshold {
                    status[i] = Some(RejectReason::PriceZScore);
                    changed = true;
                } else if let Some(h) = r.observed_hours() {
                    if hn >= 3 && zscore(h, hm, hs).abs() > threshold {
                        status[i] = Some(RejectReason::HoursZScore);
                        changed = true;
                    }
                }
            }
            if !changed {
                break;
            }
        }
    }

    let mut kept = Vec::with_capacity(d.len());
    let mut rejected = Vec::new();
    for (r, s) in d.rows.iter().zip(status) {
        match s {
            None => kept.push(r.clone()),
            Some(reason) => rejected.push(Rejected {
                listing: r.clone(),
                reason,
            }),
        }
    }
    (d.with_rows(kept), rejected)
}

pub const MIN_COMPLETE_ROWS: usize = 10;

/// Stochastic regression imputation of missing working hours.
///
/// Fits ordinary least squares of hours on construction year plus model
/// indicators over rows with observed hours (minimum-norm solution, so the
/// intercept/indicator collinearity is harmless). Each missing value becomes
/// the prediction plus `N(0, s²)` noise, where `s` is the residual standard
/// deviation `sqrt(RSS / (n - rank))`, clamped at zero.
pub fn impute_working_hours(d: &Dataset, seed: u64) -> Result<Dataset> {
    let missing: Vec<usize> = (0..d.len()).filter(|&i| d.rows[i].working_hours.is_none()).collect();
    if missing.is_empty() {
        return Ok(d.clone());
    }
    let complete: Vec<usize> = (0..d.len())
        .filter(|&i| d.rows[i].working_hours.is_some() && d.rows[i].construction_year.is_some())
        .collect();
    if complete.len() < MIN_COMPLETE_ROWS {
        return Err(Error::InsufficientCompleteRows {
            needed: MIN_COMPLETE_ROWS,
            found: complete.len(),
        });
    }

    let models: Vec<&str> = {
        let mut seen = std::collections::HashSet::new();
        complete
            .iter()
            .map(|&i| d.rows[i].model.as_str())
            .filter(|m| seen.insert(*m))
            .collect()
    };
    let model_idx: HashMap<&str, usize> = models.iter().enumerate().map(|(i, m)| (*m, i)).collect();
    let year_mean = complete
        .iter()
        .map(|&i| d.rows[i].construction_year.unwrap() as f64)
        .sum::<f64>()
        / complete.len() as f64;
    let width = 2 + models.len();
    let features = |r: &Listing| -> Vec<f64> {
        let mut x = vec![0.0; width];
        x[0] = 1.0;
        x[1] = r.construction_year.map_or(0.0, |y| y as f64 - year_mean);
        if let Some(&k) = model_idx.get(r.model.as_str()) {
            x[2 + k] = 1.0;
        }
        x
    };

    let n = complete.len();
    let mut design = DMatrix::<f64>::zeros(n, width);
    let mut target = DVector::<f64>::zeros(n);
    for (row, &i) in complete.iter().enumerate() {
        for (j, v) in features(&d.rows[i]).into_iter().enumerate() {
            design[(row, j)] = v;
        }
        target[row] = d.rows[i].working_hours.unwrap();
    }
    let svd = design.clone().svd(true, true);
    let tol = f64::EPSILON * n.max(width) as f64 * svd.singular_values.max();
    let rank = svd.rank(tol);
    let coef = svd
        .solve(&target, tol)
        .map_err(|e| Error::InvalidData(format!("imputation least squares failed: {e}")))?;
    let resid = &target - &design * &coef;
    let dof = n.saturating_sub(rank).max(1);
    let sigma = (resid.norm_squared() / dof as f64).sqrt();
    let noise = Normal::new(0.0, sigma).map_err(|e| Error::InvalidData(e.to_string()))?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    let mut rows = d.rows.clone();
    for i in missing {
        let x = features(&rows[i]);
        let pred: f64 = x.iter().zip(coef.iter()).map(|(a, b)| a * b).sum();
        let eps = if sigma > 0.0 { noise.sample(&mut rng) } else { 0.0 };
        rows[i].working_hours = Some((pred + eps).max(0.0));
        rows[i].hours_imputed = true;
    }
    Ok(d.with_rows(rows))
}

/// Keeps rows whose model occurs strictly more than `min_count` times.
pub fn filter_rare_models(d: &Dataset, min_count: usize) -> Dataset {
    let mut counts: HashMap<&str, usize> = HashMap::new();
    for r in &d.rows {
        *counts.entry(r.model.as_str()).or_default() += 1;
    }
    let rows = d
        .rows
        .iter()
        .filter(|r| counts[r.model.as_str()] > min_count)
        .cloned()
        .collect();
    d.with_rows(rows)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CleaningConfig {
    pub key_sets: Vec<Vec<String>>,
    pub outliers: OutlierConfig,
    pub min_model_count: usize,
    pub impute_seed: u64,
}

impl Default for CleaningConfig {
    fn default() -> Self {
        CleaningConfig {
            key_sets: default_key_sets(),
            outliers: OutlierConfig::default(),
            min_model_count: DEFAULT_MIN_MODEL_COUNT,
            impute_seed: 0,
        }
    }
}

#[derive(Debug, Clone)]
pub struct CleanReport {
    pub dataset: Dataset,
    pub dropped_incomplete: usize,
    pub duplicates_removed: usize,
    pub rejected: Vec<Rejected>,
    pub imputed: usize,
    pub rare_removed: usize,
}

/// Incomplete-row drop, dedup, outlier filter, imputation, rare-model filter.
pub fn clean(d: &Dataset, cfg: &CleaningConfig) -> Result<CleanReport> {
    let (complete, dropped_incomplete) = drop_incomplete(d);
    let deduped = deduplicate(&complete, &cfg.key_sets)?;
    let duplicates_removed = complete.len() - deduped.len();
    let (filtered, rejected) = filter_outliers(&deduped, &cfg.outliers);
    let imputed = filtered.rows.iter().filter(|r| r.working_hours.is_none()).count();
    let filled = impute_working_hours(&filtered, cfg.impute_seed)?;
    let dataset = filter_rare_models(&filled, cfg.min_model_count);
    let rare_removed = filled.len() - dataset.len();
    Ok(CleanReport {
        dataset,
        dropped_incomplete,
        duplicates_removed,
        rejected,
        imputed,
        rare_removed,
    })
}
