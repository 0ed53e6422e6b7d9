//! Seeded synthetic listings with multiplicative depreciation pricing.
//!
//! `price = base(model) * year_rate^age * hours_rate^(hours / 1000)
//!          * series_premium * location_premium * exp(N(0, noise_sigma^2))`
//!
//! Duplicates, missing working hours and 10x price outliers are injected in
//! configured fractions and labelled so cleaning can be scored against them.

use std::collections::BTreeMap;

use chrono::{Duration, NaiveDate};
use rand::seq::{index, IndexedRandom, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::{Dataset, Listing, Provenance};
use crate::error::{Error, Result};

const MODEL_NAMES: [&str; 10] = ["308", "D6", "330", "M318", "966", "320", "950", "140", "D8", "M315"];
const PORTALS: [&str; 7] = [
    "mascus",
    "catused",
    "mobile",
    "machineryline",
    "trademachines",
    "truck1",
    "truckscout24",
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SynthConfig {
    pub n_models: usize,
    pub samples_per_model: usize,
    /// Multiplicative value retained per year of age, in (0, 1].
    pub depreciation_rate_year: f64,
    /// Multiplicative value retained per 1000 working hours, in (0, 1].
    pub depreciation_rate_hours: f64,
    /// Series label to price multiplier. Rows draw a series uniformly from
    /// these keys; `series_absent_frac` of rows carry no series (multiplier 1).
    pub series_premiums: BTreeMap<String, f64>,
    pub series_absent_frac: f64,
    pub location_premiums: BTreeMap<String, f64>,
    /// Standard deviation of the log-price noise.
    pub noise_sigma: f64,
    pub missing_hours_frac: f64,
    pub duplicate_frac: f64,
    pub outlier_frac: f64,
    pub outlier_multiplier: f64,
    /// Base (new-machine) prices are drawn uniformly from this range.
    pub base_price_range: (f64, f64),
    pub year_range: (i32, i32),
    pub reference_year: i32,
    /// Working hours accumulated per year of age, drawn uniformly.
    pub hours_per_year: (f64, f64),
    pub seed: u64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        let series = [("C", 0.85), ("D", 1.0), ("E", 1.15), ("F", 1.3)];
        let locations = [
            ("DE", 1.0),
            ("NL", 1.05),
            ("BE", 0.97),
            ("FR", 1.02),
            ("PL", 0.8),
            ("CH", 1.25),
            ("IT", 0.92),
        ];
        SynthConfig {
            n_models: 10,
            samples_per_model: 300,
            depreciation_rate_year: 0.93,
            depreciation_rate_hours: 0.97,
            series_premiums: series.iter().map(|(k, v)| (k.to_string(), *v)).collect(),
            series_absent_frac: 0.1,
            location_premiums: locations.iter().map(|(k, v)| (k.to_string(), *v)).collect(),
            noise_sigma: 0.06,
            missing_hours_frac: 0.05,
            duplicate_frac: 0.1,
            outlier_frac: 0.05,
            outlier_multiplier: 10.0,
            base_price_range: (40_000.0, 250_000.0),
            year_range: (2008, 2021),
            reference_year: 2022,
            hours_per_year: (400.0, 1600.0),
            seed: 7,
        }
    }
}

impl SynthConfig {
    /// A config with no injected corruption, unit premiums and no noise.
    pub fn noiseless(n_models: usize, samples_per_model: usize, seed: u64) -> Self {
        SynthConfig {
            n_models,
            samples_per_model,
            series_premiums: [("D".to_string(), 1.0)].into_iter().collect(),
            series_absent_frac: 0.0,
            location_premiums: [("DE".to_string(), 1.0)].into_iter().collect(),
            noise_sigma: 0.0,
            missing_hours_frac: 0.0,
            duplicate_frac: 0.0,
            outlier_frac: 0.0,
            seed,
            ..Default::default()
        }
    }

    pub fn base_rows(&self) -> usize {
        self.n_models * self.samples_per_model
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidConfig(msg));
        for (name, v) in [
            ("missing_hours_frac", self.missing_hours_frac),
            ("duplicate_frac", self.duplicate_frac),
            ("outlier_frac", self.outlier_frac),
            ("series_absent_frac", self.series_absent_frac),
        ] {
            if !(0.0..1.0).contains(&v) {
                return bad(format!("{name} = {v} outside [0, 1)"));
            }
        }
        for (name, v) in [
            ("depreciation_rate_year", self.depreciation_rate_year),
            ("depreciation_rate_hours", self.depreciation_rate_hours),
        ] {
            if !(v > 0.0 && v <= 1.0) {
                return bad(format!("{name} = {v} outside (0, 1]"));
            }
        }
        if self.n_models == 0 || self.samples_per_model == 0 {
            return bad("n_models and samples_per_model must be positive".into());
        }
        if !(self.noise_sigma >= 0.0 && self.noise_sigma.is_finite()) {
            return bad(format!("noise_sigma = {}", self.noise_sigma));
        }
        if self.series_premiums.is_empty() || self.location_premiums.is_empty() {
            return bad("series and location premium maps must be non-empty".into());
        }
        if self
            .series_premiums
            .values()
            .chain(self.location_premiums.values())
            .any(|p| !(*p > 0.0 && p.is_finite()))
        {
            return bad("premiums must be positive".into());
        }
        let (lo, hi) = self.base_price_range;
        if !(lo > 0.0 && hi >= lo) {
            return bad(format!("base_price_range ({lo}, {hi})"));
        }
        let (y0, y1) = self.year_range;
        if y0 > y1 || y1 > self.reference_year || y0 < 1950 {
            return bad(format!(
                "year_range ({y0}, {y1}) vs reference year {}",
                self.reference_year
            ));
        }
        let (h0, h1) = self.hours_per_year;
        if !(h0 >= 0.0 && h1 >= h0) {
            return bad(format!("hours_per_year ({h0}, {h1})"));
        }
        if !(self.outlier_multiplier > 0.0) {
            return bad("outlier_multiplier must be positive".into());
        }
        Ok(())
    }

    fn model_name(i: usize) -> String {
        MODEL_NAMES
            .get(i)
            .map_or_else(|| format!("M{}", 400 + i), |s| s.to_string())
    }

    /// Noise-free price for one machine.
    pub fn clean_price(&self, base: f64, age: i32, hours: f64, series: Option<&str>, location: &str) -> f64 {
        let series_p = series.and_then(|s| self.series_premiums.get(s)).copied().unwrap_or(1.0);
        let loc_p = self.location_premiums.get(location).copied().unwrap_or(1.0);
        base * self.depreciation_rate_year.powi(age)
            * self.depreciation_rate_hours.powf(hours / 1000.0)
            * series_p
            * loc_p
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InjectionKind {
    Duplicate,
    PriceOutlier,
    MissingHours,
}

/// A generator-injected defect, identified by the affected row's source id.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Injection {
    pub source_id: String,
    pub kind: InjectionKind,
    /// For duplicates, the source id of the copied row.
    pub original: Option<String>,
}

#[derive(Debug, Clone)]
pub struct SynthOutput {
    pub dataset: Dataset,
    pub injections: Vec<Injection>,
    /// Base price per model.
    pub base_prices: BTreeMap<String, f64>,
}

pub fn synth_generate(cfg: &SynthConfig) -> Result<Dataset> {
    synth_generate_labeled(cfg).map(|o| o.dataset)
}

pub fn synth_generate_labeled(cfg: &SynthConfig) -> Result<SynthOutput> {
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let noise = Normal::new(0.0, cfg.noise_sigma).map_err(|e| Error::InvalidConfig(e.to_string()))?;
    let series_keys: Vec<&String> = cfg.series_premiums.keys().collect();
    let location_keys: Vec<&String> = cfg.location_premiums.keys().collect();
    let start = NaiveDate::from_ymd_opt(cfg.reference_year, 1, 1).expect("valid year");

    let base_prices: BTreeMap<String, f64> = (0..cfg.n_models)
        .map(|m| {
            let (lo, hi) = cfg.base_price_range;
            let p = if hi > lo { rng.random_range(lo..hi) } else { lo };
            (SynthConfig::model_name(m), p.round())
        })
        .collect();

    let mut rows = Vec::with_capacity(cfg.base_rows());
    for m in 0..cfg.n_models {
        let model = SynthConfig::model_name(m);
        let base = base_prices[&model];
        for _ in 0..cfg.samples_per_model {
            let year = rng.random_range(cfg.year_range.0..=cfg.year_range.1);
            let age = cfg.reference_year - year;
            let (h0, h1) = cfg.hours_per_year;
            let per_year = if h1 > h0 { rng.random_range(h0..h1) } else { h0 };
            let hours = (age.max(0) as f64 * per_year).round();
            let series = if rng.random::<f64>() < cfg.series_absent_frac {
                None
            } else {
                Some((*series_keys.choose(&mut rng).unwrap()).clone())
            };
            let location = (*location_keys.choose(&mut rng).unwrap()).clone();
            let eps = if cfg.noise_sigma > 0.0 {
                noise.sample(&mut rng)
            } else {
                0.0
            };
            let price = (cfg.clean_price(base, age, hours, series.as_deref(), &location) * eps.exp())
                .round()
                .max(1.0);
            let portal = PORTALS[rng.random_range(0..PORTALS.len())];
            let observed_at = start + Duration::days(rng.random_range(0..210));
            let id = rows.len();
            rows.push(Listing {
                brand: "Caterpillar".into(),
                model: model.clone(),
                series,
                construction_year: Some(year),
                working_hours: Some(hours),
                location,
                price,
                source_id: format!("{portal}-{id:06}"),
                observed_at: Some(observed_at),
                hours_imputed: false,
            });
        }
    }

    let n = rows.len();
    let count = |frac: f64| ((n as f64) * frac).round() as usize;
    let mut injections = Vec::new();

    for i in index::sample(&mut rng, n, count(cfg.outlier_frac)).into_vec() {
        rows[i].price = (rows[i].price * cfg.outlier_multiplier).round();
        injections.push(Injection {
            source_id: rows[i].source_id.clone(),
            kind: InjectionKind::PriceOutlier,
            original: None,
        });
    }
    for i in index::sample(&mut rng, n, count(cfg.missing_hours_frac)).into_vec() {
        rows[i].working_hours = None;
        injections.push(Injection {
            source_id: rows[i].source_id.clone(),
            kind: InjectionKind::MissingHours,
            original: None,
        });
    }
    let dup_sources = index::sample(&mut rng, n, count(cfg.duplicate_frac)).into_vec();
    for (k, i) in dup_sources.into_iter().enumerate() {
        let mut copy = rows[i].clone();
        let portal = PORTALS[rng.random_range(0..PORTALS.len())];
        copy.source_id = format!("{portal}-dup{k:06}");
        copy.observed_at = rows[i].observed_at.map(|d| d + Duration::days(rng.random_range(1..30)));
        copy.location = (*location_keys.choose(&mut rng).unwrap()).clone();
        injections.push(Injection {
            source_id: copy.source_id.clone(),
            kind: InjectionKind::Duplicate,
            original: Some(rows[i].source_id.clone()),
        });
        rows.push(copy);
    }
    rows.shuffle(&mut rng);

    Ok(SynthOutput {
        dataset: Dataset::new(rows, Provenance::Synthetic),
        injections,
        base_prices,
    })
}
