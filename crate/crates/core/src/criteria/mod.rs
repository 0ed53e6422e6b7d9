//! Evaluation criteria: correctness, complexity, responsiveness, expertise
//! and reproducibility, plus the regression metrics and a pooled t-test.

mod record;

use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, StudentsT};

use crate::error::{Error, Result};
use crate::matrix::Matrix;

pub use record::{read_criteria_csv, write_criteria_csv, write_table_csv, CriteriaRecord, Repetition};
pub(crate) use record::{table_fields, TABLE_HEADER};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ErrorKind {
    #[default]
    Mape,
    Mae,
    Rmse,
}

impl ErrorKind {
    pub fn as_str(self) -> &'static str {
        match self {
            ErrorKind::Mape => "mape",
            ErrorKind::Mae => "mae",
            ErrorKind::Rmse => "rmse",
        }
    }
}

impl fmt::Display for ErrorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ErrorKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "mape" => Ok(ErrorKind::Mape),
            "mae" => Ok(ErrorKind::Mae),
            "rmse" => Ok(ErrorKind::Rmse),
            _ => Err(Error::Config(format!("unknown error kind {s:?}"))),
        }
    }
}

pub fn regression_error(y: &[f64], yhat: &[f64], kind: ErrorKind) -> Result<f64> {
    if y.len() != yhat.len() {
        return Err(Error::LengthMismatch(y.len(), yhat.len()));
    }
    if y.is_empty() {
        return Err(Error::InvalidData("cannot score an empty prediction".into()));
    }
    let n = y.len() as f64;
    Ok(match kind {
        ErrorKind::Mape => {
            let mut total = 0.0;
            for (i, (t, p)) in y.iter().zip(yhat).enumerate() {
                if *t == 0.0 {
                    return Err(Error::ZeroTrueValue(i));
                }
                total += ((t - p) / t).abs();
            }
            total / n
        }
        ErrorKind::Mae => y.iter().zip(yhat).map(|(t, p)| (t - p).abs()).sum::<f64>() / n,
        ErrorKind::Rmse => (y.iter().zip(yhat).map(|(t, p)| (t - p).powi(2)).sum::<f64>() / n).sqrt(),
    })
}

/// Runs `train` once and returns its output with the elapsed wall-clock
/// seconds on a monotonic clock.
pub fn measure_training<T, F>(train: F) -> Result<(T, f64)>
where
    F: FnOnce() -> Result<T>,
{
    let start = Instant::now();
    let out = train()?;
    Ok((out, start.elapsed().as_secs_f64()))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ResponseCategory {
    RealTime,
    Fast,
    Slow,
}

impl ResponseCategory {
    pub const REAL_TIME_LIMIT: f64 = 0.1;
    pub const FAST_LIMIT: f64 = 1.0;

    /// Half-open bands: `[0, 0.1)`, `[0.1, 1)`, `[1, inf)`.
    pub fn from_seconds(s: f64) -> Self {
        if s < Self::REAL_TIME_LIMIT {
            ResponseCategory::RealTime
        } else if s < Self::FAST_LIMIT {
            ResponseCategory::Fast
        } else {
            ResponseCategory::Slow
        }
    }

    pub fn ordinal(self) -> f64 {
        match self {
            ResponseCategory::RealTime => 0.0,
            ResponseCategory::Fast => 1.0,
            ResponseCategory::Slow => 2.0,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            ResponseCategory::RealTime => "real_time",
            ResponseCategory::Fast => "fast",
            ResponseCategory::Slow => "slow",
        }
    }
}

impl fmt::Display for ResponseCategory {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ResponseCategory {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "real_time" | "real-time" => Ok(ResponseCategory::RealTime),
            "fast" => Ok(ResponseCategory::Fast),
            "slow" => Ok(ResponseCategory::Slow),
            _ => Err(Error::Config(format!("unknown responsiveness {s:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Responsiveness {
    pub mean_seconds: f64,
    pub category: ResponseCategory,
}

/// Times `predict` on each row of `x` separately and averages.
pub fn measure_responsiveness<F>(mut predict: F, x: &Matrix) -> Result<Responsiveness>
where
    F: FnMut(&Matrix) -> Result<Vec<f64>>,
{
    if x.nrows() == 0 {
        return Err(Error::TooFewRows { needed: 1, got: 0 });
    }
    let mut total = 0.0;
    for i in 0..x.nrows() {
        let row = x.select_rows(&[i]);
        let start = Instant::now();
        predict(&row)?;
        total += start.elapsed().as_secs_f64();
    }
    let mean_seconds = total / x.nrows() as f64;
    Ok(Responsiveness {
        mean_seconds,
        category: ResponseCategory::from_seconds(mean_seconds),
    })
}

pub(crate) fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

/// Sample (n - 1) standard deviation; zero for fewer than two values.
pub(crate) fn sample_std(v: &[f64]) -> f64 {
    if v.len() < 2 {
        return 0.0;
    }
    let m = mean(v);
    (v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (v.len() - 1) as f64).sqrt()
}

/// Standard deviation of correctness across repetitions.
pub fn reproducibility(per_repetition_corr: &[f64]) -> Result<f64> {
    if per_repetition_corr.len() < 2 {
        return Err(Error::TooFewRepetitions(per_repetition_corr.len()));
    }
    Ok(sample_std(per_repetition_corr))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TTest {
    pub t: f64,
    pub df: f64,
    /// Two-sided critical value; `None` for degenerate inputs.
    pub critical: Option<f64>,
    pub significant: bool,
    /// Too few values or zero pooled variance; `t` is 0 and the result is
    /// reported as not significant.
    pub degenerate: bool,
}

/// Two-sided two-sample Student's t-test with pooled variance.
pub fn t_test(a: &[f64], b: &[f64], alpha: f64) -> Result<TTest> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::InvalidAlpha(alpha));
    }
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let df = na + nb - 2.0;
    let degenerate = TTest {
        t: 0.0,
        df: df.max(0.0),
        critical: None,
        significant: false,
        degenerate: true,
    };
    if a.len() < 2 || b.len() < 2 {
        return Ok(degenerate);
    }
    let (ma, mb) = (mean(a), mean(b));
    let ss = |v: &[f64], m: f64| v.iter().map(|x| (x - m).powi(2)).sum::<f64>();
    let pooled = (ss(a, ma) + ss(b, mb)) / df;
    if pooled <= 0.0 {
        return Ok(degenerate);
    }
    let t = (ma - mb) / (pooled * (1.0 / na + 1.0 / nb)).sqrt();
    let dist = StudentsT::new(0.0, 1.0, df).map_err(|e| Error::InvalidData(e.to_string()))?;
    let critical = dist.inverse_cdf(1.0 - alpha / 2.0);
    Ok(TTest {
        t,
        df,
        critical: Some(critical),
        significant: t.abs() > critical,
        degenerate: false,
    })
}

/// Knowledge level required to build a solution, from 1 (collect data) to
/// 6 (create models from scratch).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "u8", into = "u8")]
pub struct ExpertiseLevel(u8);

impl ExpertiseLevel {
    /// Hand-built and tuned pipelines.
    pub const MANUAL: ExpertiseLevel = ExpertiseLevel(5);
    /// Automated frameworks driven by a domain expert.
    pub const AUTOMATED: ExpertiseLevel = ExpertiseLevel(2);

    pub fn new(level: u8) -> Result<Self> {
        if (1..=6).contains(&level) {
            Ok(ExpertiseLevel(level))
        } else {
            Err(Error::Config(format!("expertise level {level} outside 1..=6")))
        }
    }

    pub fn level(self) -> u8 {
        self.0
    }

    pub fn description(self) -> &'static str {
        match self.0 {
            1 => "collect, describe and explore data",
            2 => "verify, select and clean data; understand distributions, outliers and missing values",
            3 => "construct and integrate data; derive new features",
            4 => "format data, select a model and design tests using established libraries",
            5 => "assess models, their hyperparameters and performance metrics",
            _ => "create models from scratch and optimize them with search algorithms",
        }
    }
}

impl TryFrom<u8> for ExpertiseLevel {
    type Error = Error;

    fn try_from(v: u8) -> Result<Self> {
        ExpertiseLevel::new(v)
    }
}

impl From<ExpertiseLevel> for u8 {
    fn from(e: ExpertiseLevel) -> u8 {
        e.0
    }
}
