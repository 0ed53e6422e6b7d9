//! Hyperparameter values, model specs and the per-algorithm search spaces.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Algorithm {
    Poly,
    Tree,
    Forest,
    Adaboost,
    Svr,
    Knn,
    Mlp,
}

impl Algorithm {
    pub const ALL: [Algorithm; 7] = [
        Algorithm::Poly,
        Algorithm::Tree,
        Algorithm::Forest,
        Algorithm::Adaboost,
        Algorithm::Svr,
        Algorithm::Knn,
        Algorithm::Mlp,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Algorithm::Poly => "poly",
            Algorithm::Tree => "tree",
            Algorithm::Forest => "forest",
            Algorithm::Adaboost => "adaboost",
            Algorithm::Svr => "svr",
            Algorithm::Knn => "knn",
            Algorithm::Mlp => "mlp",
        }
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Algorithm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Algorithm::ALL
            .into_iter()
            .find(|a| a.as_str() == s)
            .ok_or_else(|| Error::InvalidSpec(format!("unknown algorithm {s:?}")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Value {
    Bool(bool),
    Int(i64),
    Float(f64),
    Text(String),
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Bool(b) => write!(f, "{b}"),
            Value::Int(i) => write!(f, "{i}"),
            Value::Float(x) => write!(f, "{x:?}"),
            Value::Text(s) => f.write_str(s),
        }
    }
}

impl From<i64> for Value {
    fn from(v: i64) -> Self {
        Value::Int(v)
    }
}
impl From<f64> for Value {
    fn from(v: f64) -> Self {
        Value::Float(v)
    }
}
impl From<bool> for Value {
    fn from(v: bool) -> Self {
        Value::Bool(v)
    }
}
impl From<&str> for Value {
    fn from(v: &str) -> Self {
        Value::Text(v.to_string())
    }
}

pub type Params = BTreeMap<String, Value>;

/// An algorithm plus a full hyperparameter assignment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelSpec {
    pub algorithm: Algorithm,
    pub params: Params,
}

impl ModelSpec {
    pub fn new(algorithm: Algorithm) -> Self {
        ModelSpec {
            algorithm,
            params: Params::new(),
        }
    }

    pub fn with(mut self, name: &str, value: impl Into<Value>) -> Self {
        self.params.insert(name.to_string(), value.into());
        self
    }

    /// `name=value` pairs joined by `;`, in name order.
    pub fn flat_pairs(&self) -> String {
        self.params
            .iter()
            .map(|(k, v)| format!("{k}={v}"))
            .collect::<Vec<_>>()
            .join(";")
    }

    pub fn int(&self, name: &str) -> Result<i64> {
        match self.params.get(name) {
            Some(Value::Int(v)) => Ok(*v),
            Some(other) => Err(Error::InvalidSpec(format!("{name} must be an integer, got {other}"))),
            None => Err(Error::InvalidSpec(format!("{} requires `{name}`", self.algorithm))),
        }
    }

    pub fn float(&self, name: &str) -> Result<f64> {
        match self.params.get(name) {
            Some(Value::Float(v)) => Ok(*v),
            Some(Value::Int(v)) => Ok(*v as f64),
            Some(other) => Err(Error::InvalidSpec(format!("{name} must be a number, got {other}"))),
            None => Err(Error::InvalidSpec(format!("{} requires `{name}`", self.algorithm))),
        }
    }

    pub fn text(&self, name: &str) -> Result<&str> {
        match self.params.get(name) {
            Some(Value::Text(v)) => Ok(v),
            Some(other) => Err(Error::InvalidSpec(format!("{name} must be text, got {other}"))),
            None => Err(Error::InvalidSpec(format!("{} requires `{name}`", self.algorithm))),
        }
    }

    pub fn boolean(&self, name: &str) -> Result<bool> {
        match self.params.get(name) {
            Some(Value::Bool(v)) => Ok(*v),
            Some(other) => Err(Error::InvalidSpec(format!("{name} must be a boolean, got {other}"))),
            None => Err(Error::InvalidSpec(format!("{} requires `{name}`", self.algorithm))),
        }
    }
}

impl fmt::Display for ModelSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}({})", self.algorithm, self.flat_pairs())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Domain {
    Choice(Vec<Value>),
    /// Uniform integer in `[low, high)`.
    RandInt {
        low: i64,
        high: i64,
    },
}

impl Domain {
    fn contains(&self, v: &Value) -> bool {
        match (self, v) {
            (Domain::Choice(options), v) => options.iter().any(|o| match (o, v) {
                (Value::Float(a), Value::Int(b)) => *a == *b as f64,
                (a, b) => a == b,
            }),
            (Domain::RandInt { low, high }, Value::Int(x)) => (*low..*high).contains(x),
            _ => false,
        }
    }

    fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Value {
        match self {
            Domain::Choice(options) => options[rng.random_range(0..options.len())].clone(),
            Domain::RandInt { low, high } => Value::Int(rng.random_range(*low..*high)),
        }
    }
}

/// The search space of one algorithm; an ordered list of named domains.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HyperSpace {
    pub algorithm: Algorithm,
    pub params: Vec<(String, Domain)>,
}

fn choice<T: Into<Value> + Clone>(values: &[T]) -> Domain {
    Domain::Choice(values.iter().cloned().map(Into::into).collect())
}

impl HyperSpace {
    /// The tuning grid for `algorithm`. `column_count` is the encoded feature
    /// width, which bounds the forest's `max_features`.
    pub fn for_algorithm(algorithm: Algorithm, column_count: usize) -> Self {
        let depth = ("max_depth".to_string(), choice(&[0i64, 5, 10, 15, 20]));
        let criterion = (
            "criterion".to_string(),
            choice(&["squared_error", "absolute_error", "poisson"]),
        );
        let params: Vec<(String, Domain)> = match algorithm {
            Algorithm::Poly => vec![("degree".into(), choice(&[1i64, 2, 3, 4]))],
            Algorithm::Tree => vec![depth, criterion],
            Algorithm::Forest => vec![
                depth,
                criterion,
                ("n_estimators".into(), Domain::RandInt { low: 1, high: 200 }),
                (
                    "max_features".into(),
                    Domain::RandInt {
                        low: 1,
                        high: (column_count as i64).max(2),
                    },
                ),
                ("min_samples_split".into(), Domain::RandInt { low: 2, high: 11 }),
                ("bootstrap".into(), choice(&[true, false])),
            ],
            Algorithm::Svr => vec![
                ("kernel".into(), choice(&["linear", "poly", "rbf"])),
                ("C".into(), choice(&[0.1, 1.0, 10.0, 100.0, 1000.0])),
                ("epsilon".into(), choice(&[1e-5, 1e-4, 1e-3, 1e-2])),
            ],
            Algorithm::Knn => vec![
                ("n_neighbors".into(), choice(&[2i64, 4, 6, 8, 10])),
                ("weights".into(), choice(&["uniform", "distance"])),
                ("p".into(), choice(&[1i64, 2, 3])),
            ],
            Algorithm::Adaboost => vec![("n_estimators".into(), Domain::RandInt { low: 1, high: 200 })],
            Algorithm::Mlp => vec![
                ("hidden_layer_size".into(), choice(&[1i64, 3, 5, 7, 9])),
                ("learning_rate".into(), choice(&[1e-3])),
                ("activation".into(), choice(&["relu"])),
                ("solver".into(), choice(&["adam"])),
            ],
        };
        HyperSpace { algorithm, params }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> ModelSpec {
        ModelSpec {
            algorithm: self.algorithm,
            params: self
                .params
                .iter()
                .map(|(name, dom)| (name.clone(), dom.sample(rng)))
                .collect(),
        }
    }

    /// Number of distinct assignments, or `None` when it overflows `u64`.
    pub fn cardinality(&self) -> Option<u64> {
        self.params.iter().try_fold(1u64, |acc, (_, d)| {
            let n = match d {
                Domain::Choice(v) => v.len() as u64,
                Domain::RandInt { low, high } => (high - low).max(0) as u64,
            };
            acc.checked_mul(n)
        })
    }

    pub fn validate(&self, spec: &ModelSpec) -> Result<()> {
        if spec.algorithm != self.algorithm {
            return Err(Error::InvalidSpec(format!(
                "spec is for {}, space is for {}",
                spec.algorithm, self.algorithm
            )));
        }
        for name in spec.params.keys() {
            if !self.params.iter().any(|(n, _)| n == name) {
                return Err(Error::InvalidSpec(format!(
                    "{} has no hyperparameter `{name}`",
                    self.algorithm
                )));
            }
        }
        for (name, dom) in &self.params {
            match spec.params.get(name) {
                None => return Err(Error::InvalidSpec(format!("{} requires `{name}`", self.algorithm))),
                Some(v) if !dom.contains(v) => {
                    return Err(Error::InvalidSpec(format!(
                        "{}: `{name}` = {v} outside {dom:?}",
                        self.algorithm
                    )))
                }
                Some(_) => {}
            }
        }
        Ok(())
    }
}
