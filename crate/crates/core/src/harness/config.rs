//! Benchmark configuration, read from TOML.
//!
//! ```toml
//! seed = 42
//! repetitions = 5
//! test_frac = 0.1
//! subsets = ["basic", "basic_series", "basic_location", "full"]
//! weights = "corr=50,exp=40,comp=10"
//! alpha = 0.05
//! output_dir = "bench-out"
//!
//! [dataset]
//! source = "synth"          # or "csv" with `path = "listings.csv"`
//! clean = true
//! [dataset.synth]
//! n_models = 10
//! samples_per_model = 300
//!
//! [search]
//! n_iter = 60
//! k_folds = 5
//!
//! [[methods]]
//! kind = "manual"
//! algorithm = "forest"
//!
//! [[methods]]
//! kind = "automl_lite"
//! budget_seconds = 1800.0   # or budget_iterations = 30
//!
//! [[methods]]
//! kind = "external"
//! name = "flaml"
//! command = ["python3", "adapter.py", "--framework", "flaml"]
//! budget_seconds = 1800.0
//! ```

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::criteria::ErrorKind;
use crate::dataset::{CleaningConfig, SubsetId, SynthConfig};
use crate::error::{Error, Result};
use crate::mes::Weights;
use crate::regressors::Algorithm;
use crate::search::{AutomlConfig, Budget, SearchConfig};

pub const DEFAULT_AUTOML_BUDGET_SECONDS: f64 = 1800.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "source", rename_all = "snake_case")]
pub enum DatasetSource {
    Csv {
        path: PathBuf,
        #[serde(default)]
        clean: bool,
        #[serde(default)]
        cleaning: CleaningConfig,
    },
    Synth {
        #[serde(default)]
        synth: SynthConfig,
        #[serde(default = "yes")]
        clean: bool,
        #[serde(default)]
        cleaning: CleaningConfig,
    },
}

fn yes() -> bool {
    true
}

impl Default for DatasetSource {
    fn default() -> Self {
        DatasetSource::Synth {
            synth: SynthConfig::default(),
            clean: true,
            cleaning: CleaningConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum MethodConfig {
    /// One of the seven regressors, tuned by random search.
    Manual { algorithm: Algorithm },
    /// The built-in budgeted algorithm-plus-hyperparameter search.
    AutomlLite {
        #[serde(default)]
        budget_seconds: Option<f64>,
        #[serde(default)]
        budget_iterations: Option<usize>,
        #[serde(default = "default_top_k")]
        ensemble_top_k: usize,
    },
    /// A subprocess speaking the adapter protocol.
    External {
        name: String,
        command: Vec<String>,
        #[serde(default)]
        budget_seconds: Option<f64>,
    },
}

fn default_top_k() -> usize {
    AutomlConfig::default().ensemble_top_k
}

impl MethodConfig {
    pub fn automl(budget: Budget) -> Self {
        let (s, i) = match budget {
            Budget::Seconds(s) => (Some(s), None),
            Budget::Iterations(i) => (None, Some(i)),
        };
        MethodConfig::AutomlLite {
            budget_seconds: s,
            budget_iterations: i,
            ensemble_top_k: default_top_k(),
        }
    }

    /// Stable identifier used in reports and seed derivation.
    pub fn id(&self) -> String {
        match self {
            MethodConfig::Manual { algorithm } => algorithm.to_string(),
            MethodConfig::AutomlLite { .. } => "automl_lite".into(),
            MethodConfig::External { name, .. } => name.clone(),
        }
    }

    pub fn automl_budget(&self) -> Option<Budget> {
        match self {
            MethodConfig::AutomlLite {
                budget_iterations: Some(n),
                ..
            } => Some(Budget::Iterations(*n)),
            MethodConfig::AutomlLite { budget_seconds, .. } => {
                Some(Budget::Seconds(budget_seconds.unwrap_or(DEFAULT_AUTOML_BUDGET_SECONDS)))
            }
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BenchmarkConfig {
    pub seed: u64,
    pub repetitions: usize,
    pub test_frac: f64,
    pub subsets: Vec<SubsetId>,
    #[serde(with = "weights_text")]
    pub weights: Weights,
    pub alpha: f64,
    pub scoring: ErrorKind,
    pub dataset: DatasetSource,
    pub search: SearchConfig,
    pub methods: Vec<MethodConfig>,
    pub output_dir: Option<PathBuf>,
}

impl Default for BenchmarkConfig {
    fn default() -> Self {
        BenchmarkConfig {
            seed: 0,
            repetitions: 5,
            test_frac: 0.1,
            subsets: SubsetId::ALL.to_vec(),
            weights: Weights::default(),
            alpha: 0.05,
            scoring: ErrorKind::Mape,
            dataset: DatasetSource::default(),
            search: SearchConfig::default(),
            methods: Algorithm::ALL
                .into_iter()
                .map(|algorithm| MethodConfig::Manual { algorithm })
                .chain([MethodConfig::automl(Budget::Seconds(DEFAULT_AUTOML_BUDGET_SECONDS))])
                .collect(),
            output_dir: None,
        }
    }
}

mod weights_text {
    use serde::{Deserialize, Deserializer, Serializer};

    use crate::mes::Weights;

    pub fn serialize<S: Serializer>(w: &Weights, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&w.to_string())
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Weights, D::Error> {
        String::deserialize(d)?.parse().map_err(serde::de::Error::custom)
    }
}

impl BenchmarkConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: BenchmarkConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml(&text)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn validate(&self) -> Result<()> {
        if self.repetitions == 0 {
            return Err(Error::InvalidConfig("repetitions must be at least 1".into()));
        }
        if self.methods.is_empty() || self.subsets.is_empty() {
            return Err(Error::InvalidConfig("need at least one method and one subset".into()));
        }
        if !(self.test_frac > 0.0 && self.test_frac < 1.0) {
            return Err(Error::InvalidConfig(format!(
                "test_frac {} outside (0, 1)",
                self.test_frac
            )));
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(Error::InvalidAlpha(self.alpha));
        }
        self.weights.validate()?;
        if self.search.n_iter == 0 || self.search.k_folds < 2 {
            return Err(Error::InvalidConfig("search needs n_iter >= 1 and k_folds >= 2".into()));
        }
        let mut ids: Vec<String> = self.methods.iter().map(MethodConfig::id).collect();
        ids.sort();
        if let Some(w) = ids.windows(2).find(|w| w[0] == w[1]) {
            return Err(Error::InvalidConfig(format!("method {} listed twice", w[0])));
        }
        for m in &self.methods {
            match m {
                MethodConfig::External { command, .. } if command.is_empty() => {
                    return Err(Error::InvalidConfig(format!("{}: empty command", m.id())))
                }
                MethodConfig::AutomlLite { ensemble_top_k: 0, .. } => {
                    return Err(Error::InvalidConfig("ensemble_top_k must be at least 1".into()))
                }
                _ => {}
            }
            if let Some(Budget::Seconds(s)) = m.automl_budget() {
                if !(s > 0.0) {
                    return Err(Error::InvalidConfig(format!("{}: budget must be positive", m.id())));
                }
            }
        }
        Ok(())
    }
}
