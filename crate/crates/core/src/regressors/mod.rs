//! The seven manual regressors behind one fit/predict contract.
//!
//! A [`FittedModel`] serializes to JSON via [`FittedModel::to_json`]:
//!
//! ```text
//! {
//!   "format_version": 1,
//!   "algorithm": "forest",
//!   "width": 12,
//!   "warnings": ["non_convergence"],
//!   "model": { "Forest": { "trees": [ ... ] } }
//! }
//! ```
//!
//! `model` is an externally tagged enum whose payload holds the learned
//! parameters of that algorithm. Blobs with a different `format_version`
//! are rejected on load.

pub mod adaboost;
pub mod forest;
pub mod knn;
pub mod mlp;
pub mod poly;
pub mod space;
pub mod svr;
pub mod tree;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::Matrix;

pub use adaboost::AdaBoost;
pub use forest::{ForestParams, RandomForest};
pub use knn::{Knn, KnnWeights};
pub use mlp::{Mlp, Network};
pub use poly::PolyModel;
pub use space::{Algorithm, Domain, HyperSpace, ModelSpec, Params, Value};
pub use svr::{Kernel, Svr};
pub use tree::{Criterion, RegressionTree, TreeParams};

pub const MODEL_FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FitWarning {
    /// Rank-deficient least-squares system; the minimum-norm solution was used.
    SingularSystem,
    /// The iteration limit was hit; the best iterate was kept.
    NonConvergence,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Learned {
    Poly(PolyModel),
    Tree(RegressionTree),
    Forest(RandomForest),
    Adaboost(AdaBoost),
    Svr(Svr),
    Knn(Knn),
    Mlp(Mlp),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FittedModel {
    pub format_version: u32,
    pub algorithm: Algorithm,
    pub width: usize,
    pub warnings: Vec<FitWarning>,
    pub model: Learned,
}

fn tree_params(spec: &ModelSpec) -> Result<TreeParams> {
    Ok(TreeParams {
        max_depth: TreeParams::depth_from_grid(spec.int("max_depth")?),
        criterion: Criterion::parse(spec.text("criterion")?)?,
        min_samples_split: 2,
        max_features: None,
    })
}

/// Minimum number of training rows `spec` accepts.
pub fn min_rows(spec: &ModelSpec) -> usize {
    match spec.algorithm {
        Algorithm::Knn => spec.int("n_neighbors").map(|k| k.max(1) as usize).unwrap_or(1),
        _ => 2,
    }
}

/// Fits `spec` on `(x, y)`. Identical inputs give identical models.
pub fn fit(spec: &ModelSpec, x: &Matrix, y: &[f64], seed: u64) -> Result<FittedModel> {
    let width = x.ncols();
    HyperSpace::for_algorithm(spec.algorithm, width).validate(spec)?;
    if x.nrows() != y.len() {
        return Err(Error::LengthMismatch(x.nrows(), y.len()));
    }
    let needed = min_rows(spec);
    if x.nrows() < needed {
        return Err(Error::TooFewRows { needed, got: x.nrows() });
    }
    if y.iter().chain(x.as_slice()).any(|v| !v.is_finite()) {
        return Err(Error::InvalidData("non-finite value in training data".into()));
    }

    let mut warnings = Vec::new();
    let model = match spec.algorithm {
        Algorithm::Poly => {
            let m = PolyModel::fit(x, y, spec.int("degree")? as usize)?;
            if m.rank_deficient() {
                warnings.push(FitWarning::SingularSystem);
            }
            if !m.converged() {
                warnings.push(FitWarning::NonConvergence);
            }
            Learned::Poly(m)
        }
        Algorithm::Tree => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            Learned::Tree(RegressionTree::fit(x, y, &tree_params(spec)?, &mut rng)?)
        }
        Algorithm::Forest => {
            let mut tree = tree_params(spec)?;
            tree.min_samples_split = spec.int("min_samples_split")? as usize;
            tree.max_features = Some(spec.int("max_features")? as usize);
            let params = ForestParams {
                tree,
                n_estimators: spec.int("n_estimators")? as usize,
                bootstrap: spec.boolean("bootstrap")?,
            };
            Learned::Forest(RandomForest::fit(x, y, &params, seed)?)
        }
        Algorithm::Adaboost => Learned::Adaboost(AdaBoost::fit(x, y, spec.int("n_estimators")? as usize, seed)?),
        Algorithm::Svr => {
            let kernel = Kernel::from_name(spec.text("kernel")?, x)?;
            let m = Svr::fit(x, y, kernel, spec.float("C")?, spec.float("epsilon")?)?;
            if !m.converged() {
                warnings.push(FitWarning::NonConvergence);
            }
            Learned::Svr(m)
        }
        Algorithm::Knn => {
            let weights = match spec.text("weights")? {
                "uniform" => KnnWeights::Uniform,
                _ => KnnWeights::Distance,
            };
            Learned::Knn(Knn::fit(
                x,
                y,
                spec.int("n_neighbors")? as usize,
                weights,
                spec.int("p")? as u32,
            )?)
        }
        Algorithm::Mlp => {
            let m = Mlp::fit(
                x,
                y,
                spec.int("hidden_layer_size")? as usize,
                spec.float("learning_rate")?,
                seed,
            )?;
            if !m.converged() {
                warnings.push(FitWarning::NonConvergence);
            }
            Learned::Mlp(m)
        }
    };
    Ok(FittedModel {
        format_version: MODEL_FORMAT_VERSION,
        algorithm: spec.algorithm,
        width,
        warnings,
        model,
    })
}

impl FittedModel {
    pub fn predict(&self, x: &Matrix) -> Result<Vec<f64>> {
        if x.ncols() != self.width {
            return Err(Error::SchemaMismatch(format!(
                "model trained on {} columns, got {}",
                self.width,
                x.ncols()
            )));
        }
        Ok(match &self.model {
            Learned::Poly(m) => m.predict(x),
            Learned::Tree(m) => m.predict(x),
            Learned::Forest(m) => m.predict(x),
            Learned::Adaboost(m) => m.predict(x),
            Learned::Svr(m) => m.predict(x),
            Learned::Knn(m) => m.predict(x),
            Learned::Mlp(m) => m.predict(x),
        })
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let m: FittedModel = serde_json::from_str(s)?;
        if m.format_version != MODEL_FORMAT_VERSION {
            return Err(Error::Config(format!(
                "model blob version {} (expected {MODEL_FORMAT_VERSION})",
                m.format_version
            )));
        }
        Ok(m)
    }
}
