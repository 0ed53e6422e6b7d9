//! Random-search tuning with k-fold cross-validation, and a budgeted
//! algorithm-plus-hyperparameter search that builds a small ensemble.

mod automl;

use std::io::Write;
use std::time::Instant;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::criteria::{regression_error, ErrorKind};
use crate::error::{Error, Result};
use crate::matrix::{self, Matrix};
use crate::regressors::{self, Algorithm, HyperSpace, ModelSpec};
use crate::seed;

pub use automl::{automl_fit, AutomlConfig, Budget, EnsembleWarning, FittedEnsemble};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SearchConfig {
    pub n_iter: usize,
    pub k_folds: usize,
    pub seed: u64,
    pub scoring: ErrorKind,
}

impl Default for SearchConfig {
    fn default() -> Self {
        SearchConfig {
            n_iter: 60,
            k_folds: 5,
            seed: 0,
            scoring: ErrorKind::Mape,
        }
    }
}

impl SearchConfig {
    pub fn validate(&self, n: usize) -> Result<()> {
        if self.n_iter == 0 {
            return Err(Error::InvalidConfig("n_iter must be at least 1".into()));
        }
        if self.k_folds < 2 || self.k_folds > n {
            return Err(Error::FoldTooSmall { n, k: self.k_folds });
        }
        Ok(())
    }
}

/// Test-fold indices of a shuffled k-fold partition of `0..n`. The first
/// `n % k` folds hold one extra row; each fold is sorted.
pub fn kfold_indices(n: usize, k: usize, seed: u64) -> Result<Vec<Vec<usize>>> {
    if k < 2 || k > n {
        return Err(Error::FoldTooSmall { n, k });
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let (base, extra) = (n / k, n % k);
    let mut folds = Vec::with_capacity(k);
    let mut start = 0;
    for f in 0..k {
        let len = base + usize::from(f < extra);
        let mut fold = order[start..start + len].to_vec();
        fold.sort_unstable();
        folds.push(fold);
        start += len;
    }
    Ok(folds)
}

/// Mean out-of-fold error of `spec`. Fold `i` is fitted with a seed derived
/// from `seed` and `i`.
pub fn cross_val_score(
    spec: &ModelSpec,
    x: &Matrix,
    y: &[f64],
    k_folds: usize,
    seed: u64,
    scoring: ErrorKind,
) -> Result<f64> {
    let n = x.nrows();
    if n != y.len() {
        return Err(Error::LengthMismatch(n, y.len()));
    }
    let folds = kfold_indices(n, k_folds, seed)?;
    let mut in_test = vec![false; n];
    let mut total = 0.0;
    for (i, fold) in folds.iter().enumerate() {
        fold.iter().for_each(|&r| in_test[r] = true);
        let train: Vec<usize> = (0..n).filter(|&r| !in_test[r]).collect();
        fold.iter().for_each(|&r| in_test[r] = false);

        let model = regressors::fit(
            spec,
            &x.select_rows(&train),
            &matrix::select(y, &train),
            seed::derive(seed, &[i as u64]),
        )?;
        let pred = model.predict(&x.select_rows(fold))?;
        total += regression_error(&matrix::select(y, fold), &pred, scoring)?;
    }
    Ok(total / folds.len() as f64)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", content = "reason", rename_all = "snake_case")]
pub enum TrialStatus {
    Ok,
    Failed(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trial {
    pub index: usize,
    pub spec: ModelSpec,
    /// `None` for failed trials.
    pub score: Option<f64>,
    pub status: TrialStatus,
    pub seconds: f64,
}

impl Trial {
    fn from_result(index: usize, spec: ModelSpec, result: Result<f64>, seconds: f64) -> Self {
        let (score, status) = match result {
            Ok(s) if s.is_finite() => (Some(s), TrialStatus::Ok),
            Ok(s) => (None, TrialStatus::Failed(format!("non-finite score {s}"))),
            Err(e) => (None, TrialStatus::Failed(e.to_string())),
        };
        Trial {
            index,
            spec,
            score,
            status,
            seconds,
        }
    }

    pub fn failed(&self) -> bool {
        self.score.is_none()
    }
}

/// Index into `trials` of the lowest score; ties go to the earliest trial.
pub(crate) fn best_trial(trials: &[Trial]) -> Option<usize> {
    let mut best: Option<(usize, f64)> = None;
    for (i, t) in trials.iter().enumerate() {
        if let Some(s) = t.score {
            if best.is_none_or(|(_, b)| s < b) {
                best = Some((i, s));
            }
        }
    }
    best.map(|(i, _)| i)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchResult {
    pub best: ModelSpec,
    pub best_score: f64,
    /// Every trial, ordered by index.
    pub trials: Vec<Trial>,
}

impl SearchResult {
    pub fn failed_trials(&self) -> usize {
        self.trials.iter().filter(|t| t.failed()).count()
    }
}

/// Draws `n_iter` specs from the algorithm's space and keeps the one with
/// the lowest cross-validated error. Trials run in parallel; fold
/// assignment is shared by all trials.
pub fn random_search(algorithm: Algorithm, x: &Matrix, y: &[f64], cfg: &SearchConfig) -> Result<SearchResult> {
    cfg.validate(x.nrows())?;
    let space = HyperSpace::for_algorithm(algorithm, x.ncols());
    let mut rng = ChaCha8Rng::seed_from_u64(seed::derive(cfg.seed, &[0]));
    let specs: Vec<ModelSpec> = (0..cfg.n_iter).map(|_| space.sample(&mut rng)).collect();
    let cv_seed = seed::derive(cfg.seed, &[1]);

    let trials: Vec<Trial> = specs
        .into_par_iter()
        .enumerate()
        .map(|(i, spec)| {
            let start = Instant::now();
            let result = cross_val_score(&spec, x, y, cfg.k_folds, cv_seed, cfg.scoring);
            Trial::from_result(i, spec, result, start.elapsed().as_secs_f64())
        })
        .collect();

    let best = best_trial(&trials).ok_or(Error::AllTrialsFailed(trials.len()))?;
    Ok(SearchResult {
        best: trials[best].spec.clone(),
        best_score: trials[best].score.unwrap_or(f64::NAN),
        trials,
    })
}

/// Columns: `trial_index, algorithm, spec, score, status`.
pub fn write_trial_log<W: Write>(trials: &[Trial], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["trial_index", "algorithm", "spec", "score", "status"])?;
    for t in trials {
        let status = match &t.status {
            TrialStatus::Ok => "ok".to_string(),
            TrialStatus::Failed(reason) => format!("failed: {reason}"),
        };
        w.write_record([
            t.index.to_string(),
            t.spec.algorithm.to_string(),
            t.spec.flat_pairs(),
            t.score.map(|s| s.to_string()).unwrap_or_default(),
            status,
        ])?;
    }
    w.flush().map_err(|e| Error::io("<trial log>", e))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn folds_partition_rows() {
        let folds = kfold_indices(11, 3, 5).unwrap();
        assert_eq!(folds.iter().map(Vec::len).collect::<Vec<_>>(), vec![4, 4, 3]);
        let mut all: Vec<usize> = folds.concat();
        all.sort_unstable();
        assert_eq!(all, (0..11).collect::<Vec<_>>());
        assert_eq!(folds, kfold_indices(11, 3, 5).unwrap());
        assert!(matches!(
            kfold_indices(3, 4, 0),
            Err(Error::FoldTooSmall { n: 3, k: 4 })
        ));
        assert!(kfold_indices(3, 1, 0).is_err());
    }

    #[test]
    fn constant_target_scores_zero() {
        let x = Matrix::column(&(0..20).map(f64::from).collect::<Vec<_>>());
        let y = vec![7.0; 20];
        let spec = ModelSpec::new(Algorithm::Poly).with("degree", 1i64);
        let s = cross_val_score(&spec, &x, &y, 5, 1, ErrorKind::Mape).unwrap();
        assert!(s < 1e-9);
    }

    #[test]
    fn single_iteration_returns_its_spec() {
        let x = Matrix::column(&(0..30).map(f64::from).collect::<Vec<_>>());
        let y: Vec<f64> = (0..30).map(|i| 1.0 + i as f64).collect();
        let cfg = SearchConfig {
            n_iter: 1,
            k_folds: 3,
            seed: 4,
            scoring: ErrorKind::Mape,
        };
        let r = random_search(Algorithm::Knn, &x, &y, &cfg).unwrap();
        assert_eq!(r.trials.len(), 1);
        assert_eq!(r.best, r.trials[0].spec);
        let mut buf = Vec::new();
        write_trial_log(&r.trials, &mut buf).unwrap();
        assert!(String::from_utf8(buf)
            .unwrap()
            .starts_with("trial_index,algorithm,spec,score,status"));
    }
}
