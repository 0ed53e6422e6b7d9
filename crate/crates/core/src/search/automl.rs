use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{Trial, TrialStatus};
use crate::criteria::{regression_error, ErrorKind};
use crate::dataset::holdout_split;
use crate::error::{Error, Result};
use crate::matrix::{self, Matrix};
use crate::regressors::{self, Algorithm, FittedModel, HyperSpace, ModelSpec};
use crate::seed;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Budget {
    /// Wall-clock seconds; the search stops cooperatively between fits.
    Seconds(f64),
    /// Exact number of trials; fully deterministic.
    Iterations(usize),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AutomlConfig {
    pub budget: Budget,
    pub seed: u64,
    pub scoring: ErrorKind,
    pub ensemble_top_k: usize,
    /// Fraction of the training rows held out to score trials.
    pub holdout_frac: f64,
    pub algorithms: Vec<Algorithm>,
}

impl Default for AutomlConfig {
    fn default() -> Self {
        AutomlConfig {
            budget: Budget::Seconds(1800.0),
            seed: 0,
            scoring: ErrorKind::Mape,
            ensemble_top_k: 5,
            holdout_frac: 0.2,
            algorithms: Algorithm::ALL.to_vec(),
        }
    }
}

impl AutomlConfig {
    pub fn validate(&self) -> Result<()> {
        match self.budget {
            Budget::Seconds(s) if !(s > 0.0 && s.is_finite()) => {
                return Err(Error::InvalidConfig(format!("budget must be positive, got {s} s")))
            }
            Budget::Iterations(0) => return Err(Error::InvalidConfig("budget of 0 iterations".into())),
            _ => {}
        }
        if self.ensemble_top_k == 0 {
            return Err(Error::InvalidConfig("ensemble_top_k must be at least 1".into()));
        }
        if !(self.holdout_frac > 0.0 && self.holdout_frac < 1.0) {
            return Err(Error::InvalidConfig(format!(
                "holdout_frac {} outside (0, 1)",
                self.holdout_frac
            )));
        }
        if self.algorithms.is_empty() {
            return Err(Error::InvalidConfig("no algorithms to search".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EnsembleWarning {
    /// No trial completed; a k-nearest-neighbours fallback was fitted.
    BudgetTooSmallForOneFit,
    /// Some members kept their holdout-split fit because refitting on all
    /// rows would have overrun the budget.
    RefitSkipped,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FittedEnsemble {
    /// Members with non-negative weights summing to 1.
    pub members: Vec<(FittedModel, f64)>,
    pub member_specs: Vec<ModelSpec>,
    pub trials: Vec<Trial>,
    pub warnings: Vec<EnsembleWarning>,
    /// Wall time of the whole search, refits included.
    pub elapsed_seconds: f64,
    /// Duration of the fit that was running when a seconds budget ran out,
    /// or 0 if the budget was never crossed mid-fit.
    pub last_fit_seconds: f64,
}

impl FittedEnsemble {
    pub fn predict(&self, x: &Matrix) -> Result<Vec<f64>> {
        let mut out = vec![0.0; x.nrows()];
        for (model, w) in &self.members {
            for (o, p) in out.iter_mut().zip(model.predict(x)?) {
                *o += w * p;
            }
        }
        Ok(out)
    }

    pub fn failed_trials(&self) -> usize {
        self.trials.iter().filter(|t| t.failed()).count()
    }
}

struct Clock {
    start: Instant,
    budget: Option<f64>,
    crossing: f64,
}

impl Clock {
    fn elapsed(&self) -> f64 {
        self.start.elapsed().as_secs_f64()
    }

    fn timed<T>(&mut self, f: impl FnOnce() -> T) -> (T, f64) {
        let before = self.elapsed();
        let out = f();
        let after = self.elapsed();
        if let Some(b) = self.budget {
            if before < b && after >= b {
                self.crossing = after - before;
            }
        }
        (out, after - before)
    }
}

struct Candidate {
    trial: usize,
    score: f64,
    fit_seconds: f64,
    model: FittedModel,
}

fn fallback_spec(n: usize) -> ModelSpec {
    let k = [10i64, 8, 6, 4, 2].into_iter().find(|&k| k as usize <= n).unwrap_or(2);
    ModelSpec::new(Algorithm::Knn)
        .with("n_neighbors", k)
        .with("weights", "uniform")
        .with("p", 2i64)
}

/// Randomly samples (algorithm, hyperparameters) pairs, scores each on an
/// internal holdout, and refits the best `ensemble_top_k` on all rows with
/// inverse-error weights.
///
/// In [`Budget::Seconds`] mode a new trial starts only while the elapsed
/// time plus the estimated refit cost stays below the budget, and a member
/// is refitted only if its estimated refit still fits; otherwise its
/// holdout fit is kept. A running fit is never interrupted.
pub fn automl_fit(x: &Matrix, y: &[f64], cfg: &AutomlConfig) -> Result<FittedEnsemble> {
    cfg.validate()?;
    let mut clock = Clock {
        start: Instant::now(),
        budget: match cfg.budget {
            Budget::Seconds(b) => Some(b),
            Budget::Iterations(_) => None,
        },
        crossing: 0.0,
    };
    let n = x.nrows();
    if n != y.len() {
        return Err(Error::LengthMismatch(n, y.len()));
    }
    let split = holdout_split(n, cfg.holdout_frac, seed::derive(cfg.seed, &[0]))?;
    let (xt, yt) = (x.select_rows(&split.train), matrix::select(y, &split.train));
    let (xv, yv) = (x.select_rows(&split.test), matrix::select(y, &split.test));
    let growth = n as f64 / split.train.len() as f64;
    // Fit time is at most quadratic in the row count for every algorithm.
    let refit_estimate = |c: &Candidate| c.fit_seconds * growth * growth * 1.25;

    let mut rng = ChaCha8Rng::seed_from_u64(seed::derive(cfg.seed, &[1]));
    let width = x.ncols();
    let mut trials = Vec::new();
    let mut top: Vec<Candidate> = Vec::new();

    loop {
        match cfg.budget {
            Budget::Iterations(limit) if trials.len() >= limit => break,
            Budget::Seconds(b) => {
                let reserve: f64 = top.iter().map(refit_estimate).sum();
                if !trials.is_empty() && clock.elapsed() + reserve >= b {
                    break;
                }
            }
            _ => {}
        }
        let index = trials.len();
        let algorithm = cfg.algorithms[rng.random_range(0..cfg.algorithms.len())];
        let spec = HyperSpace::for_algorithm(algorithm, width).sample(&mut rng);

        let mut fit_seconds = 0.0;
        let (scored, seconds) = clock.timed(|| {
            let t0 = Instant::now();
            let fitted = regressors::fit(&spec, &xt, &yt, seed::derive(cfg.seed, &[2, index as u64]));
            fit_seconds = t0.elapsed().as_secs_f64();
            fitted.and_then(|m| {
                let pred = m.predict(&xv)?;
                Ok((m, regression_error(&yv, &pred, cfg.scoring)?))
            })
        });
        match scored {
            Ok((model, score)) if score.is_finite() => {
                trials.push(Trial {
                    index,
                    spec,
                    score: Some(score),
                    status: TrialStatus::Ok,
                    seconds,
                });
                let pos = top.iter().position(|c| score < c.score).unwrap_or(top.len());
                if pos < cfg.ensemble_top_k {
                    top.insert(
                        pos,
                        Candidate {
                            trial: index,
                            score,
                            fit_seconds,
                            model,
                        },
                    );
                    top.truncate(cfg.ensemble_top_k);
                }
            }
            other => trials.push(Trial::from_result(index, spec, other.map(|(_, s)| s), seconds)),
        }
    }

    let mut warnings = Vec::new();
    if top.is_empty() {
        log::warn!("no automl trial completed; fitting a k-nearest-neighbours fallback");
        warnings.push(EnsembleWarning::BudgetTooSmallForOneFit);
        let spec = fallback_spec(n);
        let (model, _) = clock.timed(|| regressors::fit(&spec, x, y, cfg.seed));
        return Ok(FittedEnsemble {
            members: vec![(model?, 1.0)],
            member_specs: vec![spec],
            trials,
            warnings,
            elapsed_seconds: clock.elapsed(),
            last_fit_seconds: clock.crossing,
        });
    }

    let mut members = Vec::with_capacity(top.len());
    let mut specs = Vec::with_capacity(top.len());
    for c in top {
        let spec = trials[c.trial].spec.clone();
        let fits = match cfg.budget {
            Budget::Seconds(b) => clock.elapsed() + refit_estimate(&c) <= b,
            Budget::Iterations(_) => true,
        };
        let refit = if fits {
            clock
                .timed(|| regressors::fit(&spec, x, y, seed::derive(cfg.seed, &[3, c.trial as u64])))
                .0
                .ok()
        } else {
            None
        };
        let model = refit.unwrap_or_else(|| {
            if !warnings.contains(&EnsembleWarning::RefitSkipped) {
                warnings.push(EnsembleWarning::RefitSkipped);
            }
            c.model
        });
        members.push((model, 1.0 / c.score.max(1e-12)));
        specs.push(spec);
    }
    let total: f64 = members.iter().map(|(_, w)| w).sum();
    members.iter_mut().for_each(|(_, w)| *w /= total);

    Ok(FittedEnsemble {
        members,
        member_specs: specs,
        trials,
        warnings,
        elapsed_seconds: clock.elapsed(),
        last_fit_seconds: clock.crossing,
    })
}
