//! AdaBoost.R2 with linear loss over depth-limited regression trees.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{weighted::WeightedIndex, Distribution};
use serde::{Deserialize, Serialize};

use super::tree::{RegressionTree, TreeParams};
use crate::error::{Error, Result};
use crate::matrix::Matrix;

pub const BASE_DEPTH: usize = 3;
pub const LEARNING_RATE: f64 = 1.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdaBoost {
    members: Vec<(RegressionTree, f64)>,
}

impl AdaBoost {
    pub fn fit(x: &Matrix, y: &[f64], n_estimators: usize, seed: u64) -> Result<Self> {
        let n = x.nrows();
        if n == 0 {
            return Err(Error::TooFewRows { needed: 1, got: 0 });
        }
        let params = TreeParams {
            max_depth: Some(BASE_DEPTH),
            ..Default::default()
        };
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut weights = vec![1.0 / n as f64; n];
        let mut members: Vec<(RegressionTree, f64)> = Vec::new();

        for _ in 0..n_estimators.max(1) {
            let dist = WeightedIndex::new(&weights).map_err(|e| Error::InvalidData(e.to_string()))?;
            let sample: Vec<usize> = (0..n).map(|_| dist.sample(&mut rng)).collect();
            let tree = RegressionTree::fit_sample(x, y, &sample, &params, &mut rng)?;
            let pred = tree.predict(x);
            let mut err: Vec<f64> = pred.iter().zip(y).map(|(p, t)| (p - t).abs()).collect();
            let max = err.iter().cloned().fold(0.0, f64::max);
            if max > 0.0 {
                err.iter_mut().for_each(|e| *e /= max);
            }
            let avg_loss: f64 = weights.iter().zip(&err).map(|(w, e)| w * e).sum();

            if avg_loss <= 0.0 {
                members.push((tree, 1.0));
                break;
            }
            if avg_loss >= 0.5 {
                if members.is_empty() {
                    members.push((tree, 1.0));
                }
                break;
            }
            let beta = avg_loss / (1.0 - avg_loss);
            let estimator_weight = LEARNING_RATE * (1.0 / beta).ln();
            for (w, e) in weights.iter_mut().zip(&err) {
                *w *= beta.powf((1.0 - e) * LEARNING_RATE);
            }
            let total: f64 = weights.iter().sum();
            weights.iter_mut().for_each(|w| *w /= total);
            members.push((tree, estimator_weight));
        }
        Ok(AdaBoost { members })
    }

    pub fn members(&self) -> &[(RegressionTree, f64)] {
        &self.members
    }

    /// Weighted median of member predictions.
    pub fn predict_row(&self, row: &[f64]) -> f64 {
        let mut preds: Vec<(f64, f64)> = self.members.iter().map(|(t, w)| (t.predict_row(row), *w)).collect();
        preds.sort_by(|a, b| a.0.total_cmp(&b.0));
        let total: f64 = preds.iter().map(|p| p.1).sum();
        if total <= 0.0 {
            let mut v: Vec<f64> = preds.iter().map(|p| p.0).collect();
            return v.swap_remove(v.len() / 2);
        }
        let mut acc = 0.0;
        for (p, w) in &preds {
            acc += w;
            if acc >= 0.5 * total {
                return *p;
            }
        }
        preds.last().unwrap().0
    }

    pub fn predict(&self, x: &Matrix) -> Vec<f64> {
        x.rows_iter().map(|r| self.predict_row(r)).collect()
    }
}
