use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::Matrix;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KnnWeights {
    Uniform,
    Distance,
}

/// Brute-force k-nearest-neighbours under the Minkowski metric.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Knn {
    x: Matrix,
    y: Vec<f64>,
    k: usize,
    weights: KnnWeights,
    p: u32,
}

pub fn minkowski(a: &[f64], b: &[f64], p: u32) -> f64 {
    match p {
        1 => a.iter().zip(b).map(|(u, v)| (u - v).abs()).sum(),
        2 => a.iter().zip(b).map(|(u, v)| (u - v) * (u - v)).sum::<f64>().sqrt(),
        _ => a
            .iter()
            .zip(b)
            .map(|(u, v)| (u - v).abs().powi(p as i32))
            .sum::<f64>()
            .powf(1.0 / p as f64),
    }
}

impl Knn {
    pub fn fit(x: &Matrix, y: &[f64], k: usize, weights: KnnWeights, p: u32) -> Result<Self> {
        if k == 0 || p == 0 {
            return Err(Error::InvalidSpec("n_neighbors and p must be positive".into()));
        }
        if x.nrows() < k {
            return Err(Error::TooFewRows {
                needed: k,
                got: x.nrows(),
            });
        }
        Ok(Knn {
            x: x.clone(),
            y: y.to_vec(),
            k,
            weights,
            p,
        })
    }

    /// Indices of the `k` nearest training rows, nearest first; ties go to
    /// the lower index.
    pub fn neighbors(&self, row: &[f64]) -> Vec<(usize, f64)> {
        let mut d: Vec<(usize, f64)> = self
            .x
            .rows_iter()
            .enumerate()
            .map(|(i, r)| (i, minkowski(row, r, self.p)))
            .collect();
        let cmp = |a: &(usize, f64), b: &(usize, f64)| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0));
        if self.k < d.len() {
            d.select_nth_unstable_by(self.k - 1, cmp);
            d.truncate(self.k);
        }
        d.sort_unstable_by(cmp);
        d
    }

    pub fn predict_row(&self, row: &[f64]) -> f64 {
        let nb = self.neighbors(row);
        match self.weights {
            KnnWeights::Uniform => nb.iter().map(|(i, _)| self.y[*i]).sum::<f64>() / nb.len() as f64,
            KnnWeights::Distance => {
                let exact: Vec<f64> = nb.iter().filter(|(_, d)| *d == 0.0).map(|(i, _)| self.y[*i]).collect();
                if !exact.is_empty() {
                    return exact.iter().sum::<f64>() / exact.len() as f64;
                }
                let (num, den) = nb
                    .iter()
                    .fold((0.0, 0.0), |(n, w), (i, d)| (n + self.y[*i] / d, w + 1.0 / d));
                num / den
            }
        }
    }

    pub fn predict(&self, x: &Matrix) -> Vec<f64> {
        x.rows_iter().map(|r| self.predict_row(r)).collect()
    }
}
