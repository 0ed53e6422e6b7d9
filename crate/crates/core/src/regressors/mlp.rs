//! Single-hidden-layer perceptron: relu hidden units, linear output, squared
//! loss, Adam. Targets are standardized internally.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::Matrix;

pub const MAX_EPOCHS: usize = 500;
pub const PLATEAU_TOL: f64 = 1e-6;
pub const PLATEAU_PATIENCE: usize = 10;
pub const BATCH_SIZE: usize = 200;
const BETA1: f64 = 0.9;
const BETA2: f64 = 0.999;
const ADAM_EPS: f64 = 1e-8;

/// Flat parameter layout: `w1` (hidden x input, row-major), `b1` (hidden),
/// `w2` (hidden), `b2` (1).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Network {
    pub input: usize,
    pub hidden: usize,
    pub params: Vec<f64>,
}

impl Network {
    pub fn param_count(input: usize, hidden: usize) -> usize {
        hidden * input + hidden + hidden + 1
    }

    pub fn zeros(input: usize, hidden: usize) -> Self {
        Network {
            input,
            hidden,
            params: vec![0.0; Self::param_count(input, hidden)],
        }
    }

    /// Glorot-uniform weights, zero-mean uniform biases with the same bound.
    pub fn init<R: Rng>(input: usize, hidden: usize, rng: &mut R) -> Self {
        let mut net = Self::zeros(input, hidden);
        let b1 = (6.0 / (input + hidden) as f64).sqrt();
        let b2 = (6.0 / (hidden + 1) as f64).sqrt();
        let split = hidden * input + hidden;
        for (i, p) in net.params.iter_mut().enumerate() {
            let bound = if i < split { b1 } else { b2 };
            *p = rng.random_range(-bound..bound);
        }
        net
    }

    fn offsets(&self) -> (usize, usize, usize) {
        let w1 = self.hidden * self.input;
        (w1, w1 + self.hidden, w1 + 2 * self.hidden)
    }

    pub fn output_bias(&self) -> f64 {
        self.params[self.params.len() - 1]
    }

    pub fn set_output_bias(&mut self, b: f64) {
        let n = self.params.len();
        self.params[n - 1] = b;
    }

    pub fn forward(&self, row: &[f64]) -> f64 {
        let (b1o, w2o, b2o) = self.offsets();
        let p = &self.params;
        let mut out = p[b2o];
        for h in 0..self.hidden {
            let w = &p[h * self.input..(h + 1) * self.input];
            let a = w.iter().zip(row).map(|(u, v)| u * v).sum::<f64>() + p[b1o + h];
            if a > 0.0 {
                out += p[w2o + h] * a;
            }
        }
        out
    }

    /// Mean of `1/2 (f(x) - y)^2` over the given rows and its gradient.
    pub fn loss_and_gradient(&self, x: &Matrix, y: &[f64], rows: &[usize]) -> (f64, Vec<f64>) {
        let (b1o, w2o, b2o) = self.offsets();
        let p = &self.params;
        let mut grad = vec![0.0; p.len()];
        let mut loss = 0.0;
        let mut act = vec![0.0; self.hidden];
        for &r in rows {
            let row = x.row(r);
            let mut out = p[b2o];
            for h in 0..self.hidden {
                let w = &p[h * self.input..(h + 1) * self.input];
                let a = w.iter().zip(row).map(|(u, v)| u * v).sum::<f64>() + p[b1o + h];
                act[h] = a.max(0.0);
                out += p[w2o + h] * act[h];
            }
            let err = out - y[r];
            loss += 0.5 * err * err;
            grad[b2o] += err;
            for h in 0..self.hidden {
                grad[w2o + h] += err * act[h];
                if act[h] > 0.0 {
                    let d = err * p[w2o + h];
                    grad[b1o + h] += d;
                    for (g, v) in grad[h * self.input..(h + 1) * self.input].iter_mut().zip(row) {
                        *g += d * v;
                    }
                }
            }
        }
        let n = rows.len().max(1) as f64;
        grad.iter_mut().for_each(|g| *g /= n);
        (loss / n, grad)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Mlp {
    network: Network,
    y_mean: f64,
    y_scale: f64,
    epochs: usize,
    converged: bool,
}

impl Mlp {
    pub fn fit(x: &Matrix, y: &[f64], hidden: usize, learning_rate: f64, seed: u64) -> Result<Self> {
        let n = x.nrows();
        if n < 2 {
            return Err(Error::TooFewRows { needed: 2, got: n });
        }
        if hidden == 0 {
            return Err(Error::InvalidSpec("hidden_layer_size must be positive".into()));
        }
        let y_mean = y.iter().sum::<f64>() / n as f64;
        let sd = (y.iter().map(|v| (v - y_mean).powi(2)).sum::<f64>() / n as f64).sqrt();
        let y_scale = if sd > 0.0 { sd } else { 1.0 };
        let z: Vec<f64> = y.iter().map(|v| (v - y_mean) / y_scale).collect();

        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut net = Network::init(x.ncols(), hidden, &mut rng);
        let np = net.params.len();
        let (mut m, mut v) = (vec![0.0; np], vec![0.0; np]);
        let mut step = 0i32;
        let all: Vec<usize> = (0..n).collect();
        let mut order = all.clone();
        let batch = BATCH_SIZE.min(n);

        let mut best = (f64::INFINITY, net.params.clone());
        let mut stale = 0;
        let mut converged = false;
        let mut epochs = 0;
        for _ in 0..MAX_EPOCHS {
            epochs += 1;
            order.shuffle(&mut rng);
            for chunk in order.chunks(batch) {
                let (_, g) = net.loss_and_gradient(x, &z, chunk);
                step += 1;
                let c1 = 1.0 - BETA1.powi(step);
                let c2 = 1.0 - BETA2.powi(step);
                for k in 0..np {
                    m[k] = BETA1 * m[k] + (1.0 - BETA1) * g[k];
                    v[k] = BETA2 * v[k] + (1.0 - BETA2) * g[k] * g[k];
                    net.params[k] -= learning_rate * (m[k] / c1) / ((v[k] / c2).sqrt() + ADAM_EPS);
                }
            }
            let (loss, _) = net.loss_and_gradient(x, &z, &all);
            if !loss.is_finite() {
                break;
            }
            if loss > best.0 - PLATEAU_TOL {
                stale += 1;
            } else {
                stale = 0;
            }
            if loss < best.0 {
                best = (loss, net.params.clone());
            }
            if stale >= PLATEAU_PATIENCE {
                converged = true;
                break;
            }
        }
        net.params = best.1;
        Ok(Mlp {
            network: net,
            y_mean,
            y_scale,
            epochs,
            converged,
        })
    }

    /// Wraps an explicit network; predictions are `y_mean + y_scale * f(x)`.
    pub fn from_network(network: Network, y_mean: f64, y_scale: f64) -> Self {
        Mlp {
            network,
            y_mean,
            y_scale,
            epochs: 0,
            converged: true,
        }
    }

    pub fn network(&self) -> &Network {
        &self.network
    }

    pub fn epochs(&self) -> usize {
        self.epochs
    }

    pub fn converged(&self) -> bool {
        self.converged
    }

    pub fn predict_row(&self, row: &[f64]) -> f64 {
        self.y_mean + self.y_scale * self.network.forward(row)
    }

    pub fn predict(&self, x: &Matrix) -> Vec<f64> {
        x.rows_iter().map(|r| self.predict_row(r)).collect()
    }
}
