//! Epsilon-insensitive support vector regression.
//!
//! The dual is solved with SMO using second-order working-set selection over
//! the doubled variable vector `[alpha+; alpha-]`:
//!
//! ```text
//! min  1/2 a'Qa + p'a   s.t.  y'a = 0,  0 <= a <= C
//! Q_st = y_s y_t K(s mod l, t mod l),  p = [eps - z; eps + z],  y = [+1; -1]
//! ```
//!
//! Targets are standardized before solving, so `epsilon` is in units of the
//! target's standard deviation.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::Matrix;

pub const DEFAULT_TOLERANCE: f64 = 1e-3;
const TAU: f64 = 1e-12;
pub const POLY_DEGREE: i32 = 3;
/// SMO update cap; hitting it yields the current iterate with a warning.
pub const MAX_UPDATES: usize = 100_000;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Kernel {
    Linear,
    /// `(gamma <a, b>)^3`
    Poly {
        gamma: f64,
    },
    /// `exp(-gamma |a - b|^2)`
    Rbf {
        gamma: f64,
    },
}

impl Kernel {
    pub fn eval(&self, a: &[f64], b: &[f64]) -> f64 {
        match self {
            Kernel::Linear => dot(a, b),
            Kernel::Poly { gamma } => (gamma * dot(a, b)).powi(POLY_DEGREE),
            Kernel::Rbf { gamma } => {
                let d2: f64 = a.iter().zip(b).map(|(u, v)| (u - v) * (u - v)).sum();
                (-gamma * d2).exp()
            }
        }
    }

    /// `1 / (width * var(X))` over all entries; 1.0 for constant inputs.
    pub fn scale_gamma(x: &Matrix) -> f64 {
        let vals = x.as_slice();
        if vals.is_empty() {
            return 1.0;
        }
        let n = vals.len() as f64;
        let mean = vals.iter().sum::<f64>() / n;
        let var = vals.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
        if var > 0.0 {
            1.0 / (x.ncols() as f64 * var)
        } else {
            1.0
        }
    }

    pub fn from_name(name: &str, x: &Matrix) -> Result<Self> {
        match name {
            "linear" => Ok(Kernel::Linear),
            "poly" => Ok(Kernel::Poly {
                gamma: Self::scale_gamma(x),
            }),
            "rbf" => Ok(Kernel::Rbf {
                gamma: Self::scale_gamma(x),
            }),
            _ => Err(Error::InvalidSpec(format!("unknown kernel {name:?}"))),
        }
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(u, v)| u * v).sum()
}

#[derive(Debug, Clone, PartialEq)]
pub struct DualSolution {
    /// `alpha+ - alpha-` per training point.
    pub beta: Vec<f64>,
    pub rho: f64,
    /// `1/2 b'Kb - z'b + eps * sum|b|`.
    pub objective: f64,
    pub iterations: usize,
    pub converged: bool,
}

/// Solves the epsilon-SVR dual for a precomputed kernel matrix `k`
/// (row-major, `l x l`) and targets `z`, stopping when the maximal KKT
/// violation falls below `tol` or after `max_iter` updates.
pub fn solve_dual(k: &[f64], z: &[f64], c: f64, eps: f64, tol: f64, max_iter: usize) -> DualSolution {
    let l = z.len();
    let n2 = 2 * l;
    let kk = |i: usize, j: usize| k[(i % l) * l + (j % l)];
    let ys = |t: usize| if t < l { 1.0 } else { -1.0 };
    let mut alpha = vec![0.0; n2];
    let mut grad: Vec<f64> = (0..n2)
        .map(|t| if t < l { eps - z[t] } else { eps + z[t - l] })
        .collect();
    let diag: Vec<f64> = (0..l).map(|i| k[i * l + i]).collect();
    let is_upper = |a: f64| a >= c;
    let is_lower = |a: f64| a <= 0.0;

    let mut iterations = 0;
    let mut converged = false;
    while iterations < max_iter {
        // i: maximal violating index in I_up, scored by -y_t G_t.
        let mut gmax = f64::NEG_INFINITY;
        let mut i = usize::MAX;
        let (a_pos, a_neg) = alpha.split_at(l);
        let (g_pos, g_neg) = grad.split_at(l);
        for (t, (&a, &g)) in a_pos.iter().zip(g_pos).enumerate() {
            let v = if a < c { -g } else { f64::NEG_INFINITY };
            if v >= gmax {
                gmax = v;
                i = t;
            }
        }
        for (t, (&a, &g)) in a_neg.iter().zip(g_neg).enumerate() {
            let v = if a > 0.0 { g } else { f64::NEG_INFINITY };
            if v >= gmax {
                gmax = v;
                i = l + t;
            }
        }
        if gmax == f64::NEG_INFINITY {
            i = usize::MAX;
        }
        // j: second-order choice in I_low, maximizing b^2 / a without dividing.
        let mut gmax2 = f64::NEG_INFINITY;
        let mut j = usize::MAX;
        if i != usize::MAX {
            let ki = &k[(i % l) * l..(i % l + 1) * l];
            let kii = diag[i % l];
            let (mut best_bb, mut best_a) = (0.0, 1.0);
            let mut visit = |t: usize, tl: usize, yg: f64| {
                gmax2 = gmax2.max(yg);
                let b = gmax + yg;
                if b > 0.0 {
                    let mut a = kii + diag[tl] - 2.0 * ki[tl];
                    if a <= 0.0 {
                        a = TAU;
                    }
                    if b * b * best_a >= best_bb * a {
                        best_bb = b * b;
                        best_a = a;
                        j = t;
                    }
                }
            };
            for (t, (&a, &g)) in a_pos.iter().zip(g_pos).enumerate() {
                if a > 0.0 {
                    visit(t, t, g);
                }
            }
            for (t, (&a, &g)) in a_neg.iter().zip(g_neg).enumerate() {
                if a < c {
                    visit(l + t, t, -g);
                }
            }
        }
        if gmax + gmax2 < tol || j == usize::MAX {
            converged = true;
            break;
        }
        iterations += 1;

        let (yi, yj) = (ys(i), ys(j));
        let qij = yi * yj * kk(i, j);
        let (qii, qjj) = (kk(i, i), kk(j, j));
        let (old_i, old_j) = (alpha[i], alpha[j]);
        let (mut ai, mut aj) = (old_i, old_j);
        if yi != yj {
            let mut quad = qii + qjj + 2.0 * qij;
            if quad <= 0.0 {
                quad = TAU;
            }
            let delta = (-grad[i] - grad[j]) / quad;
            let diff = ai - aj;
            ai += delta;
            aj += delta;
            if diff > 0.0 {
                if aj < 0.0 {
                    aj = 0.0;
                    ai = diff;
                }
            } else if ai < 0.0 {
                ai = 0.0;
                aj = -diff;
            }
            if diff > 0.0 {
                if ai > c {
                    ai = c;
                    aj = c - diff;
                }
            } else if aj > c {
                aj = c;
                ai = c + diff;
            }
        } else {
            let mut quad = qii + qjj - 2.0 * qij;
            if quad <= 0.0 {
                quad = TAU;
            }
            let delta = (grad[i] - grad[j]) / quad;
            let sum = ai + aj;
            ai -= delta;
            aj += delta;
            if sum > c {
                if ai > c {
                    ai = c;
                    aj = sum - c;
                }
            } else if aj < 0.0 {
                aj = 0.0;
                ai = sum;
            }
            if sum > c {
                if aj > c {
                    aj = c;
                    ai = sum - c;
                }
            } else if ai < 0.0 {
                ai = 0.0;
                aj = sum;
            }
        }
        alpha[i] = ai;
        alpha[j] = aj;
        let (di, dj) = (ai - old_i, aj - old_j);
        let ki = &k[(i % l) * l..(i % l + 1) * l];
        let kj = &k[(j % l) * l..(j % l + 1) * l];
        let (si, sj) = (yi * di, yj * dj);
        let (g_pos, g_neg) = grad.split_at_mut(l);
        for t in 0..l {
            let s = si * ki[t] + sj * kj[t];
            g_pos[t] += s;
            g_neg[t] -= s;
        }
    }

    // Bias from free variables, or the midpoint of the feasible interval.
    let (mut ub, mut lb, mut sum_free, mut n_free) = (f64::INFINITY, f64::NEG_INFINITY, 0.0, 0usize);
    for t in 0..n2 {
        let y = ys(t);
        let yg = y * grad[t];
        if is_upper(alpha[t]) {
            if y < 0.0 {
                ub = ub.min(yg);
            } else {
                lb = lb.max(yg);
            }
        } else if is_lower(alpha[t]) {
            if y > 0.0 {
                ub = ub.min(yg);
            } else {
                lb = lb.max(yg);
            }
        } else {
            n_free += 1;
            sum_free += yg;
        }
    }
    let rho = if n_free > 0 {
        sum_free / n_free as f64
    } else {
        0.5 * (ub + lb)
    };
    let beta: Vec<f64> = (0..l).map(|i| alpha[i] - alpha[i + l]).collect();
    let objective = dual_objective(k, z, eps, &beta);
    DualSolution {
        beta,
        rho,
        objective,
        iterations,
        converged,
    }
}

/// `1/2 b'Kb - z'b + eps * sum|b|`
pub fn dual_objective(k: &[f64], z: &[f64], eps: f64, beta: &[f64]) -> f64 {
    let l = z.len();
    let mut quad = 0.0;
    for i in 0..l {
        for j in 0..l {
            quad += beta[i] * beta[j] * k[i * l + j];
        }
    }
    0.5 * quad - dot(z, beta) + eps * beta.iter().map(|b| b.abs()).sum::<f64>()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Svr {
    kernel: Kernel,
    support: Matrix,
    coef: Vec<f64>,
    rho: f64,
    y_mean: f64,
    y_scale: f64,
    converged: bool,
}

impl Svr {
    pub fn fit(x: &Matrix, y: &[f64], kernel: Kernel, c: f64, eps: f64) -> Result<Self> {
        Self::fit_with(x, y, kernel, c, eps, DEFAULT_TOLERANCE)
    }

    pub fn fit_with(x: &Matrix, y: &[f64], kernel: Kernel, c: f64, eps: f64, tol: f64) -> Result<Self> {
        let l = x.nrows();
        if l < 2 {
            return Err(Error::TooFewRows { needed: 2, got: l });
        }
        if !(c > 0.0 && eps >= 0.0) {
            return Err(Error::InvalidSpec(format!("C = {c}, epsilon = {eps}")));
        }
        let y_mean = y.iter().sum::<f64>() / l as f64;
        let sd = (y.iter().map(|v| (v - y_mean).powi(2)).sum::<f64>() / l as f64).sqrt();
        let y_scale = if sd > 0.0 { sd } else { 1.0 };
        let z: Vec<f64> = y.iter().map(|v| (v - y_mean) / y_scale).collect();

        let mut k = vec![0.0; l * l];
        for i in 0..l {
            for j in i..l {
                let v = kernel.eval(x.row(i), x.row(j));
                k[i * l + j] = v;
                k[j * l + i] = v;
            }
        }
        let sol = solve_dual(&k, &z, c, eps, tol, MAX_UPDATES);

        let sv: Vec<usize> = (0..l).filter(|&i| sol.beta[i] != 0.0).collect();
        Ok(Svr {
            kernel,
            support: x.select_rows(&sv),
            coef: sv.iter().map(|&i| sol.beta[i]).collect(),
            rho: sol.rho,
            y_mean,
            y_scale,
            converged: sol.converged,
        })
    }

    pub fn converged(&self) -> bool {
        self.converged
    }

    pub fn support_count(&self) -> usize {
        self.coef.len()
    }

    pub fn predict_row(&self, row: &[f64]) -> f64 {
        let f: f64 = self
            .support
            .rows_iter()
            .zip(&self.coef)
            .map(|(s, b)| b * self.kernel.eval(s, row))
            .sum::<f64>()
            - self.rho;
        self.y_mean + self.y_scale * f
    }

    pub fn predict(&self, x: &Matrix) -> Vec<f64> {
        x.rows_iter().map(|r| self.predict_row(r)).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fits_linear_function_within_epsilon_tube() {
        let xs: Vec<f64> = (0..30).map(|i| i as f64 / 10.0).collect();
        let y: Vec<f64> = xs.iter().map(|x| 2.0 * x + 1.0).collect();
        let x = Matrix::column(&xs);
        let m = Svr::fit(&x, &y, Kernel::Linear, 100.0, 0.01).unwrap();
        assert!(m.converged());
        let sd = 2.0 * (xs.iter().map(|v| (v - 1.45f64).powi(2)).sum::<f64>() / 30.0).sqrt();
        for (p, t) in m.predict(&x).iter().zip(&y) {
            assert!((p - t).abs() < 0.011 * sd + 1e-3, "{p} vs {t}");
        }
    }

    #[test]
    fn equality_constraint_holds() {
        let z = [0.3, -1.0, 0.5, 0.2];
        let pts = [0.0, 1.0, 2.0, 3.0];
        let k: Vec<f64> = pts
            .iter()
            .flat_map(|a| pts.iter().map(move |b| (-(a - b) * (a - b) * 0.5f64).exp()))
            .collect();
        let sol = solve_dual(&k, &z, 1.0, 0.1, 1e-6, 100_000);
        assert!(sol.converged);
        assert!(sol.beta.iter().sum::<f64>().abs() < 1e-9);
        assert!(sol.beta.iter().all(|b| b.abs() <= 1.0 + 1e-12));
    }
}
