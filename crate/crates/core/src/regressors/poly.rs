//! Polynomial regression: least squares on a degree-`d` monomial expansion.
//!
//! The expansion contains every monomial of total degree `<= d` over the
//! input columns, except monomials that are redundant on the training data:
//! powers of 0/1 indicator columns (identical to the column itself) and
//! monomials that are identically zero on the training rows (e.g. products
//! of mutually exclusive one-hot indicators). Dropping them leaves the
//! column space, and hence the minimum-norm fit, unchanged.

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::Matrix;

/// Expansions up to this many columns are solved exactly via SVD; wider ones
/// via conjugate gradients on the normal equations started from zero.
pub const DIRECT_SOLVE_MAX_COLUMNS: usize = 600;
const CG_MAX_ITER: usize = 400;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolyModel {
    degree: usize,
    /// Each monomial is a non-decreasing list of input column indices; the
    /// empty list is the intercept.
    monomials: Vec<Vec<usize>>,
    coefficients: Vec<f64>,
    rank_deficient: bool,
    converged: bool,
}

fn eval_monomial(m: &[usize], row: &[f64]) -> f64 {
    m.iter().fold(1.0, |acc, &j| acc * row[j])
}

fn enumerate_monomials(width: usize, degree: usize, binary: &[bool]) -> Vec<Vec<usize>> {
    let mut out = vec![Vec::new()];
    let mut frontier: Vec<Vec<usize>> = vec![Vec::new()];
    for _ in 0..degree {
        let mut next = Vec::new();
        for m in &frontier {
            let start = m.last().copied().unwrap_or(0);
            for j in start..width {
                if binary[j] && m.last() == Some(&j) {
                    continue;
                }
                let mut e = m.clone();
                e.push(j);
                next.push(e);
            }
        }
        out.extend(next.iter().cloned());
        frontier = next;
    }
    out
}

impl PolyModel {
    pub fn fit(x: &Matrix, y: &[f64], degree: usize) -> Result<Self> {
        if !(1..=4).contains(&degree) {
            return Err(Error::InvalidSpec(format!("degree {degree} outside 1..=4")));
        }
        let (n, width) = (x.nrows(), x.ncols());
        let binary: Vec<bool> = (0..width)
            .map(|j| x.rows_iter().all(|r| r[j] == 0.0 || r[j] == 1.0))
            .collect();

        let mut monomials = Vec::new();
        let mut columns: Vec<Vec<f64>> = Vec::new();
        for m in enumerate_monomials(width, degree, &binary) {
            let col: Vec<f64> = x.rows_iter().map(|r| eval_monomial(&m, r)).collect();
            if m.is_empty() || col.iter().any(|&v| v != 0.0) {
                monomials.push(m);
                columns.push(col);
            }
        }
        let p = monomials.len();

        let (coefficients, rank_deficient, converged) = if p <= DIRECT_SOLVE_MAX_COLUMNS {
            let design = nalgebra::DMatrix::from_fn(n, p, |i, j| columns[j][i]);
            let svd = design.svd(true, true);
            let smax = svd.singular_values.max();
            let tol = f64::EPSILON * n.max(p) as f64 * smax;
            let rank = svd.rank(tol);
            let coef = svd
                .solve(&DVector::from_column_slice(y), tol)
                .map_err(|e| Error::InvalidData(format!("least squares failed: {e}")))?;
            (coef.as_slice().to_vec(), rank < p, true)
        } else {
            let (coef, converged) = cgls(&columns, y, n);
            (coef, p > n, converged)
        };

        Ok(PolyModel {
            degree,
            monomials,
            coefficients,
            rank_deficient,
            converged,
        })
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn monomials(&self) -> &[Vec<usize>] {
        &self.monomials
    }

    pub fn coefficients(&self) -> &[f64] {
        &self.coefficients
    }

    /// The expansion had dependent columns; a minimum-norm solution was used.
    pub fn rank_deficient(&self) -> bool {
        self.rank_deficient
    }

    pub fn converged(&self) -> bool {
        self.converged
    }

    pub fn predict_row(&self, row: &[f64]) -> f64 {
        self.monomials
            .iter()
            .zip(&self.coefficients)
            .map(|(m, c)| c * eval_monomial(m, row))
            .sum()
    }

    pub fn predict(&self, x: &Matrix) -> Vec<f64> {
        x.rows_iter().map(|r| self.predict_row(r)).collect()
    }
}

/// CGLS from a zero start on column-normalized data. Returns coefficients in
/// the original column scale.
fn cgls(columns: &[Vec<f64>], y: &[f64], n: usize) -> (Vec<f64>, bool) {
    let p = columns.len();
    let norms: Vec<f64> = columns
        .iter()
        .map(|c| c.iter().map(|v| v * v).sum::<f64>().sqrt().max(f64::MIN_POSITIVE))
        .collect();
    let apply = |v: &[f64]| -> Vec<f64> {
        let mut out = vec![0.0; n];
        for (j, c) in columns.iter().enumerate() {
            let s = v[j] / norms[j];
            if s != 0.0 {
                for (o, a) in out.iter_mut().zip(c) {
                    *o += a * s;
                }
            }
        }
        out
    };
    let apply_t = |r: &[f64]| -> Vec<f64> {
        columns
            .iter()
            .zip(&norms)
            .map(|(c, nrm)| c.iter().zip(r).map(|(a, b)| a * b).sum::<f64>() / nrm)
            .collect()
    };
    let dot = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(u, v)| u * v).sum::<f64>();

    let mut w = vec![0.0; p];
    let mut r = y.to_vec();
    let mut s = apply_t(&r);
    let mut d = s.clone();
    let mut gamma = dot(&s, &s);
    let gamma0 = gamma;
    let mut converged = gamma0 == 0.0;
    for _ in 0..CG_MAX_ITER {
        if converged {
            break;
        }
        let q = apply(&d);
        let qq = dot(&q, &q);
        if qq <= 0.0 {
            converged = true;
            break;
        }
        let alpha = gamma / qq;
        for (wi, di) in w.iter_mut().zip(&d) {
            *wi += alpha * di;
        }
        for (ri, qi) in r.iter_mut().zip(&q) {
            *ri -= alpha * qi;
        }
        s = apply_t(&r);
        let gamma_new = dot(&s, &s);
        if gamma_new <= 1e-20 * gamma0 {
            converged = true;
        }
        let beta = gamma_new / gamma;
        gamma = gamma_new;
        for (di, si) in d.iter_mut().zip(&s) {
            *di = si + beta * *di;
        }
    }
    (w.iter().zip(&norms).map(|(wi, nrm)| wi / nrm).collect(), converged)
}
