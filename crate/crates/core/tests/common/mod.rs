#![allow(dead_code)]

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use pricebench::mes::{CriterionKind, PerCriterion, Weights};
use pricebench::Matrix;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_matrix(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> Matrix {
    let data = (0..rows * cols).map(|_| rng.random_range(-2.0..2.0)).collect();
    Matrix::from_vec(rows, cols, data).unwrap()
}

/// Straight-line MES: min-max each criterion column, then the weighted mean.
pub fn mes_oracle(raw: &[[f64; 5]], w: &[f64; 5]) -> Vec<f64> {
    let n = raw.len();
    let mut norm = vec![[0.0; 5]; n];
    for c in 0..5 {
        let mut lo = raw[0][c];
        let mut hi = raw[0][c];
        for r in raw {
            if r[c] < lo {
                lo = r[c];
            }
            if r[c] > hi {
                hi = r[c];
            }
        }
        for i in 0..n {
            norm[i][c] = if hi > lo { (raw[i][c] - lo) / (hi - lo) } else { 0.0 };
        }
    }
    let total = w[0] + w[1] + w[2] + w[3] + w[4];
    norm.iter()
        .map(|v| (w[0] * v[0] + w[1] * v[1] + w[2] * v[2] + w[3] * v[3] + w[4] * v[4]) / total)
        .collect()
}

pub fn to_rows(raw: &[[f64; 5]]) -> Vec<PerCriterion> {
    raw.iter().map(|r| PerCriterion(*r)).collect()
}

pub fn to_weights(w: &[f64; 5]) -> Weights {
    let pairs: Vec<(CriterionKind, f64)> = CriterionKind::ALL.iter().copied().zip(w.iter().copied()).collect();
    Weights::new(&pairs).unwrap()
}

/// Random criteria table with `n` methods and a random non-degenerate weight vector.
pub fn random_table(rng: &mut ChaCha8Rng, n: usize) -> (Vec<[f64; 5]>, [f64; 5]) {
    let raw: Vec<[f64; 5]> = (0..n)
        .map(|_| {
            [
                rng.random_range(0.01..0.5),
                rng.random_range(1.0..3000.0),
                rng.random_range(0..3) as f64,
                if rng.random_bool(0.5) { 5.0 } else { 2.0 },
                rng.random_range(0.0..0.05),
            ]
        })
        .collect();
    let mut w = [0.0; 5];
    while w.iter().sum::<f64>() <= 0.0 {
        for v in w.iter_mut() {
            *v = if rng.random_bool(0.3) {
                0.0
            } else {
                rng.random_range(0.0..100.0)
            };
        }
    }
    (raw, w)
}

pub fn knn_oracle(x: &Matrix, y: &[f64], row: &[f64], k: usize, p: u32, distance_weighted: bool) -> f64 {
    let dist = |r: &[f64]| -> f64 {
        let s: f64 = r.iter().zip(row).map(|(a, b)| (a - b).abs().powi(p as i32)).sum();
        s.powf(1.0 / p as f64)
    };
    let mut all: Vec<(f64, usize)> = (0..x.nrows()).map(|i| (dist(x.row(i)), i)).collect();
    // Stable insertion sort: equal distances keep index order.
    for i in 1..all.len() {
        let mut j = i;
        while j > 0 && all[j - 1].0 > all[j].0 {
            all.swap(j - 1, j);
            j -= 1;
        }
    }
    let nb = &all[..k];
    if !distance_weighted {
        return nb.iter().map(|&(_, i)| y[i]).sum::<f64>() / k as f64;
    }
    let exact: Vec<f64> = nb.iter().filter(|(d, _)| *d == 0.0).map(|&(_, i)| y[i]).collect();
    if !exact.is_empty() {
        return exact.iter().sum::<f64>() / exact.len() as f64;
    }
    let num: f64 = nb.iter().map(|&(d, i)| y[i] / d).sum();
    let den: f64 = nb.iter().map(|&(d, _)| 1.0 / d).sum();
    num / den
}

/// Exact minimum of the epsilon-SVR dual
/// `min 1/2 b'Kb - z'b + eps |b|_1  s.t.  sum b = 0, |b_i| <= c`
/// by enumerating every face of the feasible polytope. Each coordinate is at
/// `-c`, `0`, `+c`, or free with a fixed sign; on each face the objective is
/// a quadratic solved through its KKT system, and feasible stationary points
/// are compared.
pub fn svr_dual_oracle(k: &[f64], z: &[f64], c: f64, eps: f64) -> f64 {
    let l = z.len();
    let states = 5usize.pow(l as u32);
    let mut best = f64::INFINITY;
    let mut state = vec![0u8; l];
    for code in 0..states {
        let mut rest = code;
        for s in state.iter_mut() {
            *s = (rest % 5) as u8;
            rest /= 5;
        }
        // 0: -c, 1: free negative, 2: zero, 3: free positive, 4: +c
        let mut b = vec![0.0; l];
        let mut free = Vec::new();
        for i in 0..l {
            match state[i] {
                0 => b[i] = -c,
                4 => b[i] = c,
                1 | 3 => free.push(i),
                _ => {}
            }
        }
        let fixed_sum: f64 = b.iter().sum();
        if free.is_empty() {
            if fixed_sum.abs() < 1e-12 {
                best = best.min(svr_objective(k, z, eps, &b));
            }
            continue;
        }
        let m = free.len();
        let mut a = DMatrix::<f64>::zeros(m + 1, m + 1);
        let mut rhs = DVector::<f64>::zeros(m + 1);
        for (r, &i) in free.iter().enumerate() {
            let sign = if state[i] == 3 { 1.0 } else { -1.0 };
            for (s, &j) in free.iter().enumerate() {
                a[(r, s)] = k[i * l + j];
            }
            a[(r, m)] = 1.0;
            a[(m, r)] = 1.0;
            let coupling: f64 = (0..l).map(|j| k[i * l + j] * b[j]).sum();
            rhs[r] = z[i] - eps * sign - coupling;
        }
        rhs[m] = -fixed_sum;
        let Some(sol) = a.lu().solve(&rhs) else { continue };
        let mut ok = true;
        for (r, &i) in free.iter().enumerate() {
            let v = sol[r];
            let sign = if state[i] == 3 { 1.0 } else { -1.0 };
            if !v.is_finite() || v * sign < -1e-12 || v.abs() > c + 1e-12 {
                ok = false;
                break;
            }
            b[i] = v;
        }
        if ok {
            best = best.min(svr_objective(k, z, eps, &b));
        }
    }
    best
}

pub fn svr_objective(k: &[f64], z: &[f64], eps: f64, b: &[f64]) -> f64 {
    let l = z.len();
    let mut quad = 0.0;
    for i in 0..l {
        for j in 0..l {
            quad += b[i] * b[j] * k[i * l + j];
        }
    }
    let lin: f64 = z.iter().zip(b).map(|(u, v)| u * v).sum();
    0.5 * quad - lin + eps * b.iter().map(|v| v.abs()).sum::<f64>()
}
