//! CART regression trees with squared-error, absolute-error and Poisson
//! split criteria.

use std::cmp::Ordering;
use std::cmp::Reverse;
use std::collections::BinaryHeap;

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::Matrix;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Criterion {
    SquaredError,
    AbsoluteError,
    Poisson,
}

impl Criterion {
    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "squared_error" => Ok(Criterion::SquaredError),
            "absolute_error" => Ok(Criterion::AbsoluteError),
            "poisson" => Ok(Criterion::Poisson),
            _ => Err(Error::InvalidSpec(format!("unknown criterion {s:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TreeParams {
    /// `None` grows until leaves are pure or too small to split.
    pub max_depth: Option<usize>,
    pub criterion: Criterion,
    pub min_samples_split: usize,
    /// Features examined per split; `None` means all.
    pub max_features: Option<usize>,
}

impl Default for TreeParams {
    fn default() -> Self {
        TreeParams {
            max_depth: None,
            criterion: Criterion::SquaredError,
            min_samples_split: 2,
            max_features: None,
        }
    }
}

impl TreeParams {
    /// Depth 0 from the tuning grid means unlimited.
    pub fn depth_from_grid(depth: i64) -> Option<usize> {
        (depth > 0).then_some(depth as usize)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Node {
    Leaf {
        value: f64,
    },
    Split {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegressionTree {
    nodes: Vec<Node>,
    width: usize,
}

#[derive(Clone, Copy)]
struct TotalF64(f64);
impl PartialEq for TotalF64 {
    fn eq(&self, o: &Self) -> bool {
        self.0.total_cmp(&o.0) == Ordering::Equal
    }
}
impl Eq for TotalF64 {}
impl PartialOrd for TotalF64 {
    fn partial_cmp(&self, o: &Self) -> Option<Ordering> {
        Some(self.cmp(o))
    }
}
impl Ord for TotalF64 {
    fn cmp(&self, o: &Self) -> Ordering {
        self.0.total_cmp(&o.0)
    }
}

/// Running sum of absolute deviations from the median of a growing multiset.
#[derive(Default)]
struct MedianSad {
    lower: BinaryHeap<TotalF64>,
    upper: BinaryHeap<Reverse<TotalF64>>,
    sum_lower: f64,
    sum_upper: f64,
}

impl MedianSad {
    fn push(&mut self, v: f64) {
        if self.lower.peek().is_none_or(|m| v <= m.0) {
            self.lower.push(TotalF64(v));
            self.sum_lower += v;
        } else {
            self.upper.push(Reverse(TotalF64(v)));
            self.sum_upper += v;
        }
        if self.lower.len() > self.upper.len() + 1 {
            let x = self.lower.pop().unwrap().0;
            self.sum_lower -= x;
            self.upper.push(Reverse(TotalF64(x)));
            self.sum_upper += x;
        } else if self.upper.len() > self.lower.len() {
            let x = self.upper.pop().unwrap().0 .0;
            self.sum_upper -= x;
            self.lower.push(TotalF64(x));
            self.sum_lower += x;
        }
    }

    fn sad(&self) -> f64 {
        let Some(m) = self.lower.peek().map(|m| m.0) else {
            return 0.0;
        };
        let sad = (m * self.lower.len() as f64 - self.sum_lower) + (self.sum_upper - m * self.upper.len() as f64);
        sad.max(0.0)
    }
}

fn median(values: &mut [f64]) -> f64 {
    values.sort_unstable_by(f64::total_cmp);
    let n = values.len();
    if n % 2 == 1 {
        values[n / 2]
    } else {
        0.5 * (values[n / 2 - 1] + values[n / 2])
    }
}

fn mean(values: &[f64]) -> f64 {
    values.iter().sum::<f64>() / values.len() as f64
}

fn node_impurity(criterion: Criterion, ys: &[f64]) -> f64 {
    let n = ys.len() as f64;
    match criterion {
        Criterion::SquaredError => {
            let m = mean(ys);
            ys.iter().map(|y| (y - m).powi(2)).sum::<f64>() / n
        }
        Criterion::AbsoluteError => {
            let med = median(&mut ys.to_vec());
            ys.iter().map(|y| (y - med).abs()).sum::<f64>() / n
        }
        Criterion::Poisson => {
            let m = mean(ys);
            ys.iter().map(|&y| poisson_term(y, m)).sum::<f64>() / n
        }
    }
}

fn poisson_term(y: f64, mu: f64) -> f64 {
    let ylog = if y > 0.0 { y * (y / mu).ln() } else { 0.0 };
    ylog - (y - mu)
}

/// Sum of `-S log(S / n)`, the part of the Poisson deviance that depends on
/// the partition.
fn poisson_part(sum: f64, n: f64) -> f64 {
    if sum <= 0.0 {
        f64::INFINITY
    } else {
        -sum * (sum / n).ln()
    }
}

struct Builder<'a, R> {
    x: &'a Matrix,
    y: &'a [f64],
    params: TreeParams,
    rng: &'a mut R,
    nodes: Vec<Node>,
}

struct BestSplit {
    feature: usize,
    threshold: f64,
    cost: f64,
}

impl<R: Rng> Builder<'_, R> {
    fn leaf_value(&self, rows: &[usize]) -> f64 {
        let mut ys: Vec<f64> = rows.iter().map(|&r| self.y[r]).collect();
        match self.params.criterion {
            Criterion::AbsoluteError => median(&mut ys),
            _ => mean(&ys),
        }
    }

    fn build(&mut self, rows: Vec<usize>, depth: usize) -> usize {
        let id = self.nodes.len();
        self.nodes.push(Node::Leaf {
            value: self.leaf_value(&rows),
        });
        let ys: Vec<f64> = rows.iter().map(|&r| self.y[r]).collect();
        let stop = rows.len() < self.params.min_samples_split.max(2)
            || self.params.max_depth.is_some_and(|d| depth >= d)
            || node_impurity(self.params.criterion, &ys) <= 1e-12 * (1.0 + mean(&ys).abs()).powi(2);
        if stop {
            return id;
        }
        let Some(best) = self.best_split(&rows) else {
            return id;
        };
        let (left, right): (Vec<usize>, Vec<usize>) = rows
            .iter()
            .partition(|&&r| self.x.get(r, best.feature) <= best.threshold);
        drop(rows);
        let l = self.build(left, depth + 1);
        let r = self.build(right, depth + 1);
        self.nodes[id] = Node::Split {
            feature: best.feature,
            threshold: best.threshold,
            left: l,
            right: r,
        };
        id
    }

    fn best_split(&mut self, rows: &[usize]) -> Option<BestSplit> {
        let width = self.x.ncols();
        let mut features: Vec<usize> = (0..width).collect();
        let budget = match self.params.max_features {
            Some(k) if k < width => {
                features.shuffle(self.rng);
                k
            }
            _ => width,
        };
        let mut best: Option<BestSplit> = None;
        let mut examined = 0;
        let mut pairs: Vec<(f64, f64)> = Vec::with_capacity(rows.len());
        for f in features {
            if examined >= budget {
                break;
            }
            let (lo, hi) = rows.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &r| {
                let v = self.x.get(r, f);
                (lo.min(v), hi.max(v))
            });
            if lo == hi {
                // Constant features do not count towards the budget.
                continue;
            }
            examined += 1;
            let found = if rows.iter().all(|&r| {
                let v = self.x.get(r, f);
                v == lo || v == hi
            }) {
                two_valued_cost(
                    self.params.criterion,
                    rows.iter().map(|&r| (self.x.get(r, f) == lo, self.y[r])),
                )
                .map(|cost| (lo, hi, cost))
            } else {
                pairs.clear();
                pairs.extend(rows.iter().map(|&r| (self.x.get(r, f), self.y[r])));
                pairs.sort_unstable_by(|a, b| a.0.total_cmp(&b.0));
                scan(self.params.criterion, &pairs).map(|(pos, cost)| (pairs[pos - 1].0, pairs[pos].0, cost))
            };
            if let Some((a, b, cost)) = found {
                if best.as_ref().is_none_or(|s| cost < s.cost) {
                    let mut threshold = 0.5 * (a + b);
                    if threshold >= b {
                        threshold = a;
                    }
                    best = Some(BestSplit {
                        feature: f,
                        threshold,
                        cost,
                    });
                }
            }
        }
        best
    }
}

/// Sum of absolute deviations from the lower median.
fn sad(values: &mut [f64]) -> f64 {
    if values.is_empty() {
        return 0.0;
    }
    let mid = (values.len() - 1) / 2;
    let (_, m, _) = values.select_nth_unstable_by(mid, f64::total_cmp);
    let m = *m;
    values.iter().map(|v| (v - m).abs()).sum()
}

/// Cost of the only cut of a feature with two distinct values; `is_low`
/// marks rows on the left side. Agrees with [`scan`] at that cut.
fn two_valued_cost(criterion: Criterion, rows: impl Iterator<Item = (bool, f64)>) -> Option<f64> {
    let (mut left, mut right) = (Vec::new(), Vec::new());
    for (is_low, y) in rows {
        if is_low {
            left.push(y);
        } else {
            right.push(y);
        }
    }
    let cost = match criterion {
        Criterion::SquaredError => {
            let sse = |v: &[f64]| {
                let s: f64 = v.iter().sum();
                v.iter().map(|y| y * y).sum::<f64>() - s * s / v.len() as f64
            };
            sse(&left) + sse(&right)
        }
        Criterion::Poisson => {
            let part = |v: &[f64]| poisson_part(v.iter().sum(), v.len() as f64);
            part(&left) + part(&right)
        }
        Criterion::AbsoluteError => sad(&mut left) + sad(&mut right),
    };
    cost.is_finite().then_some(cost)
}

/// Finds the cut position `k` (left = `pairs[..k]`) minimizing the summed
/// child impurity. Only cuts between distinct feature values are valid.
fn scan(criterion: Criterion, pairs: &[(f64, f64)]) -> Option<(usize, f64)> {
    let n = pairs.len();
    let mut best: Option<(usize, f64)> = None;
    let mut consider = |k: usize, cost: f64| {
        if pairs[k - 1].0 < pairs[k].0 && best.is_none_or(|(_, c)| cost < c) {
            best = Some((k, cost));
        }
    };
    match criterion {
        Criterion::SquaredError | Criterion::Poisson => {
            let total: f64 = pairs.iter().map(|p| p.1).sum();
            let total_sq: f64 = pairs.iter().map(|p| p.1 * p.1).sum();
            let (mut s, mut sq) = (0.0, 0.0);
            for k in 1..n {
                s += pairs[k - 1].1;
                sq += pairs[k - 1].1 * pairs[k - 1].1;
                let (nl, nr) = (k as f64, (n - k) as f64);
                let cost = match criterion {
                    Criterion::SquaredError => (sq - s * s / nl) + ((total_sq - sq) - (total - s).powi(2) / nr),
                    _ => poisson_part(s, nl) + poisson_part(total - s, nr),
                };
                if cost.is_finite() {
                    consider(k, cost);
                }
            }
        }
        Criterion::AbsoluteError => {
            let mut prefix = vec![0.0; n + 1];
            let mut acc = MedianSad::default();
            for k in 1..=n {
                acc.push(pairs[k - 1].1);
                prefix[k] = acc.sad();
            }
            let mut suffix = vec![0.0; n + 1];
            let mut acc = MedianSad::default();
            for k in (0..n).rev() {
                acc.push(pairs[k].1);
                suffix[k] = acc.sad();
            }
            for k in 1..n {
                consider(k, prefix[k] + suffix[k]);
            }
        }
    }
    best
}

impl RegressionTree {
    /// Fits on the rows listed in `sample` (duplicates allowed, e.g. a bootstrap).
    pub fn fit_sample<R: Rng>(
        x: &Matrix,
        y: &[f64],
        sample: &[usize],
        params: &TreeParams,
        rng: &mut R,
    ) -> Result<Self> {
        if x.nrows() != y.len() {
            return Err(Error::LengthMismatch(x.nrows(), y.len()));
        }
        if sample.is_empty() {
            return Err(Error::TooFewRows { needed: 1, got: 0 });
        }
        if params.criterion == Criterion::Poisson {
            if let Some(&r) = sample.iter().find(|&&r| y[r] <= 0.0) {
                return Err(Error::InvalidData(format!(
                    "poisson criterion needs positive targets; y[{r}] = {}",
                    y[r]
                )));
            }
        }
        let mut b = Builder {
            x,
            y,
            params: *params,
            rng,
            nodes: Vec::new(),
        };
        b.build(sample.to_vec(), 0);
        Ok(RegressionTree {
            nodes: b.nodes,
            width: x.ncols(),
        })
    }

    pub fn fit<R: Rng>(x: &Matrix, y: &[f64], params: &TreeParams, rng: &mut R) -> Result<Self> {
        let all: Vec<usize> = (0..x.nrows()).collect();
        Self::fit_sample(x, y, &all, params, rng)
    }

    pub fn predict_row(&self, row: &[f64]) -> f64 {
        let mut i = 0;
        loop {
            match &self.nodes[i] {
                Node::Leaf { value } => return *value,
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => i = if row[*feature] <= *threshold { *left } else { *right },
            }
        }
    }

    pub fn predict(&self, x: &Matrix) -> Vec<f64> {
        x.rows_iter().map(|r| self.predict_row(r)).collect()
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn depth(&self) -> usize {
        fn go(nodes: &[Node], i: usize) -> usize {
            match &nodes[i] {
                Node::Leaf { .. } => 0,
                Node::Split { left, right, .. } => 1 + go(nodes, *left).max(go(nodes, *right)),
            }
        }
        go(&self.nodes, 0)
    }

    pub fn width(&self) -> usize {
        self.width
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn rng() -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(0)
    }

    fn random_data(n: usize, d: usize, seed: u64) -> (Matrix, Vec<f64>) {
        let mut r = ChaCha8Rng::seed_from_u64(seed);
        let rows: Vec<Vec<f64>> = (0..n)
            .map(|_| (0..d).map(|_| r.random_range(-3.0..3.0)).collect())
            .collect();
        let y = rows
            .iter()
            .map(|v| v.iter().sum::<f64>().exp() + r.random_range(0.0..1.0))
            .collect();
        (Matrix::from_rows(&rows).unwrap(), y)
    }

    #[test]
    fn median_sad_matches_brute_force() {
        let vals = [5.0, 1.0, 9.0, 3.0, 3.0, 7.0, -2.0, 4.5];
        let mut acc = MedianSad::default();
        for k in 1..=vals.len() {
            acc.push(vals[k - 1]);
            let mut prefix = vals[..k].to_vec();
            let med = median(&mut prefix);
            let brute: f64 = vals[..k].iter().map(|v| (v - med).abs()).sum();
            assert!((acc.sad() - brute).abs() < 1e-12, "k={k}");
        }
    }

    #[test]
    fn unlimited_tree_memorizes_unique_rows() {
        let (x, y) = random_data(150, 3, 1);
        for criterion in [Criterion::SquaredError, Criterion::AbsoluteError, Criterion::Poisson] {
            let params = TreeParams {
                criterion,
                ..Default::default()
            };
            let t = RegressionTree::fit(&x, &y, &params, &mut rng()).unwrap();
            for (p, t) in t.predict(&x).iter().zip(&y) {
                assert!((p - t).abs() < 1e-9, "{criterion:?}");
            }
        }
    }

    #[test]
    fn depth_limit_respected() {
        let (x, y) = random_data(200, 2, 2);
        let params = TreeParams {
            max_depth: Some(3),
            ..Default::default()
        };
        let t = RegressionTree::fit(&x, &y, &params, &mut rng()).unwrap();
        assert!(t.depth() <= 3);
        assert_eq!(TreeParams::depth_from_grid(0), None);
    }

    #[test]
    fn poisson_rejects_non_positive_targets() {
        let x = Matrix::from_rows(&[vec![0.0], vec![1.0]]).unwrap();
        let params = TreeParams {
            criterion: Criterion::Poisson,
            ..Default::default()
        };
        let err = RegressionTree::fit(&x, &[1.0, 0.0], &params, &mut rng()).unwrap_err();
        assert!(matches!(err, Error::InvalidData(_)));
    }

    #[test]
    fn stump_picks_obvious_split() {
        let x = Matrix::from_rows(&[vec![1.0], vec![2.0], vec![3.0], vec![4.0]]).unwrap();
        let y = [1.0, 1.0, 10.0, 10.0];
        let params = TreeParams {
            max_depth: Some(1),
            ..Default::default()
        };
        let t = RegressionTree::fit(&x, &y, &params, &mut rng()).unwrap();
        assert_eq!(t.predict_row(&[2.4]), 1.0);
        assert_eq!(t.predict_row(&[2.6]), 10.0);
    }

    #[test]
    fn absolute_error_leaves_use_median() {
        let x = Matrix::from_rows(&[vec![0.0], vec![0.0], vec![0.0]]).unwrap();
        let params = TreeParams {
            criterion: Criterion::AbsoluteError,
            ..Default::default()
        };
        let t = RegressionTree::fit(&x, &[1.0, 2.0, 100.0], &params, &mut rng()).unwrap();
        assert_eq!(t.predict_row(&[0.0]), 2.0);
    }

    #[test]
    fn two_valued_shortcut_matches_scan() {
        let mut r = rng();
        for criterion in [Criterion::SquaredError, Criterion::AbsoluteError, Criterion::Poisson] {
            for _ in 0..50 {
                let n = r.random_range(2..40);
                let mut pairs: Vec<(f64, f64)> = (0..n)
                    .map(|_| (f64::from(r.random_range(0..2u8)), r.random_range(1.0..100.0)))
                    .collect();
                if pairs.iter().all(|p| p.0 == pairs[0].0) {
                    continue;
                }
                let quick = two_valued_cost(criterion, pairs.iter().map(|p| (p.0 == 0.0, p.1))).unwrap();
                pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
                let (_, full) = scan(criterion, &pairs).unwrap();
                assert!(
                    (quick - full).abs() <= 1e-9 * full.abs().max(1.0),
                    "{criterion:?} {quick} {full}"
                );
            }
        }
    }
}
