use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Train/test row indices, each sorted ascending.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Split {
    pub train: Vec<usize>,
    pub test: Vec<usize>,
}

/// Seeded holdout split. The partition depends only on `(n, test_frac, seed)`.
/// Test size is `round(n * test_frac)`, at least 1 and at most `n - 1`.
pub fn holdout_split(n: usize, test_frac: f64, seed: u64) -> Result<Split> {
    if n < 2 {
        return Err(Error::TooFewRows { needed: 2, got: n });
    }
    if !(test_frac > 0.0 && test_frac < 1.0) {
        return Err(Error::InvalidData(format!("test_frac {test_frac} outside (0, 1)")));
    }
    let n_test = ((n as f64 * test_frac).round() as usize).clamp(1, n - 1);
    let mut perm: Vec<usize> = (0..n).collect();
    perm.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let mut test = perm[..n_test].to_vec();
    let mut train = perm[n_test..].to_vec();
    test.sort_unstable();
    train.sort_unstable();
    Ok(Split { train, test })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn paper_scale_sizes() {
        let s = holdout_split(2910, 0.1, 3).unwrap();
        assert_eq!((s.train.len(), s.test.len()), (2619, 291));
    }

    #[test]
    fn ten_rows() {
        for seed in 0..20 {
            let s = holdout_split(10, 0.1, seed).unwrap();
            assert_eq!((s.train.len(), s.test.len()), (9, 1));
        }
    }

    #[test]
    fn too_few_rows() {
        assert!(matches!(holdout_split(1, 0.1, 0), Err(Error::TooFewRows { .. })));
    }

    proptest! {
        #[test]
        fn partition_is_disjoint_and_complete(n in 2usize..500, frac in 0.01f64..0.99, seed: u64) {
            let s = holdout_split(n, frac, seed).unwrap();
            prop_assert_eq!(s.train.len() + s.test.len(), n);
            let mut all: Vec<usize> = s.train.iter().chain(&s.test).copied().collect();
            all.sort_unstable();
            prop_assert_eq!(all, (0..n).collect::<Vec<_>>());
            prop_assert_eq!(holdout_split(n, frac, seed).unwrap(), s);
        }
    }
}
