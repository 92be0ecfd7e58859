//! Seeded few-shot subsets.
//!
//! One permutation is drawn per seed and every split is a prefix of it, so
//! for a fixed seed the 1% subset is contained in the 10% subset, which is
//! contained in the 50% subset.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum SplitError {
    #[error("split fraction {0} is outside (0, 1]")]
    FractionOutOfRange(f64),
}

/// `ceil(fraction * n)`, ignoring floating-point noise below 1e-9 so that
/// `0.01 * 700` is 7 and not 8.
pub fn split_count(n: usize, fraction: f64) -> Result<usize, SplitError> {
    if !(fraction > 0.0 && fraction <= 1.0) {
        return Err(SplitError::FractionOutOfRange(fraction));
    }
    let raw = fraction * n as f64;
    let nearest = raw.round();
    let count = if (raw - nearest).abs() <= 1e-9 * (n as f64).max(1.0) {
        nearest
    } else {
        raw.ceil()
    };
    Ok((count as usize).min(n))
}

/// The seeded permutation of `0..n` that every split for `seed` is a prefix of.
pub fn permutation(n: usize, seed: u64) -> Vec<usize> {
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    order
}

/// Returns `ceil(fraction * len)` items in seeded-permutation order.
pub fn sample_split<T: Clone>(items: &[T], fraction: f64, seed: u64) -> Result<Vec<T>, SplitError> {
    let count = split_count(items.len(), fraction)?;
    Ok(permutation(items.len(), seed)
        .into_iter()
        .take(count)
        .map(|i| items[i].clone())
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::collections::HashSet;

    #[test]
    fn ceiling_counts() {
        assert_eq!(split_count(700, 0.01), Ok(7));
        assert_eq!(split_count(700, 0.10), Ok(70));
        assert_eq!(split_count(700, 0.50), Ok(350));
        assert_eq!(split_count(701, 0.01), Ok(8));
        assert_eq!(split_count(3, 0.5), Ok(2));
        assert_eq!(split_count(0, 0.5), Ok(0));
    }

    #[test]
    fn fraction_range() {
        assert!(split_count(10, 0.0).is_err());
        assert!(split_count(10, 1.01).is_err());
        assert!(split_count(10, f64::NAN).is_err());
        assert_eq!(split_count(10, 1.0), Ok(10));
    }

    #[test]
    fn full_split_is_a_permutation() {
        let items: Vec<u32> = (0..50).collect();
        let all = sample_split(&items, 1.0, 9).unwrap();
        assert_eq!(all.len(), 50);
        assert_ne!(all, items);
        assert_eq!(all, sample_split(&items, 1.0, 9).unwrap());
    }

    #[test]
    fn seed_changes_permutation() {
        let items: Vec<u32> = (0..100).collect();
        let a = sample_split(&items, 1.0, 42).unwrap();
        assert_eq!(a, sample_split(&items, 1.0, 42).unwrap());
        assert_ne!(a, sample_split(&items, 1.0, 43).unwrap());
    }

    proptest! {
        #[test]
        fn subset_without_duplicates(n in 0usize..400, fraction in 0.001f64..=1.0, seed: u64) {
            let items: Vec<usize> = (0..n).collect();
            let out = sample_split(&items, fraction, seed).unwrap();
            let unique: HashSet<_> = out.iter().collect();
            prop_assert_eq!(unique.len(), out.len());
            prop_assert_eq!(out.len(), split_count(n, fraction).unwrap());
            prop_assert!(out.iter().all(|i| *i < n));
        }
    }
}
