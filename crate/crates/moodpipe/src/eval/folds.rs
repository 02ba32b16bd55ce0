//! Deterministic k-fold assignment.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Assignment of row indices to folds.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FoldAssignment {
    pub k: usize,
    /// Fold id per row index.
    pub fold_of: Vec<usize>,
}

impl FoldAssignment {
    pub fn test_indices(&self, fold: usize) -> Vec<usize> {
        (0..self.fold_of.len()).filter(|&i| self.fold_of[i] == fold).collect()
    }

    pub fn train_indices(&self, fold: usize) -> Vec<usize> {
        (0..self.fold_of.len()).filter(|&i| self.fold_of[i] != fold).collect()
    }

    pub fn fold_sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0; self.k];
        for &f in &self.fold_of {
            sizes[f] += 1;
        }
        sizes
    }
}

/// Shuffled partition of `n` rows into `k` near-equal folds (sizes differ
/// by at most one); depends only on (n, k, seed).
pub fn kfold_split(n: usize, k: usize, seed: u64) -> Result<FoldAssignment> {
    if n < k || k == 0 {
        return Err(Error::TooFewForFolds { n, k });
    }
    let mut order: Vec<usize> = (0..n).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    order.shuffle(&mut rng);

    let mut fold_of = vec![0usize; n];
    let base = n / k;
    let remainder = n % k;
    let mut at = 0;
    for fold in 0..k {
        let size = base + usize::from(fold < remainder);
        for &row in &order[at..at + size] {
            fold_of[row] = fold;
        }
        at += size;
    }
    Ok(FoldAssignment { k, fold_of })
}

/// Stratified variant: positives and negatives of one binary label column
/// are split separately so each fold keeps the base rate.
pub fn stratified_kfold(labels: &[bool], k: usize, seed: u64) -> Result<FoldAssignment> {
    let n = labels.len();
    if n < k || k == 0 {
        return Err(Error::TooFewForFolds { n, k });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut fold_of = vec![0usize; n];
    for class in [true, false] {
        let mut members: Vec<usize> = (0..n).filter(|&i| labels[i] == class).collect();
        members.shuffle(&mut rng);
        for (slot, &row) in members.iter().enumerate() {
            fold_of[row] = slot % k;
        }
    }
    Ok(FoldAssignment { k, fold_of })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn eight_rows_four_equal_folds() {
        let folds = kfold_split(8, 4, 1).unwrap();
        assert_eq!(folds.fold_sizes(), vec![2, 2, 2, 2]);
    }

    #[test]
    fn remainder_spreads_across_leading_folds() {
        let folds = kfold_split(10, 4, 1).unwrap();
        let mut sizes = folds.fold_sizes();
        sizes.sort_unstable();
        assert_eq!(sizes, vec![2, 2, 3, 3]);
    }

    #[test]
    fn same_inputs_same_assignment() {
        assert_eq!(kfold_split(40, 4, 7).unwrap(), kfold_split(40, 4, 7).unwrap());
        assert_ne!(kfold_split(40, 4, 7).unwrap(), kfold_split(40, 4, 8).unwrap());
    }

    #[test]
    fn too_few_rows_error() {
        assert!(matches!(
            kfold_split(3, 4, 0),
            Err(Error::TooFewForFolds { n: 3, k: 4 })
        ));
    }

    #[test]
    fn train_and_test_partition_rows() {
        let folds = kfold_split(11, 4, 3).unwrap();
        for fold in 0..4 {
            let mut all = folds.test_indices(fold);
            all.extend(folds.train_indices(fold));
            all.sort_unstable();
            assert_eq!(all, (0..11).collect::<Vec<_>>());
        }
    }

    #[test]
    fn stratified_keeps_base_rate_per_fold() {
        let labels: Vec<bool> = (0..40).map(|i| i % 4 == 0).collect(); // 25% positive
        let folds = stratified_kfold(&labels, 4, 5).unwrap();
        for fold in 0..4 {
            let test = folds.test_indices(fold);
            let positives = test.iter().filter(|&&i| labels[i]).count();
            assert!(positives >= 2 && positives <= 3, "fold {fold}: {positives}");
        }
    }
}
