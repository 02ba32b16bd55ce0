//! Supervised discretization by recursive entropy-minimizing binary
//! splitting with the MDL acceptance criterion.
//!
//! Candidate cuts sit at midpoints between consecutive sorted distinct
//! values where the class composition changes. At each level the cut with
//! the highest information gain is accepted iff
//!
//! ```text
//! gain > (log2(N-1) + log2(3^k - 2) - k*H(S) + k1*H(S1) + k2*H(S2)) / N
//! ```
//!
//! with `k`, `k1`, `k2` the class counts in the full set and the two halves.
//! Accepted halves recurse; an empty cut list collapses the column to one
//! interval.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::FeatureMatrix;

use super::entropy::entropy;

fn class_counts(pairs: &[(f64, bool)]) -> [u64; 2] {
    let mut counts = [0u64; 2];
    for &(_, class) in pairs {
        counts[class as usize] += 1;
    }
    counts
}

fn distinct_classes(counts: &[u64; 2]) -> u32 {
    counts.iter().filter(|&&c| c > 0).count() as u32
}

fn partition_entropy(counts: &[u64; 2]) -> f64 {
    entropy(counts).unwrap_or(0.0)
}

/// Candidate split positions: index `p` splits sorted pairs into
/// `[..p]` / `[p..]`. A position qualifies when the neighboring values are
/// distinct and the two value-groups do not share one single class.
fn candidate_positions(pairs: &[(f64, bool)]) -> Vec<usize> {
    let mut candidates = Vec::new();
    let n = pairs.len();
    let mut group_start = 0;
    while group_start < n {
        let value = pairs[group_start].0;
        let mut group_end = group_start + 1;
        while group_end < n && pairs[group_end].0 == value {
            group_end += 1;
        }
        if group_end < n {
            // Classes present in this value-group and the next one.
            let next_value = pairs[group_end].0;
            let mut classes = [false; 2];
            for &(v, c) in &pairs[group_start..] {
                if v != value && v != next_value {
                    break;
                }
                classes[c as usize] = true;
            }
            if classes[0] && classes[1] {
                candidates.push(group_end);
            }
        }
        group_start = group_end;
    }
    candidates
}

fn split_gain(pairs: &[(f64, bool)], position: usize) -> f64 {
    let n = pairs.len() as f64;
    let left = class_counts(&pairs[..position]);
    let right = class_counts(&pairs[position..]);
    let total = [left[0] + right[0], left[1] + right[1]];
    partition_entropy(&total)
        - (position as f64 / n) * partition_entropy(&left)
        - ((pairs.len() - position) as f64 / n) * partition_entropy(&right)
}

/// The Fayyad-Irani acceptance threshold for a concrete split.
fn mdl_threshold(pairs: &[(f64, bool)], position: usize) -> f64 {
    let n = pairs.len() as f64;
    let left = class_counts(&pairs[..position]);
    let right = class_counts(&pairs[position..]);
    let total = [left[0] + right[0], left[1] + right[1]];
    let k = distinct_classes(&total) as f64;
    let k1 = distinct_classes(&left) as f64;
    let k2 = distinct_classes(&right) as f64;
    ((n - 1.0).log2() + (3f64.powf(k) - 2.0).log2() - k * partition_entropy(&total)
        + k1 * partition_entropy(&left)
        + k2 * partition_entropy(&right))
        / n
}

fn recurse(pairs: &[(f64, bool)], cuts: &mut Vec<f64>) {
    if pairs.len() < 2 {
        return;
    }
    let candidates = candidate_positions(pairs);
    if candidates.is_empty() {
        return;
    }
    // Highest gain wins; ties go to the lowest cut value (first position).
    let mut best_position = candidates[0];
    let mut best_gain = split_gain(pairs, best_position);
    for &p in &candidates[1..] {
        let gain = split_gain(pairs, p);
        if gain > best_gain + 1e-12 {
            best_gain = gain;
            best_position = p;
        }
    }
    if best_gain > mdl_threshold(pairs, best_position) {
        let cut = (pairs[best_position - 1].0 + pairs[best_position].0) / 2.0;
        cuts.push(cut);
        recurse(&pairs[..best_position], cuts);
        recurse(&pairs[best_position..], cuts);
    }
}

/// Discretize one column against a binary class, returning the sorted cut
/// points. A constant column or an unsplittable one yields no cuts.
pub fn mdl_discretize(column: &[f64], class: &[bool]) -> Result<Vec<f64>> {
    if column.len() != class.len() {
        return Err(Error::LengthMismatch {
            left: column.len(),
            right: class.len(),
        });
    }
    if column.len() < 2 {
        return Ok(Vec::new());
    }
    let mut pairs: Vec<(f64, bool)> = column.iter().copied().zip(class.iter().copied()).collect();
    pairs.sort_by(|a, b| a.0.partial_cmp(&b.0).expect("feature values are finite"));
    let mut cuts = Vec::new();
    recurse(&pairs, &mut cuts);
    cuts.sort_by(|a, b| a.partial_cmp(b).unwrap());
    Ok(cuts)
}

/// Fitted per-column cut points, reusable on held-out rows.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiscretizationModel {
    /// The binary class column the model was fitted against.
    pub emotion: String,
    pub columns: Vec<String>,
    /// Strictly increasing cut points per column; empty = single interval.
    pub cuts: Vec<Vec<f64>>,
}

/// A discretized matrix: interval indices per column plus each column's
/// interval count (arity), which categorical learners need.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiscreteMatrix {
    pub track_ids: Vec<u32>,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<usize>>,
    pub arities: Vec<usize>,
}

impl DiscreteMatrix {
    /// View the interval indices as a plain feature matrix (values 0.0,
    /// 1.0, ...), for learners and tests that treat them numerically.
    pub fn to_feature_matrix(&self, provenance: &crate::features::MatrixProvenance) -> FeatureMatrix {
        FeatureMatrix {
            track_ids: self.track_ids.clone(),
            columns: self.columns.clone(),
            rows: self
                .rows
                .iter()
                .map(|r| r.iter().map(|&v| v as f64).collect())
                .collect(),
            provenance: provenance.clone(),
        }
    }
}

impl DiscretizationModel {
    /// Fit every column of `matrix` independently against one emotion's
    /// binary labels.
    pub fn fit(matrix: &FeatureMatrix, labels: &[bool], emotion: &str) -> Result<Self> {
        if matrix.rows.len() != labels.len() {
            return Err(Error::LengthMismatch {
                left: matrix.rows.len(),
                right: labels.len(),
            });
        }
        let mut cuts = Vec::with_capacity(matrix.columns.len());
        for col in 0..matrix.columns.len() {
            let column: Vec<f64> = matrix.rows.iter().map(|r| r[col]).collect();
            cuts.push(mdl_discretize(&column, labels)?);
        }
        Ok(DiscretizationModel {
            emotion: emotion.to_string(),
            columns: matrix.columns.clone(),
            cuts,
        })
    }

    /// Interval index of a value in a column: the number of cuts below it
    /// (values exactly at a cut fall to the lower interval).
    pub fn interval_of(&self, col: usize, value: f64) -> usize {
        self.cuts[col].partition_point(|&c| c < value)
    }

    /// Interval count per column.
    pub fn arities(&self) -> Vec<usize> {
        self.cuts.iter().map(|c| c.len() + 1).collect()
    }

    /// Map a (possibly held-out) matrix through the fitted cut points. The
    /// matrix must carry the same columns the model was fitted on.
    pub fn apply(&self, matrix: &FeatureMatrix) -> Result<DiscreteMatrix> {
        if matrix.columns != self.columns {
            return Err(Error::Config(
                "discretization model columns do not match the matrix".into(),
            ));
        }
        let rows = matrix
            .rows
            .iter()
            .map(|row| {
                row.iter()
                    .enumerate()
                    .map(|(col, &v)| self.interval_of(col, v))
                    .collect()
            })
            .collect();
        Ok(DiscreteMatrix {
            track_ids: matrix.track_ids.clone(),
            columns: self.columns.clone(),
            rows,
            arities: self.arities(),
        })
    }
}

/// Fit and apply in one step: every column discretized against one
/// emotion's labels.
pub fn discretize_matrix(
    matrix: &FeatureMatrix,
    labels: &[bool],
    emotion: &str,
) -> Result<(DiscreteMatrix, DiscretizationModel)> {
    let model = DiscretizationModel::fit(matrix, labels, emotion)?;
    let discrete = model.apply(matrix)?;
    Ok((discrete, model))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::features::MatrixProvenance;
    use approx::assert_relative_eq;

    fn matrix(columns: Vec<&str>, rows: Vec<Vec<f64>>) -> FeatureMatrix {
        FeatureMatrix {
            track_ids: (1..=rows.len() as u32).collect(),
            columns: columns.into_iter().map(String::from).collect(),
            rows,
            provenance: MatrixProvenance {
                corpus_hash: String::new(),
                spec_hash: String::new(),
                set_hash: String::new(),
            },
        }
    }

    #[test]
    fn two_cluster_column_gets_single_midpoint_cut() {
        // Hand-computed: gain 1.0 at the 3/101 boundary, criterion
        // (log2(5) + log2(7) - 2) / 6 = 0.52155.
        let column = [1.0, 2.0, 3.0, 101.0, 102.0, 103.0];
        let class = [false, false, false, true, true, true];
        let cuts = mdl_discretize(&column, &class).unwrap();
        assert_eq!(cuts, vec![52.0]);

        let pairs: Vec<(f64, bool)> = column.iter().copied().zip(class).collect();
        assert_relative_eq!(split_gain(&pairs, 3), 1.0, max_relative = 1e-12);
        assert_relative_eq!(mdl_threshold(&pairs, 3), 0.5215471694908277, max_relative = 1e-12);
    }

    #[test]
    fn pure_class_yields_no_cuts() {
        let column = [1.0, 2.0, 3.0, 4.0];
        let class = [false; 4];
        assert!(mdl_discretize(&column, &class).unwrap().is_empty());
    }

    #[test]
    fn alternating_small_sample_rejected_by_criterion() {
        // All three candidate cuts have gain below the MDL threshold at N=4.
        let column = [1.0, 2.0, 3.0, 4.0];
        let class = [false, true, false, true];
        assert!(mdl_discretize(&column, &class).unwrap().is_empty());
    }

    #[test]
    fn constant_column_yields_no_cuts() {
        let column = [5.0; 6];
        let class = [false, true, false, true, false, true];
        assert!(mdl_discretize(&column, &class).unwrap().is_empty());
    }

    #[test]
    fn length_mismatch_rejected() {
        assert!(matches!(
            mdl_discretize(&[1.0], &[true, false]),
            Err(Error::LengthMismatch { .. })
        ));
    }

    #[test]
    fn cuts_lie_strictly_between_observed_values() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(71);
        for _ in 0..100 {
            let n = rng.gen_range(2..40);
            let column: Vec<f64> = (0..n).map(|_| (rng.gen_range(0..15) as f64) / 3.0).collect();
            let class: Vec<bool> = (0..n).map(|_| rng.gen_bool(0.5)).collect();
            let cuts = mdl_discretize(&column, &class).unwrap();
            let mut sorted = column.clone();
            sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
            for &cut in &cuts {
                assert!(!column.contains(&cut), "cut {cut} equals an observed value");
                let below = sorted.iter().any(|&v| v < cut);
                let above = sorted.iter().any(|&v| v > cut);
                assert!(below && above, "cut {cut} outside the observed range");
            }
        }
    }

    #[test]
    fn monotone_transform_preserves_intervals() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        for _ in 0..50 {
            let n = rng.gen_range(4..30);
            let column: Vec<f64> = (0..n).map(|_| rng.gen_range(-2.0..2.0)).collect();
            let class: Vec<bool> = (0..n).map(|_| rng.gen_bool(0.4)).collect();
            let transformed: Vec<f64> = column.iter().map(|v| v.exp()).collect();

            let m1 = matrix(vec!["x"], column.iter().map(|&v| vec![v]).collect());
            let m2 = matrix(vec!["x"], transformed.iter().map(|&v| vec![v]).collect());
            let (d1, _) = discretize_matrix(&m1, &class, "power").unwrap();
            let (d2, _) = discretize_matrix(&m2, &class, "power").unwrap();
            assert_eq!(d1.rows, d2.rows, "interval labels must survive exp()");
        }
    }

    #[test]
    fn matrix_discretization_and_reapplication() {
        let m = matrix(
            vec!["a", "const"],
            vec![
                vec![1.0, 7.0],
                vec![2.0, 7.0],
                vec![3.0, 7.0],
                vec![101.0, 7.0],
                vec![102.0, 7.0],
                vec![103.0, 7.0],
            ],
        );
        let labels = [false, false, false, true, true, true];
        let (discrete, model) = discretize_matrix(&m, &labels, "tension").unwrap();
        let col_a: Vec<usize> = discrete.rows.iter().map(|r| r[0]).collect();
        assert_eq!(col_a, vec![0, 0, 0, 1, 1, 1]);
        let col_const: Vec<usize> = discrete.rows.iter().map(|r| r[1]).collect();
        assert_eq!(col_const, vec![0; 6], "constant column maps to interval 0");
        assert_eq!(model.arities(), vec![2, 1]);

        // Idempotence: re-applying the fitted model reproduces the fit-time
        // intervals.
        let again = model.apply(&m).unwrap();
        assert_eq!(again, discrete);
    }
}
