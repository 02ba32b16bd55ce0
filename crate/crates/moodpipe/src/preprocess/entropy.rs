//! Entropy, attribute/class dissimilarity, and symmetric uncertainty over
//! discrete columns.

use std::collections::BTreeMap;

use crate::error::{Error, Result};

/// Shannon entropy in bits of a class-count partition, with 0·log0 = 0.
pub fn entropy(counts: &[u64]) -> Result<f64> {
    let total: u64 = counts.iter().sum();
    if total == 0 {
        return Err(Error::EmptyPartition);
    }
    let total = total as f64;
    let mut h = 0.0;
    for &c in counts {
        if c > 0 {
            let p = c as f64 / total;
            h -= p * p.log2();
        }
    }
    Ok(h)
}

/// Entropy in bits of a discrete column.
pub fn column_entropy(column: &[usize]) -> f64 {
    let mut counts: BTreeMap<usize, u64> = BTreeMap::new();
    for &v in column {
        *counts.entry(v).or_insert(0) += 1;
    }
    let counts: Vec<u64> = counts.values().copied().collect();
    entropy(&counts).unwrap_or(0.0)
}

/// Joint entropy in bits of two aligned discrete columns.
pub fn joint_entropy(a: &[usize], b: &[usize]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::LengthMismatch {
            left: a.len(),
            right: b.len(),
        });
    }
    let mut counts: BTreeMap<(usize, usize), u64> = BTreeMap::new();
    for (&x, &y) in a.iter().zip(b) {
        *counts.entry((x, y)).or_insert(0) += 1;
    }
    let counts: Vec<u64> = counts.values().copied().collect();
    entropy(&counts)
}

/// Dissimilarity between an attribute and a class column:
/// `(H(A|C) + H(C|A)) / H(A&C)`, 0 when the joint entropy is 0.
///
/// Symmetric and bounded by [0, 2]; identical columns score 0 and
/// independent uniform columns score 1.
pub fn dissimilarity(a: &[usize], c: &[usize]) -> Result<f64> {
    let h_joint = joint_entropy(a, c)?;
    if h_joint == 0.0 {
        return Ok(0.0);
    }
    let h_a = column_entropy(a);
    let h_c = column_entropy(c);
    let h_a_given_c = h_joint - h_c;
    let h_c_given_a = h_joint - h_a;
    Ok((h_a_given_c + h_c_given_a) / h_joint)
}

/// Symmetric uncertainty `2·I(A;B) / (H(A)+H(B))` in [0, 1]; 0 when either
/// column is constant.
pub fn symmetric_uncertainty(a: &[usize], b: &[usize]) -> Result<f64> {
    let h_a = column_entropy(a);
    let h_b = column_entropy(b);
    if h_a + h_b == 0.0 {
        return Ok(0.0);
    }
    let h_joint = joint_entropy(a, b)?;
    let mi = (h_a + h_b - h_joint).max(0.0);
    Ok(2.0 * mi / (h_a + h_b))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    /// Contingency-table oracle computing the same quantities from scratch.
    fn oracle_dissimilarity(a: &[usize], c: &[usize]) -> f64 {
        use std::collections::HashMap;
        let n = a.len() as f64;
        let mut joint: HashMap<(usize, usize), f64> = HashMap::new();
        let mut ma: HashMap<usize, f64> = HashMap::new();
        let mut mc: HashMap<usize, f64> = HashMap::new();
        for (&x, &y) in a.iter().zip(c) {
            *joint.entry((x, y)).or_insert(0.0) += 1.0;
            *ma.entry(x).or_insert(0.0) += 1.0;
            *mc.entry(y).or_insert(0.0) += 1.0;
        }
        fn ent(counts: Vec<f64>, n: f64) -> f64 {
            counts
                .iter()
                .map(|&cnt| {
                    let p = cnt / n;
                    -p * p.log2()
                })
                .sum()
        }
        let h_joint = ent(joint.into_values().collect(), n);
        let h_a = ent(ma.into_values().collect(), n);
        let h_c = ent(mc.into_values().collect(), n);
        if h_joint == 0.0 {
            0.0
        } else {
            ((h_joint - h_c) + (h_joint - h_a)) / h_joint
        }
    }

    #[test]
    fn entropy_identities() {
        assert_eq!(entropy(&[5, 5]).unwrap(), 1.0);
        assert_eq!(entropy(&[10, 0]).unwrap(), 0.0);
        // Frozen from the direct-formula oracle: H(1/4, 3/4).
        assert_relative_eq!(entropy(&[1, 3]).unwrap(), 0.8112781244591328, max_relative = 1e-12);
        assert!(matches!(entropy(&[0, 0]), Err(Error::EmptyPartition)));
    }

    #[test]
    fn dissimilarity_identical_columns_is_zero() {
        let a = vec![0, 0, 1, 1];
        assert_eq!(dissimilarity(&a, &a).unwrap(), 0.0);
    }

    #[test]
    fn dissimilarity_independent_uniform_is_one() {
        // A and C independent uniform binary: H(A|C)+H(C|A) = H(A&C) = 2.
        let a = vec![0, 0, 1, 1];
        let c = vec![0, 1, 0, 1];
        assert_relative_eq!(dissimilarity(&a, &c).unwrap(), 1.0, max_relative = 1e-12);
    }

    #[test]
    fn dissimilarity_mixed_case_matches_contingency_oracle() {
        let a = vec![0, 0, 1, 1];
        let c = vec![0, 1, 1, 1];
        let expected = oracle_dissimilarity(&a, &c);
        // Frozen oracle value: (0.688722 + 0.5) / 1.5.
        assert_relative_eq!(expected, 0.7924812503605781, max_relative = 1e-12);
        assert_relative_eq!(dissimilarity(&a, &c).unwrap(), expected, max_relative = 1e-12);
    }

    #[test]
    fn dissimilarity_rejects_length_mismatch() {
        assert!(matches!(
            dissimilarity(&[0, 1], &[0, 1, 0]),
            Err(Error::LengthMismatch { .. })
        ));
    }

    #[test]
    fn dissimilarity_symmetric_and_bounded() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(17);
        for _ in 0..50 {
            let n = rng.gen_range(2..40);
            let a: Vec<usize> = (0..n).map(|_| rng.gen_range(0..4)).collect();
            let c: Vec<usize> = (0..n).map(|_| rng.gen_range(0..3)).collect();
            let d_ac = dissimilarity(&a, &c).unwrap();
            let d_ca = dissimilarity(&c, &a).unwrap();
            assert_relative_eq!(d_ac, d_ca, max_relative = 1e-12);
            assert!((0.0..=2.0 + 1e-12).contains(&d_ac), "D out of range: {d_ac}");
            assert_relative_eq!(d_ac, oracle_dissimilarity(&a, &c), max_relative = 1e-10);
        }
    }

    #[test]
    fn symmetric_uncertainty_extremes() {
        let a = vec![0, 0, 1, 1];
        assert_relative_eq!(symmetric_uncertainty(&a, &a).unwrap(), 1.0, max_relative = 1e-12);
        let b = vec![0, 1, 0, 1];
        assert_relative_eq!(symmetric_uncertainty(&a, &b).unwrap(), 0.0, epsilon = 1e-12);
        let constant = vec![3, 3, 3, 3];
        assert_eq!(symmetric_uncertainty(&a, &constant).unwrap(), 0.0);
    }
}
