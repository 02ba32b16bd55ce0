//! Correlation-based feature selection: subset merit and best-first
//! forward search.
//!
//! Merit of a k-feature subset is `k·r_cf / sqrt(k + (k-1)·r_ff)` with
//! `r_cf` the mean feature/class correlation and `r_ff` the mean pairwise
//! feature correlation (the denominator printed in the source material;
//! Hall's original `sqrt(k + k(k-1)·r_ff)` is available as a variant).
//! Correlations are symmetric uncertainty on discretized data and absolute
//! Pearson on continuous data.

use std::cell::RefCell;
use std::collections::{HashMap, HashSet};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::FeatureMatrix;

use super::entropy::symmetric_uncertainty;
use super::mdl::DiscreteMatrix;

/// Which merit denominator to use.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MeritVariant {
    /// `sqrt(k + (k-1)·r_ff)` — the printed formula, the default.
    #[default]
    Paper,
    /// `sqrt(k + k(k-1)·r_ff)` — Hall's original.
    Hall,
}

/// Subset merit from aggregate correlations.
pub fn cfs_merit(k: usize, r_cf: f64, r_ff: f64) -> Result<f64> {
    cfs_merit_with(k, r_cf, r_ff, MeritVariant::Paper)
}

/// Subset merit under an explicit variant.
pub fn cfs_merit_with(k: usize, r_cf: f64, r_ff: f64, variant: MeritVariant) -> Result<f64> {
    assert!(k >= 1, "merit needs at least one feature");
    let k = k as f64;
    let radicand = match variant {
        MeritVariant::Paper => k + (k - 1.0) * r_ff,
        MeritVariant::Hall => k + k * (k - 1.0) * r_ff,
    };
    if radicand <= 0.0 {
        return Err(Error::MeritRadicand(radicand));
    }
    Ok(k * r_cf / radicand.sqrt())
}

/// Pearson correlation; 0 when either column is constant.
fn pearson(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len() as f64;
    let ma = a.iter().sum::<f64>() / n;
    let mb = b.iter().sum::<f64>() / n;
    let mut cov = 0.0;
    let mut va = 0.0;
    let mut vb = 0.0;
    for (&x, &y) in a.iter().zip(b) {
        cov += (x - ma) * (y - mb);
        va += (x - ma) * (x - ma);
        vb += (y - mb) * (y - mb);
    }
    if va == 0.0 || vb == 0.0 {
        0.0
    } else {
        cov / (va * vb).sqrt()
    }
}

/// Feature data the search runs over.
pub enum CfsData<'a> {
    /// Continuous columns; correlation = |Pearson|.
    Continuous(&'a FeatureMatrix),
    /// Discretized columns; correlation = symmetric uncertainty.
    Discrete(&'a DiscreteMatrix),
}

impl<'a> CfsData<'a> {
    pub fn column_names(&self) -> &[String] {
        match self {
            CfsData::Continuous(m) => &m.columns,
            CfsData::Discrete(m) => &m.columns,
        }
    }

    fn n_columns(&self) -> usize {
        self.column_names().len()
    }

    fn class_correlation(&self, col: usize, labels: &[bool]) -> f64 {
        match self {
            CfsData::Continuous(m) => {
                let x: Vec<f64> = m.rows.iter().map(|r| r[col]).collect();
                let y: Vec<f64> = labels.iter().map(|&b| b as u8 as f64).collect();
                pearson(&x, &y).abs()
            }
            CfsData::Discrete(m) => {
                let x: Vec<usize> = m.rows.iter().map(|r| r[col]).collect();
                let y: Vec<usize> = labels.iter().map(|&b| b as usize).collect();
                symmetric_uncertainty(&x, &y).unwrap_or(0.0)
            }
        }
    }

    fn feature_correlation(&self, a: usize, b: usize) -> f64 {
        match self {
            CfsData::Continuous(m) => {
                let x: Vec<f64> = m.rows.iter().map(|r| r[a]).collect();
                let y: Vec<f64> = m.rows.iter().map(|r| r[b]).collect();
                pearson(&x, &y).abs()
            }
            CfsData::Discrete(m) => {
                let x: Vec<usize> = m.rows.iter().map(|r| r[a]).collect();
                let y: Vec<usize> = m.rows.iter().map(|r| r[b]).collect();
                symmetric_uncertainty(&x, &y).unwrap_or(0.0)
            }
        }
    }
}

/// Memoizing correlation store shared by the search and the exhaustive
/// oracle in tests.
pub struct CorrelationCache<'a> {
    data: &'a CfsData<'a>,
    labels: &'a [bool],
    class: RefCell<HashMap<usize, f64>>,
    pair: RefCell<HashMap<(usize, usize), f64>>,
}

impl<'a> CorrelationCache<'a> {
    pub fn new(data: &'a CfsData<'a>, labels: &'a [bool]) -> Self {
        CorrelationCache {
            data,
            labels,
            class: RefCell::new(HashMap::new()),
            pair: RefCell::new(HashMap::new()),
        }
    }

    pub fn class_corr(&self, col: usize) -> f64 {
        if let Some(&v) = self.class.borrow().get(&col) {
            return v;
        }
        let v = self.data.class_correlation(col, self.labels);
        self.class.borrow_mut().insert(col, v);
        v
    }

    pub fn pair_corr(&self, a: usize, b: usize) -> f64 {
        let key = (a.min(b), a.max(b));
        if let Some(&v) = self.pair.borrow().get(&key) {
            return v;
        }
        let v = self.data.feature_correlation(key.0, key.1);
        self.pair.borrow_mut().insert(key, v);
        v
    }

    /// Merit of a subset of column indices.
    pub fn merit(&self, subset: &[usize], variant: MeritVariant) -> f64 {
        let k = subset.len();
        if k == 0 {
            return 0.0;
        }
        let r_cf = subset.iter().map(|&c| self.class_corr(c)).sum::<f64>() / k as f64;
        let r_ff = if k < 2 {
            0.0
        } else {
            let mut sum = 0.0;
            let mut pairs = 0usize;
            for i in 0..k {
                for j in i + 1..k {
                    sum += self.pair_corr(subset[i], subset[j]);
                    pairs += 1;
                }
            }
            sum / pairs as f64
        };
        // Correlations are non-negative here, so the radicand is >= 1.
        cfs_merit_with(k, r_cf, r_ff, variant).expect("radicand >= 1 for non-negative r_ff")
    }
}

/// Number of consecutive non-improving node expansions before the search
/// stops.
pub const SEARCH_PATIENCE: usize = 5;

/// Best-first forward search over feature subsets maximizing the merit.
///
/// Returns selected column indices in ascending order; ties between equal
/// merits resolve toward the earlier-generated (lower column order) subset.
/// If no subset beats merit 0, the single column with the highest class
/// correlation is returned, so the selection is never empty.
pub fn cfs_select_indices(
    data: &CfsData<'_>,
    labels: &[bool],
    variant: MeritVariant,
) -> Vec<usize> {
    let n_cols = data.n_columns();
    assert!(n_cols >= 1, "cfs needs at least one column");
    let cache = CorrelationCache::new(data, labels);

    // Open list of (merit, subset); subsets always kept sorted.
    let mut open: Vec<(f64, Vec<usize>)> = vec![(0.0, Vec::new())];
    let mut closed: HashSet<Vec<usize>> = HashSet::new();
    closed.insert(Vec::new());

    let mut best_subset: Vec<usize> = Vec::new();
    let mut best_merit = 0.0;
    let mut non_improving = 0usize;

    while let Some(node_at) = pick_best(&open) {
        let (_, node) = open.swap_remove(node_at);
        let mut improved = false;
        for col in 0..n_cols {
            if node.binary_search(&col).is_ok() {
                continue;
            }
            let mut child = node.clone();
            child.push(col);
            child.sort_unstable();
            if !closed.insert(child.clone()) {
                continue;
            }
            let merit = cache.merit(&child, variant);
            if merit > best_merit + 1e-12 {
                best_merit = merit;
                best_subset = child.clone();
                improved = true;
            }
            open.push((merit, child));
        }
        if improved {
            non_improving = 0;
        } else {
            non_improving += 1;
            if non_improving >= SEARCH_PATIENCE {
                break;
            }
        }
    }

    if best_subset.is_empty() {
        // Documented fallback: the (possibly spuriously) best single column.
        let mut best_col = 0;
        let mut best = f64::MIN;
        for col in 0..n_cols {
            let r = cache.class_corr(col);
            if r > best {
                best = r;
                best_col = col;
            }
        }
        best_subset.push(best_col);
    }
    best_subset
}

/// Index of the open-list entry with the highest merit; merit ties resolve
/// to the earliest-inserted entry so the search is deterministic.
fn pick_best(open: &[(f64, Vec<usize>)]) -> Option<usize> {
    if open.is_empty() {
        return None;
    }
    let mut best = 0;
    for (i, entry) in open.iter().enumerate().skip(1) {
        if entry.0 > open[best].0 + 1e-12 {
            best = i;
        }
    }
    Some(best)
}

/// Best-first CFS over named columns.
pub fn cfs_select(data: &CfsData<'_>, labels: &[bool], variant: MeritVariant) -> Vec<String> {
    let names = data.column_names();
    cfs_select_indices(data, labels, variant)
        .into_iter()
        .map(|i| names[i].clone())
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::features::MatrixProvenance;
    use approx::assert_relative_eq;
    use rand::{Rng, SeedableRng};

    fn continuous(columns: Vec<&str>, rows: Vec<Vec<f64>>) -> FeatureMatrix {
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

    /// Exhaustive merit maximization over all non-empty subsets; ties prefer
    /// smaller subsets, then lexicographic order.
    fn exhaustive_optimum(
        data: &CfsData<'_>,
        labels: &[bool],
        variant: MeritVariant,
    ) -> (Vec<usize>, f64) {
        let n = data.column_names().len();
        assert!(n <= 16, "exhaustive oracle is for small column counts");
        let cache = CorrelationCache::new(data, labels);
        let mut best_subset: Vec<usize> = Vec::new();
        let mut best_merit = f64::MIN;
        for mask in 1u32..(1 << n) {
            let subset: Vec<usize> = (0..n).filter(|i| mask & (1 << i) != 0).collect();
            let merit = cache.merit(&subset, variant);
            let strictly_better = merit > best_merit + 1e-12;
            let tie_preferred = (merit - best_merit).abs() <= 1e-12
                && (subset.len() < best_subset.len()
                    || (subset.len() == best_subset.len() && subset < best_subset));
            if best_subset.is_empty() || strictly_better || tie_preferred {
                best_merit = best_merit.max(merit);
                best_subset = subset;
            }
        }
        (best_subset, best_merit)
    }

    #[test]
    fn merit_formula_cases() {
        assert_relative_eq!(cfs_merit(1, 0.8, 0.33).unwrap(), 0.8, max_relative = 1e-12);
        assert_relative_eq!(
            cfs_merit(2, 0.5, 1.0).unwrap(),
            1.0 / 3f64.sqrt(),
            max_relative = 1e-12
        );
        assert_relative_eq!(
            cfs_merit(2, 0.5, 0.0).unwrap(),
            1.0 / 2f64.sqrt(),
            max_relative = 1e-12
        );
        // Redundancy-free beats fully redundant under Hall's variant too.
        assert!(
            cfs_merit_with(2, 0.5, 0.0, MeritVariant::Hall).unwrap()
                > cfs_merit_with(2, 0.5, 1.0, MeritVariant::Hall).unwrap()
        );
    }

    #[test]
    fn merit_rejects_nonpositive_radicand() {
        assert!(matches!(
            cfs_merit_with(2, 0.5, -1.0, MeritVariant::Hall),
            Err(Error::MeritRadicand(_))
        ));
    }

    #[test]
    fn informative_column_beats_noise() {
        let labels: Vec<bool> = (0..40).map(|i| i % 2 == 0).collect();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(2);
        let rows: Vec<Vec<f64>> = labels
            .iter()
            .map(|&l| vec![l as u8 as f64, rng.gen_range(-1.0..1.0)])
            .collect();
        let m = continuous(vec!["informative", "noise"], rows);
        let data = CfsData::Continuous(&m);
        for variant in [MeritVariant::Paper, MeritVariant::Hall] {
            let picked = cfs_select_indices(&data, &labels, variant);
            let (optimum, _) = exhaustive_optimum(&data, &labels, variant);
            assert_eq!(picked, vec![0], "variant {variant:?}");
            assert_eq!(optimum, vec![0]);
        }
    }

    #[test]
    fn duplicate_informative_columns_follow_the_merit_variant() {
        // Under the default (paper) denominator the duplicated pair scores
        // 2r/sqrt(3) > r, so the exhaustive optimum keeps both copies; under
        // Hall's variant the pair ties the singleton at r and the search
        // keeps exactly one. Verified against the exhaustive oracle.
        let labels: Vec<bool> = (0..30).map(|i| i % 3 == 0).collect();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(9);
        let rows: Vec<Vec<f64>> = labels
            .iter()
            .map(|&l| {
                let v = l as u8 as f64;
                vec![v, v, rng.gen_range(-1.0..1.0)]
            })
            .collect();
        let m = continuous(vec!["dup_a", "dup_b", "noise"], rows);
        let data = CfsData::Continuous(&m);

        let paper = cfs_select_indices(&data, &labels, MeritVariant::Paper);
        let (paper_opt, paper_best) = exhaustive_optimum(&data, &labels, MeritVariant::Paper);
        assert_eq!(paper, vec![0, 1], "paper formula rewards the duplicate pair");
        assert_eq!(paper_opt, vec![0, 1]);
        let cache = CorrelationCache::new(&data, &labels);
        assert_relative_eq!(cache.merit(&paper, MeritVariant::Paper), paper_best, max_relative = 1e-9);

        let hall = cfs_select_indices(&data, &labels, MeritVariant::Hall);
        assert_eq!(hall, vec![0], "hall variant keeps exactly one duplicate");
    }

    #[test]
    fn all_noise_returns_single_highest_correlation_column() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(33);
        let labels: Vec<bool> = (0..24).map(|_| rng.gen_bool(0.5)).collect();
        let rows: Vec<Vec<f64>> = (0..24)
            .map(|_| (0..4).map(|_| rng.gen_range(-1.0..1.0)).collect())
            .collect();
        let m = continuous(vec!["n0", "n1", "n2", "n3"], rows);
        let data = CfsData::Continuous(&m);
        let picked = cfs_select_indices(&data, &labels, MeritVariant::Paper);
        assert_eq!(picked.len(), 1, "forward search must return something");
        let cache = CorrelationCache::new(&data, &labels);
        let best_r = (0..4)
            .map(|c| cache.class_corr(c))
            .fold(f64::MIN, f64::max);
        assert_relative_eq!(cache.class_corr(picked[0]), best_r, max_relative = 1e-12);
    }

    #[test]
    fn forward_search_matches_exhaustive_on_most_seeded_instances() {
        // 100 random instances with <= 10 columns: forward best-first must
        // reach the exhaustive optimum merit in at least 95.
        let mut hits = 0usize;
        for seed in 0..100u64 {
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let n_rows = 30;
            let n_cols = rng.gen_range(3..=10);
            let labels: Vec<bool> = (0..n_rows).map(|_| rng.gen_bool(0.5)).collect();
            let rows: Vec<Vec<f64>> = labels
                .iter()
                .map(|&l| {
                    (0..n_cols)
                        .map(|c| {
                            let signal = if c % 3 == 0 { l as u8 as f64 } else { 0.0 };
                            signal * rng.gen_range(0.2..1.0) + rng.gen_range(-1.0..1.0)
                        })
                        .collect()
                })
                .collect();
            let names: Vec<String> = (0..n_cols).map(|c| format!("c{c}")).collect();
            let m = FeatureMatrix {
                track_ids: (1..=n_rows as u32).collect(),
                columns: names,
                rows,
                provenance: MatrixProvenance {
                    corpus_hash: String::new(),
                    spec_hash: String::new(),
                    set_hash: String::new(),
                },
            };
            let data = CfsData::Continuous(&m);
            let picked = cfs_select_indices(&data, &labels, MeritVariant::Paper);
            let cache = CorrelationCache::new(&data, &labels);
            let picked_merit = cache.merit(&picked, MeritVariant::Paper);
            let (_, best_merit) = exhaustive_optimum(&data, &labels, MeritVariant::Paper);
            if (picked_merit - best_merit).abs() <= 1e-9 {
                hits += 1;
            }
        }
        assert!(hits >= 95, "forward search matched exhaustive in {hits}/100");
    }

    #[test]
    fn discrete_data_uses_symmetric_uncertainty() {
        let labels = vec![false, false, true, true, false, true];
        let discrete = DiscreteMatrix {
            track_ids: (1..=6).collect(),
            columns: vec!["exact".into(), "junk".into()],
            rows: vec![
                vec![0, 1],
                vec![0, 0],
                vec![1, 1],
                vec![1, 0],
                vec![0, 0],
                vec![1, 1],
            ],
            arities: vec![2, 2],
        };
        let data = CfsData::Discrete(&discrete);
        let picked = cfs_select(&data, &labels, MeritVariant::Paper);
        assert_eq!(picked, vec!["exact".to_string()]);
    }
}
