//! Supervised discretization and feature selection.
//!
//! Both selection strategies run once per emotion class; the union of the
//! per-emotion sets is retained with provenance. Selection and
//! discretization are always fitted on training rows only and applied to
//! held-out rows through the fitted models.

pub mod cfs;
pub mod entropy;
pub mod mdl;
pub mod ttest;

pub use cfs::{cfs_merit, cfs_merit_with, cfs_select, CfsData, CorrelationCache, MeritVariant};
pub use entropy::{dissimilarity, entropy, symmetric_uncertainty};
pub use mdl::{discretize_matrix, mdl_discretize, DiscreteMatrix, DiscretizationModel};
pub use ttest::{ttest_select, two_sample_t, two_sided_p, VarianceModel};

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::corpus::{Emotion, EMOTION_COUNT};

/// Which selection strategy produced a [`SelectionResult`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "method", rename_all = "snake_case")]
pub enum SelectionMethod {
    Cfs { variant: MeritVariant },
    Ttest { p_value: f64, variance: VarianceModel },
}

/// Per-emotion selected columns plus their union.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectionResult {
    pub method: SelectionMethod,
    /// Emotion name -> selected column names (in original column order).
    pub per_emotion: BTreeMap<String, Vec<String>>,
    /// Union of the nine sets, in original column order.
    pub union: Vec<String>,
}

/// Combine nine per-emotion selections; `column_order` fixes the ordering
/// of every emitted list.
pub fn union_selection(
    per_emotion: &[(Emotion, Vec<String>)],
    column_order: &[String],
    method: SelectionMethod,
) -> SelectionResult {
    assert_eq!(per_emotion.len(), EMOTION_COUNT, "one selection per emotion");
    let order_of = |name: &String| {
        column_order
            .iter()
            .position(|c| c == name)
            .unwrap_or(usize::MAX)
    };
    let mut map = BTreeMap::new();
    for (emotion, names) in per_emotion {
        let mut sorted = names.clone();
        sorted.sort_by_key(order_of);
        map.insert(emotion.name().to_string(), sorted);
    }
    let union: Vec<String> = column_order
        .iter()
        .filter(|c| per_emotion.iter().any(|(_, names)| names.contains(c)))
        .cloned()
        .collect();
    SelectionResult {
        method,
        per_emotion: map,
        union,
    }
}
