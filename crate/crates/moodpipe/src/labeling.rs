//! Emotion scores, consensus-threshold label validation, and annotation
//! distribution statistics.
//!
//! The score of emotion `i` on track `j` is the mean positive response over
//! that track's `n` annotations: `(1/n) Σ a_k` with `a_k ∈ {0, 1}`. A label
//! is valid when its score reaches the consensus threshold.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::corpus::{AnnotationTable, Emotion, EMOTION_COUNT};
use crate::error::{Error, Result};

/// Boundary convention at the consensus threshold.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundaryRule {
    /// Label valid when score >= threshold (default; keeps round-percentage
    /// operating points meaningful when scores tie the threshold exactly).
    #[default]
    GreaterEqual,
    /// Label valid only when score > threshold.
    StrictGreater,
}

impl BoundaryRule {
    fn admits(self, score: f64, threshold: f64) -> bool {
        match self {
            BoundaryRule::GreaterEqual => score >= threshold,
            BoundaryRule::StrictGreater => score > threshold,
        }
    }
}

/// Track × 9 matrix of per-emotion scores in [0, 1].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreMatrix {
    pub track_ids: Vec<u32>,
    pub values: Vec<[f64; EMOTION_COUNT]>,
    /// Total annotations per track (the score denominator).
    pub n_per_track: Vec<u32>,
}

impl ScoreMatrix {
    pub fn track_row(&self, track_id: u32) -> Option<&[f64; EMOTION_COUNT]> {
        self.track_ids
            .binary_search(&track_id)
            .ok()
            .map(|i| &self.values[i])
    }
}

/// Track × 9 binary label matrix produced by consensus thresholding.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabelMatrix {
    pub track_ids: Vec<u32>,
    pub values: Vec<[bool; EMOTION_COUNT]>,
    pub threshold: f64,
    pub boundary: BoundaryRule,
}

impl LabelMatrix {
    /// Binary column for one emotion.
    pub fn column(&self, emotion: Emotion) -> Vec<bool> {
        let i = emotion.index();
        self.values.iter().map(|row| row[i]).collect()
    }

    /// Validated labels on one track.
    pub fn labels_per_track(&self) -> Vec<usize> {
        self.values
            .iter()
            .map(|row| row.iter().filter(|&&v| v).count())
            .collect()
    }
}

/// Corpus-level annotation distribution statistics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DistributionStats {
    pub threshold: f64,
    pub mean_labels_per_track: f64,
    pub std_labels_per_track: f64,
    /// For rank r (0-based), the corpus mean of the (r+1)-th largest
    /// per-track emotion score. Non-increasing in r by construction.
    pub trend_mean: [f64; EMOTION_COUNT],
    /// Corpus standard deviation of the same ranked scores.
    pub trend_std: [f64; EMOTION_COUNT],
}

fn mean_and_std(values: &[f64]) -> (f64, f64) {
    if values.is_empty() {
        return (0.0, 0.0);
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

/// Score of one emotion on one track: mean positive response over the
/// track's annotations.
pub fn emotion_score(table: &AnnotationTable, track_id: u32, emotion: Emotion) -> Result<f64> {
    if table.track_ids.binary_search(&track_id).is_err() {
        return Err(Error::UnknownTrack(track_id));
    }
    let mut n = 0u32;
    let mut positive = 0u32;
    for r in table.records_for(track_id) {
        n += 1;
        if r.selections.contains(emotion) {
            positive += 1;
        }
    }
    if n == 0 {
        return Err(Error::NoAnnotations(track_id));
    }
    Ok(positive as f64 / n as f64)
}

/// Batch form of [`emotion_score`] over every (track, emotion) pair.
pub fn build_score_matrix(table: &AnnotationTable) -> Result<ScoreMatrix> {
    let mut positives: BTreeMap<u32, [u32; EMOTION_COUNT]> = BTreeMap::new();
    let mut totals: BTreeMap<u32, u32> = BTreeMap::new();
    for r in &table.records {
        let counts = positives.entry(r.track_id).or_insert([0; EMOTION_COUNT]);
        for e in r.selections.iter() {
            counts[e.index()] += 1;
        }
        *totals.entry(r.track_id).or_insert(0) += 1;
    }

    let mut values = Vec::with_capacity(table.track_ids.len());
    let mut n_per_track = Vec::with_capacity(table.track_ids.len());
    for &track in &table.track_ids {
        let n = *totals.get(&track).ok_or(Error::NoAnnotations(track))?;
        if n == 0 {
            return Err(Error::NoAnnotations(track));
        }
        let counts = positives.get(&track).copied().unwrap_or([0; EMOTION_COUNT]);
        let mut row = [0.0; EMOTION_COUNT];
        for (i, &c) in counts.iter().enumerate() {
            row[i] = c as f64 / n as f64;
        }
        values.push(row);
        n_per_track.push(n);
    }

    Ok(ScoreMatrix {
        track_ids: table.track_ids.clone(),
        values,
        n_per_track,
    })
}

/// Validate labels with the default >= boundary rule.
pub fn apply_consensus(scores: &ScoreMatrix, threshold: f64) -> Result<LabelMatrix> {
    apply_consensus_with(scores, threshold, BoundaryRule::GreaterEqual)
}

/// Validate labels with an explicit boundary rule.
pub fn apply_consensus_with(
    scores: &ScoreMatrix,
    threshold: f64,
    boundary: BoundaryRule,
) -> Result<LabelMatrix> {
    if !(threshold > 0.0 && threshold < 1.0) {
        return Err(Error::InvalidThreshold(threshold));
    }
    let values = scores
        .values
        .iter()
        .map(|row| {
            let mut labels = [false; EMOTION_COUNT];
            for (i, &s) in row.iter().enumerate() {
                labels[i] = boundary.admits(s, threshold);
            }
            labels
        })
        .collect();
    Ok(LabelMatrix {
        track_ids: scores.track_ids.clone(),
        values,
        threshold,
        boundary,
    })
}

/// Labels-per-track statistics under a threshold plus the rank-ordered score
/// trend over the corpus.
pub fn distribution_stats(scores: &ScoreMatrix, threshold: f64) -> Result<DistributionStats> {
    let labels = apply_consensus(scores, threshold)?;
    let counts: Vec<f64> = labels.labels_per_track().iter().map(|&c| c as f64).collect();
    let (mean_labels, std_labels) = mean_and_std(&counts);

    let mut ranked: Vec<Vec<f64>> = vec![Vec::with_capacity(scores.values.len()); EMOTION_COUNT];
    for row in &scores.values {
        let mut sorted = *row;
        sorted.sort_by(|a, b| b.partial_cmp(a).expect("scores are finite"));
        for (r, &v) in sorted.iter().enumerate() {
            ranked[r].push(v);
        }
    }
    let mut trend_mean = [0.0; EMOTION_COUNT];
    let mut trend_std = [0.0; EMOTION_COUNT];
    for (r, column) in ranked.iter().enumerate() {
        let (m, s) = mean_and_std(column);
        trend_mean[r] = m;
        trend_std[r] = s;
    }

    Ok(DistributionStats {
        threshold,
        mean_labels_per_track: mean_labels,
        std_labels_per_track: std_labels,
        trend_mean,
        trend_std,
    })
}

/// Threshold sweep grid: 0.05 to 0.95 in 0.01 steps.
pub fn sweep_grid() -> Vec<f64> {
    (5..=95).map(|i| i as f64 / 100.0).collect()
}

/// Mean validated labels per track for each threshold on the sweep grid.
pub fn threshold_sweep(scores: &ScoreMatrix) -> Vec<(f64, f64)> {
    sweep_grid()
        .into_iter()
        .map(|t| {
            let labels = apply_consensus(scores, t).expect("grid thresholds lie in (0,1)");
            let counts = labels.labels_per_track();
            let mean = counts.iter().sum::<usize>() as f64 / counts.len().max(1) as f64;
            (t, mean)
        })
        .collect()
}

/// Default flatness tolerance for plateau detection, in labels per track.
pub const DEFAULT_FLATNESS_TOL: f64 = 0.05;

/// Thresholds lying in a plateau of the sweep curve: any window of 3
/// consecutive sweep steps whose mean-labels-per-track varies by less than
/// `flatness_tol` marks its thresholds as plateau candidates.
pub fn plateau_candidates(scores: &ScoreMatrix, flatness_tol: f64) -> Vec<f64> {
    let sweep = threshold_sweep(scores);
    let mut in_plateau = vec![false; sweep.len()];
    for i in 0..sweep.len().saturating_sub(2) {
        let window = [sweep[i].1, sweep[i + 1].1, sweep[i + 2].1];
        let max = window.iter().cloned().fold(f64::MIN, f64::max);
        let min = window.iter().cloned().fold(f64::MAX, f64::min);
        if max - min < flatness_tol {
            in_plateau[i] = true;
            in_plateau[i + 1] = true;
            in_plateau[i + 2] = true;
        }
    }
    sweep
        .iter()
        .zip(&in_plateau)
        .filter(|(_, &keep)| keep)
        .map(|(&(t, _), _)| t)
        .collect()
}

/// CSV form of a score matrix: track_id plus nine emotion columns.
pub fn scores_to_csv(scores: &ScoreMatrix) -> String {
    let mut out = String::from("track_id");
    for e in Emotion::ALL {
        out.push(',');
        out.push_str(e.name());
    }
    out.push('\n');
    for (track, row) in scores.track_ids.iter().zip(&scores.values) {
        out.push_str(&track.to_string());
        for v in row {
            out.push_str(&format!(",{v}"));
        }
        out.push('\n');
    }
    out
}

/// CSV form of a label matrix: track_id plus nine 0/1 columns.
pub fn labels_to_csv(labels: &LabelMatrix) -> String {
    let mut out = String::from("track_id");
    for e in Emotion::ALL {
        out.push(',');
        out.push_str(e.name());
    }
    out.push('\n');
    for (track, row) in labels.track_ids.iter().zip(&labels.values) {
        out.push_str(&track.to_string());
        for &v in row {
            out.push_str(if v { ",1" } else { ",0" });
        }
        out.push('\n');
    }
    out
}
