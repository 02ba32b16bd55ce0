//! Naive Bayes over mixed continuous/categorical columns.
//!
//! Continuous columns get per-class Gaussians (variance floored at 1e-9);
//! categorical columns (discretized intervals) get per-class categorical
//! distributions with Laplace add-1 smoothing. Features are treated as
//! conditionally independent given the class.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// How a column is modelled.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ColumnKind {
    Continuous,
    Categorical { arity: usize },
}

const VAR_FLOOR: f64 = 1e-9;
/// Relative variance smoothing: 1e-9 of the largest per-column variance is
/// added to every class-conditional variance, so near-constant junk columns
/// cannot produce unbounded likelihood ratios while informative columns are
/// effectively untouched.
const VAR_SMOOTHING: f64 = 1e-9;

/// Per-feature class-conditional distribution; index 0 = class absent,
/// 1 = class present.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FeatureModel {
    Gaussian { mean: [f64; 2], var: [f64; 2] },
    Categorical { log_prob: [Vec<f64>; 2] },
}

/// Trained Naive Bayes binary classifier.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NaiveBayesModel {
    pub log_prior: [f64; 2],
    pub features: Vec<FeatureModel>,
}

fn gaussian_log_pdf(x: f64, mean: f64, var: f64) -> f64 {
    -0.5 * (2.0 * std::f64::consts::PI * var).ln() - (x - mean) * (x - mean) / (2.0 * var)
}

impl NaiveBayesModel {
    /// Train from rows and binary labels. Errors when a single class is
    /// present.
    pub fn train(rows: &[Vec<f64>], labels: &[bool], kinds: &[ColumnKind]) -> Result<Self> {
        if rows.len() != labels.len() {
            return Err(Error::LengthMismatch {
                left: rows.len(),
                right: labels.len(),
            });
        }
        let n_pos = labels.iter().filter(|&&l| l).count();
        let n_neg = labels.len() - n_pos;
        if n_pos == 0 || n_neg == 0 {
            return Err(Error::SingleClass);
        }
        let n = labels.len() as f64;
        let counts = [n_neg as f64, n_pos as f64];
        let log_prior = [(counts[0] / n).ln(), (counts[1] / n).ln()];

        // Scale-aware smoothing epsilon over the continuous columns.
        let mut max_var = 0.0f64;
        for (col, kind) in kinds.iter().enumerate() {
            if matches!(kind, ColumnKind::Continuous) {
                let mean = rows.iter().map(|r| r[col]).sum::<f64>() / n;
                let var = rows.iter().map(|r| (r[col] - mean).powi(2)).sum::<f64>() / n;
                max_var = max_var.max(var);
            }
        }
        let epsilon = VAR_SMOOTHING * max_var;

        let mut features = Vec::with_capacity(kinds.len());
        for (col, kind) in kinds.iter().enumerate() {
            match kind {
                ColumnKind::Continuous => {
                    let mut mean = [0.0f64; 2];
                    let mut var = [0.0f64; 2];
                    for (row, &label) in rows.iter().zip(labels) {
                        mean[label as usize] += row[col];
                    }
                    mean[0] /= counts[0];
                    mean[1] /= counts[1];
                    for (row, &label) in rows.iter().zip(labels) {
                        let c = label as usize;
                        var[c] += (row[col] - mean[c]).powi(2);
                    }
                    var[0] = (var[0] / counts[0] + epsilon).max(VAR_FLOOR);
                    var[1] = (var[1] / counts[1] + epsilon).max(VAR_FLOOR);
                    features.push(FeatureModel::Gaussian { mean, var });
                }
                ColumnKind::Categorical { arity } => {
                    let arity = (*arity).max(1);
                    let mut tally = [vec![0u64; arity], vec![0u64; arity]];
                    for (row, &label) in rows.iter().zip(labels) {
                        let v = (row[col] as usize).min(arity - 1);
                        tally[label as usize][v] += 1;
                    }
                    let log_prob = [0, 1].map(|c| {
                        let denom = counts[c] + arity as f64;
                        tally[c]
                            .iter()
                            .map(|&t| ((t as f64 + 1.0) / denom).ln())
                            .collect::<Vec<f64>>()
                    });
                    features.push(FeatureModel::Categorical { log_prob });
                }
            }
        }

        Ok(NaiveBayesModel { log_prior, features })
    }

    /// Posterior probability of the positive class.
    pub fn predict_proba(&self, row: &[f64]) -> f64 {
        let mut log_post = self.log_prior;
        for (col, feature) in self.features.iter().enumerate() {
            let x = row[col];
            match feature {
                FeatureModel::Gaussian { mean, var } => {
                    log_post[0] += gaussian_log_pdf(x, mean[0], var[0]);
                    log_post[1] += gaussian_log_pdf(x, mean[1], var[1]);
                }
                FeatureModel::Categorical { log_prob } => {
                    let arity = log_prob[0].len();
                    let v = (x as usize).min(arity - 1);
                    log_post[0] += log_prob[0][v];
                    log_post[1] += log_prob[1][v];
                }
            }
        }
        let max = log_post[0].max(log_post[1]);
        let e0 = (log_post[0] - max).exp();
        let e1 = (log_post[1] - max).exp();
        e1 / (e0 + e1)
    }
}
