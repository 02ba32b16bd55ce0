//! Per-emotion evaluation metrics.

use crate::error::{Error, Result};

/// Percent of matching binary predictions.
pub fn accuracy(pred: &[bool], truth: &[bool]) -> Result<f64> {
    if pred.len() != truth.len() || pred.is_empty() {
        return Err(Error::MetricLengthMismatch {
            pred: pred.len(),
            truth: truth.len(),
        });
    }
    let matches = pred.iter().zip(truth).filter(|(p, t)| p == t).count();
    Ok(100.0 * matches as f64 / pred.len() as f64)
}

/// Root mean squared error of probabilistic predictions against binary
/// truth; bounded by [0, 1].
pub fn rmse(prob: &[f64], truth: &[bool]) -> Result<f64> {
    if prob.len() != truth.len() || prob.is_empty() {
        return Err(Error::MetricLengthMismatch {
            pred: prob.len(),
            truth: truth.len(),
        });
    }
    if let Some(&bad) = prob.iter().find(|p| !(0.0..=1.0).contains(*p)) {
        return Err(Error::ProbabilityRange(bad));
    }
    let sum: f64 = prob
        .iter()
        .zip(truth)
        .map(|(&p, &t)| {
            let d = p - t as u8 as f64;
            d * d
        })
        .sum();
    Ok((sum / prob.len() as f64).sqrt())
}
