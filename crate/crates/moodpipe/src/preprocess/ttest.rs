//! Two-sample t-test feature selection.
//!
//! For each column, the values where an emotion is present are compared
//! against the values where it is absent; columns whose two-sided p-value
//! falls strictly below the threshold are kept. Welch's unequal-variance
//! form is the default; the pooled-variance Student form is available as a
//! configuration switch.

use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, StudentsT};

use crate::error::{Error, Result};
use crate::features::FeatureMatrix;

/// Variance model for the two-sample statistic.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VarianceModel {
    /// Welch's unequal-variance form with Welch-Satterthwaite df.
    #[default]
    Welch,
    /// Student's pooled-variance form.
    Pooled,
}

fn mean_and_var(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var)
}

/// The t statistic and degrees of freedom for two groups (each needs >= 2
/// values). Identical groups give t = 0; zero pooled variance with unequal
/// means gives an infinite t (p = 0).
pub fn two_sample_t(a: &[f64], b: &[f64], model: VarianceModel) -> (f64, f64) {
    assert!(a.len() >= 2 && b.len() >= 2, "both groups need >= 2 values");
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let (ma, va) = mean_and_var(a);
    let (mb, vb) = mean_and_var(b);
    match model {
        VarianceModel::Welch => {
            let sea = va / na;
            let seb = vb / nb;
            let se = (sea + seb).sqrt();
            let t = if se == 0.0 {
                if ma == mb {
                    0.0
                } else {
                    (ma - mb).signum() * f64::INFINITY
                }
            } else {
                (ma - mb) / se
            };
            let df = if sea + seb == 0.0 {
                na + nb - 2.0
            } else {
                (sea + seb).powi(2) / (sea * sea / (na - 1.0) + seb * seb / (nb - 1.0))
            };
            (t, df)
        }
        VarianceModel::Pooled => {
            let sp2 = ((na - 1.0) * va + (nb - 1.0) * vb) / (na + nb - 2.0);
            let se = (sp2 * (1.0 / na + 1.0 / nb)).sqrt();
            let t = if se == 0.0 {
                if ma == mb {
                    0.0
                } else {
                    (ma - mb).signum() * f64::INFINITY
                }
            } else {
                (ma - mb) / se
            };
            (t, na + nb - 2.0)
        }
    }
}

/// Two-sided p-value of a t statistic.
pub fn two_sided_p(t: f64, df: f64) -> f64 {
    if t == 0.0 {
        return 1.0;
    }
    if t.is_infinite() {
        return 0.0;
    }
    let dist = StudentsT::new(0.0, 1.0, df).expect("df > 0");
    (2.0 * (1.0 - dist.cdf(t.abs()))).clamp(0.0, 1.0)
}

/// Per-column t-test selection against one emotion's binary labels; keeps
/// columns with p strictly below the threshold.
pub fn ttest_select(
    matrix: &FeatureMatrix,
    labels: &[bool],
    p_threshold: f64,
    model: VarianceModel,
    emotion: &str,
) -> Result<Vec<String>> {
    if matrix.rows.len() != labels.len() {
        return Err(Error::LengthMismatch {
            left: matrix.rows.len(),
            right: labels.len(),
        });
    }
    let present: Vec<usize> = (0..labels.len()).filter(|&i| labels[i]).collect();
    let absent: Vec<usize> = (0..labels.len()).filter(|&i| !labels[i]).collect();
    if present.len() < 2 {
        return Err(Error::TtestTooFewRows {
            emotion: emotion.to_string(),
            class: "present",
            rows: present.len(),
        });
    }
    if absent.len() < 2 {
        return Err(Error::TtestTooFewRows {
            emotion: emotion.to_string(),
            class: "absent",
            rows: absent.len(),
        });
    }

    let mut selected = Vec::new();
    for (col, name) in matrix.columns.iter().enumerate() {
        let group_a: Vec<f64> = present.iter().map(|&i| matrix.rows[i][col]).collect();
        let group_b: Vec<f64> = absent.iter().map(|&i| matrix.rows[i][col]).collect();
        let (t, df) = two_sample_t(&group_a, &group_b, model);
        if two_sided_p(t, df) < p_threshold {
            selected.push(name.clone());
        }
    }
    Ok(selected)
}
