//! Aggregation of a per-frame feature series into four track-level
//! statistics: mean, standard deviation, skewness and excess kurtosis.

use serde::{Deserialize, Serialize};

/// The four summary statistics of one feature's time series.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AggregateStats {
    pub mean: f64,
    /// Sample standard deviation (n-1 denominator).
    pub std: f64,
    /// Bias-corrected sample skewness; 0 when the series is constant or
    /// shorter than 3.
    pub skew: f64,
    /// Bias-corrected sample excess kurtosis (normal -> 0); 0 when the
    /// series is constant or shorter than 4.
    pub kurt: f64,
}

pub const STAT_NAMES: [&str; 4] = ["mean", "std", "skew", "kurt"];

impl AggregateStats {
    pub fn as_array(&self) -> [f64; 4] {
        [self.mean, self.std, self.skew, self.kurt]
    }
}

/// Summarize a series. Degenerate cases (zero variance, too few points for
/// a moment) map to 0 so downstream discretization and t-tests always see
/// finite values.
pub fn aggregate(series: &[f64]) -> AggregateStats {
    assert!(!series.is_empty(), "aggregate requires at least one value");
    let n = series.len() as f64;
    let mean = series.iter().sum::<f64>() / n;

    let mut m2 = 0.0;
    let mut m3 = 0.0;
    let mut m4 = 0.0;
    for &x in series {
        let d = x - mean;
        let d2 = d * d;
        m2 += d2;
        m3 += d2 * d;
        m4 += d2 * d2;
    }
    m2 /= n;
    m3 /= n;
    m4 /= n;

    let std = if series.len() < 2 {
        0.0
    } else {
        (m2 * n / (n - 1.0)).sqrt()
    };

    if m2 <= 0.0 {
        return AggregateStats {
            mean,
            std: 0.0,
            skew: 0.0,
            kurt: 0.0,
        };
    }

    let g1 = m3 / m2.powf(1.5);
    let g2 = m4 / (m2 * m2) - 3.0;

    let skew = if series.len() < 3 {
        0.0
    } else {
        g1 * (n * (n - 1.0)).sqrt() / (n - 2.0)
    };
    let kurt = if series.len() < 4 {
        0.0
    } else {
        ((n + 1.0) * g2 + 6.0) * (n - 1.0) / ((n - 2.0) * (n - 3.0))
    };

    AggregateStats { mean, std, skew, kurt }
}
