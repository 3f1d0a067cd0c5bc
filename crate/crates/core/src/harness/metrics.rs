use serde::{Deserialize, Serialize};

use crate::error::{EosError, Result};

/// Fraction of flagged points that are true outliers. `None` when nothing
/// is flagged, since the ratio is then undefined.
pub fn precision(flags: &[bool], truth: &[usize]) -> Option<f64> {
    let flagged = flags.iter().filter(|f| **f).count();
    if flagged == 0 {
        return None;
    }
    let hits = truth
        .iter()
        .filter(|&&t| flags.get(t).copied().unwrap_or(false))
        .count();
    Some(hits as f64 / flagged as f64)
}

/// Fraction of true outliers that were flagged. `None` when there are none.
pub fn recall(flags: &[bool], truth: &[usize]) -> Option<f64> {
    if truth.is_empty() {
        return None;
    }
    let hits = truth
        .iter()
        .filter(|&&t| flags.get(t).copied().unwrap_or(false))
        .count();
    Some(hits as f64 / truth.len() as f64)
}

/// Normal-approximation 95% interval `mean +- 1.96 s / sqrt(n)`, with the
/// `n - 1` sample standard deviation. Returns `(mean, low, high)`.
pub fn ci95(values: &[f64]) -> Result<(f64, f64, f64)> {
    if values.len() < 2 {
        return Err(EosError::InvalidInput(format!(
            "a confidence interval needs at least 2 values, got {}",
            values.len()
        )));
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    let half = 1.96 * var.sqrt() / n.sqrt();
    Ok((mean, mean - half, mean + half))
}

/// Per-seed values of one metric with their mean and 95% interval.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    pub metric_name: String,
    pub per_seed_values: Vec<f64>,
    pub mean: f64,
    pub ci_low: f64,
    pub ci_high: f64,
}

impl MetricReport {
    pub fn new(metric_name: impl Into<String>, values: Vec<f64>) -> Result<Self> {
        let (mean, ci_low, ci_high) = ci95(&values)?;
        Ok(Self {
            metric_name: metric_name.into(),
            per_seed_values: values,
            mean,
            ci_low,
            ci_high,
        })
    }
}
