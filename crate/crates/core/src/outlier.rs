//! Interquartile-range fences and value-based trimming.
//!
//! Fences are `[q1 - k*IQR, q3 + k*IQR]`, closed on both ends, with the
//! quartiles taken from the untrimmed sorted sample via
//! [`quantile::quartiles`](crate::quantile::quartiles). Because the sample is
//! sorted, the retained values always form one contiguous index range.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quantile::{quartiles_with, QuartileRule, SortedSample};

pub const DEFAULT_FENCE_MULTIPLIER: f64 = 1.5;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OutlierThresholds {
    pub lower: f64,
    pub upper: f64,
    pub k: f64,
    pub iqr: f64,
}

impl OutlierThresholds {
    pub fn contains(&self, v: f64) -> bool {
        self.lower <= v && v <= self.upper
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FilterReport {
    pub retained: SortedSample,
    pub retained_count: usize,
    pub dropped_count: usize,
    /// `dropped_count / n`.
    pub outlier_fraction: f64,
    /// Share of the sample's value range lying outside the fences; `None` for
    /// constant samples.
    pub trimmed_range_fraction: Option<f64>,
    /// Half-open index range `[lower, upper)` of the retained values in the
    /// original sorted sample.
    pub bounds: (usize, usize),
}

fn check_k(k: f64) -> Result<()> {
    if k > 0.0 && k.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!(
            "fence multiplier k must be positive and finite, got {k}"
        )))
    }
}

pub fn compute_thresholds(sample: &SortedSample, k: f64) -> Result<OutlierThresholds> {
    compute_thresholds_with(sample, k, QuartileRule::default())
}

pub fn compute_thresholds_with(sample: &SortedSample, k: f64, rule: QuartileRule) -> Result<OutlierThresholds> {
    check_k(k)?;
    let summary = quartiles_with(sample, rule)?;
    let iqr = summary.q3 - summary.q1;
    Ok(OutlierThresholds {
        lower: summary.q1 - k * iqr,
        upper: summary.q3 + k * iqr,
        k,
        iqr,
    })
}

pub fn filter_outliers(sample: &SortedSample, thresholds: &OutlierThresholds) -> Result<FilterReport> {
    let values = sample.values();
    let n = values.len();
    let start = values.partition_point(|&v| v < thresholds.lower);
    let end = values.partition_point(|&v| v <= thresholds.upper).max(start);
    if start == end {
        return Err(Error::AllFiltered);
    }
    let retained_count = end - start;
    let dropped_count = n - retained_count;

    let full_range = sample.max() - sample.min();
    let trimmed_range_fraction = (full_range > 0.0).then(|| {
        let kept = sample.max().min(thresholds.upper) - sample.min().max(thresholds.lower);
        ((full_range - kept.max(0.0)) / full_range).clamp(0.0, 1.0)
    });

    Ok(FilterReport {
        retained: SortedSample::from_sorted_unchecked(values[start..end].to_vec()),
        retained_count,
        dropped_count,
        outlier_fraction: dropped_count as f64 / n as f64,
        trimmed_range_fraction,
        bounds: (start, end),
    })
}

/// Mean of the values inside the fences.
pub fn normalized_trimmed_mean(sample: &SortedSample, k: f64) -> Result<f64> {
    let thresholds = compute_thresholds(sample, k)?;
    let report = filter_outliers(sample, &thresholds)?;
    Ok(report.retained.mean())
}
