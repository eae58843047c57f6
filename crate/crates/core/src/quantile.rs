//! Order statistics on sorted samples and the three-point estimated mean.
//!
//! The mean of a roughly normal sample is estimated from its first quartile,
//! median and third quartile as
//!
//! ```text
//! X(w) = w * (q1 + q3) / 2 + (1 - w) * m,     w = 0.70 + 0.39 / n
//! ```
//!
//! The weight tends to 0.70 for large `n`, matching the asymptotically
//! optimal value of about 0.699.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Ascending, finite, non-empty sample.
#[derive(Debug, Clone, PartialEq)]
pub struct SortedSample {
    values: Vec<f64>,
}

impl SortedSample {
    /// Sorts `values` ascending.
    pub fn from_unsorted(mut values: Vec<f64>) -> Result<Self> {
        check_finite_non_empty(&values)?;
        values.sort_by(f64::total_cmp);
        Ok(Self { values })
    }

    /// Wraps values the caller guarantees to be sorted; checks the order.
    pub fn from_sorted(values: Vec<f64>) -> Result<Self> {
        check_finite_non_empty(&values)?;
        if values.windows(2).any(|w| w[0] > w[1]) {
            return Err(Error::InvalidParameter("sample is not sorted ascending".into()));
        }
        Ok(Self { values })
    }

    pub(crate) fn from_sorted_unchecked(values: Vec<f64>) -> Self {
        debug_assert!(!values.is_empty());
        debug_assert!(values.windows(2).all(|w| w[0] <= w[1]));
        Self { values }
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    /// Always false; kept for API symmetry with slices.
    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn min(&self) -> f64 {
        self.values[0]
    }

    pub fn max(&self) -> f64 {
        self.values[self.values.len() - 1]
    }

    pub fn mean(&self) -> f64 {
        self.values.iter().sum::<f64>() / self.values.len() as f64
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }
}

fn check_finite_non_empty(values: &[f64]) -> Result<()> {
    if values.is_empty() {
        return Err(Error::SampleTooSmall { required: 1, actual: 0 });
    }
    if let Some(pos) = values.iter().position(|v| !v.is_finite()) {
        return Err(Error::NonFinite(pos));
    }
    Ok(())
}

/// First quartile, median and third quartile of one sample.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuartileSummary {
    pub q1: f64,
    pub m: f64,
    pub q3: f64,
    pub n: usize,
}

impl QuartileSummary {
    /// Whether `q1 <= m <= q3`.
    ///
    /// Holds for every summary produced by [`quartiles`] except at `n = 6`
    /// and `n = 7`, where the index rule places `q3` below the median.
    pub fn is_ordered(&self) -> bool {
        self.q1 <= self.m && self.m <= self.q3
    }
}

/// Mixing weight between the quartile midpoint and the median.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
pub struct EstimatorWeight(f64);

impl EstimatorWeight {
    pub const ASYMPTOTIC: f64 = 0.70;
    pub const SLOPE: f64 = 0.39;

    /// `0.70 + 0.39 / n`; only `n >= 2` gives a weight inside (0, 1).
    pub fn for_sample_size(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::SampleTooSmall { required: 1, actual: 0 });
        }
        Self::new(Self::ASYMPTOTIC + Self::SLOPE / n as f64)
    }

    pub fn new(w: f64) -> Result<Self> {
        if w > 0.0 && w < 1.0 {
            Ok(Self(w))
        } else {
            Err(Error::InvalidWeight(w))
        }
    }

    pub fn get(self) -> f64 {
        self.0
    }
}

/// Middle element for odd `n`, mean of the two middle elements for even `n`.
pub fn median(sample: &SortedSample) -> f64 {
    median_of_sorted(sample.values())
}

pub(crate) fn median_of_sorted(values: &[f64]) -> f64 {
    let n = values.len();
    if n % 2 == 1 {
        values[n / 2]
    } else {
        (values[n / 2 - 1] + values[n / 2]) / 2.0
    }
}

/// How `q1` and `q3` are picked from a sorted sample of size `n >= 4`, with
/// `quar1 = floor(n/4)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum QuartileRule {
    /// `q1 = x[quar1 - 1]`, `q3 = x[3 * quar1 - 1]`: the server algorithm's
    /// indexing. `q3` sits closer to the median than `q1` does, so on
    /// symmetric data the three-point estimate is biased low (about
    /// -0.063 sigma at n = 50).
    #[default]
    FloorIndex,
    /// `q1 = x[quar1 - 1]`, `q3 = x[n - quar1]`: the same rank counted from
    /// either end.
    SymmetricRank,
}

/// Zero-based indices of the first and third quartile under `rule`.
///
/// This is the single place the quartile index convention lives.
pub fn quartile_indices_with(n: usize, rule: QuartileRule) -> Result<(usize, usize)> {
    if n < 4 {
        return Err(Error::SampleTooSmall { required: 4, actual: n });
    }
    let quar1 = n / 4;
    match rule {
        QuartileRule::FloorIndex => Ok((quar1 - 1, 3 * quar1 - 1)),
        QuartileRule::SymmetricRank => Ok((quar1 - 1, n - quar1)),
    }
}

/// [`quartile_indices_with`] under the default rule: `floor(n/4) - 1` and
/// `3 * floor(n/4) - 1`.
pub fn quartile_indices(n: usize) -> Result<(usize, usize)> {
    quartile_indices_with(n, QuartileRule::default())
}

pub fn quartiles(sample: &SortedSample) -> Result<QuartileSummary> {
    quartiles_with(sample, QuartileRule::default())
}

pub fn quartiles_with(sample: &SortedSample, rule: QuartileRule) -> Result<QuartileSummary> {
    let (i1, i3) = quartile_indices_with(sample.len(), rule)?;
    let values = sample.values();
    Ok(QuartileSummary {
        q1: values[i1],
        m: median(sample),
        q3: values[i3],
        n: sample.len(),
    })
}

pub fn estimator_weight(n: usize) -> Result<EstimatorWeight> {
    EstimatorWeight::for_sample_size(n)
}

/// `w * (q1 + q3) / 2 + (1 - w) * m`.
pub fn estimated_mean(summary: &QuartileSummary, weight: EstimatorWeight) -> f64 {
    let w = weight.get();
    w * (summary.q1 + summary.q3) / 2.0 + (1.0 - w) * summary.m
}
