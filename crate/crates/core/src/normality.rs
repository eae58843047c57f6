//! Normality tests and the pre-testing rate.
//!
//! Shapiro-Wilk follows Royston's AS R94 algorithm (coefficient
//! approximation and the log-normal p-value transform), valid for
//! `3 <= n <= 5000`. Anderson-Darling estimates both mean and variance from
//! the sample and compares Stephens' modified statistic
//! `A2 * (1 + 0.75/n + 2.25/n^2)` with the tabulated critical values.
//!
//! The pre-testing rate is the fraction of per-coordinate cross-client
//! samples that a test does not reject.

use std::f64::consts::{FRAC_1_SQRT_2, PI};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};
use statrs::function::erf::erfc;

use crate::error::{Error, Result};
use crate::grad::CoordinateSample;
use crate::quantile::SortedSample;

pub const SW_MIN_N: usize = 3;
pub const SW_MAX_N: usize = 5000;
pub const AD_MIN_N: usize = 8;

/// `(alpha, critical value)` for the modified A2 statistic when both
/// parameters are estimated.
pub const AD_CRITICAL_VALUES: [(f64, f64); 4] = [(0.10, 0.631), (0.05, 0.752), (0.025, 0.873), (0.01, 1.035)];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TestKind {
    ShapiroWilk,
    AndersonDarling,
    Both,
}

impl TestKind {
    pub fn short_name(self) -> &'static str {
        match self {
            TestKind::ShapiroWilk => "sw",
            TestKind::AndersonDarling => "ad",
            TestKind::Both => "both",
        }
    }
}

impl std::str::FromStr for TestKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "sw" | "shapiro_wilk" | "shapiro-wilk" => Ok(TestKind::ShapiroWilk),
            "ad" | "anderson_darling" | "anderson-darling" => Ok(TestKind::AndersonDarling),
            "both" => Ok(TestKind::Both),
            other => Err(Error::InvalidParameter(format!("unknown normality test {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NormalityTestResult {
    pub test: TestKind,
    /// W for Shapiro-Wilk, unmodified A2 for Anderson-Darling.
    pub statistic: f64,
    /// Shapiro-Wilk only.
    pub p_value: Option<f64>,
    /// Anderson-Darling only: `A2 * (1 + 0.75/n + 2.25/n^2)`.
    pub modified_statistic: Option<f64>,
    /// Anderson-Darling only.
    pub critical_value: Option<f64>,
    pub alpha: f64,
    pub is_normal: bool,
}

fn check_alpha(alpha: f64) -> Result<()> {
    if alpha > 0.0 && alpha < 1.0 {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!(
            "alpha must lie in (0, 1), got {alpha}"
        )))
    }
}

fn std_normal() -> Normal {
    Normal::new(0.0, 1.0).expect("unit normal is valid")
}

/// `P(Z <= z)` computed through erfc, accurate in both tails.
fn phi(z: f64) -> f64 {
    0.5 * erfc(-z * FRAC_1_SQRT_2)
}

/// `P(Z > z)`.
fn phi_upper(z: f64) -> f64 {
    0.5 * erfc(z * FRAC_1_SQRT_2)
}

/// Horner evaluation in the AS 181 convention: `cc[0] + cc[1] x + ...`.
fn poly(cc: &[f64], x: f64) -> f64 {
    cc.iter().rev().fold(0.0, |acc, &c| acc * x + c)
}

/// Shapiro-Wilk `a` coefficients for the lower half of the sample, as
/// positive numbers: `a[0]` pairs the extremes.
pub fn shapiro_wilk_coefficients(n: usize) -> Result<Vec<f64>> {
    const C1: [f64; 6] = [0.0, 0.221157, -0.147981, -2.07119, 4.434685, -2.706056];
    const C2: [f64; 6] = [0.0, 0.042981, -0.293762, -1.752461, 5.682633, -3.582633];

    if !(SW_MIN_N..=SW_MAX_N).contains(&n) {
        return Err(Error::SampleSizeOutOfRange {
            n,
            min: SW_MIN_N,
            max: SW_MAX_N,
        });
    }
    let half = n / 2;
    if n == 3 {
        return Ok(vec![FRAC_1_SQRT_2]);
    }
    let normal = std_normal();
    let an25 = n as f64 + 0.25;
    // expected normal order statistics (Blom scores), lower half, negative
    let m: Vec<f64> = (1..=half)
        .map(|i| normal.inverse_cdf((i as f64 - 0.375) / an25))
        .collect();
    let summ2 = 2.0 * m.iter().map(|v| v * v).sum::<f64>();
    let ssumm2 = summ2.sqrt();
    let rsn = 1.0 / (n as f64).sqrt();
    let a1 = poly(&C1, rsn) - m[0] / ssumm2;

    let mut a = vec![0.0; half];
    a[0] = a1;
    let (first_scaled, fac) = if n > 5 {
        let a2 = -m[1] / ssumm2 + poly(&C2, rsn);
        a[1] = a2;
        let fac = ((summ2 - 2.0 * m[0] * m[0] - 2.0 * m[1] * m[1]) / (1.0 - 2.0 * a1 * a1 - 2.0 * a2 * a2)).sqrt();
        (2, fac)
    } else {
        let fac = ((summ2 - 2.0 * m[0] * m[0]) / (1.0 - 2.0 * a1 * a1)).sqrt();
        (1, fac)
    };
    for i in first_scaled..half {
        a[i] = -m[i] / fac;
    }
    Ok(a)
}

/// Royston's normal approximation to the upper tail of W.
fn shapiro_wilk_p_value(w: f64, n: usize) -> f64 {
    const G: [f64; 2] = [-2.273, 0.459];
    const C3: [f64; 4] = [0.544, -0.39978, 0.025054, -6.714e-4];
    const C4: [f64; 4] = [1.3822, -0.77857, 0.062767, -0.0020322];
    const C5: [f64; 4] = [-1.5861, -0.31082, -0.083751, 0.0038915];
    const C6: [f64; 3] = [-0.4803, -0.082676, 0.0030302];

    let an = n as f64;
    if n == 3 {
        let p = (6.0 / PI) * (w.sqrt().asin() - PI / 3.0);
        return p.clamp(0.0, 1.0);
    }
    let mut y = (1.0 - w).ln();
    let (mean, sd) = if n <= 11 {
        let gamma = poly(&G, an);
        if y >= gamma {
            return 1e-99;
        }
        y = -(gamma - y).ln();
        (poly(&C3, an), poly(&C4, an).exp())
    } else {
        let ln_n = an.ln();
        (poly(&C5, ln_n), poly(&C6, ln_n).exp())
    };
    phi_upper((y - mean) / sd).clamp(0.0, 1.0)
}

/// Shapiro-Wilk W and p-value; `is_normal` is `p > alpha`.
pub fn shapiro_wilk(sample: &SortedSample, alpha: f64) -> Result<NormalityTestResult> {
    check_alpha(alpha)?;
    let n = sample.len();
    let half_coeffs = shapiro_wilk_coefficients(n)?;
    let x = sample.values();
    let range = sample.max() - sample.min();
    if range <= 0.0 {
        return Err(Error::ConstantSample);
    }
    // scale by the range for numerical headroom; W is scale invariant
    let scaled: Vec<f64> = x.iter().map(|v| (v - x[0]) / range).collect();
    let mean = scaled.iter().sum::<f64>() / n as f64;
    let ss: f64 = scaled.iter().map(|v| (v - mean) * (v - mean)).sum();
    let numerator: f64 = half_coeffs
        .iter()
        .enumerate()
        .map(|(i, a)| a * (scaled[n - 1 - i] - scaled[i]))
        .sum();
    let w = (numerator * numerator / ss).min(1.0);
    let p = shapiro_wilk_p_value(w, n);
    Ok(NormalityTestResult {
        test: TestKind::ShapiroWilk,
        statistic: w,
        p_value: Some(p),
        modified_statistic: None,
        critical_value: None,
        alpha,
        is_normal: p > alpha,
    })
}

pub fn anderson_darling_critical_value(alpha: f64) -> Result<f64> {
    AD_CRITICAL_VALUES
        .iter()
        .find(|(a, _)| (a - alpha).abs() < 1e-12)
        .map(|&(_, c)| c)
        .ok_or(Error::UnsupportedAlpha(alpha))
}

/// Anderson-Darling A2 with estimated mean and (n-1)-variance.
pub fn anderson_darling_statistic(sample: &SortedSample) -> Result<f64> {
    let n = sample.len();
    if n < AD_MIN_N {
        return Err(Error::SampleSizeOutOfRange {
            n,
            min: AD_MIN_N,
            max: usize::MAX,
        });
    }
    if sample.max() <= sample.min() {
        return Err(Error::ConstantSample);
    }
    let x = sample.values();
    let mean = sample.mean();
    let var = x.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1) as f64;
    let sd = var.sqrt();
    if sd <= 0.0 {
        return Err(Error::ConstantSample);
    }
    let z: Vec<f64> = x.iter().map(|v| (v - mean) / sd).collect();
    let nf = n as f64;
    let s: f64 = (0..n)
        .map(|i| {
            let weight = (2 * i + 1) as f64;
            weight * (phi(z[i]).ln() + phi_upper(z[n - 1 - i]).ln())
        })
        .sum();
    Ok(-nf - s / nf)
}

/// Anderson-Darling test; `is_normal` is `modified A2 < critical(alpha)`.
pub fn anderson_darling(sample: &SortedSample, alpha: f64) -> Result<NormalityTestResult> {
    let critical = anderson_darling_critical_value(alpha)?;
    let a2 = anderson_darling_statistic(sample)?;
    let nf = sample.len() as f64;
    let modified = a2 * (1.0 + 0.75 / nf + 2.25 / (nf * nf));
    Ok(NormalityTestResult {
        test: TestKind::AndersonDarling,
        statistic: a2,
        p_value: None,
        modified_statistic: Some(modified),
        critical_value: Some(critical),
        alpha,
        is_normal: modified < critical,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PretestReport {
    pub total: usize,
    pub passed: usize,
    pub failed: usize,
    pub rate: f64,
    pub alpha: f64,
    pub kind: TestKind,
    /// Zero-variance coordinates; counted in `passed`.
    pub constant_count: usize,
    /// Coordinates where the test could not run (for example too few clients).
    pub error_count: usize,
    /// Per-test pass counts when `kind` is `Both`.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub shapiro_wilk_passed: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub anderson_darling_passed: Option<usize>,
}

impl PretestReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serialises")
    }
}

#[derive(Debug, Clone, Copy, Default)]
struct Tally {
    total: usize,
    passed: usize,
    failed: usize,
    constant: usize,
    errors: usize,
    sw_passed: usize,
    ad_passed: usize,
}

impl Tally {
    fn merge(self, o: Tally) -> Tally {
        Tally {
            total: self.total + o.total,
            passed: self.passed + o.passed,
            failed: self.failed + o.failed,
            constant: self.constant + o.constant,
            errors: self.errors + o.errors,
            sw_passed: self.sw_passed + o.sw_passed,
            ad_passed: self.ad_passed + o.ad_passed,
        }
    }
}

fn tally_coordinate(values: &[f64], alpha: f64, kind: TestKind) -> Tally {
    let mut t = Tally {
        total: 1,
        ..Tally::default()
    };
    let sample = match SortedSample::from_unsorted(values.to_vec()) {
        Ok(s) => s,
        Err(_) => {
            t.errors = 1;
            return t;
        }
    };
    if sample.max() == sample.min() {
        t.constant = 1;
        t.passed = 1;
        t.sw_passed = 1;
        t.ad_passed = 1;
        return t;
    }
    let sw = matches!(kind, TestKind::ShapiroWilk | TestKind::Both).then(|| shapiro_wilk(&sample, alpha));
    let ad = matches!(kind, TestKind::AndersonDarling | TestKind::Both).then(|| anderson_darling(&sample, alpha));
    let mut verdicts = Vec::with_capacity(2);
    for res in [sw, ad].into_iter().flatten() {
        match res {
            Ok(r) => verdicts.push((r.test, r.is_normal)),
            Err(_) => {
                t.errors = 1;
                return t;
            }
        }
    }
    for &(test, ok) in &verdicts {
        if ok {
            match test {
                TestKind::ShapiroWilk => t.sw_passed = 1,
                TestKind::AndersonDarling => t.ad_passed = 1,
                TestKind::Both => {}
            }
        }
    }
    if verdicts.iter().all(|&(_, ok)| ok) {
        t.passed = 1;
    } else {
        t.failed = 1;
    }
    t
}

/// Runs the chosen test on every coordinate and reports the pass rate.
///
/// Constant coordinates pass; coordinates the test cannot handle are counted
/// in `error_count` and neither pass nor fail.
pub fn pretest_round(samples: &[CoordinateSample], alpha: f64, kind: TestKind) -> Result<PretestReport> {
    check_alpha(alpha)?;
    if matches!(kind, TestKind::AndersonDarling | TestKind::Both) {
        anderson_darling_critical_value(alpha)?;
    }
    let t = samples
        .par_iter()
        .map(|s| tally_coordinate(&s.values, alpha, kind))
        .reduce(Tally::default, Tally::merge);
    let both = kind == TestKind::Both;
    Ok(PretestReport {
        total: t.total,
        passed: t.passed,
        failed: t.failed,
        rate: if t.total == 0 {
            0.0
        } else {
            t.passed as f64 / t.total as f64
        },
        alpha,
        kind,
        constant_count: t.constant,
        error_count: t.errors,
        shapiro_wilk_passed: both.then_some(t.sw_passed),
        anderson_darling_passed: both.then_some(t.ad_passed),
    })
}
