//! Byzantine-robust gradient aggregation.
//!
//! The central rule is the quartile-based estimated mean (EMA): per model
//! coordinate, trim the cross-client values to interquartile fences, then
//! estimate their mean from the first quartile, median and third quartile.
//! Baselines (mean, median, count-trimmed mean, Krum, Zeno), normality
//! pre-tests and loss-dispersion based heterogeneity detection live
//! alongside it.

pub mod aggregate;
pub mod dump;
pub mod error;
pub mod grad;
pub mod heterogeneity;
pub mod normality;
pub mod outlier;
pub mod quantile;

pub use aggregate::{
    aggregate, aggregate_ema, aggregate_ema_with, aggregate_krum, aggregate_mean, aggregate_median,
    aggregate_trimmed_mean, aggregate_zeno, AggregationDiagnostics, AggregationOutcome, AggregationRuleConfig,
    RuleKind, ValidationOracle, ZenoContext,
};
pub use dump::GradientDump;
pub use error::{Error, Result};
pub use grad::{transpose_to_coordinates, validate_round, ClientUpdate, CoordinateSample, GradientVector};
pub use heterogeneity::{
    detect_non_iid, evaluate_model_on_client, ClientLossRecord, HeterogeneityReport, Predictor, Verdict,
};
pub use normality::{anderson_darling, pretest_round, shapiro_wilk, NormalityTestResult, PretestReport, TestKind};
pub use outlier::{
    compute_thresholds, compute_thresholds_with, filter_outliers, normalized_trimmed_mean, FilterReport,
    OutlierThresholds,
};
pub use quantile::{
    estimated_mean, estimator_weight, median, quartiles, quartiles_with, EstimatorWeight, QuartileRule,
    QuartileSummary, SortedSample,
};
