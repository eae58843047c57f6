//! Server-side aggregation rules.
//!
//! Scalar rules (EMA, mean, median, count-trimmed mean) run independently on
//! every [`CoordinateSample`] and are parallelised across coordinates; each
//! coordinate's result depends only on its own sample, so the output is
//! identical for any thread schedule. Krum and Zeno score whole update
//! vectors.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grad::{transpose_to_coordinates, ClientUpdate, CoordinateSample, GradientVector};
use crate::outlier::{compute_thresholds_with, filter_outliers, DEFAULT_FENCE_MULTIPLIER};
use crate::quantile::{estimated_mean, estimator_weight, median_of_sorted, quartiles_with, QuartileRule, SortedSample};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RuleKind {
    Ema,
    Mean,
    Median,
    TrimmedMean,
    Krum,
    Zeno,
}

impl RuleKind {
    pub const ALL: [RuleKind; 6] = [
        RuleKind::Ema,
        RuleKind::Mean,
        RuleKind::Median,
        RuleKind::TrimmedMean,
        RuleKind::Krum,
        RuleKind::Zeno,
    ];

    pub fn name(self) -> &'static str {
        match self {
            RuleKind::Ema => "ema",
            RuleKind::Mean => "mean",
            RuleKind::Median => "median",
            RuleKind::TrimmedMean => "trimmed_mean",
            RuleKind::Krum => "krum",
            RuleKind::Zeno => "zeno",
        }
    }
}

impl std::fmt::Display for RuleKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for RuleKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let norm = s.trim().to_ascii_lowercase().replace('-', "_");
        RuleKind::ALL
            .into_iter()
            .find(|r| r.name() == norm || (norm == "trim" && *r == RuleKind::TrimmedMean))
            .ok_or_else(|| Error::InvalidParameter(format!("unknown aggregation rule {s:?}")))
    }
}

/// Which rule to run plus the parameters of every rule. Only the selected
/// rule's parameters are consulted.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AggregationRuleConfig {
    pub rule: RuleKind,
    /// IQR fence multiplier for EMA.
    pub k: f64,
    /// Quartile convention used by EMA for both the fences and the estimate.
    pub quartile_rule: QuartileRule,
    /// Fraction trimmed from each end by the count-trimmed mean.
    pub trim_fraction: f64,
    /// Assumed number of Byzantine clients for Krum.
    pub byzantine_count_f: usize,
    pub zeno_rho: f64,
    pub zeno_remove_b: usize,
    /// Zeno probe step; `None` means "use the learning rate".
    pub zeno_gamma: Option<f64>,
}

impl Default for AggregationRuleConfig {
    fn default() -> Self {
        Self {
            rule: RuleKind::Ema,
            k: DEFAULT_FENCE_MULTIPLIER,
            quartile_rule: QuartileRule::default(),
            trim_fraction: 0.2,
            byzantine_count_f: 1,
            zeno_rho: 5e-4,
            zeno_remove_b: 1,
            zeno_gamma: None,
        }
    }
}

impl AggregationRuleConfig {
    pub fn for_rule(rule: RuleKind) -> Self {
        Self {
            rule,
            ..Self::default()
        }
    }

    /// Checks the selected rule's parameters against a round of `n` clients.
    pub fn validate(&self, n: usize) -> Result<()> {
        match self.rule {
            RuleKind::Ema => {
                if !(self.k > 0.0 && self.k.is_finite()) {
                    return Err(Error::InvalidParameter(format!("k must be positive, got {}", self.k)));
                }
            }
            RuleKind::TrimmedMean => {
                if !(0.0..0.5).contains(&self.trim_fraction) {
                    return Err(Error::InvalidParameter(format!(
                        "trim_fraction must lie in [0, 0.5), got {}",
                        self.trim_fraction
                    )));
                }
            }
            RuleKind::Krum => {
                if n < self.byzantine_count_f + 3 {
                    return Err(Error::TooFewClients {
                        required: self.byzantine_count_f + 3,
                        actual: n,
                    });
                }
            }
            RuleKind::Zeno => {
                if n <= self.zeno_remove_b {
                    return Err(Error::TooFewClients {
                        required: self.zeno_remove_b + 1,
                        actual: n,
                    });
                }
                if !(self.zeno_rho >= 0.0 && self.zeno_rho.is_finite()) {
                    return Err(Error::InvalidParameter(format!(
                        "zeno_rho must be >= 0, got {}",
                        self.zeno_rho
                    )));
                }
                if let Some(g) = self.zeno_gamma {
                    if !(g > 0.0 && g.is_finite()) {
                        return Err(Error::InvalidParameter(format!("zeno_gamma must be > 0, got {g}")));
                    }
                }
            }
            RuleKind::Mean | RuleKind::Median => {}
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct AggregationDiagnostics {
    pub n_clients: usize,
    /// Values that entered the final estimate, per coordinate.
    pub retained_counts: Vec<usize>,
    /// EMA weight, when at least one coordinate used the three-point estimate.
    pub mean_weight: Option<f64>,
    /// Coordinates where EMA fell back to the untrimmed median.
    pub median_fallbacks: usize,
    /// Of those, coordinates where the fences rejected every value.
    pub all_filtered: usize,
    /// Krum's pick.
    pub selected_client: Option<u32>,
    /// Updates discarded by Zeno, lowest score first.
    pub removed_clients: Vec<u32>,
}

impl AggregationDiagnostics {
    pub fn retained_mean(&self) -> f64 {
        if self.retained_counts.is_empty() {
            return self.n_clients as f64;
        }
        self.retained_counts.iter().sum::<usize>() as f64 / self.retained_counts.len() as f64
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AggregationOutcome {
    pub global_update: GradientVector,
    pub diagnostics: AggregationDiagnostics,
}

fn common_n(samples: &[CoordinateSample]) -> Result<usize> {
    let n = samples.first().map(CoordinateSample::len).ok_or(Error::EmptyRound)?;
    if n == 0 {
        return Err(Error::EmptyRound);
    }
    if let Some(bad) = samples.iter().find(|s| s.len() != n) {
        return Err(Error::InvalidParameter(format!(
            "coordinate {} has {} values, expected {n}",
            bad.coordinate_index,
            bad.len()
        )));
    }
    Ok(n)
}

fn sorted_copy(values: &[f64]) -> Vec<f64> {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    v
}

#[derive(Debug, Clone, Copy)]
struct EmaCoordinate {
    value: f64,
    retained: usize,
    fallback: Option<Fallback>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Fallback {
    SmallSample,
    AllFiltered,
    SmallRetained,
}

fn ema_coordinate(values: &[f64], k: f64, rule: QuartileRule) -> Result<EmaCoordinate> {
    let n = values.len();
    let sorted = sorted_copy(values);
    let m = median_of_sorted(&sorted);
    let fallback = |retained, why| EmaCoordinate {
        value: m,
        retained,
        fallback: Some(why),
    };
    if n < 4 {
        return Ok(fallback(n, Fallback::SmallSample));
    }
    let sample = SortedSample::from_sorted_unchecked(sorted);
    let thresholds = compute_thresholds_with(&sample, k, rule)?;
    let report = match filter_outliers(&sample, &thresholds) {
        Ok(r) => r,
        Err(Error::AllFiltered) => return Ok(fallback(n, Fallback::AllFiltered)),
        Err(e) => return Err(e),
    };
    if report.retained_count < 4 {
        return Ok(fallback(n, Fallback::SmallRetained));
    }
    let mut summary = quartiles_with(&report.retained, rule)?;
    // the median comes from the untrimmed sample
    summary.m = m;
    summary.n = n;
    Ok(EmaCoordinate {
        value: estimated_mean(&summary, estimator_weight(n)?),
        retained: report.retained_count,
        fallback: None,
    })
}

/// Quartile-based estimated-mean aggregation.
///
/// Per coordinate: sort, take the median, trim to the IQR fences with
/// multiplier `k`, take `q1`/`q3` of the trimmed values and return
/// `w (q1 + q3) / 2 + (1 - w) m` with `w = 0.70 + 0.39 / n`. Coordinates with
/// fewer than four clients, or fewer than four values left after trimming,
/// use the untrimmed median instead.
pub fn aggregate_ema(samples: &[CoordinateSample], k: f64) -> Result<AggregationOutcome> {
    aggregate_ema_with(samples, k, QuartileRule::default())
}

/// [`aggregate_ema`] with an explicit quartile convention.
pub fn aggregate_ema_with(samples: &[CoordinateSample], k: f64, rule: QuartileRule) -> Result<AggregationOutcome> {
    let n = common_n(samples)?;
    if !(k > 0.0 && k.is_finite()) {
        return Err(Error::InvalidParameter(format!("k must be positive, got {k}")));
    }
    let coords = samples
        .par_iter()
        .map(|s| ema_coordinate(&s.values, k, rule))
        .collect::<Result<Vec<_>>>()?;

    let median_fallbacks = coords.iter().filter(|c| c.fallback.is_some()).count();
    let all_filtered = coords
        .iter()
        .filter(|c| c.fallback == Some(Fallback::AllFiltered))
        .count();
    let mean_weight = (median_fallbacks < coords.len())
        .then(|| estimator_weight(n).map(|w| w.get()))
        .transpose()?;
    Ok(AggregationOutcome {
        global_update: GradientVector::from_flat(coords.iter().map(|c| c.value).collect())?,
        diagnostics: AggregationDiagnostics {
            n_clients: n,
            retained_counts: coords.iter().map(|c| c.retained).collect(),
            mean_weight,
            median_fallbacks,
            all_filtered,
            ..Default::default()
        },
    })
}

fn coordinatewise(
    samples: &[CoordinateSample],
    f: impl Fn(&[f64]) -> Result<(f64, usize)> + Sync,
) -> Result<AggregationOutcome> {
    let n = common_n(samples)?;
    let results = samples.par_iter().map(|s| f(&s.values)).collect::<Result<Vec<_>>>()?;
    Ok(AggregationOutcome {
        global_update: GradientVector::from_flat(results.iter().map(|r| r.0).collect())?,
        diagnostics: AggregationDiagnostics {
            n_clients: n,
            retained_counts: results.iter().map(|r| r.1).collect(),
            ..Default::default()
        },
    })
}

/// Coordinate-wise arithmetic mean (no defence).
pub fn aggregate_mean(samples: &[CoordinateSample]) -> Result<AggregationOutcome> {
    coordinatewise(samples, |v| Ok((v.iter().sum::<f64>() / v.len() as f64, v.len())))
}

pub fn aggregate_median(samples: &[CoordinateSample]) -> Result<AggregationOutcome> {
    coordinatewise(samples, |v| Ok((median_of_sorted(&sorted_copy(v)), v.len())))
}

/// Number of values removed from each end: `ceil(trim_fraction * n)`.
///
/// A relative slack of 1e-9 keeps products such as `0.1 * 30` from rounding
/// up past an integer.
pub fn trim_count(trim_fraction: f64, n: usize) -> usize {
    let raw = trim_fraction * n as f64;
    (raw - 1e-9 * raw.max(1.0)).ceil().max(0.0) as usize
}

/// Drops `ceil(trim_fraction * n)` values from each end by rank and averages
/// the rest.
pub fn aggregate_trimmed_mean(samples: &[CoordinateSample], trim_fraction: f64) -> Result<AggregationOutcome> {
    if !(0.0..0.5).contains(&trim_fraction) {
        return Err(Error::InvalidParameter(format!(
            "trim_fraction must lie in [0, 0.5), got {trim_fraction}"
        )));
    }
    let n = common_n(samples)?;
    let cut = trim_count(trim_fraction, n);
    if 2 * cut >= n {
        return Err(Error::TrimTooAggressive { trim_fraction, n });
    }
    coordinatewise(samples, |v| {
        let sorted = sorted_copy(v);
        let kept = &sorted[cut..n - cut];
        Ok((kept.iter().sum::<f64>() / kept.len() as f64, kept.len()))
    })
}

fn squared_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Krum score of every update: sum of squared distances to its `n - f - 2`
/// nearest other updates. Returned in the order of `updates`.
pub fn krum_scores(updates: &[ClientUpdate], f: usize) -> Result<Vec<f64>> {
    let n = updates.len();
    if n < f + 3 {
        return Err(Error::TooFewClients {
            required: f + 3,
            actual: n,
        });
    }
    let neighbours = n - f - 2;
    Ok((0..n)
        .map(|i| {
            let mut dists: Vec<f64> = (0..n)
                .filter(|&j| j != i)
                .map(|j| squared_distance(updates[i].gradient.values(), updates[j].gradient.values()))
                .collect();
            dists.sort_by(f64::total_cmp);
            dists[..neighbours].iter().sum()
        })
        .collect())
}

/// Selects the update with the smallest Krum score, breaking ties by the
/// lowest client id.
pub fn aggregate_krum(updates: &[ClientUpdate], f: usize) -> Result<AggregationOutcome> {
    let scores = krum_scores(updates, f)?;
    let best = (0..updates.len())
        .min_by(|&a, &b| {
            scores[a]
                .total_cmp(&scores[b])
                .then(updates[a].client_id.cmp(&updates[b].client_id))
        })
        .expect("krum_scores guarantees n >= 3");
    let chosen = &updates[best];
    Ok(AggregationOutcome {
        global_update: chosen.gradient.clone(),
        diagnostics: AggregationDiagnostics {
            n_clients: updates.len(),
            retained_counts: vec![1; chosen.gradient.dim()],
            selected_client: Some(chosen.client_id),
            ..Default::default()
        },
    })
}

/// Server-held loss used by Zeno to score updates.
pub trait ValidationOracle {
    fn loss(&self, params: &[f64]) -> f64;
}

impl<F: Fn(&[f64]) -> f64> ValidationOracle for F {
    fn loss(&self, params: &[f64]) -> f64 {
        self(params)
    }
}

/// Zeno score of every update, in the order of `updates`:
/// `loss(x) - loss(x - gamma g) - rho |g|^2`.
pub fn zeno_scores(
    updates: &[ClientUpdate],
    params: &[f64],
    oracle: &dyn ValidationOracle,
    rho: f64,
    gamma: f64,
) -> Result<Vec<f64>> {
    let base = oracle.loss(params);
    if !base.is_finite() {
        return Err(Error::OracleFailure);
    }
    updates
        .iter()
        .map(|u| {
            let g = u.gradient.values();
            if g.len() != params.len() {
                return Err(Error::DimensionMismatch {
                    client_id: u.client_id,
                    expected: params.len(),
                    actual: g.len(),
                });
            }
            let probe: Vec<f64> = params.iter().zip(g).map(|(p, gi)| p - gamma * gi).collect();
            let loss = oracle.loss(&probe);
            if !loss.is_finite() {
                return Err(Error::OracleFailure);
            }
            Ok(base - loss - rho * u.gradient.norm_squared())
        })
        .collect()
}

/// Discards the `b` lowest-scoring updates and averages the rest. Equal
/// scores are removed in client-id order.
pub fn aggregate_zeno(
    updates: &[ClientUpdate],
    params: &[f64],
    oracle: &dyn ValidationOracle,
    rho: f64,
    b: usize,
    gamma: f64,
) -> Result<AggregationOutcome> {
    let n = updates.len();
    if n <= b {
        return Err(Error::TooFewClients {
            required: b + 1,
            actual: n,
        });
    }
    let scores = zeno_scores(updates, params, oracle, rho, gamma)?;
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &c| {
        scores[a]
            .total_cmp(&scores[c])
            .then(updates[a].client_id.cmp(&updates[c].client_id))
    });
    let removed = &order[..b];
    let mut kept: Vec<usize> = order[b..].to_vec();
    kept.sort_by_key(|&i| updates[i].client_id);

    let dim = params.len();
    let mut sum = vec![0.0; dim];
    for &i in &kept {
        for (s, v) in sum.iter_mut().zip(updates[i].gradient.values()) {
            *s += v;
        }
    }
    let count = kept.len() as f64;
    let shape = updates[kept[0]].gradient.shape().to_vec();
    Ok(AggregationOutcome {
        global_update: GradientVector::new(sum.into_iter().map(|s| s / count).collect(), shape)?,
        diagnostics: AggregationDiagnostics {
            n_clients: n,
            retained_counts: vec![kept.len(); dim],
            removed_clients: removed.iter().map(|&i| updates[i].client_id).collect(),
            ..Default::default()
        },
    })
}

/// Inputs Zeno needs beyond the updates themselves.
pub struct ZenoContext<'a> {
    pub params: &'a [f64],
    pub oracle: &'a dyn ValidationOracle,
    /// Used as gamma when the config leaves it unset.
    pub learning_rate: f64,
}

/// Runs the configured rule over a validated round.
pub fn aggregate(
    config: &AggregationRuleConfig,
    updates: &[ClientUpdate],
    zeno: Option<ZenoContext<'_>>,
) -> Result<AggregationOutcome> {
    let first = updates.first().ok_or(Error::EmptyRound)?;
    config.validate(updates.len())?;
    let shape = first.gradient.shape().to_vec();
    let mut outcome = match config.rule {
        RuleKind::Krum => return aggregate_krum(updates, config.byzantine_count_f),
        RuleKind::Zeno => {
            let ctx = zeno.ok_or_else(|| {
                Error::InvalidParameter("zeno needs a validation oracle and current parameters".into())
            })?;
            let gamma = config.zeno_gamma.unwrap_or(ctx.learning_rate);
            return aggregate_zeno(
                updates,
                ctx.params,
                ctx.oracle,
                config.zeno_rho,
                config.zeno_remove_b,
                gamma,
            );
        }
        RuleKind::Ema => aggregate_ema_with(&transpose_to_coordinates(updates)?, config.k, config.quartile_rule)?,
        RuleKind::Mean => aggregate_mean(&transpose_to_coordinates(updates)?)?,
        RuleKind::Median => aggregate_median(&transpose_to_coordinates(updates)?)?,
        RuleKind::TrimmedMean => aggregate_trimmed_mean(&transpose_to_coordinates(updates)?, config.trim_fraction)?,
    };
    outcome.global_update = GradientVector::new(outcome.global_update.into_values(), shape)?;
    Ok(outcome)
}
