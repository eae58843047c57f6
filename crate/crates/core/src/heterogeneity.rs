//! Per-client model evaluation and coefficient-of-variation based non-IID
//! detection.
//!
//! Each client's loss is the mean squared error of the model's outputs
//! against one-hot targets over the client's whole dataset. The spread of
//! those losses, `CV = sigma / mu` with the population standard deviation,
//! is compared with a threshold `d`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const DEFAULT_CV_THRESHOLD: f64 = 0.25;
/// Mean losses at or below this give an `Undefined` verdict.
pub const MU_EPSILON: f64 = 1e-12;

pub const NON_IID_MESSAGE: &str = "The dataset is likely non-iid.";
pub const IID_MESSAGE: &str = "The dataset is likely iid.";

/// Anything that maps a feature row to an output vector.
pub trait Predictor {
    fn input_dim(&self) -> usize;
    fn output_dim(&self) -> usize;
    fn predict(&self, features: &[f64]) -> Vec<f64>;
}

/// One-hot rows for `labels` over `n_classes`.
pub fn one_hot(labels: &[usize], n_classes: usize) -> Result<Vec<Vec<f64>>> {
    labels
        .iter()
        .map(|&l| {
            if l >= n_classes {
                return Err(Error::InvalidParameter(format!(
                    "label {l} out of range for {n_classes} classes"
                )));
            }
            let mut row = vec![0.0; n_classes];
            row[l] = 1.0;
            Ok(row)
        })
        .collect()
}

/// Mean squared error over every output entry of every sample.
pub fn evaluate_model_on_client<P: Predictor + ?Sized>(
    model: &P,
    features: &[Vec<f64>],
    targets: &[Vec<f64>],
) -> Result<f64> {
    if features.is_empty() {
        return Err(Error::EmptyDataset);
    }
    if features.len() != targets.len() {
        return Err(Error::InvalidParameter(format!(
            "{} feature rows but {} target rows",
            features.len(),
            targets.len()
        )));
    }
    let mut sum = 0.0;
    let mut count = 0usize;
    for (x, t) in features.iter().zip(targets) {
        if x.len() != model.input_dim() {
            return Err(Error::DimensionMismatch {
                client_id: 0,
                expected: model.input_dim(),
                actual: x.len(),
            });
        }
        let out = model.predict(x);
        if out.len() != t.len() {
            return Err(Error::DimensionMismatch {
                client_id: 0,
                expected: out.len(),
                actual: t.len(),
            });
        }
        sum += out.iter().zip(t).map(|(o, y)| (o - y) * (o - y)).sum::<f64>();
        count += out.len();
    }
    Ok(sum / count as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClientLossRecord {
    pub client_id: u32,
    pub loss: f64,
}

impl ClientLossRecord {
    pub fn new(client_id: u32, loss: f64) -> Result<Self> {
        if !(loss.is_finite() && loss >= 0.0) {
            return Err(Error::InvalidParameter(format!(
                "client {client_id}: loss {loss} is not a finite non-negative number"
            )));
        }
        Ok(Self { client_id, loss })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    LikelyNonIid,
    LikelyIid,
    Undefined,
}

impl Verdict {
    pub fn message(self) -> &'static str {
        match self {
            Verdict::LikelyNonIid => NON_IID_MESSAGE,
            Verdict::LikelyIid => IID_MESSAGE,
            Verdict::Undefined => "The dataset cannot be assessed: mean loss is zero.",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HeterogeneityReport {
    pub losses: Vec<ClientLossRecord>,
    pub mu: f64,
    pub sigma: f64,
    /// `None` when the verdict is `Undefined`.
    pub cv: Option<f64>,
    pub threshold_d: f64,
    pub verdict: Verdict,
}

impl HeterogeneityReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serialises")
    }

    /// `client_id,loss` rows with the loss rounded to four decimals.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("client_id,loss\n");
        for r in &self.losses {
            out.push_str(&format!("{},{:.4}\n", r.client_id, r.loss));
        }
        out
    }

    /// Client ids whose loss exceeds the `q`-quantile (nearest rank) of all
    /// client losses. Not used unless a caller opts in.
    pub fn clients_above_quantile(&self, q: f64) -> Vec<u32> {
        if self.losses.is_empty() {
            return Vec::new();
        }
        let mut sorted: Vec<f64> = self.losses.iter().map(|r| r.loss).collect();
        sorted.sort_by(f64::total_cmp);
        let rank = ((q.clamp(0.0, 1.0) * sorted.len() as f64).ceil() as usize).clamp(1, sorted.len());
        let cutoff = sorted[rank - 1];
        self.losses
            .iter()
            .filter(|r| r.loss > cutoff)
            .map(|r| r.client_id)
            .collect()
    }
}

/// Population mean, population standard deviation and CV of the losses.
pub fn detect_non_iid(losses: &[ClientLossRecord], d: f64) -> Result<HeterogeneityReport> {
    if losses.len() < 2 {
        return Err(Error::TooFewClients {
            required: 2,
            actual: losses.len(),
        });
    }
    if !(d > 0.0 && d.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "threshold d must be positive, got {d}"
        )));
    }
    let n = losses.len() as f64;
    let mu = losses.iter().map(|r| r.loss).sum::<f64>() / n;
    let sigma = (losses.iter().map(|r| (r.loss - mu) * (r.loss - mu)).sum::<f64>() / n).sqrt();
    let (cv, verdict) = if mu <= MU_EPSILON {
        (None, Verdict::Undefined)
    } else {
        let cv = sigma / mu;
        let verdict = if cv > d {
            Verdict::LikelyNonIid
        } else {
            Verdict::LikelyIid
        };
        (Some(cv), verdict)
    };
    Ok(HeterogeneityReport {
        losses: losses.to_vec(),
        mu,
        sigma,
        cv,
        threshold_d: d,
        verdict,
    })
}
