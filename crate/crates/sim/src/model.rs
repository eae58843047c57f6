//! Desk-scale classifiers with closed-form / backprop gradients.
//!
//! Parameters are one flat vector. Logistic regression: `W (C×d)` row-major
//! then `b (C)`. MLP: `W1 (h×d)`, `b1 (h)`, `W2 (C×h)`, `b2 (C)`, tanh hidden
//! layer. Both end in a softmax.

use ema_core::Predictor;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::dataset::Dataset;
use crate::error::{Result, SimError};
use crate::rng::{stream, Stream};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ModelKind {
    #[default]
    LogisticRegression,
    Mlp {
        hidden_units: usize,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum LossKind {
    #[default]
    CrossEntropy,
    MseOneHot,
}

impl LossKind {
    pub fn name(self) -> &'static str {
        match self {
            Self::CrossEntropy => "cross_entropy",
            Self::MseOneHot => "mse_one_hot",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(try_from = "RawModel", into = "RawModel")]
pub struct ModelSpec {
    pub kind: ModelKind,
    /// Taken from the dataset when absent; checked against it when present.
    pub input_dim: Option<usize>,
    pub n_classes: Option<usize>,
    pub loss: LossKind,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawModel {
    #[serde(default = "logistic_name")]
    kind: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    hidden_units: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    input_dim: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    n_classes: Option<usize>,
    #[serde(default)]
    loss: LossKind,
}

fn logistic_name() -> String {
    "logistic_regression".into()
}

impl TryFrom<RawModel> for ModelSpec {
    type Error = String;

    fn try_from(raw: RawModel) -> std::result::Result<Self, String> {
        let kind = match (raw.kind.as_str(), raw.hidden_units) {
            ("logistic_regression", None) => ModelKind::LogisticRegression,
            ("mlp", Some(hidden_units)) => ModelKind::Mlp { hidden_units },
            ("logistic_regression", Some(_)) => return Err("logistic_regression takes no `hidden_units`".into()),
            ("mlp", None) => return Err("mlp needs `hidden_units`".into()),
            (other, _) => return Err(format!("unknown model kind `{other}`")),
        };
        Ok(Self {
            kind,
            input_dim: raw.input_dim,
            n_classes: raw.n_classes,
            loss: raw.loss,
        })
    }
}

impl From<ModelSpec> for RawModel {
    fn from(spec: ModelSpec) -> Self {
        let (kind, hidden_units) = match spec.kind {
            ModelKind::LogisticRegression => ("logistic_regression", None),
            ModelKind::Mlp { hidden_units } => ("mlp", Some(hidden_units)),
        };
        Self {
            kind: kind.into(),
            hidden_units,
            input_dim: spec.input_dim,
            n_classes: spec.n_classes,
            loss: spec.loss,
        }
    }
}

impl ModelSpec {
    pub fn build(&self, data: &Dataset, seed: u64) -> Result<Model> {
        for (name, given, actual) in [
            ("input_dim", self.input_dim, data.dim()),
            ("n_classes", self.n_classes, data.n_classes()),
        ] {
            if let Some(given) = given.filter(|&g| g != actual) {
                return Err(SimError::Config(format!(
                    "model {name} {given} does not match dataset ({actual})"
                )));
            }
        }
        Model::new(self.kind, data.dim(), data.n_classes(), self.loss, seed)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Model {
    kind: ModelKind,
    input_dim: usize,
    n_classes: usize,
    loss: LossKind,
    params: Vec<f64>,
}

impl Model {
    /// Logistic regression starts at zero; the MLP draws `W1 ~ N(0, 1/d)`
    /// and `W2 ~ N(0, 1/h)` from the seeded init stream, biases zero.
    pub fn new(kind: ModelKind, input_dim: usize, n_classes: usize, loss: LossKind, seed: u64) -> Result<Self> {
        if input_dim == 0 || n_classes < 2 {
            return Err(SimError::Config(format!(
                "model needs input_dim >= 1 and n_classes >= 2, got {input_dim}, {n_classes}"
            )));
        }
        if let ModelKind::Mlp { hidden_units: 0 } = kind {
            return Err(SimError::Config("mlp hidden_units must be at least 1".into()));
        }
        let mut model = Self {
            kind,
            input_dim,
            n_classes,
            loss,
            params: Vec::new(),
        };
        model.params = vec![0.0; model.param_count()];
        if let ModelKind::Mlp { hidden_units: h } = kind {
            let mut rng = stream(seed, Stream::Init, 0, 0);
            let (d, c) = (input_dim, n_classes);
            let s1 = (1.0 / d as f64).sqrt();
            let s2 = (1.0 / h as f64).sqrt();
            for w in &mut model.params[..h * d] {
                *w = s1 * rng.sample::<f64, _>(StandardNormal);
            }
            let w2 = h * d + h;
            for w in &mut model.params[w2..w2 + c * h] {
                *w = s2 * rng.sample::<f64, _>(StandardNormal);
            }
        }
        Ok(model)
    }

    pub fn param_count(&self) -> usize {
        let (d, c) = (self.input_dim, self.n_classes);
        match self.kind {
            ModelKind::LogisticRegression => c * d + c,
            ModelKind::Mlp { hidden_units: h } => h * d + h + c * h + c,
        }
    }

    pub fn kind(&self) -> ModelKind {
        self.kind
    }

    pub fn loss_kind(&self) -> LossKind {
        self.loss
    }

    pub fn params(&self) -> &[f64] {
        &self.params
    }

    pub fn set_params(&mut self, params: Vec<f64>) -> Result<()> {
        if params.len() != self.param_count() {
            return Err(SimError::Config(format!(
                "{} params, model has {}",
                params.len(),
                self.param_count()
            )));
        }
        self.params = params;
        Ok(())
    }

    /// `params ← params − lr·update`.
    pub fn step(&mut self, update: &[f64], learning_rate: f64) {
        for (p, g) in self.params.iter_mut().zip(update) {
            *p -= learning_rate * g;
        }
    }

    pub fn with_params(&self, params: &[f64]) -> Self {
        let mut m = self.clone();
        m.params.copy_from_slice(params);
        m
    }

    /// Hidden activations (MLP only) and class probabilities.
    fn forward(&self, params: &[f64], x: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let (d, c) = (self.input_dim, self.n_classes);
        match self.kind {
            ModelKind::LogisticRegression => {
                let (w, b) = params.split_at(c * d);
                (Vec::new(), softmax(&affine(w, b, x, c, d)))
            }
            ModelKind::Mlp { hidden_units: h } => {
                let (w1, rest) = params.split_at(h * d);
                let (b1, rest) = rest.split_at(h);
                let (w2, b2) = rest.split_at(c * h);
                let a: Vec<f64> = affine(w1, b1, x, h, d).into_iter().map(f64::tanh).collect();
                let p = softmax(&affine(w2, b2, &a, c, h));
                (a, p)
            }
        }
    }

    pub fn probabilities(&self, x: &[f64]) -> Vec<f64> {
        self.forward(&self.params, x).1
    }

    pub fn predict_class(&self, x: &[f64]) -> usize {
        argmax(&self.probabilities(x))
    }

    /// Mean loss and its exact gradient over `batch` rows of `data`.
    pub fn loss_and_gradient(&self, params: &[f64], data: &Dataset, batch: &[usize]) -> (f64, Vec<f64>) {
        assert!(!batch.is_empty(), "empty batch");
        let (d, c) = (self.input_dim, self.n_classes);
        let scale = 1.0 / batch.len() as f64;
        let mut grad = vec![0.0; params.len()];
        let mut loss = 0.0;
        for &i in batch {
            let x = data.feature(i);
            let y = data.label(i);
            let (a, p) = self.forward(params, x);
            let (l, dz) = self.output_delta(&p, y);
            loss += l;
            match self.kind {
                ModelKind::LogisticRegression => {
                    let (gw, gb) = grad.split_at_mut(c * d);
                    accumulate_outer(gw, &dz, x, scale);
                    axpy(gb, &dz, scale);
                }
                ModelKind::Mlp { hidden_units: h } => {
                    let w2 = &params[h * d + h..h * d + h + c * h];
                    let (gw1, rest) = grad.split_at_mut(h * d);
                    let (gb1, rest) = rest.split_at_mut(h);
                    let (gw2, gb2) = rest.split_at_mut(c * h);
                    accumulate_outer(gw2, &dz, &a, scale);
                    axpy(gb2, &dz, scale);
                    let dh: Vec<f64> = (0..h)
                        .map(|j| {
                            let back: f64 = (0..c).map(|k| w2[k * h + j] * dz[k]).sum();
                            back * (1.0 - a[j] * a[j])
                        })
                        .collect();
                    accumulate_outer(gw1, &dh, x, scale);
                    axpy(gb1, &dh, scale);
                }
            }
        }
        (loss * scale, grad)
    }

    /// Per-sample loss and dℓ/dz for the softmax logits z.
    fn output_delta(&self, p: &[f64], y: usize) -> (f64, Vec<f64>) {
        match self.loss {
            LossKind::CrossEntropy => {
                let mut dz = p.to_vec();
                dz[y] -= 1.0;
                (-p[y].max(f64::MIN_POSITIVE).ln(), dz)
            }
            LossKind::MseOneHot => {
                let c = p.len() as f64;
                let dp: Vec<f64> = p
                    .iter()
                    .enumerate()
                    .map(|(k, &pk)| 2.0 * (pk - f64::from(u8::from(k == y))) / c)
                    .collect();
                let loss = p
                    .iter()
                    .enumerate()
                    .map(|(k, &pk)| (pk - f64::from(u8::from(k == y))).powi(2))
                    .sum::<f64>()
                    / c;
                let inner: f64 = p.iter().zip(&dp).map(|(pk, gk)| pk * gk).sum();
                (loss, p.iter().zip(&dp).map(|(pk, gk)| pk * (gk - inner)).collect())
            }
        }
    }

    pub fn loss(&self, params: &[f64], data: &Dataset, rows: &[usize]) -> f64 {
        rows.iter()
            .map(|&i| {
                let p = self.forward(params, data.feature(i)).1;
                self.output_delta(&p, data.label(i)).0
            })
            .sum::<f64>()
            / rows.len() as f64
    }

    /// (accuracy, mean loss) over the whole dataset.
    pub fn evaluate(&self, data: &Dataset) -> (f64, f64) {
        if data.is_empty() {
            return (0.0, 0.0);
        }
        let mut correct = 0usize;
        let mut loss = 0.0;
        for (x, &y) in data.features().iter().zip(data.labels()) {
            let p = self.probabilities(x);
            correct += usize::from(argmax(&p) == y);
            loss += self.output_delta(&p, y).0;
        }
        let n = data.len() as f64;
        (correct as f64 / n, loss / n)
    }
}

impl Predictor for Model {
    fn input_dim(&self) -> usize {
        self.input_dim
    }

    fn output_dim(&self) -> usize {
        self.n_classes
    }

    fn predict(&self, features: &[f64]) -> Vec<f64> {
        self.probabilities(features)
    }
}

fn affine(w: &[f64], b: &[f64], x: &[f64], rows: usize, cols: usize) -> Vec<f64> {
    (0..rows)
        .map(|r| {
            b[r] + w[r * cols..(r + 1) * cols]
                .iter()
                .zip(x)
                .map(|(a, b)| a * b)
                .sum::<f64>()
        })
        .collect()
}

fn softmax(z: &[f64]) -> Vec<f64> {
    let max = z.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let e: Vec<f64> = z.iter().map(|v| (v - max).exp()).collect();
    let s: f64 = e.iter().sum();
    e.into_iter().map(|v| v / s).collect()
}

/// First index of the largest value.
fn argmax(v: &[f64]) -> usize {
    let mut best = 0;
    for (i, x) in v.iter().enumerate() {
        if *x > v[best] {
            best = i;
        }
    }
    best
}

fn accumulate_outer(out: &mut [f64], u: &[f64], v: &[f64], scale: f64) {
    let cols = v.len();
    for (r, &ur) in u.iter().enumerate() {
        let s = ur * scale;
        for (o, &vc) in out[r * cols..(r + 1) * cols].iter_mut().zip(v) {
            *o += s * vc;
        }
    }
}

fn axpy(out: &mut [f64], x: &[f64], scale: f64) {
    for (o, v) in out.iter_mut().zip(x) {
        *o += scale * v;
    }
}
