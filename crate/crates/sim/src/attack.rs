//! Byzantine behaviour injected into client updates.

use ema_core::GradientVector;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Result, SimError};
use crate::rng::{stream, Stream};

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub enum AttackKind {
    None,
    #[default]
    SignFlip,
    GaussianNoise {
        sigma: f64,
    },
    ScaleUp {
        factor: f64,
    },
    Zero,
}

impl AttackKind {
    pub fn name(self) -> &'static str {
        match self {
            Self::None => "none",
            Self::SignFlip => "sign_flip",
            Self::GaussianNoise { .. } => "gaussian_noise",
            Self::ScaleUp { .. } => "scale_up",
            Self::Zero => "zero",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawAttack", into = "RawAttack")]
pub struct AttackSpec {
    pub fraction: f64,
    pub kind: AttackKind,
}

/// Flat on-disk form: `fraction`, `kind`, and the kind's parameter.
#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawAttack {
    #[serde(default)]
    fraction: f64,
    #[serde(default = "none_name")]
    kind: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    sigma: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    factor: Option<f64>,
}

fn none_name() -> String {
    "none".into()
}

impl TryFrom<RawAttack> for AttackSpec {
    type Error = String;

    fn try_from(raw: RawAttack) -> std::result::Result<Self, String> {
        let kind = match (raw.kind.as_str(), raw.sigma, raw.factor) {
            ("none", None, None) => AttackKind::None,
            ("sign_flip", None, None) => AttackKind::SignFlip,
            ("zero", None, None) => AttackKind::Zero,
            ("gaussian_noise", Some(sigma), None) => AttackKind::GaussianNoise { sigma },
            ("scale_up", None, Some(factor)) => AttackKind::ScaleUp { factor },
            ("gaussian_noise", None, _) => return Err("gaussian_noise needs `sigma`".into()),
            ("scale_up", _, None) => return Err("scale_up needs `factor`".into()),
            ("none" | "sign_flip" | "zero" | "gaussian_noise" | "scale_up", _, _) => {
                return Err(format!("attack `{}` got a parameter it does not take", raw.kind))
            }
            (other, _, _) => return Err(format!("unknown attack kind `{other}`")),
        };
        Ok(Self {
            fraction: raw.fraction,
            kind,
        })
    }
}

impl From<AttackSpec> for RawAttack {
    fn from(spec: AttackSpec) -> Self {
        let (sigma, factor) = match spec.kind {
            AttackKind::GaussianNoise { sigma } => (Some(sigma), None),
            AttackKind::ScaleUp { factor } => (None, Some(factor)),
            _ => (None, None),
        };
        Self {
            fraction: spec.fraction,
            kind: spec.kind.name().into(),
            sigma,
            factor,
        }
    }
}

impl Default for AttackSpec {
    fn default() -> Self {
        Self {
            fraction: 0.0,
            kind: AttackKind::None,
        }
    }
}

impl AttackSpec {
    pub fn new(fraction: f64, kind: AttackKind) -> Self {
        Self { fraction, kind }
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..1.0).contains(&self.fraction) {
            return Err(SimError::Config(format!(
                "attack fraction {} must lie in [0, 1)",
                self.fraction
            )));
        }
        match self.kind {
            AttackKind::GaussianNoise { sigma } if !(sigma.is_finite() && sigma >= 0.0) => Err(SimError::Config(
                format!("noise sigma {sigma} must be finite and non-negative"),
            )),
            AttackKind::ScaleUp { factor } if !factor.is_finite() => {
                Err(SimError::Config(format!("scale factor {factor} must be finite")))
            }
            _ => Ok(()),
        }
    }

    /// `floor(fraction·n)`, with a little slack so 0.3·50 counts as 15.
    pub fn malicious_count(&self, n_clients: usize) -> usize {
        let raw = self.fraction * n_clients as f64;
        ((raw + 1e-9 * raw.max(1.0)).floor() as usize).min(n_clients)
    }

    /// The lowest client ids are the malicious ones.
    pub fn is_malicious(&self, client_id: u32, n_clients: usize) -> bool {
        self.kind != AttackKind::None && (client_id as usize) < self.malicious_count(n_clients)
    }
}

/// Replaces a malicious client's honest update; honest clients pass through.
pub fn apply_attack(
    update: &GradientVector,
    spec: &AttackSpec,
    client_id: u32,
    n_clients: usize,
    round: u64,
    seed: u64,
) -> Result<GradientVector> {
    if !spec.is_malicious(client_id, n_clients) {
        return Ok(update.clone());
    }
    let out = match spec.kind {
        AttackKind::None => update.clone(),
        AttackKind::SignFlip => update.map(|g| -g)?,
        AttackKind::Zero => update.map(|_| 0.0)?,
        AttackKind::ScaleUp { factor } => update.map(|g| factor * g)?,
        AttackKind::GaussianNoise { sigma } => {
            let mut rng = stream(seed, Stream::Attack, u64::from(client_id), round);
            update.map(|g| g + sigma * rng.sample::<f64, _>(StandardNormal))?
        }
    };
    Ok(out)
}
