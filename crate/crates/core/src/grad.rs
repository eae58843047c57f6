//! Gradient data model and the client-major to coordinate-major re-layout.
//!
//! Clients submit one flat [`GradientVector`] per round. Every scalar
//! aggregation rule works on a [`CoordinateSample`]: the `n` values that the
//! clients reported for a single parameter, ordered by ascending client id.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Flat gradient with shape metadata. Values are always finite.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GradientVector {
    values: Vec<f64>,
    shape: Vec<usize>,
}

impl GradientVector {
    pub fn new(values: Vec<f64>, shape: Vec<usize>) -> Result<Self> {
        if shape.contains(&0) || shape.iter().product::<usize>() != values.len() {
            return Err(Error::ShapeMismatch {
                shape,
                len: values.len(),
            });
        }
        if let Some(pos) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite(pos));
        }
        Ok(Self { values, shape })
    }

    /// One-dimensional gradient of shape `[len]`.
    pub fn from_flat(values: Vec<f64>) -> Result<Self> {
        let len = values.len();
        Self::new(values, vec![len])
    }

    pub fn zeros(dim: usize) -> Self {
        Self {
            values: vec![0.0; dim],
            shape: vec![dim],
        }
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn dim(&self) -> usize {
        self.values.len()
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn norm_squared(&self) -> f64 {
        self.values.iter().map(|v| v * v).sum()
    }

    /// Applies `f` to every value, rejecting the result if it produces a
    /// non-finite number.
    pub fn map(&self, mut f: impl FnMut(f64) -> f64) -> Result<Self> {
        Self::new(self.values.iter().map(|&v| f(v)).collect(), self.shape.clone())
    }
}

/// A single client's contribution for one round.
#[derive(Debug, Clone, PartialEq)]
pub struct ClientUpdate {
    pub client_id: u32,
    pub round: u64,
    pub gradient: GradientVector,
    pub auth_token: Vec<u8>,
}

impl ClientUpdate {
    pub fn new(client_id: u32, round: u64, gradient: GradientVector, auth_token: impl Into<Vec<u8>>) -> Self {
        Self {
            client_id,
            round,
            gradient,
            auth_token: auth_token.into(),
        }
    }
}

/// Cross-client values for one model coordinate.
#[derive(Debug, Clone, PartialEq)]
pub struct CoordinateSample {
    pub coordinate_index: usize,
    pub values: Vec<f64>,
}

impl CoordinateSample {
    pub fn new(coordinate_index: usize, values: Vec<f64>) -> Result<Self> {
        if let Some(pos) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite(pos));
        }
        Ok(Self {
            coordinate_index,
            values,
        })
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum RejectReason {
    BadToken,
    Dimension { expected: usize, actual: usize },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Rejection {
    pub client_id: u32,
    pub reason: RejectReason,
}

impl Rejection {
    /// The rejection as an [`Error`], for callers that want to log it.
    pub fn to_error(&self) -> Option<Error> {
        match self.reason {
            RejectReason::BadToken => None,
            RejectReason::Dimension { expected, actual } => Some(Error::DimensionMismatch {
                client_id: self.client_id,
                expected,
                actual,
            }),
        }
    }
}

/// Updates accepted for aggregation, sorted by client id, plus a record of
/// everything that was turned away.
#[derive(Debug, Clone, PartialEq)]
pub struct ValidatedRound {
    pub updates: Vec<ClientUpdate>,
    pub rejected: Vec<Rejection>,
}

fn tokens_match(given: &[u8], expected: &[u8]) -> bool {
    if given.len() != expected.len() {
        return false;
    }
    given.iter().zip(expected).fold(0u8, |acc, (a, b)| acc | (a ^ b)) == 0
}

/// Server-side admission check for a synchronous round.
///
/// Drops updates with a wrong token or a wrong dimension (each recorded in
/// [`ValidatedRound::rejected`]) and fails outright when two updates claim
/// the same client id.
pub fn validate_round(updates: &[ClientUpdate], expected_token: &[u8], expected_dim: usize) -> Result<ValidatedRound> {
    let mut seen = BTreeSet::new();
    for update in updates {
        if !seen.insert(update.client_id) {
            return Err(Error::DuplicateClient(update.client_id));
        }
    }

    let mut accepted = Vec::with_capacity(updates.len());
    let mut rejected = Vec::new();
    for update in updates {
        if !tokens_match(&update.auth_token, expected_token) {
            rejected.push(Rejection {
                client_id: update.client_id,
                reason: RejectReason::BadToken,
            });
        } else if update.gradient.dim() != expected_dim {
            rejected.push(Rejection {
                client_id: update.client_id,
                reason: RejectReason::Dimension {
                    expected: expected_dim,
                    actual: update.gradient.dim(),
                },
            });
        } else {
            accepted.push(update.clone());
        }
    }
    if accepted.is_empty() {
        return Err(Error::EmptyRound);
    }
    accepted.sort_by_key(|u| u.client_id);
    Ok(ValidatedRound {
        updates: accepted,
        rejected,
    })
}

/// Re-lays `n` client gradients of dimension `D` as `D` coordinate samples.
///
/// `sample[j].values[i]` is the `j`-th value of the `i`-th update in client-id
/// order, regardless of the order the slice arrives in.
pub fn transpose_to_coordinates(updates: &[ClientUpdate]) -> Result<Vec<CoordinateSample>> {
    let first = updates.first().ok_or(Error::EmptyRound)?;
    let dim = first.gradient.dim();
    let mut ordered: Vec<&ClientUpdate> = updates.iter().collect();
    ordered.sort_by_key(|u| u.client_id);
    for update in &ordered {
        if update.gradient.dim() != dim {
            return Err(Error::DimensionMismatch {
                client_id: update.client_id,
                expected: dim,
                actual: update.gradient.dim(),
            });
        }
    }
    let rows: Vec<&[f64]> = ordered.iter().map(|u| u.gradient.values()).collect();
    Ok(transpose_rows(&rows))
}

/// Coordinate samples from a plain row-major matrix (one row per client).
pub fn transpose_rows<R: AsRef<[f64]>>(rows: &[R]) -> Vec<CoordinateSample> {
    let dim = rows.first().map_or(0, |r| r.as_ref().len());
    (0..dim)
        .map(|j| CoordinateSample {
            coordinate_index: j,
            values: rows.iter().map(|r| r.as_ref()[j]).collect(),
        })
        .collect()
}

/// Inverse of [`transpose_to_coordinates`]: rebuilds the client-major matrix.
pub fn reconstruct_rows(samples: &[CoordinateSample]) -> Vec<Vec<f64>> {
    let n = samples.first().map_or(0, |s| s.values.len());
    (0..n).map(|i| samples.iter().map(|s| s.values[i]).collect()).collect()
}
