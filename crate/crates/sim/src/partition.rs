//! Splitting a training set across clients.

use rand::seq::SliceRandom;
use rand_distr::{Distribution, Gamma};
use serde::{Deserialize, Serialize};

use crate::dataset::Dataset;
use crate::error::{Result, SimError};
use crate::rng::{stream, Stream};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(try_from = "RawPartition", into = "RawPartition")]
pub enum PartitionSpec {
    #[default]
    Iid,
    LabelShard {
        shards_per_client: usize,
    },
    Dirichlet {
        alpha: f64,
    },
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawPartition {
    kind: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    shards_per_client: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    alpha: Option<f64>,
}

impl TryFrom<RawPartition> for PartitionSpec {
    type Error = String;

    fn try_from(raw: RawPartition) -> std::result::Result<Self, String> {
        match (raw.kind.as_str(), raw.shards_per_client, raw.alpha) {
            ("iid", None, None) => Ok(Self::Iid),
            ("label_shard", Some(shards_per_client), None) => Ok(Self::LabelShard { shards_per_client }),
            ("dirichlet", None, Some(alpha)) => Ok(Self::Dirichlet { alpha }),
            ("iid" | "label_shard" | "dirichlet", _, _) => {
                Err(format!("partition `{}` needs exactly its own parameter", raw.kind))
            }
            (other, _, _) => Err(format!("unknown partition kind `{other}`")),
        }
    }
}

impl From<PartitionSpec> for RawPartition {
    fn from(spec: PartitionSpec) -> Self {
        let (kind, shards_per_client, alpha) = match spec {
            PartitionSpec::Iid => ("iid", None, None),
            PartitionSpec::LabelShard { shards_per_client } => ("label_shard", Some(shards_per_client), None),
            PartitionSpec::Dirichlet { alpha } => ("dirichlet", None, Some(alpha)),
        };
        Self {
            kind: kind.into(),
            shards_per_client,
            alpha,
        }
    }
}

impl PartitionSpec {
    pub fn validate(&self) -> Result<()> {
        match *self {
            Self::Iid => Ok(()),
            Self::LabelShard { shards_per_client: 0 } => {
                Err(SimError::Config("shards_per_client must be at least 1".into()))
            }
            Self::Dirichlet { alpha } if !(alpha.is_finite() && alpha > 0.0) => {
                Err(SimError::Config(format!("dirichlet alpha {alpha} must be positive")))
            }
            _ => Ok(()),
        }
    }
}

/// Row indices into `data` for each client. Every client gets at least one.
pub fn partition_indices(data: &Dataset, spec: PartitionSpec, n_clients: usize, seed: u64) -> Result<Vec<Vec<usize>>> {
    spec.validate()?;
    if n_clients == 0 {
        return Err(SimError::Config("n_clients must be at least 1".into()));
    }
    if data.len() < n_clients {
        return Err(SimError::TooFewSamples {
            samples: data.len(),
            clients: n_clients,
        });
    }
    let mut rng = stream(seed, Stream::Partition, 0, 0);
    let mut parts = match spec {
        PartitionSpec::Iid => {
            let mut order: Vec<usize> = (0..data.len()).collect();
            order.shuffle(&mut rng);
            split_even(&order, n_clients)
        }
        PartitionSpec::LabelShard { shards_per_client } => {
            let mut order: Vec<usize> = (0..data.len()).collect();
            order.sort_by_key(|&i| data.label(i));
            let n_shards = (n_clients * shards_per_client).min(data.len());
            let mut shards = split_even(&order, n_shards);
            shards.shuffle(&mut rng);
            let mut parts = vec![Vec::new(); n_clients];
            for (s, shard) in shards.into_iter().enumerate() {
                parts[s % n_clients].extend(shard);
            }
            parts
        }
        PartitionSpec::Dirichlet { alpha } => {
            let gamma = Gamma::new(alpha, 1.0).map_err(|e| SimError::Config(e.to_string()))?;
            let mut parts = vec![Vec::new(); n_clients];
            for class in 0..data.n_classes() {
                let mut members: Vec<usize> = (0..data.len()).filter(|&i| data.label(i) == class).collect();
                if members.is_empty() {
                    continue;
                }
                members.shuffle(&mut rng);
                let draws: Vec<f64> = (0..n_clients).map(|_| gamma.sample(&mut rng)).collect();
                let total: f64 = draws.iter().sum();
                let mut cumulative = 0.0;
                let mut start = 0;
                for (client, draw) in draws.iter().enumerate() {
                    cumulative += draw;
                    let end = if client + 1 == n_clients || total <= 0.0 {
                        members.len()
                    } else {
                        ((cumulative / total * members.len() as f64).round() as usize).clamp(start, members.len())
                    };
                    parts[client].extend_from_slice(&members[start..end]);
                    start = end;
                }
            }
            parts
        }
    };
    fill_empty_clients(&mut parts);
    Ok(parts)
}

pub fn partition_data(data: &Dataset, spec: PartitionSpec, n_clients: usize, seed: u64) -> Result<Vec<Dataset>> {
    Ok(partition_indices(data, spec, n_clients, seed)?
        .iter()
        .map(|idx| data.subset(idx))
        .collect())
}

/// Contiguous chunks whose sizes differ by at most one, larger chunks first.
fn split_even(order: &[usize], parts: usize) -> Vec<Vec<usize>> {
    let base = order.len() / parts;
    let extra = order.len() % parts;
    let mut out = Vec::with_capacity(parts);
    let mut start = 0;
    for p in 0..parts {
        let len = base + usize::from(p < extra);
        out.push(order[start..start + len].to_vec());
        start += len;
    }
    out
}

/// Moves one sample at a time from the largest client (lowest id on ties)
/// into each empty client.
fn fill_empty_clients(parts: &mut [Vec<usize>]) {
    while let Some(empty) = parts.iter().position(Vec::is_empty) {
        let donor = (0..parts.len())
            .max_by_key(|&i| (parts[i].len(), std::cmp::Reverse(i)))
            .unwrap();
        let moved = parts[donor].pop().expect("total samples >= clients");
        parts[empty].push(moved);
    }
}
