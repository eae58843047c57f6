//! Deterministic federated-learning simulator driving the aggregation rules
//! of `ema-core`: synthetic or IDX data, IID / label-shard / Dirichlet
//! partitions, desk-scale models with analytic gradients, and Byzantine
//! clients.

pub mod attack;
pub mod dataset;
pub mod error;
pub mod idx;
pub mod model;
pub mod partition;
pub mod rng;
pub mod sim;

pub use attack::{apply_attack, AttackKind, AttackSpec};
pub use dataset::{Dataset, DatasetKind, DatasetSpec};
pub use error::{Result, SimError};
pub use model::{LossKind, Model, ModelKind, ModelSpec};
pub use partition::{partition_data, partition_indices, PartitionSpec};
pub use sim::{metrics_csv, run_simulation, RoundMetrics, SimConfig, Simulation, METRICS_HEADER};
