//! Synchronous FedSGD rounds: broadcast, one seeded batch per client,
//! attacks, admission, aggregation, one global step, evaluation.

use std::fmt::Write as _;
use std::time::{Duration, Instant};

use ema_core::heterogeneity::one_hot;
use ema_core::{
    aggregate, evaluate_model_on_client, validate_round, AggregationDiagnostics, AggregationRuleConfig,
    ClientLossRecord, ClientUpdate, GradientVector, ValidationOracle, ZenoContext,
};
use rand::seq::index;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::attack::{apply_attack, AttackSpec};
use crate::dataset::{Dataset, DatasetSpec};
use crate::error::{Result, SimError};
use crate::model::{Model, ModelSpec};
use crate::partition::{partition_data, PartitionSpec};
use crate::rng::{stream, Stream};

pub const METRICS_HEADER: &str =
    "round,rule,attack_kind,attack_fraction,seed,test_accuracy,test_loss,ema_fallback_count,retained_mean";

/// Test-set rows the server holds back as Zeno's validation batch.
pub const ZENO_VALIDATION_SIZE: usize = 64;

const AUTH_TOKEN: &[u8] = b"ema-sim";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimConfig {
    pub n_clients: usize,
    pub rounds: usize,
    pub learning_rate: f64,
    pub batch_size: usize,
    pub seed: u64,
    pub partition: PartitionSpec,
    pub attack: AttackSpec,
    pub rule: AggregationRuleConfig,
    pub model: ModelSpec,
    pub dataset: DatasetSpec,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            n_clients: 50,
            rounds: 100,
            learning_rate: 0.01,
            batch_size: 128,
            seed: 0,
            partition: PartitionSpec::default(),
            attack: AttackSpec::default(),
            rule: AggregationRuleConfig::default(),
            model: ModelSpec::default(),
            dataset: DatasetSpec::default(),
        }
    }
}

impl SimConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_clients == 0 {
            return Err(SimError::Config("n_clients must be at least 1".into()));
        }
        if self.n_clients > u32::MAX as usize {
            return Err(SimError::Config("n_clients does not fit a client id".into()));
        }
        if !(self.learning_rate.is_finite() && self.learning_rate > 0.0) {
            return Err(SimError::Config(format!(
                "learning_rate {} must be positive",
                self.learning_rate
            )));
        }
        if self.batch_size == 0 {
            return Err(SimError::Config("batch_size must be at least 1".into()));
        }
        self.partition.validate()?;
        self.attack.validate()?;
        self.dataset.validate()?;
        self.rule
            .validate(self.n_clients)
            .map_err(|e| SimError::Config(e.to_string()))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RoundMetrics {
    /// 1-based index of the round just completed.
    pub round: u64,
    pub test_accuracy: f64,
    pub test_loss: f64,
    pub diagnostics: AggregationDiagnostics,
    /// Updates refused by the admission check.
    pub rejected: usize,
    pub wall_time: Duration,
}

impl RoundMetrics {
    pub fn csv_row(&self, config: &SimConfig) -> String {
        format!(
            "{},{},{},{},{},{},{},{},{}",
            self.round,
            config.rule.rule.name(),
            config.attack.kind.name(),
            config.attack.fraction,
            config.seed,
            self.test_accuracy,
            self.test_loss,
            self.diagnostics.median_fallbacks,
            self.diagnostics.retained_mean(),
        )
    }
}

pub fn metrics_csv(config: &SimConfig, metrics: &[RoundMetrics], header: bool) -> String {
    let mut out = String::new();
    if header {
        out.push_str(METRICS_HEADER);
        out.push('\n');
    }
    for m in metrics {
        let _ = writeln!(out, "{}", m.csv_row(config));
    }
    out
}

struct ValidationBatch<'a> {
    model: &'a Model,
    data: &'a Dataset,
    rows: &'a [usize],
}

impl ValidationOracle for ValidationBatch<'_> {
    fn loss(&self, params: &[f64]) -> f64 {
        self.model.loss(params, self.data, self.rows)
    }
}

pub struct Simulation {
    config: SimConfig,
    model: Model,
    clients: Vec<Dataset>,
    test: Dataset,
    validation_rows: Vec<usize>,
    round: u64,
}

impl Simulation {
    pub fn new(config: SimConfig) -> Result<Self> {
        config.validate()?;
        let (train, test) = config.dataset.load(config.seed)?;
        let clients = partition_data(&train, config.partition, config.n_clients, config.seed)?;
        let model = config.model.build(&train, config.seed)?;
        let mut rng = stream(config.seed, Stream::Validation, 0, 0);
        let mut validation_rows = index::sample(&mut rng, test.len(), ZENO_VALIDATION_SIZE.min(test.len())).into_vec();
        validation_rows.sort_unstable();
        Ok(Self {
            config,
            model,
            clients,
            test,
            validation_rows,
            round: 0,
        })
    }

    pub fn config(&self) -> &SimConfig {
        &self.config
    }

    pub fn model(&self) -> &Model {
        &self.model
    }

    pub fn clients(&self) -> &[Dataset] {
        &self.clients
    }

    pub fn test_set(&self) -> &Dataset {
        &self.test
    }

    pub fn rounds_completed(&self) -> u64 {
        self.round
    }

    /// Honest gradient of client `id` on its batch for round `round`.
    pub fn local_gradient(&self, id: usize, round: u64) -> Vec<f64> {
        let data = &self.clients[id];
        let batch: Vec<usize> = if data.len() <= self.config.batch_size {
            (0..data.len()).collect()
        } else {
            let mut rng = stream(self.config.seed, Stream::Batch, id as u64, round);
            let mut rows = index::sample(&mut rng, data.len(), self.config.batch_size).into_vec();
            rows.sort_unstable();
            rows
        };
        self.model.loss_and_gradient(self.model.params(), data, &batch).1
    }

    fn client_updates(&self, round: u64) -> Result<Vec<ClientUpdate>> {
        let n = self.config.n_clients;
        (0..n)
            .into_par_iter()
            .map(|id| {
                let honest = GradientVector::from_flat(self.local_gradient(id, round))?;
                let sent = apply_attack(&honest, &self.config.attack, id as u32, n, round, self.config.seed)?;
                Ok(ClientUpdate::new(id as u32, round, sent, AUTH_TOKEN))
            })
            .collect()
    }

    /// What every client sends in the upcoming round, attacks included.
    pub fn next_round_updates(&self) -> Result<Vec<ClientUpdate>> {
        self.client_updates(self.round)
    }

    pub fn run_round(&mut self) -> Result<RoundMetrics> {
        let start = Instant::now();
        let round = self.round;
        let updates = self.client_updates(round)?;
        let admitted = validate_round(&updates, AUTH_TOKEN, self.model.param_count())?;
        let oracle = ValidationBatch {
            model: &self.model,
            data: &self.test,
            rows: &self.validation_rows,
        };
        let zeno = ZenoContext {
            params: self.model.params(),
            oracle: &oracle,
            learning_rate: self.config.learning_rate,
        };
        let outcome = aggregate(&self.config.rule, &admitted.updates, Some(zeno))?;
        self.model
            .step(outcome.global_update.values(), self.config.learning_rate);
        if self.model.params().iter().any(|p| !p.is_finite()) {
            return Err(SimError::Core(ema_core::Error::NonFinite(0)));
        }
        self.round += 1;
        let (test_accuracy, test_loss) = self.model.evaluate(&self.test);
        Ok(RoundMetrics {
            round: self.round,
            test_accuracy,
            test_loss,
            diagnostics: outcome.diagnostics,
            rejected: admitted.rejected.len(),
            wall_time: start.elapsed(),
        })
    }

    pub fn run(&mut self, rounds: usize) -> Result<Vec<RoundMetrics>> {
        (0..rounds).map(|_| self.run_round()).collect()
    }

    /// Per-client MSE of the current model against one-hot labels, over each
    /// client's whole local set.
    pub fn client_losses(&self) -> Result<Vec<ClientLossRecord>> {
        self.clients
            .iter()
            .enumerate()
            .map(|(id, data)| {
                let targets = one_hot(data.labels(), data.n_classes())?;
                let loss = evaluate_model_on_client(&self.model, data.features(), &targets)?;
                Ok(ClientLossRecord::new(id as u32, loss)?)
            })
            .collect()
    }
}

pub fn run_simulation(config: &SimConfig) -> Result<Vec<RoundMetrics>> {
    let mut sim = Simulation::new(config.clone())?;
    sim.run(config.rounds)
}
