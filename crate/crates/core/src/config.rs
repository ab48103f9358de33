//! Experiment configuration loaded from TOML.

use std::collections::BTreeSet;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::fedavg::TrainingConfig;
use crate::protocol::ClientId;
use crate::sim::WorldConfig;
use crate::vrf::{SecurityParams, SelectionFraction, VrfMode};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Protocol {
    Secure,
    Baseline,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AttackKind {
    Colluding,
    Noncolluding,
    GrindBaseline,
    GrindSecure,
    Omission,
}

/// Attack parameters; which fields matter depends on the kind.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AttackSpec {
    pub kind: AttackKind,
    #[serde(default = "default_trials")]
    pub trials: u64,
    #[serde(default)]
    pub victim: u32,
    /// Honest bystander population for isolation trials.
    #[serde(default = "default_bystanders")]
    pub honest_bystanders: u32,
    /// Candidate keys per colluder for baseline grinding.
    #[serde(default = "default_budget")]
    pub budget: u32,
    /// Rounds the grinding objective looks ahead.
    #[serde(default = "default_horizon")]
    pub horizon: u64,
}

fn default_trials() -> u64 {
    10
}
fn default_bystanders() -> u32 {
    1000
}
fn default_budget() -> u32 {
    256
}
fn default_horizon() -> u64 {
    500
}

/// Synthetic learning-task shape.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TaskSpec {
    #[serde(default = "default_dim")]
    pub dim: usize,
    #[serde(default = "default_samples")]
    pub samples_per_client: usize,
    #[serde(default = "default_noise")]
    pub noise: f64,
    #[serde(default = "default_epochs")]
    pub epochs: u32,
    #[serde(default = "default_lr")]
    pub learning_rate: f64,
}

fn default_dim() -> usize {
    20
}
fn default_samples() -> usize {
    40
}
fn default_noise() -> f64 {
    0.1
}
fn default_epochs() -> u32 {
    5
}
fn default_lr() -> f64 {
    0.05
}

impl Default for TaskSpec {
    fn default() -> Self {
        TaskSpec {
            dim: default_dim(),
            samples_per_client: default_samples(),
            noise: default_noise(),
            epochs: default_epochs(),
            learning_rate: default_lr(),
        }
    }
}

impl TaskSpec {
    pub fn training_config(&self) -> Result<TrainingConfig> {
        TrainingConfig { epochs: self.epochs, learning_rate: self.learning_rate }.validated()
    }
}

/// Cost-experiment shape.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CostSpec {
    #[serde(default = "default_sizes")]
    pub sizes: Vec<u32>,
    #[serde(default = "default_cost_rounds")]
    pub rounds: u64,
}

fn default_sizes() -> Vec<u32> {
    vec![100, 1000]
}
fn default_cost_rounds() -> u64 {
    20
}

impl Default for CostSpec {
    fn default() -> Self {
        CostSpec { sizes: default_sizes(), rounds: default_cost_rounds() }
    }
}

/// Declarative description of one experiment.
///
/// ```toml
/// label = "smoke"
/// protocol = "secure"
/// kappa = 64
/// mode = "simulation"
/// c = "1/20"
/// n_clients = 200
/// rounds = 50
/// seed = 42
/// beta = 0.1
/// grind = 16
///
/// [attack]
/// kind = "colluding"
/// trials = 10
/// ```
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub label: String,
    #[serde(default = "default_protocol")]
    pub protocol: Protocol,
    pub kappa: u16,
    pub mode: VrfMode,
    /// Selection fraction as an exact ratio, e.g. "1/20".
    pub c: String,
    pub n_clients: u32,
    pub rounds: u64,
    pub seed: u64,
    /// Blocks per protocol phase; defaults to kappa.
    #[serde(default)]
    pub tau: Option<u64>,
    /// Colluding-client fraction; colluders are the lowest ids.
    #[serde(default)]
    pub beta: f64,
    /// Explicit colluder ids; overrides `beta` when nonempty.
    #[serde(default)]
    pub colluders: Vec<u32>,
    /// Randomness-grinding budget per round; 0 means an honest chain.
    #[serde(default)]
    pub grind: u32,
    #[serde(default)]
    pub attack: Option<AttackSpec>,
    #[serde(default)]
    pub task: Option<TaskSpec>,
    #[serde(default)]
    pub costs: Option<CostSpec>,
    #[serde(default)]
    pub out_dir: Option<String>,
}

fn default_protocol() -> Protocol {
    Protocol::Secure
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: ExperimentConfig =
            toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_path(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    pub fn validate(&self) -> Result<()> {
        if self.label.is_empty() {
            return Err(Error::Config("label must not be empty".into()));
        }
        if self.rounds == 0 {
            return Err(Error::Config("rounds must be positive".into()));
        }
        if self.n_clients == 0 {
            return Err(Error::Config("n_clients must be positive".into()));
        }
        self.security_params()?;
        self.selection_fraction()?;
        if !(0.0..1.0).contains(&self.beta) {
            return Err(Error::Config(format!("beta must lie in [0, 1), got {}", self.beta)));
        }
        if self.grind as u32 > self.kappa as u32 {
            return Err(Error::Config(format!(
                "grind budget {} exceeds kappa {}",
                self.grind, self.kappa
            )));
        }
        for &id in &self.colluders {
            if id >= self.n_clients {
                return Err(Error::Config(format!(
                    "colluder {id} out of range for {} clients",
                    self.n_clients
                )));
            }
        }
        if let Some(tau) = self.tau {
            if tau == 0 {
                return Err(Error::Config("tau must be at least 1".into()));
            }
        }
        if self.grind > 0 && self.colluder_ids().is_empty() {
            return Err(Error::Config(
                "grinding needs colluders: set beta or a colluder list".into(),
            ));
        }
        if let Some(task) = &self.task {
            task.training_config()?;
        }
        if let Some(costs) = &self.costs {
            if costs.sizes.is_empty() || costs.rounds == 0 {
                return Err(Error::Config("cost experiment needs sizes and rounds".into()));
            }
        }
        Ok(())
    }

    pub fn security_params(&self) -> Result<SecurityParams> {
        SecurityParams::for_mode(self.mode, self.kappa)
    }

    pub fn selection_fraction(&self) -> Result<SelectionFraction> {
        self.c.parse()
    }

    /// Colluder ids: the explicit list if given, else the lowest ⌊beta·n⌋ ids.
    pub fn colluder_ids(&self) -> BTreeSet<ClientId> {
        if !self.colluders.is_empty() {
            return self.colluders.iter().map(|&id| ClientId(id)).collect();
        }
        let count = (self.beta * self.n_clients as f64).floor() as u32;
        (0..count.min(self.n_clients)).map(ClientId).collect()
    }

    pub fn world_config(&self) -> Result<WorldConfig> {
        Ok(WorldConfig {
            params: self.security_params()?,
            c: self.selection_fraction()?,
            n_clients: self.n_clients,
            colluders: self.colluder_ids(),
            tau: self.tau,
            master_seed: self.seed,
            label: self.label.clone(),
        })
    }
}
