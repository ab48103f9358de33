//! Minimal federated averaging over synthetic linear-regression tasks.
//!
//! The learning task is deliberately small and deterministic: each client
//! holds a private sample of a shared linear model plus client-specific
//! noise, local training is full-batch gradient descent, and one round
//! averages the participants' updated models. What matters here is not the
//! model quality but the information flow: the aggregation step exposes the
//! participants' *sum* only, never an individual update, so recovery attacks
//! against that interface can be reproduced faithfully.

use std::collections::BTreeSet;

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::protocol::ClientId;
use crate::sim::derive_rng;
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelParams(pub Vec<f64>);

impl ModelParams {
    pub fn zeros(dim: usize) -> Self {
        Self(vec![0.0; dim])
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|x| x.is_finite())
    }
}

pub fn l2_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt()
}

pub fn linf_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

pub fn cosine_similarity(a: &[f64], b: &[f64]) -> f64 {
    let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    let na: f64 = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nb: f64 = b.iter().map(|x| x * x).sum::<f64>().sqrt();
    if na == 0.0 || nb == 0.0 {
        return 0.0;
    }
    dot / (na * nb)
}

/// Row-major design matrix plus targets for one client.
#[derive(Debug, Clone)]
pub struct ClientDataset {
    pub dim: usize,
    pub features: Vec<f64>,
    pub targets: Vec<f64>,
}

impl ClientDataset {
    pub fn samples(&self) -> usize {
        self.targets.len()
    }

    /// Synthetic task: features are standard normal, targets follow a shared
    /// ground-truth weight vector with additive noise. Fully determined by
    /// the seed inputs.
    pub fn synthetic(
        dim: usize,
        samples: usize,
        noise: f64,
        w_true: &[f64],
        master_seed: u64,
        client: ClientId,
    ) -> Self {
        let mut rng = derive_rng(master_seed, "dataset", client.0 as u64);
        let mut features = Vec::with_capacity(samples * dim);
        let mut targets = Vec::with_capacity(samples);
        for _ in 0..samples {
            let row: Vec<f64> = (0..dim).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
            let clean: f64 = row.iter().zip(w_true).map(|(x, w)| x * w).sum();
            targets.push(clean + noise * rng.sample::<f64, _>(StandardNormal));
            features.extend(row);
        }
        Self { dim, features, targets }
    }

    fn gradient(&self, w: &[f64]) -> Vec<f64> {
        let s = self.samples() as f64;
        let mut grad = vec![0.0; self.dim];
        for (row, &y) in self.features.chunks(self.dim).zip(&self.targets) {
            let pred: f64 = row.iter().zip(w).map(|(x, wi)| x * wi).sum();
            let err = pred - y;
            for (g, &x) in grad.iter_mut().zip(row) {
                *g += err * x;
            }
        }
        for g in &mut grad {
            *g /= s;
        }
        grad
    }

    /// Mean squared error of `w` on this dataset.
    pub fn mse(&self, w: &[f64]) -> f64 {
        let mut total = 0.0;
        for (row, &y) in self.features.chunks(self.dim).zip(&self.targets) {
            let pred: f64 = row.iter().zip(w).map(|(x, wi)| x * wi).sum();
            total += (pred - y).powi(2);
        }
        total / self.samples() as f64
    }
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct TrainingConfig {
    pub epochs: u32,
    pub learning_rate: f64,
}

impl TrainingConfig {
    pub fn validated(self) -> Result<Self> {
        if self.epochs == 0 {
            return Err(Error::Learning("epochs must be at least 1".into()));
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::Learning(format!(
                "learning rate must be positive and finite, got {}",
                self.learning_rate
            )));
        }
        Ok(self)
    }
}

/// Full-batch gradient descent from the current global model. Deterministic:
/// the same inputs always produce the same update.
pub fn local_train(
    global: &ModelParams,
    data: &ClientDataset,
    cfg: &TrainingConfig,
) -> Result<ModelParams> {
    let cfg = cfg.validated()?;
    if global.dim() != data.dim {
        return Err(Error::Learning(format!(
            "model dim {} does not match data dim {}",
            global.dim(),
            data.dim
        )));
    }
    let mut w = global.0.clone();
    for _ in 0..cfg.epochs {
        let grad = data.gradient(&w);
        for (wi, g) in w.iter_mut().zip(&grad) {
            *wi -= cfg.learning_rate * g;
        }
    }
    let out = ModelParams(w);
    if !out.is_finite() {
        return Err(Error::Learning("training diverged to non-finite values".into()));
    }
    Ok(out)
}

/// Element-wise sum of updates; the only quantity secure aggregation reveals.
pub fn secure_aggregate(updates: &[ModelParams]) -> Result<ModelParams> {
    let Some(first) = updates.first() else {
        return Err(Error::Learning("cannot aggregate an empty pool".into()));
    };
    let dim = first.dim();
    let mut sum = vec![0.0; dim];
    for u in updates {
        if u.dim() != dim {
            return Err(Error::Learning(format!(
                "update dim {} does not match {}",
                u.dim(),
                dim
            )));
        }
        for (s, x) in sum.iter_mut().zip(&u.0) {
            *s += x;
        }
    }
    Ok(ModelParams(sum))
}

/// What one training round exposes: the participant list, their summed
/// update, and the new global model. Individual updates stay inside.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AggregationOutcome {
    pub round: u64,
    pub pool: Vec<u32>,
    pub sum: ModelParams,
    pub new_global: ModelParams,
}

/// Orchestrates local training plus sum-only aggregation across rounds.
pub struct FlEngine {
    pub dim: usize,
    cfg: TrainingConfig,
    datasets: Vec<ClientDataset>,
    w_true: Vec<f64>,
    global: ModelParams,
    round: u64,
    colluders: BTreeSet<ClientId>,
    access_log: Vec<(u64, ClientId)>,
}

impl FlEngine {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        dim: usize,
        n_clients: u32,
        samples_per_client: usize,
        noise: f64,
        cfg: TrainingConfig,
        master_seed: u64,
        colluders: BTreeSet<ClientId>,
    ) -> Result<Self> {
        let cfg = cfg.validated()?;
        if dim == 0 || n_clients == 0 || samples_per_client == 0 {
            return Err(Error::Learning("degenerate task shape".into()));
        }
        let mut truth_rng = derive_rng(master_seed, "w-true", 0);
        let w_true: Vec<f64> =
            (0..dim).map(|_| truth_rng.sample::<f64, _>(StandardNormal)).collect();
        let datasets = (0..n_clients)
            .map(|i| {
                ClientDataset::synthetic(
                    dim,
                    samples_per_client,
                    noise,
                    &w_true,
                    master_seed,
                    ClientId(i),
                )
            })
            .collect();
        Ok(Self {
            dim,
            cfg,
            datasets,
            w_true,
            global: ModelParams::zeros(dim),
            round: 0,
            colluders,
            access_log: Vec::new(),
        })
    }

    pub fn global(&self) -> &ModelParams {
        &self.global
    }

    pub fn round(&self) -> u64 {
        self.round
    }

    pub fn training_config(&self) -> &TrainingConfig {
        &self.cfg
    }

    pub fn ground_truth(&self) -> &[f64] {
        &self.w_true
    }

    /// The dataset itself; client-side data the aggregation interface never
    /// transports. Evaluation harnesses use it to compute reference updates.
    pub fn dataset(&self, id: ClientId) -> &ClientDataset {
        &self.datasets[id.0 as usize]
    }

    /// Mean MSE of a model across all client datasets.
    pub fn population_mse(&self, w: &ModelParams) -> f64 {
        let total: f64 = self.datasets.iter().map(|d| d.mse(&w.0)).sum();
        total / self.datasets.len() as f64
    }

    /// One averaging round over `pool`. When `freeze_global` is set the
    /// global model is left unchanged, modeling a server that reuses the same
    /// starting point for consecutive rounds.
    pub fn run_round(&mut self, pool: &[ClientId], freeze_global: bool) -> Result<AggregationOutcome> {
        if pool.is_empty() {
            return Err(Error::Learning("cannot run a round with an empty pool".into()));
        }
        let mut ids: Vec<ClientId> = pool.to_vec();
        ids.sort_unstable();
        ids.dedup();
        let updates: Vec<ModelParams> = ids
            .iter()
            .map(|id| {
                self.datasets
                    .get(id.0 as usize)
                    .ok_or_else(|| Error::Learning(format!("unknown client {}", id.0)))
                    .and_then(|d| local_train(&self.global, d, &self.cfg))
            })
            .collect::<Result<_>>()?;
        let sum = secure_aggregate(&updates)?;
        let m = ids.len() as f64;
        let new_global = ModelParams(sum.0.iter().map(|s| s / m).collect());
        if !freeze_global {
            self.global = new_global.clone();
        }
        let round = self.round;
        self.round += 1;
        Ok(AggregationOutcome {
            round,
            pool: ids.iter().map(|i| i.0).collect(),
            sum,
            new_global,
        })
    }

    /// A colluding client's own update from a given starting model. Colluders
    /// hand these to whoever they collude with; every call is logged so tests
    /// can assert no other client's update ever leaves the engine this way.
    pub fn colluder_update(&mut self, from: &ModelParams, id: ClientId) -> Result<ModelParams> {
        if !self.colluders.contains(&id) {
            return Err(Error::Learning(format!(
                "client {} is not colluding; its update is unavailable",
                id.0
            )));
        }
        self.access_log.push((self.round, id));
        let data = self
            .datasets
            .get(id.0 as usize)
            .ok_or_else(|| Error::Learning(format!("unknown client {}", id.0)))?;
        local_train(from, data, &self.cfg)
    }

    pub fn access_log(&self) -> &[(u64, ClientId)] {
        &self.access_log
    }
}
