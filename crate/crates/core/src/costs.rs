//! Cost accounting over recorded transactions and scaling experiments.
//!
//! Costs are charged from trace records, never from live objects, so a cost
//! claim is always reproducible from the trace file alone. The unit prices
//! are abstract weights; only ratios and growth rates carry meaning.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::chain::Payer;
use crate::sim::{BaselineWorld, RoundConfig, World, WorldConfig};
use crate::trace::{RoundTrace, TxRecord};
use crate::vrf::{SecurityParams, SelectionFraction};
use crate::{Error, Result};

/// Unit prices for the primitive on-chain operations.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CostTable {
    pub per_byte: f64,
    pub per_hash: f64,
    pub per_merkle_node: f64,
    pub per_vrf_verification: f64,
}

impl Default for CostTable {
    fn default() -> Self {
        // Byte storage dominates real deployments; verification is priced at
        // a few hundred hash-equivalents, in line with curve operations.
        CostTable {
            per_byte: 1.0,
            per_hash: 10.0,
            per_merkle_node: 10.0,
            per_vrf_verification: 2000.0,
        }
    }
}

impl CostTable {
    pub fn charge(&self, tx: &TxRecord) -> f64 {
        tx.bytes as f64 * self.per_byte
            + tx.hashes as f64 * self.per_hash
            + tx.merkle_nodes as f64 * self.per_merkle_node
            + tx.vrf_verifications as f64 * self.per_vrf_verification
    }
}

/// Aggregate cost of a run, split by payer.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct CostBreakdown {
    pub setup: f64,
    pub per_round_total: f64,
    pub rounds: u64,
    pub server_total: f64,
    pub client_total: f64,
    pub bytes: u64,
    pub hashes: u64,
    pub merkle_nodes: u64,
    pub vrf_verifications: u64,
    pub tx_count: u64,
}

impl CostBreakdown {
    pub fn total(&self) -> f64 {
        self.setup + self.per_round_total
    }

    pub fn mean_round_cost(&self) -> f64 {
        if self.rounds == 0 {
            0.0
        } else {
            self.per_round_total / self.rounds as f64
        }
    }
}

pub fn account(
    table: &CostTable,
    setup_txs: &[TxRecord],
    rounds: &[RoundTrace],
) -> CostBreakdown {
    let mut out = CostBreakdown { rounds: rounds.len() as u64, ..Default::default() };
    let mut tally = |tx: &TxRecord, setup: bool| {
        let cost = table.charge(tx);
        if setup {
            out.setup += cost;
        } else {
            out.per_round_total += cost;
        }
        match tx.payer {
            Payer::Server => out.server_total += cost,
            Payer::Client => out.client_total += cost,
        }
        out.bytes += tx.bytes;
        out.hashes += tx.hashes;
        out.merkle_nodes += tx.merkle_nodes;
        out.vrf_verifications += tx.vrf_verifications;
        out.tx_count += 1;
    };
    for tx in setup_txs {
        tally(tx, true);
    }
    for r in rounds {
        for tx in &r.txs {
            tally(tx, false);
        }
    }
    out
}

/// Least-squares line fit, with the coefficient of determination.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LinearFit {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
}

pub fn linear_fit(points: &[(f64, f64)]) -> Result<LinearFit> {
    if points.len() < 2 {
        return Err(Error::Stats("need at least two points to fit a line".into()));
    }
    let n = points.len() as f64;
    let sx: f64 = points.iter().map(|p| p.0).sum();
    let sy: f64 = points.iter().map(|p| p.1).sum();
    let sxx: f64 = points.iter().map(|p| p.0 * p.0).sum();
    let sxy: f64 = points.iter().map(|p| p.0 * p.1).sum();
    let denom = n * sxx - sx * sx;
    if denom.abs() < f64::EPSILON {
        return Err(Error::Stats("degenerate x values".into()));
    }
    let slope = (n * sxy - sx * sy) / denom;
    let intercept = (sy - slope * sx) / n;
    let mean_y = sy / n;
    let ss_tot: f64 = points.iter().map(|p| (p.1 - mean_y).powi(2)).sum();
    let ss_res: f64 =
        points.iter().map(|p| (p.1 - (slope * p.0 + intercept)).powi(2)).sum();
    let r_squared = if ss_tot.abs() < f64::EPSILON { 1.0 } else { 1.0 - ss_res / ss_tot };
    Ok(LinearFit { slope, intercept, r_squared })
}

pub fn coefficient_of_variation(values: &[f64]) -> Result<f64> {
    if values.len() < 2 {
        return Err(Error::Stats("need at least two values".into()));
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if mean.abs() < f64::EPSILON {
        return Err(Error::Stats("mean is zero".into()));
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    Ok(var.sqrt() / mean.abs())
}

/// Cost of one population size under both protocols.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ScalingPoint {
    pub n_clients: u32,
    pub rounds: u64,
    pub verifiable_round_cost: f64,
    pub verifiable_round_bytes: f64,
    pub recompute_round_cost: f64,
    pub recompute_round_bytes: f64,
    pub verifiable_setup: f64,
    pub recompute_setup: f64,
    /// Setup plus all rounds, in bytes.
    pub verifiable_total_bytes: u64,
    pub recompute_total_bytes: u64,
}

/// One transaction's cost, flattened for CSV export.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CostRow {
    pub protocol: String,
    pub n_clients: u32,
    /// Round index, or -1 for setup transactions.
    pub round: i64,
    pub tx_kind: String,
    pub bytes: u64,
    pub compute_units: f64,
    pub payer: Payer,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ScalingReport {
    pub points: Vec<ScalingPoint>,
    pub rows: Vec<CostRow>,
    pub table: CostTable,
}

impl ScalingReport {
    /// Mean per-round cost of the verifiable protocol at each size.
    pub fn verifiable_round_costs(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.verifiable_round_cost).collect()
    }

    pub fn recompute_fit(&self) -> Result<LinearFit> {
        let pts: Vec<(f64, f64)> = self
            .points
            .iter()
            .map(|p| (p.n_clients as f64, p.recompute_round_cost))
            .collect();
        linear_fit(&pts)
    }

    pub fn cost_ratio_at_largest(&self) -> Result<f64> {
        let p = self
            .points
            .iter()
            .max_by_key(|p| p.n_clients)
            .ok_or_else(|| Error::Stats("no scaling points".into()))?;
        if p.verifiable_round_cost.abs() < f64::EPSILON {
            return Err(Error::Stats("verifiable cost is zero".into()));
        }
        Ok(p.recompute_round_cost / p.verifiable_round_cost)
    }

    pub fn byte_ratio_at_largest(&self) -> Result<f64> {
        let p = self
            .points
            .iter()
            .max_by_key(|p| p.n_clients)
            .ok_or_else(|| Error::Stats("no scaling points".into()))?;
        if p.verifiable_total_bytes == 0 {
            return Err(Error::Stats("verifiable byte total is zero".into()));
        }
        Ok(p.recompute_total_bytes as f64 / p.verifiable_total_bytes as f64)
    }

    /// One row per transaction, for external plotting.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("protocol,n,round,tx_kind,bytes,compute_units,payer\n");
        for r in &self.rows {
            let payer = match r.payer {
                Payer::Server => "server",
                Payer::Client => "client",
            };
            out.push_str(&format!(
                "{},{},{},{},{},{},{}\n",
                r.protocol, r.n_clients, r.round, r.tx_kind, r.bytes, r.compute_units, payer,
            ));
        }
        out
    }
}

fn push_rows(
    rows: &mut Vec<CostRow>,
    table: &CostTable,
    protocol: &str,
    n: u32,
    setup_txs: &[TxRecord],
    rounds: &[RoundTrace],
) {
    let compute = |tx: &TxRecord| {
        tx.hashes as f64 * table.per_hash
            + tx.merkle_nodes as f64 * table.per_merkle_node
            + tx.vrf_verifications as f64 * table.per_vrf_verification
    };
    for tx in setup_txs {
        rows.push(CostRow {
            protocol: protocol.into(),
            n_clients: n,
            round: -1,
            tx_kind: tx.kind.clone(),
            bytes: tx.bytes,
            compute_units: compute(tx),
            payer: tx.payer,
        });
    }
    for r in rounds {
        for tx in &r.txs {
            rows.push(CostRow {
                protocol: protocol.into(),
                n_clients: n,
                round: r.round as i64,
                tx_kind: tx.kind.clone(),
                bytes: tx.bytes,
                compute_units: compute(tx),
                payer: tx.payer,
            });
        }
    }
}

/// Run both protocols honestly for `rounds` rounds at each population size
/// and account the chain footprint.
pub fn scaling_experiment(
    params: SecurityParams,
    c: SelectionFraction,
    sizes: &[u32],
    rounds: u64,
    master_seed: u64,
    table: CostTable,
) -> Result<ScalingReport> {
    if sizes.is_empty() || rounds == 0 {
        return Err(Error::Stats("empty scaling experiment".into()));
    }
    let mut points = Vec::with_capacity(sizes.len());
    let mut rows = Vec::new();
    for &n in sizes {
        let config = WorldConfig {
            params,
            c,
            n_clients: n,
            colluders: BTreeSet::new(),
            tau: None,
            master_seed,
            label: format!("scaling-{n}"),
        };
        let mut world = World::new(config)?;
        let mut ver_rounds = Vec::with_capacity(rounds as usize);
        for _ in 0..rounds {
            ver_rounds.push(world.run_round(RoundConfig::default())?.trace);
        }
        let ver_setup: Vec<TxRecord> = world.manifest().setup_txs.clone();
        let ver = account(&table, &ver_setup, &ver_rounds);
        push_rows(&mut rows, &table, "verifiable", n, &ver_setup, &ver_rounds);

        let mut base = BaselineWorld::with_generated_keys(
            params,
            c,
            n,
            master_seed,
            format!("scaling-base-{n}"),
        )?;
        let mut base_rounds = Vec::with_capacity(rounds as usize);
        for _ in 0..rounds {
            base_rounds.push(base.run_round());
        }
        let base_setup: Vec<TxRecord> = base.manifest().setup_txs.clone();
        let rec = account(&table, &base_setup, &base_rounds);
        push_rows(&mut rows, &table, "recompute", n, &base_setup, &base_rounds);

        let ver_round_bytes = {
            let setup_bytes: u64 = ver_setup.iter().map(|t| t.bytes).sum();
            (ver.bytes - setup_bytes) as f64 / rounds as f64
        };
        let rec_round_bytes = {
            let setup_bytes: u64 = base_setup.iter().map(|t| t.bytes).sum();
            (rec.bytes - setup_bytes) as f64 / rounds as f64
        };
        points.push(ScalingPoint {
            n_clients: n,
            rounds,
            verifiable_round_cost: ver.mean_round_cost(),
            verifiable_round_bytes: ver_round_bytes,
            recompute_round_cost: rec.mean_round_cost(),
            recompute_round_bytes: rec_round_bytes,
            verifiable_setup: ver.setup,
            recompute_setup: rec.setup,
            verifiable_total_bytes: ver.bytes,
            recompute_total_bytes: rec.bytes,
        });
    }
    Ok(ScalingReport { points, rows, table })
}
