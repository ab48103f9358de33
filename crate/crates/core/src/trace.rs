//! Run traces: one JSONL file per experiment, a manifest line followed by one
//! line per round. Traces are the single source the statistics and cost
//! modules read, so everything they assert is reproducible from files alone.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::chain::{Payer, TxReceipt};
use crate::vrf::VrfMode;
use crate::{Error, Result};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProtocolKind {
    Secure,
    Baseline,
}

/// First line of a trace file: everything needed to interpret the rounds.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunManifest {
    pub schema_version: u32,
    pub label: String,
    pub protocol: ProtocolKind,
    pub mode: VrfMode,
    pub kappa: u16,
    pub c: String,
    pub n_clients: u32,
    pub tau: u64,
    pub master_seed: u64,
    pub colluders: Vec<u32>,
    /// One-time setup transactions (registration).
    pub setup_txs: Vec<TxRecord>,
}

/// On-chain footprint of one transaction: canonical-encoding bytes plus the
/// operation counts its validation costs the contract.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TxRecord {
    pub kind: String,
    pub bytes: u64,
    pub payer: Payer,
    pub hashes: u64,
    pub merkle_nodes: u64,
    pub vrf_verifications: u64,
}

impl From<&TxReceipt> for TxRecord {
    fn from(r: &TxReceipt) -> Self {
        Self {
            kind: r.kind.clone(),
            bytes: r.bytes,
            payer: r.payer,
            hashes: r.ops.hashes,
            merkle_nodes: r.ops.merkle_nodes,
            vrf_verifications: r.ops.vrf_verifications,
        }
    }
}

/// Per-client verification summary, id-compressed: `selected` holds every
/// client for which a selected-verdict proof is constructible; clients listed
/// in neither vector admit only a not-selected verdict. `conflicted` would
/// hold clients admitting both and must stay empty.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct PverSummary {
    pub selected: Vec<u32>,
    pub conflicted: Vec<u32>,
    /// Clients whose own assembled proof came out Invalid (e.g. the server
    /// withheld evidence they could not reconstruct from the chain).
    pub own_invalid: Vec<u32>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AdversaryTrace {
    pub miner_fraction: f64,
    pub grind_budget: u32,
    pub candidates_evaluated: u32,
    pub objective: String,
    pub dropped_initial: Vec<u32>,
    pub withheld_proofs: Vec<u32>,
    pub foreign_initial: u32,
    pub rejected_final_attempts: u32,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RoundTrace {
    pub round: u64,
    pub anchor: u64,
    /// Round randomness, hex.
    pub rnd: String,
    pub qualified: Vec<u32>,
    pub pool_initial: Vec<u32>,
    pub disputes: Vec<u32>,
    pub pool_final: Vec<u32>,
    /// The selected pool: clients provably selected in any honest view.
    pub pool: Vec<u32>,
    pub pver: PverSummary,
    pub txs: Vec<TxRecord>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub adversary: Option<AdversaryTrace>,
}

/// Streaming JSONL writer.
pub struct TraceWriter<W: std::io::Write> {
    out: W,
    rounds: u64,
}

impl TraceWriter<BufWriter<File>> {
    pub fn create(path: &Path, manifest: &RunManifest) -> Result<Self> {
        let file = File::create(path)
            .map_err(|e| Error::Io(format!("create {}: {e}", path.display())))?;
        Self::new(BufWriter::new(file), manifest)
    }
}

impl<W: std::io::Write> TraceWriter<W> {
    pub fn new(mut out: W, manifest: &RunManifest) -> Result<Self> {
        let line = serde_json::to_string(manifest).map_err(|e| Error::Io(e.to_string()))?;
        writeln!(out, "{line}").map_err(|e| Error::Io(e.to_string()))?;
        Ok(Self { out, rounds: 0 })
    }

    pub fn record(&mut self, round: &RoundTrace) -> Result<()> {
        let line = serde_json::to_string(round).map_err(|e| Error::Io(e.to_string()))?;
        writeln!(self.out, "{line}").map_err(|e| Error::Io(e.to_string()))?;
        self.rounds += 1;
        Ok(())
    }

    pub fn finish(mut self) -> Result<u64> {
        self.out.flush().map_err(|e| Error::Io(e.to_string()))?;
        Ok(self.rounds)
    }
}

/// A fully loaded trace file.
#[derive(Debug, Clone)]
pub struct TraceFile {
    pub manifest: RunManifest,
    pub rounds: Vec<RoundTrace>,
}

impl TraceFile {
    pub fn read(path: &Path) -> Result<Self> {
        let file =
            File::open(path).map_err(|e| Error::Io(format!("open {}: {e}", path.display())))?;
        let mut lines = BufReader::new(file).lines();
        let manifest_line = lines
            .next()
            .ok_or_else(|| Error::Trace("empty trace file".into()))?
            .map_err(|e| Error::Io(e.to_string()))?;
        let manifest: RunManifest = serde_json::from_str(&manifest_line)
            .map_err(|e| Error::Trace(format!("bad manifest line: {e}")))?;
        if manifest.schema_version != SCHEMA_VERSION {
            return Err(Error::Trace(format!(
                "unsupported schema version {}",
                manifest.schema_version
            )));
        }
        let mut rounds = Vec::new();
        for (i, line) in lines.enumerate() {
            let line = line.map_err(|e| Error::Io(e.to_string()))?;
            if line.trim().is_empty() {
                continue;
            }
            let round: RoundTrace = serde_json::from_str(&line)
                .map_err(|e| Error::Trace(format!("bad round line {}: {e}", i + 2)))?;
            rounds.push(round);
        }
        Ok(Self { manifest, rounds })
    }
}
