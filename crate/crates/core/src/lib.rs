//! Verifiable client selection for federated learning.
//!
//! The crate has three layers:
//!
//! * primitives: a verifiable random function ([`vrf`]), sorted Merkle trees
//!   with membership and non-membership proofs ([`merkle`]), and a simulated
//!   proof-of-work chain with a smart-contract transaction discipline
//!   ([`chain`]);
//! * the protocol: per-round verifiable sortition with public dispute and
//!   finalization, plus the recompute-everything baseline it is measured
//!   against ([`protocol`], [`sim`]);
//! * measurement: federated averaging with gradient-recovery attacks
//!   ([`fedavg`], [`adversary`]), trace files ([`trace`]), statistical
//!   verdicts ([`stats`]), and cost accounting ([`costs`]).
//!
//! Everything is deterministic given a master seed; see [`sim::derive_seed`].

use thiserror::Error as ThisError;

pub mod adversary;
pub mod chain;
pub mod config;
pub mod costs;
pub mod encoding;
pub mod fedavg;
pub mod merkle;
pub mod protocol;
pub mod sim;
pub mod stats;
pub mod trace;
pub mod vrf;

#[derive(Debug, ThisError)]
pub enum Error {
    #[error("invalid parameters: {0}")]
    Params(String),
    #[error("vrf failure: {0}")]
    Vrf(String),
    #[error("merkle failure: {0}")]
    Merkle(String),
    #[error("chain failure: {0}")]
    Chain(String),
    #[error("protocol violation: {0}")]
    Protocol(String),
    #[error("learning failure: {0}")]
    Learning(String),
    #[error("attack setup failure: {0}")]
    Attack(String),
    #[error("statistics failure: {0}")]
    Stats(String),
    #[error("config error: {0}")]
    Config(String),
    #[error("trace error: {0}")]
    Trace(String),
    #[error("io error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;

pub use chain::{Ledger, RoundCalendar, Transaction};
pub use merkle::{MerkleProof, MerkleRoot, SortedMerkleTree};
pub use protocol::{ClientId, SelectionProof, Verdict};
pub use sim::{World, WorldConfig};
pub use vrf::{KeyPair, SecurityParams, SelectionFraction, VrfMode};
