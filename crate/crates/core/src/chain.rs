//! Simulated proof-of-work chain with contract-style transaction validation.
//!
//! The simulation keeps a single linear chain: persistence and liveness hold
//! by construction, and the knobs that matter for the selection protocol are
//! modeled explicitly instead:
//!
//! * every block is mined by either an honest or an adversarial miner, and an
//!   adversarial miner may grind its block's entropy field over a bounded
//!   number of candidates before committing;
//! * chain quality is enforced: any window of κ consecutive blocks contains
//!   at least one honest block, so the adversary never controls a whole
//!   randomness window;
//! * transactions are validated at inclusion time against contract state and
//!   the round calendar, exactly as on-chain verification rules would.
//!
//! The randomness beacon for a round anchored at height ℓ hashes the κ block
//! headers at heights [ℓ−κ, ℓ−1].

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use num_bigint::BigUint;
use rand::RngCore;
use rand_chacha::ChaCha20Rng;
use serde::{Deserialize, Serialize};

use crate::encoding::{domain, sha256_tagged, to_fixed_be, Encoder};
use crate::merkle::{
    verify_membership, Digest, MembershipPath, MerkleRoot, SortedMerkleTree,
};
use crate::vrf::{
    is_qualified, vrf_verify, PublicKey, SecurityParams, SelectionFraction, VrfEvaluation,
};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MinerKind {
    Honest,
    Adversarial,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BlockHeader {
    pub height: u64,
    pub parent: Digest,
    pub tx_root: MerkleRoot,
    pub miner: MinerKind,
    /// κ-bit miner-chosen field; the only degree of freedom grinding exploits.
    pub entropy: Vec<u8>,
}

impl BlockHeader {
    pub fn encoded(&self) -> Vec<u8> {
        Encoder::new()
            .u64(self.height)
            .bytes(&self.parent.0)
            .bytes(&self.tx_root.encoded())
            .u8(match self.miner {
                MinerKind::Honest => 0,
                MinerKind::Adversarial => 1,
            })
            .bytes(&self.entropy)
            .finish()
    }

    pub fn digest(&self, params: &SecurityParams) -> Digest {
        let d = sha256_tagged(domain::HEADER, &[&self.encoded()]);
        Digest(d[..params.kappa_bytes()].to_vec())
    }
}

/// Selection-protocol transactions, validated by miners before inclusion.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Transaction {
    /// One-time commitment to the sorted registry of client public keys.
    Registration { root: MerkleRoot },
    /// Server's commitment to the initially selected pool for a round.
    InitialSelection { round: u64, root: MerkleRoot },
    /// A client's claim of qualification the server failed to honour.
    Dispute {
        round: u64,
        pk: PublicKey,
        eval: VrfEvaluation,
        reg_path: MembershipPath,
    },
    /// Server's commitment to the dispute pool; carries the disputer list so
    /// the contract can check it matches the disputes it saw.
    FinalSelection {
        round: u64,
        root: MerkleRoot,
        disputers: Vec<PublicKey>,
    },
}

impl Transaction {
    pub fn kind(&self) -> &'static str {
        match self {
            Self::Registration { .. } => "registration",
            Self::InitialSelection { .. } => "initial_selection",
            Self::Dispute { .. } => "dispute",
            Self::FinalSelection { .. } => "final_selection",
        }
    }

    pub fn encoded(&self, params: &SecurityParams) -> Vec<u8> {
        match self {
            Self::Registration { root } => Encoder::new().u8(1).bytes(&root.encoded()).finish(),
            Self::InitialSelection { round, root } => {
                Encoder::new().u8(2).u64(*round).bytes(&root.encoded()).finish()
            }
            Self::Dispute { round, pk, eval, reg_path } => Encoder::new()
                .u8(3)
                .u64(*round)
                .bytes(pk.as_bytes())
                .bytes(&to_fixed_be(&eval.output, params.kappa_bytes()))
                .bytes(&eval.proof)
                .bytes(&reg_path.encoded())
                .finish(),
            Self::FinalSelection { round, root, disputers } => Encoder::new()
                .u8(4)
                .u64(*round)
                .bytes(&root.encoded())
                .list(disputers)
                .finish(),
        }
    }
}

/// Who bears a transaction's cost.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Payer {
    Server,
    Client,
}

/// Contract-side work performed to validate one transaction.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct OpCounts {
    pub hashes: u64,
    pub merkle_nodes: u64,
    pub vrf_verifications: u64,
}

impl OpCounts {
    pub fn add(&mut self, other: &OpCounts) {
        self.hashes += other.hashes;
        self.merkle_nodes += other.merkle_nodes;
        self.vrf_verifications += other.vrf_verifications;
    }
}

/// Inclusion record for one transaction.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TxReceipt {
    pub height: u64,
    pub kind: String,
    pub bytes: u64,
    pub payer: Payer,
    pub ops: OpCounts,
}

#[derive(Debug, Clone)]
pub struct RejectedTx {
    pub tx: Transaction,
    pub reason: String,
}

#[derive(Debug, Clone)]
pub struct Block {
    pub header: BlockHeader,
    pub txs: Vec<Transaction>,
    pub receipts: Vec<TxReceipt>,
}

/// Round schedule: round t is anchored at ℓ(t) = first + 3τ·t. The initial
/// commitment must land in (ℓ, ℓ+τ], disputes in (ℓ+τ, ℓ+2τ], the final
/// commitment in (ℓ+2τ, ℓ+3τ].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RoundCalendar {
    pub first_round_height: u64,
    pub tau: u64,
}

impl RoundCalendar {
    pub fn new(params: &SecurityParams, first_round_height: u64, tau: u64) -> Result<Self> {
        if first_round_height < params.kappa() as u64 {
            return Err(Error::Chain(format!(
                "first round height {} precedes the first full randomness window (kappa = {})",
                first_round_height,
                params.kappa()
            )));
        }
        if tau == 0 {
            return Err(Error::Chain("tau must be positive".into()));
        }
        Ok(Self { first_round_height, tau })
    }

    /// Default schedule: τ = κ, first round after one full window.
    pub fn standard(params: &SecurityParams) -> Self {
        Self { first_round_height: params.kappa() as u64, tau: params.kappa() as u64 }
    }

    pub fn anchor(&self, round: u64) -> u64 {
        self.first_round_height + 3 * self.tau * round
    }

    pub fn initial_window(&self, round: u64) -> (u64, u64) {
        let l = self.anchor(round);
        (l + 1, l + self.tau)
    }

    pub fn dispute_window(&self, round: u64) -> (u64, u64) {
        let l = self.anchor(round);
        (l + self.tau + 1, l + 2 * self.tau)
    }

    pub fn final_window(&self, round: u64) -> (u64, u64) {
        let l = self.anchor(round);
        (l + 2 * self.tau + 1, l + 3 * self.tau)
    }
}

/// Declared adversarial capabilities for mining.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdversaryModel {
    /// Fraction of mining power, must stay below an honest majority's 1.
    pub miner_fraction: f64,
    /// Entropy candidates the adversary may try per block it mines (g).
    pub grind_budget: u32,
}

impl AdversaryModel {
    pub fn new(params: &SecurityParams, miner_fraction: f64, grind_budget: u32) -> Result<Self> {
        if !(0.0..1.0).contains(&miner_fraction) {
            return Err(Error::Chain(format!(
                "miner fraction must lie in [0, 1), got {miner_fraction}"
            )));
        }
        if grind_budget as u64 > params.kappa() as u64 {
            return Err(Error::Chain(format!(
                "grind budget {} exceeds kappa {}",
                grind_budget,
                params.kappa()
            )));
        }
        Ok(Self { miner_fraction, grind_budget })
    }

    pub fn honest() -> Self {
        Self { miner_fraction: 0.0, grind_budget: 0 }
    }
}

/// Finalized contract state, updated as validated transactions are included.
#[derive(Debug, Clone, Default)]
pub struct ContractState {
    pub registration_root: Option<MerkleRoot>,
    pub initial_roots: BTreeMap<u64, MerkleRoot>,
    pub final_roots: BTreeMap<u64, MerkleRoot>,
    pub disputers: BTreeMap<u64, BTreeSet<PublicKey>>,
    beacons: BTreeMap<u64, BigUint>,
}

/// Outcome of one ground block.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct GrindReport {
    pub candidates_evaluated: u32,
    pub chosen: u32,
}

pub struct Ledger {
    params: SecurityParams,
    c: SelectionFraction,
    calendar: RoundCalendar,
    blocks: VecDeque<Block>,
    base_height: u64,
    tip_digest: Digest,
    pending: Vec<Transaction>,
    rejections: Vec<RejectedTx>,
    state: ContractState,
    honest_blocks: u64,
    adversarial_blocks: u64,
    /// Retention horizon; headers older than this many blocks below the tip
    /// may be dropped. Must cover a randomness window plus a full round.
    retain: u64,
}

impl Ledger {
    pub fn new(
        params: SecurityParams,
        c: SelectionFraction,
        calendar: RoundCalendar,
        rng: &mut ChaCha20Rng,
    ) -> Self {
        let mut ledger = Self {
            params,
            c,
            calendar,
            blocks: VecDeque::new(),
            base_height: 0,
            tip_digest: Digest(vec![0u8; params.kappa_bytes()]),
            pending: Vec::new(),
            rejections: Vec::new(),
            state: ContractState::default(),
            honest_blocks: 0,
            adversarial_blocks: 0,
            retain: params.kappa() as u64 + 6 * calendar.tau + 8,
        };
        // Genesis block at height 0.
        ledger.mint(MinerKind::Honest, ledger.random_entropy(rng));
        ledger
    }

    pub fn params(&self) -> &SecurityParams {
        &self.params
    }

    pub fn selection_fraction(&self) -> &SelectionFraction {
        &self.c
    }

    pub fn calendar(&self) -> &RoundCalendar {
        &self.calendar
    }

    pub fn state(&self) -> &ContractState {
        &self.state
    }

    pub fn tip_height(&self) -> u64 {
        self.base_height + self.blocks.len() as u64 - 1
    }

    pub fn header(&self, height: u64) -> Option<&BlockHeader> {
        self.block(height).map(|b| &b.header)
    }

    pub fn block(&self, height: u64) -> Option<&Block> {
        if height < self.base_height {
            return None;
        }
        self.blocks.get((height - self.base_height) as usize)
    }

    /// Receipts of all transactions included in [from, to].
    pub fn receipts_in(&self, from: u64, to: u64) -> Vec<TxReceipt> {
        (from..=to)
            .filter_map(|h| self.block(h))
            .flat_map(|b| b.receipts.iter().cloned())
            .collect()
    }

    pub fn adversarial_share(&self) -> f64 {
        self.adversarial_blocks as f64 / (self.honest_blocks + self.adversarial_blocks) as f64
    }

    /// Queue a transaction for the next block. Validation happens at
    /// inclusion; a rejection is observable via [`Ledger::drain_rejections`].
    pub fn submit(&mut self, tx: Transaction) {
        self.pending.push(tx);
    }

    pub fn drain_rejections(&mut self) -> Vec<RejectedTx> {
        std::mem::take(&mut self.rejections)
    }

    fn random_entropy(&self, rng: &mut ChaCha20Rng) -> Vec<u8> {
        let mut e = vec![0u8; self.params.kappa_bytes()];
        rng.fill_bytes(&mut e);
        e
    }

    /// Chain-quality guard: an adversarial block is admissible only if the
    /// trailing κ−1 blocks contain at least one honest block.
    fn adversarial_admissible(&self) -> bool {
        let window = self.params.kappa() as usize - 1;
        self.blocks
            .iter()
            .rev()
            .take(window)
            .any(|b| b.header.miner == MinerKind::Honest)
            || self.blocks.len() < window
    }

    fn mint(&mut self, miner: MinerKind, entropy: Vec<u8>) {
        let height = if self.blocks.is_empty() { 0 } else { self.tip_height() + 1 };
        let pending = std::mem::take(&mut self.pending);
        let mut txs = Vec::new();
        let mut receipts = Vec::new();
        for tx in pending {
            match self.validate(&tx, height) {
                Ok((ops, payer)) => {
                    self.apply(&tx, height);
                    receipts.push(TxReceipt {
                        height,
                        kind: tx.kind().into(),
                        bytes: tx.encoded(&self.params).len() as u64,
                        payer,
                        ops,
                    });
                    txs.push(tx);
                }
                Err(reason) => self.rejections.push(RejectedTx { tx, reason }),
            }
        }
        let tx_root = SortedMerkleTree::build(
            &self.params,
            txs.iter().map(|t| t.encoded(&self.params)),
        )
        .expect("validated transactions are distinct")
        .root();
        let header = BlockHeader {
            height,
            parent: self.tip_digest.clone(),
            tx_root,
            miner,
            entropy,
        };
        self.tip_digest = header.digest(&self.params);
        match miner {
            MinerKind::Honest => self.honest_blocks += 1,
            MinerKind::Adversarial => self.adversarial_blocks += 1,
        }
        self.blocks.push_back(Block { header, txs, receipts });
        while self.blocks.len() as u64 > self.retain {
            self.blocks.pop_front();
            self.base_height += 1;
        }
    }

    /// Mint honest blocks until the tip reaches `height`.
    pub fn advance_to(&mut self, height: u64, rng: &mut ChaCha20Rng) -> Result<()> {
        if height < self.tip_height() {
            return Err(Error::Chain(format!(
                "cannot advance to height {height}, tip is already {}",
                self.tip_height()
            )));
        }
        while self.tip_height() < height {
            let entropy = self.random_entropy(rng);
            self.mint(MinerKind::Honest, entropy);
        }
        Ok(())
    }

    /// Advance so that the tip lands exactly at `height`, with the final
    /// block mined adversarially: the miner draws `g` candidate entropy
    /// values, computes the beacon each candidate would induce for the round
    /// anchored at `height + 1`, and lets `selector` pick one.
    ///
    /// `selector` receives the candidate beacons and returns the chosen
    /// index. Returns how many candidates were evaluated.
    pub fn advance_to_with_grinding(
        &mut self,
        height: u64,
        adversary: &AdversaryModel,
        rng: &mut ChaCha20Rng,
        selector: &mut dyn FnMut(&[BigUint]) -> usize,
    ) -> Result<GrindReport> {
        if adversary.miner_fraction <= 0.0 {
            return Err(Error::Chain(
                "grinding requires adversarial mining power".into(),
            ));
        }
        let g = adversary.grind_budget.max(1);
        if height <= self.tip_height() {
            return Err(Error::Chain("grinding target height already mined".into()));
        }
        self.advance_to(height - 1, rng)?;
        if !self.adversarial_admissible() {
            return Err(Error::Chain(
                "chain quality forbids another adversarial block".into(),
            ));
        }

        // Candidate beacons for anchor = height + 1, window [anchor−κ, anchor−1];
        // all window headers except the one being mined are already fixed.
        let anchor = height + 1;
        let kappa = self.params.kappa() as u64;
        if anchor < kappa {
            return Err(Error::Chain("randomness window precedes genesis".into()));
        }
        let lo = anchor - kappa;
        let mut fixed: Vec<Vec<u8>> = Vec::with_capacity(kappa as usize - 1);
        for h in lo..height {
            let hdr = self
                .header(h)
                .ok_or_else(|| Error::Chain(format!("header {h} pruned or missing")))?;
            fixed.push(hdr.encoded());
        }

        // The ground block carries no transactions (they wait for the next
        // honest block), so every candidate header differs only in entropy
        // and the selector's view matches the block actually minted.
        let held = std::mem::take(&mut self.pending);
        let empty_root = SortedMerkleTree::build(&self.params, Vec::<Vec<u8>>::new())
            .expect("empty tree")
            .root();
        let parent = self.tip_digest.clone();
        let candidates: Vec<(Vec<u8>, BigUint)> = (0..g)
            .map(|_| {
                let entropy = self.random_entropy(rng);
                let hdr = BlockHeader {
                    height,
                    parent: parent.clone(),
                    tx_root: empty_root.clone(),
                    miner: MinerKind::Adversarial,
                    entropy: entropy.clone(),
                };
                let mut parts: Vec<&[u8]> = fixed.iter().map(|v| v.as_slice()).collect();
                let enc = hdr.encoded();
                parts.push(&enc);
                let beacon = crate::encoding::truncate_digest(
                    &sha256_tagged(domain::BEACON, &parts),
                    self.params.kappa(),
                );
                (entropy, beacon)
            })
            .collect();

        let beacons: Vec<BigUint> = candidates.iter().map(|(_, b)| b.clone()).collect();
        let chosen = selector(&beacons).min(candidates.len() - 1);
        self.mint(MinerKind::Adversarial, candidates[chosen].0.clone());
        self.pending = held;
        Ok(GrindReport { candidates_evaluated: g, chosen: chosen as u32 })
    }

    /// Beacon for the round anchored at `anchor`: hash of the κ headers at
    /// [anchor−κ, anchor−1]. Memoized once computed, so it stays available
    /// after old blocks are pruned.
    pub fn randomness_at(&mut self, anchor: u64) -> Result<BigUint> {
        if let Some(r) = self.state.beacons.get(&anchor) {
            return Ok(r.clone());
        }
        let kappa = self.params.kappa() as u64;
        if anchor < kappa {
            return Err(Error::Chain(format!(
                "anchor {anchor} has no full randomness window"
            )));
        }
        if self.tip_height() + 1 < anchor {
            return Err(Error::Chain(format!(
                "anchor {anchor} not yet mined (tip {})",
                self.tip_height()
            )));
        }
        let encodings: Vec<Vec<u8>> = (anchor - kappa..anchor)
            .map(|h| {
                self.header(h)
                    .map(|hdr| hdr.encoded())
                    .ok_or_else(|| Error::Chain(format!("header {h} pruned or missing")))
            })
            .collect::<Result<_>>()?;
        let parts: Vec<&[u8]> = encodings.iter().map(|v| v.as_slice()).collect();
        let beacon = crate::encoding::truncate_digest(
            &sha256_tagged(domain::BEACON, &parts),
            self.params.kappa(),
        );
        self.state.beacons.insert(anchor, beacon.clone());
        Ok(beacon)
    }

    /// Beacon for a protocol round, per the calendar.
    pub fn round_randomness(&mut self, round: u64) -> Result<BigUint> {
        self.randomness_at(self.calendar.anchor(round))
    }

    fn validate(&self, tx: &Transaction, at_height: u64) -> std::result::Result<(OpCounts, Payer), String> {
        let within = |(lo, hi): (u64, u64)| lo <= at_height && at_height <= hi;
        match tx {
            Transaction::Registration { root } => {
                if self.state.registration_root.is_some() {
                    return Err("registry already committed".into());
                }
                if root.digest.0.len() != self.params.kappa_bytes() {
                    return Err("malformed registry root".into());
                }
                Ok((OpCounts { hashes: 1, ..Default::default() }, Payer::Server))
            }
            Transaction::InitialSelection { round, root } => {
                if self.state.registration_root.is_none() {
                    return Err("no registry committed".into());
                }
                if self.state.initial_roots.contains_key(round) {
                    return Err(format!("round {round} already has an initial commitment"));
                }
                if !within(self.calendar.initial_window(*round)) {
                    return Err(format!(
                        "initial commitment for round {round} outside its window at height {at_height}"
                    ));
                }
                if root.digest.0.len() != self.params.kappa_bytes() {
                    return Err("malformed pool root".into());
                }
                Ok((OpCounts { hashes: 1, ..Default::default() }, Payer::Server))
            }
            Transaction::Dispute { round, pk, eval, reg_path } => {
                let reg_root = self
                    .state
                    .registration_root
                    .as_ref()
                    .ok_or("no registry committed")?;
                if !self.state.initial_roots.contains_key(round) {
                    return Err(format!("dispute for round {round} precedes its initial commitment"));
                }
                if !within(self.calendar.dispute_window(*round)) {
                    return Err(format!(
                        "dispute for round {round} outside its window at height {at_height}"
                    ));
                }
                if self
                    .state
                    .disputers
                    .get(round)
                    .is_some_and(|d| d.contains(pk))
                {
                    return Err("duplicate dispute".into());
                }
                if !verify_membership(&self.params, reg_root, pk.as_bytes(), reg_path) {
                    return Err("disputer not in registry".into());
                }
                let anchor = self.calendar.anchor(*round);
                let beacon = self
                    .state
                    .beacons
                    .get(&anchor)
                    .cloned()
                    .ok_or("round randomness unavailable")?;
                let input = to_fixed_be(&beacon, self.params.kappa_bytes());
                if !vrf_verify(&self.params, pk, &input, eval) {
                    return Err("dispute carries an invalid evaluation".into());
                }
                if !is_qualified(&self.params, &self.c, &eval.output) {
                    return Err("disputer is not qualified".into());
                }
                Ok((
                    OpCounts {
                        hashes: 1,
                        merkle_nodes: reg_path.steps.len() as u64 + 1,
                        vrf_verifications: 1,
                    },
                    Payer::Client,
                ))
            }
            Transaction::FinalSelection { round, root, disputers } => {
                if !self.state.initial_roots.contains_key(round) {
                    return Err(format!(
                        "final commitment for round {round} precedes its initial commitment"
                    ));
                }
                if self.state.final_roots.contains_key(round) {
                    return Err(format!("round {round} already has a final commitment"));
                }
                if !within(self.calendar.final_window(*round)) {
                    return Err(format!(
                        "final commitment for round {round} outside its window at height {at_height}"
                    ));
                }
                let recorded: BTreeSet<PublicKey> =
                    self.state.disputers.get(round).cloned().unwrap_or_default();
                let carried: BTreeSet<PublicKey> = disputers.iter().cloned().collect();
                if carried.len() != disputers.len() {
                    return Err("final commitment repeats a disputer".into());
                }
                if carried != recorded {
                    return Err(
                        "final commitment does not cover exactly the finalized disputes".into(),
                    );
                }
                let rebuilt = SortedMerkleTree::build(
                    &self.params,
                    disputers.iter().map(|p| p.as_bytes().to_vec()),
                )
                .map_err(|e| e.to_string())?
                .root();
                if rebuilt != *root {
                    return Err("final commitment root does not match its disputer set".into());
                }
                let n = disputers.len() as u64;
                Ok((
                    OpCounts {
                        hashes: 1,
                        merkle_nodes: if n == 0 { 1 } else { 2 * n - 1 },
                        ..Default::default()
                    },
                    Payer::Server,
                ))
            }
        }
    }

    fn apply(&mut self, tx: &Transaction, _at_height: u64) {
        match tx {
            Transaction::Registration { root } => {
                self.state.registration_root = Some(root.clone());
            }
            Transaction::InitialSelection { round, root } => {
                // Memoize the round beacon at commitment time; the contract
                // needs it for dispute validation after pruning.
                let anchor = self.calendar.anchor(*round);
                let _ = self.randomness_at(anchor);
                self.state.initial_roots.insert(*round, root.clone());
            }
            Transaction::Dispute { round, pk, .. } => {
                self.state.disputers.entry(*round).or_default().insert(pk.clone());
            }
            Transaction::FinalSelection { round, root, .. } => {
                self.state.final_roots.insert(*round, root.clone());
            }
        }
    }
}
