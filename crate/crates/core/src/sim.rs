//! End-to-end round simulation.
//!
//! [`World`] owns the chain, the registered clients, and the round counter,
//! and plays one selection round at a time: extract the round randomness,
//! evaluate every client's VRF, let the (possibly misbehaving) server commit
//! the initial pool, let wronged qualified clients dispute, and commit the
//! final pool. Each round yields a [`RoundTrace`] plus ground-truth sets for
//! programmatic checks.
//!
//! The server is semi-malicious: it may drop qualified clients from the
//! initial pool, withhold proofs, pad the pool with unqualified or foreign
//! keys, and attempt final commitments that omit disputers. It cannot forge
//! evaluations or rewrite the chain, and every deviation it is allowed is a
//! knob on [`ServerStrategy`].

use std::collections::BTreeSet;

use num_bigint::BigUint;
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use rayon::prelude::*;

use crate::chain::{AdversaryModel, Ledger, Payer, RoundCalendar, Transaction};
use crate::encoding::{domain, sha256_tagged};
use crate::merkle::SortedMerkleTree;
use crate::protocol::{
    achievable_verdicts, baseline_registration_record, baseline_select,
    baseline_selection_record, beacon_input, pver, ClientId, SelectionProof, Verdict,
};
use crate::trace::{
    AdversaryTrace, ProtocolKind, PverSummary, RoundTrace, RunManifest, TxRecord,
    SCHEMA_VERSION,
};
use crate::vrf::{
    is_qualified, vrf_gen, vrf_prove, KeyPair, PublicKey, SecurityParams, SelectionFraction,
    VrfEvaluation,
};
use crate::{Error, Result};

/// Deterministic sub-seed derivation: every consumer of randomness gets its
/// own labeled stream from the master seed.
pub fn derive_seed(master: u64, label: &str, index: u64) -> [u8; 32] {
    sha256_tagged(
        domain::SEED_TREE,
        &[&master.to_be_bytes(), label.as_bytes(), &index.to_be_bytes()],
    )
}

pub fn derive_rng(master: u64, label: &str, index: u64) -> ChaCha20Rng {
    ChaCha20Rng::from_seed(derive_seed(master, label, index))
}

#[derive(Debug, Clone)]
pub struct ClientRecord {
    pub id: ClientId,
    pub keypair: KeyPair,
    pub honest: bool,
}

/// Server deviations for one round. Default is fully honest.
#[derive(Debug, Clone, Default)]
pub struct ServerStrategy {
    /// Qualified clients whose messages the server pretends not to have seen.
    pub drop_from_initial: BTreeSet<ClientId>,
    /// Clients who receive no proofs from the server.
    pub withhold_proofs: BTreeSet<ClientId>,
    /// Registered clients the server inserts into the initial pool even
    /// though they did not qualify.
    pub add_to_initial: BTreeSet<ClientId>,
    /// Unregistered keys the server pads the initial pool with.
    pub add_foreign_to_initial: Vec<PublicKey>,
    /// Disputers the server tries to leave out of the final commitment. The
    /// invalid attempt is recorded, then corrected, since the round cannot
    /// complete otherwise.
    pub omit_disputers_from_final: BTreeSet<ClientId>,
}

impl ServerStrategy {
    pub fn honest() -> Self {
        Self::default()
    }
}

/// Entropy-grinding setup for one round: the model bounds, a label for the
/// trace, and the candidate-choice rule.
pub struct GrindSetup<'a> {
    pub model: AdversaryModel,
    pub objective: String,
    pub selector: Box<dyn FnMut(&[BigUint]) -> usize + Send + 'a>,
}

#[derive(Default)]
pub struct RoundConfig<'a> {
    pub strategy: ServerStrategy,
    pub grind: Option<GrindSetup<'a>>,
}

/// Ground truth and trace for one completed round.
pub struct RoundOutcome {
    pub trace: RoundTrace,
    pub rnd: BigUint,
    pub qualified: BTreeSet<ClientId>,
    pub pool_initial: BTreeSet<ClientId>,
    pub disputers: BTreeSet<ClientId>,
    pub pool_final: BTreeSet<ClientId>,
    /// Provably selected clients; the pool downstream consumers train on.
    pub pool: BTreeSet<ClientId>,
    pub initial_tree: SortedMerkleTree,
    pub final_tree: SortedMerkleTree,
    pub sampled_verdicts: Vec<(ClientId, Verdict)>,
}

pub struct WorldConfig {
    pub params: SecurityParams,
    pub c: SelectionFraction,
    pub n_clients: u32,
    pub colluders: BTreeSet<ClientId>,
    pub tau: Option<u64>,
    pub master_seed: u64,
    pub label: String,
}

impl WorldConfig {
    pub fn new(
        params: SecurityParams,
        c: SelectionFraction,
        n_clients: u32,
        master_seed: u64,
    ) -> Self {
        Self {
            params,
            c,
            n_clients,
            colluders: BTreeSet::new(),
            tau: None,
            master_seed,
            label: "run".into(),
        }
    }
}

pub struct World {
    pub params: SecurityParams,
    pub c: SelectionFraction,
    pub ledger: Ledger,
    pub clients: Vec<ClientRecord>,
    pub registry: SortedMerkleTree,
    chain_rng: ChaCha20Rng,
    next_round: u64,
    master_seed: u64,
    label: String,
    setup_txs: Vec<TxRecord>,
}

impl World {
    pub fn new(cfg: WorldConfig) -> Result<Self> {
        if cfg.n_clients == 0 {
            return Err(Error::Params("world needs at least one client".into()));
        }
        let params = cfg.params;
        let keypairs: Vec<KeyPair> = (0..cfg.n_clients)
            .into_par_iter()
            .map(|i| vrf_gen(&params, &derive_seed(cfg.master_seed, "client-key", i as u64)))
            .collect::<Result<_>>()?;
        let clients: Vec<ClientRecord> = keypairs
            .into_iter()
            .enumerate()
            .map(|(i, keypair)| ClientRecord {
                id: ClientId(i as u32),
                keypair,
                honest: !cfg.colluders.contains(&ClientId(i as u32)),
            })
            .collect();

        let registry = SortedMerkleTree::build(
            &params,
            clients.iter().map(|c| c.keypair.pk.as_bytes().to_vec()),
        )?;

        let tau = cfg.tau.unwrap_or(params.kappa() as u64);
        let calendar = RoundCalendar::new(&params, params.kappa() as u64, tau)?;
        let mut chain_rng = derive_rng(cfg.master_seed, "chain", 0);
        let mut ledger = Ledger::new(params, cfg.c, calendar, &mut chain_rng);
        ledger.submit(Transaction::Registration { root: registry.root() });
        ledger.advance_to(1, &mut chain_rng)?;
        let rejected = ledger.drain_rejections();
        debug_assert!(rejected.is_empty());
        let setup_txs = ledger.receipts_in(1, 1).iter().map(TxRecord::from).collect();

        Ok(Self {
            params,
            c: cfg.c,
            ledger,
            clients,
            registry,
            chain_rng,
            next_round: 0,
            master_seed: cfg.master_seed,
            label: cfg.label,
            setup_txs,
        })
    }

    pub fn manifest(&self) -> RunManifest {
        RunManifest {
            schema_version: SCHEMA_VERSION,
            label: self.label.clone(),
            protocol: ProtocolKind::Secure,
            mode: self.params.mode(),
            kappa: self.params.kappa(),
            c: self.c.to_string(),
            n_clients: self.clients.len() as u32,
            tau: self.ledger.calendar().tau,
            master_seed: self.master_seed,
            colluders: self
                .clients
                .iter()
                .filter(|c| !c.honest)
                .map(|c| c.id.0)
                .collect(),
            setup_txs: self.setup_txs.clone(),
        }
    }

    pub fn client(&self, id: ClientId) -> &ClientRecord {
        &self.clients[id.0 as usize]
    }

    pub fn next_round(&self) -> u64 {
        self.next_round
    }

    fn pk_to_id(&self, pk: &PublicKey) -> Option<ClientId> {
        // Registry and clients are both keyed by pk bytes; linear scan is fine
        // for the rare paths that need it, but dispute handling wants a map.
        self.clients.iter().find(|c| &c.keypair.pk == pk).map(|c| c.id)
    }

    /// Play round `next_round` under the given strategy and adversary.
    pub fn run_round(&mut self, mut cfg: RoundConfig<'_>) -> Result<RoundOutcome> {
        let t = self.next_round;
        self.next_round += 1;
        let cal = *self.ledger.calendar();
        let anchor = cal.anchor(t);
        let tau = cal.tau;
        let span_start = self.ledger.tip_height() + 1;

        // Step 1: reach the anchor. An adversarial miner grinds the last
        // window block; honest advancement otherwise.
        let grind_report = match cfg.grind.as_mut() {
            Some(setup) => {
                let report = self.ledger.advance_to_with_grinding(
                    anchor - 1,
                    &setup.model,
                    &mut self.chain_rng,
                    &mut *setup.selector,
                )?;
                self.ledger.advance_to(anchor, &mut self.chain_rng)?;
                Some(report)
            }
            None => {
                self.ledger.advance_to(anchor, &mut self.chain_rng)?;
                None
            }
        };

        // Step 2: round randomness and client elections.
        let rnd = self.ledger.round_randomness(t)?;
        let input = beacon_input(&self.params, &rnd);
        let params = self.params;
        let evals: Vec<VrfEvaluation> = self
            .clients
            .par_iter()
            .map(|c| vrf_prove(&params, &c.keypair.sk, &input))
            .collect::<Result<_>>()?;
        let qualified: BTreeSet<ClientId> = self
            .clients
            .iter()
            .filter(|c| is_qualified(&self.params, &self.c, &evals[c.id.0 as usize].output))
            .map(|c| c.id)
            .collect();

        // Step 3: initial pool commitment.
        let strategy = &cfg.strategy;
        let mut pool_initial: BTreeSet<ClientId> = qualified
            .iter()
            .copied()
            .filter(|id| !strategy.drop_from_initial.contains(id))
            .collect();
        pool_initial.extend(strategy.add_to_initial.iter().copied());
        let mut initial_leaves: Vec<Vec<u8>> = pool_initial
            .iter()
            .map(|id| self.client(*id).keypair.pk.as_bytes().to_vec())
            .collect();
        initial_leaves.extend(strategy.add_foreign_to_initial.iter().map(|p| p.as_bytes().to_vec()));
        let initial_tree = SortedMerkleTree::build(&self.params, initial_leaves)?;
        self.ledger.submit(Transaction::InitialSelection { round: t, root: initial_tree.root() });
        self.ledger.advance_to(anchor + tau, &mut self.chain_rng)?;
        let stray = self.ledger.drain_rejections();
        if !stray.is_empty() {
            return Err(Error::Protocol(format!(
                "initial commitment rejected: {}",
                stray[0].reason
            )));
        }

        // Step 4: disputes. A qualified client disputes unless it received a
        // proof demonstrating its membership in the committed initial pool.
        // The commitment itself is on-chain, so "received a valid membership
        // proof" reduces to: served, and actually in the pool.
        let disputers: BTreeSet<ClientId> = qualified
            .iter()
            .copied()
            .filter(|id| {
                let served = !strategy.withhold_proofs.contains(id);
                !(served && pool_initial.contains(id))
            })
            .collect();
        for id in &disputers {
            let client = self.client(*id);
            let reg_path = self.registry.prove_membership(client.keypair.pk.as_bytes())?;
            self.ledger.submit(Transaction::Dispute {
                round: t,
                pk: client.keypair.pk.clone(),
                eval: evals[id.0 as usize].clone(),
                reg_path,
            });
        }
        self.ledger.advance_to(anchor + 2 * tau, &mut self.chain_rng)?;
        let stray = self.ledger.drain_rejections();
        if !stray.is_empty() {
            return Err(Error::Protocol(format!("dispute rejected: {}", stray[0].reason)));
        }

        // Step 5: final pool commitment over the finalized disputes.
        let final_pks: Vec<PublicKey> = self
            .ledger
            .state()
            .disputers
            .get(&t)
            .map(|set| set.iter().cloned().collect())
            .unwrap_or_default();
        let pool_final: BTreeSet<ClientId> =
            final_pks.iter().filter_map(|pk| self.pk_to_id(pk)).collect();
        let final_tree = SortedMerkleTree::build(
            &self.params,
            final_pks.iter().map(|p| p.as_bytes().to_vec()),
        )?;

        let omitted: Vec<PublicKey> = final_pks
            .iter()
            .filter(|pk| {
                self.pk_to_id(pk)
                    .is_some_and(|id| strategy.omit_disputers_from_final.contains(&id))
            })
            .cloned()
            .collect();
        let mut rejected_final_attempts = 0u32;
        if !omitted.is_empty() {
            let partial: Vec<PublicKey> =
                final_pks.iter().filter(|pk| !omitted.contains(pk)).cloned().collect();
            let partial_tree = SortedMerkleTree::build(
                &self.params,
                partial.iter().map(|p| p.as_bytes().to_vec()),
            )?;
            self.ledger.submit(Transaction::FinalSelection {
                round: t,
                root: partial_tree.root(),
                disputers: partial,
            });
            self.ledger.advance_to(self.ledger.tip_height() + 1, &mut self.chain_rng)?;
            let rejections = self.ledger.drain_rejections();
            if rejections.len() != 1 {
                return Err(Error::Protocol(
                    "final commitment omitting disputers was not rejected".into(),
                ));
            }
            rejected_final_attempts = 1;
        }
        self.ledger.submit(Transaction::FinalSelection {
            round: t,
            root: final_tree.root(),
            disputers: final_pks.clone(),
        });
        self.ledger.advance_to(self.ledger.tip_height() + 1, &mut self.chain_rng)?;
        let stray = self.ledger.drain_rejections();
        if !stray.is_empty() {
            return Err(Error::Protocol(format!(
                "final commitment rejected: {}",
                stray[0].reason
            )));
        }

        // Verdict analysis. The committed disputer list is public, so the
        // final-tree side is always reconstructible by anyone; only the
        // initial side depends on the server actually serving a proof.
        let mut pool: BTreeSet<ClientId> = BTreeSet::new();
        let mut selected_ids = Vec::new();
        let conflicted_ids = Vec::new();
        let mut own_invalid = Vec::new();
        for c in &self.clients {
            let q = qualified.contains(&c.id);
            let in_t = pool_initial.contains(&c.id);
            let in_f = pool_final.contains(&c.id);
            let v = achievable_verdicts(q, in_t, in_f);
            debug_assert!(!(v.provable_selected && v.provable_unselected));
            if v.provable_selected {
                pool.insert(c.id);
                selected_ids.push(c.id.0);
            }
            let served = !strategy.withhold_proofs.contains(&c.id);
            let own = if !q {
                Verdict::NotSelected
            } else if served {
                if in_t || in_f {
                    Verdict::Selected
                } else {
                    Verdict::NotSelected
                }
            } else if in_f {
                Verdict::Selected
            } else {
                Verdict::Invalid
            };
            if own == Verdict::Invalid {
                own_invalid.push(c.id.0);
            }
        }

        // Spot-check the analytic verdicts against the real verifier on a
        // rotating sample of clients, with fully assembled proofs.
        let mut sampled_verdicts = Vec::new();
        let n = self.clients.len() as u64;
        for k in 0..8.min(n) {
            let id = ClientId(((t * 13 + k * 7919) % n) as u32);
            let client_pk = self.client(id).keypair.pk.clone();
            let proof = SelectionProof {
                subject: client_pk.clone(),
                round: t,
                eval: evals[id.0 as usize].clone(),
                initial: Some(initial_tree.prove(client_pk.as_bytes())),
                final_pool: Some(final_tree.prove(client_pk.as_bytes())),
            };
            let verdict = pver(&mut self.ledger, Some(&proof));
            let expected = if pool.contains(&id) { Verdict::Selected } else { Verdict::NotSelected };
            if verdict != expected {
                return Err(Error::Protocol(format!(
                    "verifier disagrees with round analysis for client {} in round {t}: {verdict:?} vs {expected:?}",
                    id.0
                )));
            }
            sampled_verdicts.push((id, verdict));
        }

        let txs: Vec<TxRecord> = self
            .ledger
            .receipts_in(span_start, self.ledger.tip_height())
            .iter()
            .map(TxRecord::from)
            .collect();

        let adversary = {
            let has_server_deviation = !strategy.drop_from_initial.is_empty()
                || !strategy.withhold_proofs.is_empty()
                || !strategy.add_to_initial.is_empty()
                || !strategy.add_foreign_to_initial.is_empty()
                || !strategy.omit_disputers_from_final.is_empty();
            match (&cfg.grind, has_server_deviation) {
                (None, false) => None,
                (grind, _) => Some(AdversaryTrace {
                    miner_fraction: grind.as_ref().map_or(0.0, |g| g.model.miner_fraction),
                    grind_budget: grind.as_ref().map_or(0, |g| g.model.grind_budget),
                    candidates_evaluated: grind_report.map_or(0, |r| r.candidates_evaluated),
                    objective: grind
                        .as_ref()
                        .map_or_else(String::new, |g| g.objective.clone()),
                    dropped_initial: strategy.drop_from_initial.iter().map(|i| i.0).collect(),
                    withheld_proofs: strategy.withhold_proofs.iter().map(|i| i.0).collect(),
                    foreign_initial: strategy.add_foreign_to_initial.len() as u32,
                    rejected_final_attempts,
                }),
            }
        };

        let trace = RoundTrace {
            round: t,
            anchor,
            rnd: hex::encode(beacon_input(&self.params, &rnd)),
            qualified: qualified.iter().map(|i| i.0).collect(),
            pool_initial: pool_initial.iter().map(|i| i.0).collect(),
            disputes: disputers.iter().map(|i| i.0).collect(),
            pool_final: pool_final.iter().map(|i| i.0).collect(),
            pool: pool.iter().map(|i| i.0).collect(),
            pver: PverSummary {
                selected: selected_ids,
                conflicted: conflicted_ids,
                own_invalid,
            },
            txs,
            adversary,
        };

        Ok(RoundOutcome {
            trace,
            rnd,
            qualified,
            pool_initial,
            disputers,
            pool_final,
            pool,
            initial_tree,
            final_tree,
            sampled_verdicts,
        })
    }
}

/// Baseline world: same registry shape, selection by public hash inequality,
/// no disputes and no VRF. The full key list is published at registration and
/// the selected list every round, which is what its cost profile measures.
pub struct BaselineWorld {
    pub params: SecurityParams,
    pub c: SelectionFraction,
    pub pks: Vec<PublicKey>,
    colluders: BTreeSet<u32>,
    next_round: u64,
    master_seed: u64,
    label: String,
}

impl BaselineWorld {
    pub fn new(
        params: SecurityParams,
        c: SelectionFraction,
        pks: Vec<PublicKey>,
        colluders: BTreeSet<u32>,
        master_seed: u64,
        label: String,
    ) -> Result<Self> {
        if pks.is_empty() {
            return Err(Error::Params("baseline world needs clients".into()));
        }
        Ok(Self { params, c, pks, colluders, next_round: 0, master_seed, label })
    }

    /// Convenience constructor with deterministic keys.
    pub fn with_generated_keys(
        params: SecurityParams,
        c: SelectionFraction,
        n_clients: u32,
        master_seed: u64,
        label: String,
    ) -> Result<Self> {
        let pks: Vec<PublicKey> = (0..n_clients)
            .into_par_iter()
            .map(|i| {
                vrf_gen(&params, &derive_seed(master_seed, "client-key", i as u64))
                    .map(|kp| kp.pk)
            })
            .collect::<Result<_>>()?;
        Self::new(params, c, pks, BTreeSet::new(), master_seed, label)
    }

    pub fn manifest(&self) -> RunManifest {
        let reg_record = baseline_registration_record(&self.pks);
        RunManifest {
            schema_version: SCHEMA_VERSION,
            label: self.label.clone(),
            protocol: ProtocolKind::Baseline,
            mode: self.params.mode(),
            kappa: self.params.kappa(),
            c: self.c.to_string(),
            n_clients: self.pks.len() as u32,
            tau: 0,
            master_seed: self.master_seed,
            colluders: self.colluders.iter().copied().collect(),
            setup_txs: vec![TxRecord {
                kind: "baseline_registration".into(),
                bytes: reg_record.len() as u64,
                payer: Payer::Server,
                hashes: 2 * self.pks.len() as u64,
                merkle_nodes: 0,
                vrf_verifications: 0,
            }],
        }
    }

    pub fn selected(&self, round: u64) -> Vec<u32> {
        self.pks
            .iter()
            .enumerate()
            .filter(|(_, pk)| baseline_select(&self.params, &self.c, round, pk))
            .map(|(i, _)| i as u32)
            .collect()
    }

    pub fn run_round(&mut self) -> RoundTrace {
        let t = self.next_round;
        self.next_round += 1;
        let selected = self.selected(t);
        let selected_pks: Vec<PublicKey> =
            selected.iter().map(|&i| self.pks[i as usize].clone()).collect();
        let record = baseline_selection_record(t, &selected_pks);
        RoundTrace {
            round: t,
            anchor: 0,
            rnd: String::new(),
            qualified: selected.clone(),
            pool_initial: selected.clone(),
            disputes: vec![],
            pool_final: vec![],
            pool: selected.clone(),
            pver: PverSummary { selected, ..Default::default() },
            txs: vec![TxRecord {
                kind: "baseline_selection".into(),
                bytes: record.len() as u64,
                payer: Payer::Server,
                // Every observer recomputes the inequality for each
                // registered key to validate the record.
                hashes: self.pks.len() as u64,
                merkle_nodes: 0,
                vrf_verifications: 0,
            }],
            adversary: None,
        }
    }
}
