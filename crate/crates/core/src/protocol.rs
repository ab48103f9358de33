//! Selection-protocol objects: proofs of (non-)selection, the public
//! verification predicate, and the hash-inequality baseline it is compared
//! against.
//!
//! A round anchored at height ℓ runs in three on-chain steps: the server
//! commits the initially selected pool, wrongly excluded qualified clients
//! dispute, and the server commits the dispute pool. A client counts as
//! selected exactly when its VRF output qualifies and its key sits in either
//! committed tree; anyone holding a proof can check that against their own
//! chain view, with no trust in the server.

use num_bigint::BigUint;
use serde::{Deserialize, Serialize};

use crate::chain::Ledger;
use crate::encoding::{domain, sha256_tagged, to_fixed_be, truncate_digest, Encoder};
use crate::merkle::{verify_proof, MerkleProof, MerkleRoot};
use crate::vrf::{
    is_qualified, vrf_verify, PublicKey, SecurityParams, SelectionFraction, VrfEvaluation,
};

/// Index of a client within an experiment's registry.
#[derive(
    Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize,
)]
pub struct ClientId(pub u32);

/// What a verifier concludes from a selection proof.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    /// Proof demonstrates the subject was selected this round.
    Selected,
    /// Proof demonstrates the subject was not selected this round.
    NotSelected,
    /// Proof is malformed, incomplete, or contradicts the chain.
    Invalid,
}

/// Transferable evidence about one subject's selection status in one round.
///
/// The Merkle sides are optional: a proof may carry evidence against only one
/// of the two committed trees. Verification never upgrades missing evidence
/// to a definitive answer.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SelectionProof {
    pub subject: PublicKey,
    pub round: u64,
    pub eval: VrfEvaluation,
    pub initial: Option<MerkleProof>,
    pub final_pool: Option<MerkleProof>,
}

impl SelectionProof {
    /// Canonical encoding length, used for message-size accounting.
    pub fn encoded(&self, params: &SecurityParams) -> Vec<u8> {
        let side = |p: &Option<MerkleProof>| match p {
            Some(p) => Encoder::new().u8(1).bytes(&p.encoded()).finish(),
            None => Encoder::new().u8(0).finish(),
        };
        Encoder::new()
            .bytes(self.subject.as_bytes())
            .u64(self.round)
            .bytes(&to_fixed_be(&self.eval.output, params.kappa_bytes()))
            .bytes(&self.eval.proof)
            .bytes(&side(&self.initial))
            .bytes(&side(&self.final_pool))
            .finish()
    }
}

/// Public verification of a selection proof against the bearer's own chain
/// view. Ordering of checks:
///
/// 1. missing proof, missing round commitments, or unavailable round
///    randomness → [`Verdict::Invalid`];
/// 2. VRF evaluation fails against the round randomness → `Invalid`;
/// 3. any provided Merkle side that does not verify → `Invalid`;
/// 4. unqualified output → [`Verdict::NotSelected`];
/// 5. membership in either tree → [`Verdict::Selected`];
/// 6. proven absence from both trees → `NotSelected`;
/// 7. otherwise the evidence is incomplete → `Invalid`.
pub fn pver(ledger: &mut Ledger, proof: Option<&SelectionProof>) -> Verdict {
    let Some(p) = proof else { return Verdict::Invalid };
    let params = *ledger.params();
    let c = *ledger.selection_fraction();

    let Some(initial_root) = ledger.state().initial_roots.get(&p.round).cloned() else {
        return Verdict::Invalid;
    };
    let Some(final_root) = ledger.state().final_roots.get(&p.round).cloned() else {
        return Verdict::Invalid;
    };
    let Ok(rnd) = ledger.round_randomness(p.round) else {
        return Verdict::Invalid;
    };
    let input = to_fixed_be(&rnd, params.kappa_bytes());
    if !vrf_verify(&params, &p.subject, &input, &p.eval) {
        return Verdict::Invalid;
    }

    let check_side = |side: &Option<MerkleProof>, root: &MerkleRoot| -> Result<Option<bool>, ()> {
        match side {
            None => Ok(None),
            Some(proof) => match verify_proof(&params, root, p.subject.as_bytes(), proof) {
                Some(is_member) => Ok(Some(is_member)),
                None => Err(()),
            },
        }
    };
    let Ok(in_initial) = check_side(&p.initial, &initial_root) else {
        return Verdict::Invalid;
    };
    let Ok(in_final) = check_side(&p.final_pool, &final_root) else {
        return Verdict::Invalid;
    };

    if !is_qualified(&params, &c, &p.eval.output) {
        return Verdict::NotSelected;
    }
    match (in_initial, in_final) {
        (Some(true), _) | (_, Some(true)) => Verdict::Selected,
        (Some(false), Some(false)) => Verdict::NotSelected,
        _ => Verdict::Invalid,
    }
}

/// Baseline comparator: selection by a bare hash inequality over the round
/// number and the registered key, with no VRF and no dispute stage. Every
/// observer can recompute it, but so can anyone *before* committing a key:
/// a client's entire selection schedule is known the moment its key is
/// chosen, which is what the grinding attacks exploit.
pub fn baseline_select(
    params: &SecurityParams,
    c: &SelectionFraction,
    round: u64,
    pk: &PublicKey,
) -> bool {
    let digest =
        sha256_tagged(domain::BASELINE, &[&round.to_be_bytes(), pk.as_bytes()]);
    is_qualified(params, c, &truncate_digest(&digest, params.kappa()))
}

/// Canonical on-chain record for baseline registration (the full key list is
/// published, unlike the secure protocol's single root).
pub fn baseline_registration_record(pks: &[PublicKey]) -> Vec<u8> {
    Encoder::new().u8(0x51).list(pks).finish()
}

/// Canonical on-chain record of one baseline round's selected keys.
pub fn baseline_selection_record(round: u64, selected: &[PublicKey]) -> Vec<u8> {
    Encoder::new().u8(0x52).u64(round).list(selected).finish()
}

/// Achievable-verdict analysis for one subject, given ground truth about the
/// round. `provable_selected` / `provable_unselected` say whether *any*
/// coalition holding the committed pool contents could assemble a proof that
/// makes an honest verifier return 1 (resp. 0). A subject with both flags set
/// would contradict pool consistency; by construction that cannot happen.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct AchievableVerdicts {
    pub provable_selected: bool,
    pub provable_unselected: bool,
}

pub fn achievable_verdicts(qualified: bool, in_initial: bool, in_final: bool) -> AchievableVerdicts {
    let member = in_initial || in_final;
    AchievableVerdicts {
        provable_selected: qualified && member,
        provable_unselected: !qualified || !member,
    }
}

/// Round beacon serialized as VRF input bytes.
pub fn beacon_input(params: &SecurityParams, rnd: &BigUint) -> Vec<u8> {
    to_fixed_be(rnd, params.kappa_bytes())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn achievable_verdicts_never_conflict() {
        for q in [false, true] {
            for t in [false, true] {
                for f in [false, true] {
                    let v = achievable_verdicts(q, t, f);
                    assert!(
                        !(v.provable_selected && v.provable_unselected),
                        "conflict at q={q} t={t} f={f}"
                    );
                    assert!(v.provable_selected || v.provable_unselected);
                }
            }
        }
    }

    #[test]
    fn baseline_is_deterministic_and_round_sensitive() {
        let params = SecurityParams::simulation(64).unwrap();
        let c = SelectionFraction::new(1, 2).unwrap();
        let kp = crate::vrf::vrf_gen(&params, b"baseline-client").unwrap();
        let a = baseline_select(&params, &c, 5, &kp.pk);
        let b = baseline_select(&params, &c, 5, &kp.pk);
        assert_eq!(a, b);
        // Across many rounds the client flips between selected and not.
        let picks: Vec<bool> =
            (0..64).map(|r| baseline_select(&params, &c, r, &kp.pk)).collect();
        assert!(picks.iter().any(|&x| x));
        assert!(picks.iter().any(|&x| !x));
    }
}
