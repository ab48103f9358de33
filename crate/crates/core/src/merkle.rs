//! Sorted Merkle trees with membership and non-membership proofs.
//!
//! Leaves are byte strings stored in strictly increasing order, so adjacency
//! is meaningful: a value's absence is proven by the two neighbouring leaves
//! that would enclose it (or by a single boundary leaf, or by the empty-set
//! sentinel). Leaf and interior hashes use distinct domain tags, which pins
//! the tree shape: a leaf digest cannot be reinterpreted as an interior node.
//!
//! An odd node at any level is promoted unpaired to the next level. Digest
//! width is κ bits, matching the security parameter of the surrounding
//! protocol.

use serde::{Deserialize, Serialize};

use crate::encoding::{domain, sha256_tagged, Encoder};
use crate::vrf::SecurityParams;
use crate::{Error, Result};

/// κ-bit hash value.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Digest(pub Vec<u8>);

impl Digest {
    pub fn to_hex(&self) -> String {
        hex::encode(&self.0)
    }
}

impl AsRef<[u8]> for Digest {
    fn as_ref(&self) -> &[u8] {
        &self.0
    }
}

fn leaf_hash(params: &SecurityParams, value: &[u8]) -> Digest {
    let d = sha256_tagged(domain::MERKLE_LEAF, &[value]);
    Digest(d[..params.kappa_bytes()].to_vec())
}

fn node_hash(params: &SecurityParams, left: &Digest, right: &Digest) -> Digest {
    let d = sha256_tagged(domain::MERKLE_NODE, &[&left.0, &right.0]);
    Digest(d[..params.kappa_bytes()].to_vec())
}

fn empty_digest(params: &SecurityParams) -> Digest {
    let d = sha256_tagged(domain::MERKLE_EMPTY, &[]);
    Digest(d[..params.kappa_bytes()].to_vec())
}

/// Root commitment: digest plus the committed leaf count.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct MerkleRoot {
    pub digest: Digest,
    pub leaf_count: u64,
}

impl MerkleRoot {
    /// Commitment to the empty set.
    pub fn empty(params: &SecurityParams) -> Self {
        Self { digest: empty_digest(params), leaf_count: 0 }
    }

    pub fn encoded(&self) -> Vec<u8> {
        Encoder::new().u64(self.leaf_count).bytes(&self.digest.0).finish()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Side {
    Left,
    Right,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PathStep {
    pub sibling: Digest,
    pub side: Side,
}

/// Authentication path for one leaf. `index` and `leaf_count` fix the tree
/// geometry, so a verifier knows at which levels a promotion (no sibling)
/// must occur and on which side each sibling must sit.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MembershipPath {
    pub leaf: Vec<u8>,
    pub index: u64,
    pub leaf_count: u64,
    pub steps: Vec<PathStep>,
}

impl MembershipPath {
    /// Canonical encoding; its length is the on-chain byte cost of shipping
    /// this path inside a transaction.
    pub fn encoded(&self) -> Vec<u8> {
        let mut enc = Encoder::new().u64(self.index).u64(self.leaf_count).bytes(&self.leaf);
        enc = enc.u32(self.steps.len() as u32);
        for step in &self.steps {
            enc = enc.bytes(&step.sibling.0).u8(match step.side {
                Side::Left => 0,
                Side::Right => 1,
            });
        }
        enc.finish()
    }
}

/// Proof that a value is not a leaf: either the adjacent enclosing pair, a
/// boundary leaf, or the empty-set sentinel.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum NonMembershipProof {
    Enclosed { left: MembershipPath, right: MembershipPath },
    BeforeFirst { first: MembershipPath },
    AfterLast { last: MembershipPath },
    EmptySet,
}

impl NonMembershipProof {
    pub fn encoded(&self) -> Vec<u8> {
        match self {
            Self::Enclosed { left, right } => {
                Encoder::new().u8(0).bytes(&left.encoded()).bytes(&right.encoded()).finish()
            }
            Self::BeforeFirst { first } => Encoder::new().u8(1).bytes(&first.encoded()).finish(),
            Self::AfterLast { last } => Encoder::new().u8(2).bytes(&last.encoded()).finish(),
            Self::EmptySet => Encoder::new().u8(3).finish(),
        }
    }
}

/// Either kind of proof, as produced for a query against the tree.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum MerkleProof {
    Member(MembershipPath),
    NonMember(NonMembershipProof),
}

impl MerkleProof {
    pub fn encoded(&self) -> Vec<u8> {
        match self {
            Self::Member(p) => Encoder::new().u8(0).bytes(&p.encoded()).finish(),
            Self::NonMember(p) => Encoder::new().u8(1).bytes(&p.encoded()).finish(),
        }
    }
}

/// Sorted Merkle tree over distinct byte-string leaves.
#[derive(Debug, Clone)]
pub struct SortedMerkleTree {
    params: SecurityParams,
    leaves: Vec<Vec<u8>>,
    // levels[0] = leaf digests, last level = [root digest] (absent when empty)
    levels: Vec<Vec<Digest>>,
}

impl SortedMerkleTree {
    /// Build from arbitrary-order values. Values are sorted internally;
    /// a duplicate is an error because leaves are identities.
    pub fn build<I>(params: &SecurityParams, values: I) -> Result<Self>
    where
        I: IntoIterator<Item = Vec<u8>>,
    {
        let mut leaves: Vec<Vec<u8>> = values.into_iter().collect();
        leaves.sort_unstable();
        if leaves.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::Merkle("duplicate leaf value".into()));
        }
        let mut levels: Vec<Vec<Digest>> = Vec::new();
        if !leaves.is_empty() {
            let mut level: Vec<Digest> =
                leaves.iter().map(|v| leaf_hash(params, v)).collect();
            levels.push(level.clone());
            while level.len() > 1 {
                let mut next = Vec::with_capacity(level.len().div_ceil(2));
                for pair in level.chunks(2) {
                    match pair {
                        [l, r] => next.push(node_hash(params, l, r)),
                        [odd] => next.push(odd.clone()),
                        _ => unreachable!(),
                    }
                }
                levels.push(next.clone());
                level = next;
            }
        }
        Ok(Self { params: *params, leaves, levels })
    }

    pub fn leaf_count(&self) -> u64 {
        self.leaves.len() as u64
    }

    pub fn leaves(&self) -> &[Vec<u8>] {
        &self.leaves
    }

    pub fn root(&self) -> MerkleRoot {
        match self.levels.last() {
            Some(top) => MerkleRoot { digest: top[0].clone(), leaf_count: self.leaf_count() },
            None => MerkleRoot::empty(&self.params),
        }
    }

    fn path_for_index(&self, index: usize) -> MembershipPath {
        let mut steps = Vec::new();
        let mut pos = index;
        for level in &self.levels[..self.levels.len().saturating_sub(1)] {
            let width = level.len();
            if pos % 2 == 0 {
                if pos + 1 < width {
                    steps.push(PathStep { sibling: level[pos + 1].clone(), side: Side::Right });
                }
                // else: promoted unpaired, no step at this level
            } else {
                steps.push(PathStep { sibling: level[pos - 1].clone(), side: Side::Left });
            }
            pos /= 2;
        }
        MembershipPath {
            leaf: self.leaves[index].clone(),
            index: index as u64,
            leaf_count: self.leaf_count(),
            steps,
        }
    }

    /// Membership path for a present value; error if the value is no leaf.
    pub fn prove_membership(&self, value: &[u8]) -> Result<MembershipPath> {
        let idx = self
            .leaves
            .binary_search_by(|l| l.as_slice().cmp(value))
            .map_err(|_| Error::Merkle("value is not a leaf".into()))?;
        Ok(self.path_for_index(idx))
    }

    /// Non-membership proof for an absent value; error if present.
    pub fn prove_absence(&self, value: &[u8]) -> Result<NonMembershipProof> {
        if self.leaves.is_empty() {
            return Ok(NonMembershipProof::EmptySet);
        }
        match self.leaves.binary_search_by(|l| l.as_slice().cmp(value)) {
            Ok(_) => Err(Error::Merkle("value is a leaf; absence unprovable".into())),
            Err(0) => Ok(NonMembershipProof::BeforeFirst { first: self.path_for_index(0) }),
            Err(i) if i == self.leaves.len() => {
                Ok(NonMembershipProof::AfterLast { last: self.path_for_index(i - 1) })
            }
            Err(i) => Ok(NonMembershipProof::Enclosed {
                left: self.path_for_index(i - 1),
                right: self.path_for_index(i),
            }),
        }
    }

    /// Convenience: membership or absence, whichever holds.
    pub fn prove(&self, value: &[u8]) -> MerkleProof {
        match self.prove_membership(value) {
            Ok(p) => MerkleProof::Member(p),
            Err(_) => MerkleProof::NonMember(
                self.prove_absence(value).expect("absent value must be provable"),
            ),
        }
    }
}

/// Verify that `value` is a leaf of the tree committed by `root`.
///
/// The path must carry the claimed value itself; a path for a different leaf
/// never verifies for `value`, even if the hashes are internally consistent.
pub fn verify_membership(
    params: &SecurityParams,
    root: &MerkleRoot,
    value: &[u8],
    path: &MembershipPath,
) -> bool {
    if path.leaf != value
        || path.leaf_count != root.leaf_count
        || path.index >= path.leaf_count
    {
        return false;
    }
    let mut acc = leaf_hash(params, value);
    let mut pos = path.index;
    let mut width = path.leaf_count;
    let mut steps = path.steps.iter();
    while width > 1 {
        if pos % 2 == 0 && pos + 1 == width {
            // promoted unpaired; geometry says no sibling exists here
        } else {
            let Some(step) = steps.next() else { return false };
            if step.sibling.0.len() != params.kappa_bytes() {
                return false;
            }
            let expected_side = if pos % 2 == 0 { Side::Right } else { Side::Left };
            if step.side != expected_side {
                return false;
            }
            acc = match step.side {
                Side::Right => node_hash(params, &acc, &step.sibling),
                Side::Left => node_hash(params, &step.sibling, &acc),
            };
        }
        pos /= 2;
        width = width.div_ceil(2);
    }
    steps.next().is_none() && acc == root.digest
}

/// Verify that `value` is absent from the tree committed by `root`.
pub fn verify_absence(
    params: &SecurityParams,
    root: &MerkleRoot,
    value: &[u8],
    proof: &NonMembershipProof,
) -> bool {
    match proof {
        NonMembershipProof::EmptySet => {
            root.leaf_count == 0 && root.digest == empty_digest(params)
        }
        NonMembershipProof::BeforeFirst { first } => {
            first.index == 0
                && value < first.leaf.as_slice()
                && verify_membership(params, root, &first.leaf, first)
        }
        NonMembershipProof::AfterLast { last } => {
            root.leaf_count > 0
                && last.index == root.leaf_count - 1
                && value > last.leaf.as_slice()
                && verify_membership(params, root, &last.leaf, last)
        }
        NonMembershipProof::Enclosed { left, right } => {
            right.index == left.index + 1
                && left.leaf.as_slice() < value
                && value < right.leaf.as_slice()
                && verify_membership(params, root, &left.leaf, left)
                && verify_membership(params, root, &right.leaf, right)
        }
    }
}

/// Verdict of checking either proof kind against a root.
pub fn verify_proof(
    params: &SecurityParams,
    root: &MerkleRoot,
    value: &[u8],
    proof: &MerkleProof,
) -> Option<bool> {
    match proof {
        MerkleProof::Member(p) => verify_membership(params, root, value, p).then_some(true),
        MerkleProof::NonMember(p) => verify_absence(params, root, value, p).then_some(false),
    }
}
