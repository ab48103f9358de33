//! Sorted-tree integration checks: an independently coded reference root,
//! frozen digests, proof completeness over arbitrary leaf sets, and a
//! mutation sweep over every proof field.

use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use fedsel_core::encoding::{domain, sha256_tagged};
use fedsel_core::merkle::{
    verify_absence, verify_membership, verify_proof, Digest, MerkleProof, MerkleRoot,
    NonMembershipProof, Side, SortedMerkleTree,
};
use fedsel_core::vrf::SecurityParams;

/// Reference implementation, written from the documented layout: sort the
/// leaves, hash each under the leaf tag, then repeatedly pair left to right
/// under the node tag, promoting an unpaired tail digest as-is.
fn reference_root(params: &SecurityParams, values: &[Vec<u8>]) -> MerkleRoot {
    let tag = |d: [u8; 32]| Digest(d[..params.kappa_bytes()].to_vec());
    if values.is_empty() {
        return MerkleRoot { digest: tag(sha256_tagged(domain::MERKLE_EMPTY, &[])), leaf_count: 0 };
    }
    let mut sorted = values.to_vec();
    sorted.sort();
    let mut layer: Vec<Digest> = sorted
        .iter()
        .map(|v| tag(sha256_tagged(domain::MERKLE_LEAF, &[v])))
        .collect();
    while layer.len() > 1 {
        layer = layer
            .chunks(2)
            .map(|pair| match pair {
                [l, r] => tag(sha256_tagged(domain::MERKLE_NODE, &[&l.0, &r.0])),
                [single] => single.clone(),
                _ => unreachable!(),
            })
            .collect();
    }
    MerkleRoot { digest: layer.pop().unwrap(), leaf_count: sorted.len() as u64 }
}

fn words(list: &[&str]) -> Vec<Vec<u8>> {
    list.iter().map(|w| w.as_bytes().to_vec()).collect()
}

#[test]
fn frozen_roots() {
    let leaves = words(&["ant", "bee", "cat", "dog", "eel"]);
    let p64 = SecurityParams::simulation(64).unwrap();
    let t64 = SortedMerkleTree::build(&p64, leaves.clone()).unwrap();
    assert_eq!(t64.root().digest.to_hex(), "3b2c15ba5541a3d3");
    let p128 = SecurityParams::simulation(128).unwrap();
    let t128 = SortedMerkleTree::build(&p128, leaves).unwrap();
    assert_eq!(t128.root().digest.to_hex(), "560f9cc5bb2b1772d85af16a77739006");
}

#[test]
fn reference_root_agrees_on_awkward_sizes() {
    let params = SecurityParams::simulation(64).unwrap();
    for n in 0..=33u32 {
        let leaves: Vec<Vec<u8>> = (0..n).map(|i| format!("leaf-{i:03}").into_bytes()).collect();
        let tree = SortedMerkleTree::build(&params, leaves.clone()).unwrap();
        assert_eq!(tree.root(), reference_root(&params, &leaves), "n = {n}");
    }
}

#[test]
fn empty_tree_has_the_sentinel_root_and_proves_absence() {
    let params = SecurityParams::simulation(64).unwrap();
    let tree = SortedMerkleTree::build(&params, Vec::<Vec<u8>>::new()).unwrap();
    assert_eq!(tree.root(), MerkleRoot::empty(&params));
    let proof = tree.prove_absence(b"anything").unwrap();
    assert!(matches!(proof, NonMembershipProof::EmptySet));
    assert!(verify_absence(&params, &tree.root(), b"anything", &proof));
    // The sentinel is only valid against an empty commitment.
    let other = SortedMerkleTree::build(&params, words(&["x"])).unwrap();
    assert!(!verify_absence(&params, &other.root(), b"anything", &proof));
}

proptest! {
    /// Any duplicate-free leaf set: the root matches the reference
    /// construction, every member proves in, every probe value that is not
    /// a leaf proves out, and paths stay logarithmic.
    #[test]
    fn complete_over_arbitrary_leaf_sets(
        set in proptest::collection::btree_set(
            proptest::collection::vec(any::<u8>(), 0..12), 0..40),
        probes in proptest::collection::vec(
            proptest::collection::vec(any::<u8>(), 0..12), 0..8),
    ) {
        let params = SecurityParams::simulation(64).unwrap();
        let leaves: Vec<Vec<u8>> = set.iter().cloned().collect();
        let tree = SortedMerkleTree::build(&params, leaves.clone()).unwrap();
        let root = tree.root();
        prop_assert_eq!(&root, &reference_root(&params, &leaves));
        prop_assert_eq!(root.leaf_count, leaves.len() as u64);

        let depth_cap = (usize::BITS - leaves.len().saturating_sub(1).leading_zeros()) as usize;
        for leaf in &leaves {
            let path = tree.prove_membership(leaf).unwrap();
            prop_assert!(verify_membership(&params, &root, leaf, &path));
            prop_assert!(path.steps.len() <= depth_cap,
                         "path {} deep in a {}-leaf tree", path.steps.len(), leaves.len());
            prop_assert_eq!(verify_proof(&params, &root, leaf, &tree.prove(leaf)), Some(true));
        }
        for probe in &probes {
            if set.contains(probe) {
                prop_assert!(tree.prove_absence(probe).is_err());
                continue;
            }
            let proof = tree.prove_absence(probe).unwrap();
            prop_assert!(verify_absence(&params, &root, probe, &proof));
            prop_assert_eq!(verify_proof(&params, &root, probe, &tree.prove(probe)), Some(false));
        }
    }

    /// A proof is bound to its root: replaying it against a different tree
    /// fails unless the trees are identical.
    #[test]
    fn proofs_do_not_transfer_between_trees(extra in proptest::collection::vec(any::<u8>(), 1..12)) {
        let params = SecurityParams::simulation(64).unwrap();
        let base = words(&["ant", "bee", "cat", "dog", "eel", "fox"]);
        let tree_a = SortedMerkleTree::build(&params, base.clone()).unwrap();
        let mut grown = base.clone();
        if !base.contains(&extra) {
            grown.push(extra);
        } else {
            grown.push(b"gnu".to_vec());
        }
        let tree_b = SortedMerkleTree::build(&params, grown).unwrap();
        let path = tree_a.prove_membership(b"cat").unwrap();
        prop_assert!(!verify_membership(&params, &tree_b.root(), b"cat", &path));
    }
}

/// 10^4 random corruptions of valid membership paths; none may verify.
#[test]
fn membership_mutation_fuzz() {
    let params = SecurityParams::simulation(64).unwrap();
    let leaves: Vec<Vec<u8>> = (0..50u32).map(|i| format!("member-{i:02}").into_bytes()).collect();
    let tree = SortedMerkleTree::build(&params, leaves.clone()).unwrap();
    let root = tree.root();
    let paths: Vec<_> = tree.leaves().iter().map(|l| tree.prove_membership(l).unwrap()).collect();

    let mut rng = ChaCha8Rng::seed_from_u64(0x3e51_e007);
    let mut rejected = 0u32;
    for _ in 0..10_000 {
        let i = rng.gen_range(0..paths.len());
        let mut path = paths[i].clone();
        let mut value = path.leaf.clone();
        match rng.gen_range(0..7u8) {
            0 => {
                // Corrupt one sibling digest bit.
                let s = rng.gen_range(0..path.steps.len());
                let bit = rng.gen_range(0..params.kappa() as usize);
                path.steps[s].sibling.0[bit / 8] ^= 1 << (bit % 8);
            }
            1 => {
                // Claim a different position.
                let other = (path.index + rng.gen_range(1..root.leaf_count)) % root.leaf_count;
                path.index = other;
            }
            2 => {
                // Lie about the committed set size.
                path.leaf_count = if rng.gen() { path.leaf_count + 1 } else { path.leaf_count - 1 };
            }
            3 => {
                // Flip one step's side.
                let s = rng.gen_range(0..path.steps.len());
                path.steps[s].side = match path.steps[s].side {
                    Side::Left => Side::Right,
                    Side::Right => Side::Left,
                };
            }
            4 => {
                // Truncate the path.
                path.steps.pop();
            }
            5 => {
                // Pad the path with a copy of its last step.
                let last = path.steps.last().unwrap().clone();
                path.steps.push(last);
            }
            _ => {
                // Present another leaf's bytes with this leaf's path.
                let j = (i + 1 + rng.gen_range(0..leaves.len() - 1)) % leaves.len();
                value = tree.leaves()[j].clone();
                path.leaf = value.clone();
            }
        }
        rejected += !verify_membership(&params, &root, &value, &path) as u32;
    }
    assert_eq!(rejected, 10_000, "a corrupted path verified");
}

/// Absence proofs must fail when aimed at the wrong gap, at a value that is
/// actually present, or when their inner paths are corrupted.
#[test]
fn absence_proofs_reject_misuse() {
    let params = SecurityParams::simulation(64).unwrap();
    let tree = SortedMerkleTree::build(
        &params,
        words(&["bat", "cow", "hen", "owl", "ram", "sow"]),
    )
    .unwrap();
    let root = tree.root();

    // Valid enclosure for "dog" (between "cow" and "hen").
    let dog = tree.prove_absence(b"dog").unwrap();
    assert!(verify_absence(&params, &root, b"dog", &dog));
    // Same proof aimed at values outside the gap, or at a member.
    assert!(!verify_absence(&params, &root, b"ape", &dog));
    assert!(!verify_absence(&params, &root, b"pig", &dog));
    assert!(!verify_absence(&params, &root, b"cow", &dog));
    assert!(!verify_absence(&params, &root, b"hen", &dog));

    // Non-adjacent enclosure: splice paths from distinct gaps.
    let pig = tree.prove_absence(b"pig").unwrap();
    if let (
        NonMembershipProof::Enclosed { left, .. },
        NonMembershipProof::Enclosed { right, .. },
    ) = (&dog, &pig)
    {
        let spliced =
            NonMembershipProof::Enclosed { left: left.clone(), right: right.clone() };
        // "owl" sits between "hen" and "ram"; the spliced gap skips leaves.
        assert!(!verify_absence(&params, &root, b"owl", &spliced));
    } else {
        panic!("expected interior gaps");
    }

    // Boundary proofs only work on their own side of the leaf range.
    let before = tree.prove_absence(b"ant").unwrap();
    assert!(verify_absence(&params, &root, b"ant", &before));
    assert!(!verify_absence(&params, &root, b"yak", &before));
    let after = tree.prove_absence(b"yak").unwrap();
    assert!(verify_absence(&params, &root, b"yak", &after));
    assert!(!verify_absence(&params, &root, b"ant", &after));

    // Corrupt the inner path of an otherwise well-aimed proof.
    if let NonMembershipProof::Enclosed { left, right } = &dog {
        let mut bad = left.clone();
        bad.steps[0].sibling.0[0] ^= 1;
        let proof = NonMembershipProof::Enclosed { left: bad, right: right.clone() };
        assert!(!verify_absence(&params, &root, b"dog", &proof));
    }

    // Absence claims never validate for members via the combined check.
    for leaf in tree.leaves() {
        assert_eq!(verify_proof(&params, &root, leaf, &tree.prove(leaf)), Some(true));
    }
}

/// Duplicate leaves are a construction error, not a silent dedup.
#[test]
fn duplicates_rejected_at_build() {
    let params = SecurityParams::simulation(64).unwrap();
    let err = SortedMerkleTree::build(&params, words(&["ant", "bee", "ant"]));
    assert!(err.is_err());
}

/// The committed root pins both digest and leaf count; a proof computed
/// against a superset or subset never verifies even if digests collide on
/// truncation width. Exercised at the narrowest supported width, where
/// truncation pressure is highest.
#[test]
fn leaf_count_is_part_of_the_commitment() {
    let params = SecurityParams::simulation(64).unwrap();
    let small = SortedMerkleTree::build(&params, words(&["a", "b", "c"])).unwrap();
    let big = SortedMerkleTree::build(&params, words(&["a", "b", "c", "d"])).unwrap();
    let path = small.prove_membership(b"a").unwrap();
    assert!(verify_membership(&params, &small.root(), b"a", &path));
    assert!(!verify_membership(&params, &big.root(), b"a", &path));

    let mut forged = big.root();
    forged.leaf_count = 3;
    assert!(!verify_membership(&params, &forged, b"a", &path));
}

#[test]
fn proof_encodings_are_nonempty_and_distinct() {
    let params = SecurityParams::simulation(64).unwrap();
    let tree = SortedMerkleTree::build(&params, words(&["ant", "bee", "cat"])).unwrap();
    let member = tree.prove(b"ant");
    let absent = tree.prove(b"bug");
    let me = member.encoded();
    let ae = absent.encoded();
    assert!(!me.is_empty() && !ae.is_empty());
    assert_ne!(me, ae);
    assert!(matches!(member, MerkleProof::Member(_)));
    assert!(matches!(absent, MerkleProof::NonMember(_)));
}
