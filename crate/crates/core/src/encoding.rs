//! Canonical binary encodings and hashing helpers.
//!
//! Everything that gets hashed or measured for on-chain byte costs goes
//! through this module so there is exactly one encoding per object. Encodings
//! are length-prefixed (u32 big-endian) for variable-length fields and
//! fixed-width big-endian for integers, so they are unambiguous and
//! reproducible across runs.

use num_bigint::BigUint;
use sha2::{Digest as _, Sha256, Sha512};

/// Domain-separation tags. Every hash invocation in the crate states which
/// context it belongs to, so values from one context can never collide with
/// another.
pub mod domain {
    pub const MERKLE_LEAF: &[u8] = b"fedsel/merkle/leaf";
    pub const MERKLE_NODE: &[u8] = b"fedsel/merkle/node";
    pub const MERKLE_EMPTY: &[u8] = b"fedsel/merkle/empty";
    pub const HEADER: &[u8] = b"fedsel/chain/header";
    pub const BEACON: &[u8] = b"fedsel/chain/beacon";
    pub const BASELINE: &[u8] = b"fedsel/select/baseline";
    pub const VRF_KEY: &[u8] = b"fedsel/vrf/keygen";
    pub const VRF_H2C: &[u8] = b"fedsel/vrf/point";
    pub const VRF_NONCE: &[u8] = b"fedsel/vrf/nonce";
    pub const VRF_CHALLENGE: &[u8] = b"fedsel/vrf/challenge";
    pub const VRF_OUT: &[u8] = b"fedsel/vrf/output";
    pub const SIM_SK: &[u8] = b"fedsel/simvrf/sk";
    pub const SIM_PK: &[u8] = b"fedsel/simvrf/pk";
    pub const SIM_OUT: &[u8] = b"fedsel/simvrf/output";
    pub const SEED_TREE: &[u8] = b"fedsel/seed";
}

/// SHA-256 over the concatenation of `parts`, each preceded by the domain tag
/// once at the front.
pub fn sha256_tagged(tag: &[u8], parts: &[&[u8]]) -> [u8; 32] {
    let mut h = Sha256::new();
    h.update((tag.len() as u32).to_be_bytes());
    h.update(tag);
    for p in parts {
        h.update((p.len() as u32).to_be_bytes());
        h.update(p);
    }
    h.finalize().into()
}

/// SHA-512 variant, used where 64 uniform bytes are needed (scalar and point
/// derivation).
pub fn sha512_tagged(tag: &[u8], parts: &[&[u8]]) -> [u8; 64] {
    let mut h = Sha512::new();
    h.update((tag.len() as u32).to_be_bytes());
    h.update(tag);
    for p in parts {
        h.update((p.len() as u32).to_be_bytes());
        h.update(p);
    }
    h.finalize().into()
}

/// First `bits` bits of a 32-byte digest as an unsigned integer.
/// `bits` must be in 1..=256.
pub fn truncate_digest(digest: &[u8; 32], bits: u16) -> BigUint {
    debug_assert!((1..=256).contains(&bits));
    BigUint::from_bytes_be(digest) >> (256 - bits as usize)
}

/// Big-endian fixed-width encoding of `x`, left-padded with zeros.
/// Panics if `x` does not fit, which would indicate a corrupted value.
pub fn to_fixed_be(x: &BigUint, len: usize) -> Vec<u8> {
    let raw = x.to_bytes_be();
    assert!(raw.len() <= len, "value wider than {len} bytes");
    let mut out = vec![0u8; len];
    out[len - raw.len()..].copy_from_slice(&raw);
    out
}

/// Incremental canonical encoder.
#[derive(Default)]
pub struct Encoder {
    buf: Vec<u8>,
}

impl Encoder {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn u8(mut self, v: u8) -> Self {
        self.buf.push(v);
        self
    }

    pub fn u32(mut self, v: u32) -> Self {
        self.buf.extend_from_slice(&v.to_be_bytes());
        self
    }

    pub fn u64(mut self, v: u64) -> Self {
        self.buf.extend_from_slice(&v.to_be_bytes());
        self
    }

    /// Length-prefixed variable-size field.
    pub fn bytes(mut self, v: &[u8]) -> Self {
        self.buf.extend_from_slice(&(v.len() as u32).to_be_bytes());
        self.buf.extend_from_slice(v);
        self
    }

    /// Length-prefixed list of length-prefixed items.
    pub fn list<T: AsRef<[u8]>>(mut self, items: &[T]) -> Self {
        self.buf.extend_from_slice(&(items.len() as u32).to_be_bytes());
        for it in items {
            self = self.bytes(it.as_ref());
        }
        self
    }

    pub fn finish(self) -> Vec<u8> {
        self.buf
    }
}
