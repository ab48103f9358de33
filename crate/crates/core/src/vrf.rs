//! Verifiable random functions and the sortition threshold test.
//!
//! Two interchangeable constructions sit behind [`VrfMode`]:
//!
//! * [`VrfMode::Strict`] is a Schnorr/DLEQ VRF over ristretto255. The prover
//!   publishes Γ = x·H(pk‖input) together with a proof of discrete-log
//!   equality between (B, pk) and (H, Γ); the output is a hash of Γ alone, so
//!   for a fixed key and input there is exactly one output any verifier will
//!   accept.
//! * [`VrfMode::Simulation`] replaces the group arithmetic with a keyed hash
//!   whose "proof" is the secret key itself: verification recomputes the key
//!   commitment and the output. Uniqueness still holds (an accepting proof is
//!   a preimage of the public key), but pseudorandomness against the key
//!   holder is only heuristic. It exists so statistical sweeps over millions
//!   of evaluations stay cheap, and callers must opt in explicitly.
//!
//! Outputs are integers in [0, 2^κ). A client qualifies when its output falls
//! below ⌊c·2^κ⌋, with the fraction c kept in exact rational form so the
//! threshold never suffers float rounding.

use curve25519_dalek::constants::RISTRETTO_BASEPOINT_POINT;
use curve25519_dalek::ristretto::{CompressedRistretto, RistrettoPoint};
use curve25519_dalek::scalar::Scalar;
use curve25519_dalek::traits::VartimeMultiscalarMul;
use num_bigint::BigUint;
use serde::{Deserialize, Serialize};

use crate::encoding::{domain, sha256_tagged, sha512_tagged, truncate_digest};
use crate::{Error, Result};

const MODE_STRICT: u8 = 0x01;
const MODE_SIM: u8 = 0x02;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VrfMode {
    Strict,
    Simulation,
}

/// κ and the VRF output width, fixed per experiment.
///
/// κ counts bits and must be byte-aligned; the sortition math, beacon
/// extraction and digest truncation all operate on κ-bit values.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SecurityParams {
    kappa: u16,
    vrf_output_bits: u16,
    mode: VrfMode,
}

impl SecurityParams {
    /// Strict-mode parameters. κ must be a multiple of 8 in [128, 256].
    pub fn strict(kappa: u16) -> Result<Self> {
        if !(128..=256).contains(&kappa) || kappa % 8 != 0 {
            return Err(Error::Params(format!(
                "strict mode requires kappa in [128, 256] and byte-aligned, got {kappa}"
            )));
        }
        Ok(Self { kappa, vrf_output_bits: kappa, mode: VrfMode::Strict })
    }

    /// Simulation-mode parameters. κ must be a multiple of 8 in [64, 256].
    pub fn simulation(kappa: u16) -> Result<Self> {
        if !(64..=256).contains(&kappa) || kappa % 8 != 0 {
            return Err(Error::Params(format!(
                "simulation mode requires kappa in [64, 256] and byte-aligned, got {kappa}"
            )));
        }
        Ok(Self { kappa, vrf_output_bits: kappa, mode: VrfMode::Simulation })
    }

    pub fn for_mode(mode: VrfMode, kappa: u16) -> Result<Self> {
        match mode {
            VrfMode::Strict => Self::strict(kappa),
            VrfMode::Simulation => Self::simulation(kappa),
        }
    }

    pub fn kappa(&self) -> u16 {
        self.kappa
    }

    pub fn kappa_bytes(&self) -> usize {
        self.kappa as usize / 8
    }

    pub fn mode(&self) -> VrfMode {
        self.mode
    }

    /// 2^κ, the exclusive upper bound of the output space.
    pub fn output_space(&self) -> BigUint {
        BigUint::from(1u32) << self.kappa as usize
    }
}

/// Selection fraction c = num/den with 0 < c <= 1, kept exact.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SelectionFraction {
    num: u64,
    den: u64,
}

impl SelectionFraction {
    pub fn new(num: u64, den: u64) -> Result<Self> {
        if num == 0 || den == 0 || num > den {
            return Err(Error::Params(format!(
                "selection fraction must satisfy 0 < num/den <= 1, got {num}/{den}"
            )));
        }
        Ok(Self { num, den })
    }

    pub fn numerator(&self) -> u64 {
        self.num
    }

    pub fn denominator(&self) -> u64 {
        self.den
    }

    pub fn as_f64(&self) -> f64 {
        self.num as f64 / self.den as f64
    }

    /// ⌊c·2^κ⌋ computed by exact integer arithmetic.
    pub fn threshold(&self, params: &SecurityParams) -> BigUint {
        (BigUint::from(self.num) << params.kappa as usize) / BigUint::from(self.den)
    }
}

impl std::fmt::Display for SelectionFraction {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}/{}", self.num, self.den)
    }
}

impl std::str::FromStr for SelectionFraction {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let (num, den) = s
            .split_once('/')
            .ok_or_else(|| Error::Params(format!("expected \"num/den\", got {s:?}")))?;
        let num = num.trim().parse::<u64>().map_err(|e| Error::Params(e.to_string()))?;
        let den = den.trim().parse::<u64>().map_err(|e| Error::Params(e.to_string()))?;
        Self::new(num, den)
    }
}

impl Serialize for SelectionFraction {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for SelectionFraction {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Public key; doubles as the client identity everywhere (registry entries,
/// tree leaves, transaction fields). Ordering is byte-lexicographic on the
/// canonical encoding.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct PublicKey(Vec<u8>);

impl PublicKey {
    pub fn as_bytes(&self) -> &[u8] {
        &self.0
    }

    pub fn to_hex(&self) -> String {
        hex::encode(&self.0)
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        if bytes.len() != 33 || (bytes[0] != MODE_STRICT && bytes[0] != MODE_SIM) {
            return Err(Error::Vrf("malformed public key".into()));
        }
        Ok(Self(bytes.to_vec()))
    }
}

impl AsRef<[u8]> for PublicKey {
    fn as_ref(&self) -> &[u8] {
        &self.0
    }
}

#[derive(Clone)]
pub struct SecretKey(Vec<u8>);

impl SecretKey {
    pub fn as_bytes(&self) -> &[u8] {
        &self.0
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        match bytes.first() {
            Some(&MODE_STRICT) if bytes.len() == 65 => Ok(Self(bytes.to_vec())),
            Some(&MODE_SIM) if bytes.len() == 33 => Ok(Self(bytes.to_vec())),
            _ => Err(Error::Vrf("malformed secret key".into())),
        }
    }
}

impl std::fmt::Debug for SecretKey {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        // Never print key material.
        write!(f, "SecretKey(..)")
    }
}

#[derive(Debug, Clone)]
pub struct KeyPair {
    pub sk: SecretKey,
    pub pk: PublicKey,
}

/// One VRF evaluation: the κ-bit output and the proof bytes that let anyone
/// verify it against the public key and input.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VrfEvaluation {
    pub output: BigUint,
    pub proof: Vec<u8>,
}

fn scalar_from_wide(tag: &[u8], parts: &[&[u8]]) -> Scalar {
    Scalar::from_bytes_mod_order_wide(&sha512_tagged(tag, parts))
}

/// Deterministic key generation from a seed. The same seed always yields the
/// same pair; distinct seeds yield distinct pairs except with negligible
/// probability.
pub fn vrf_gen(params: &SecurityParams, seed: &[u8]) -> Result<KeyPair> {
    if seed.is_empty() {
        return Err(Error::Vrf("empty key seed".into()));
    }
    match params.mode {
        VrfMode::Strict => {
            let x = scalar_from_wide(domain::VRF_KEY, &[seed]);
            let pk_point = (x * RISTRETTO_BASEPOINT_POINT).compress();
            let mut sk = Vec::with_capacity(65);
            sk.push(MODE_STRICT);
            sk.extend_from_slice(x.as_bytes());
            sk.extend_from_slice(pk_point.as_bytes());
            let mut pk = Vec::with_capacity(33);
            pk.push(MODE_STRICT);
            pk.extend_from_slice(pk_point.as_bytes());
            Ok(KeyPair { sk: SecretKey(sk), pk: PublicKey(pk) })
        }
        VrfMode::Simulation => {
            let core = sha256_tagged(domain::SIM_SK, &[seed]);
            let pk_core = sha256_tagged(domain::SIM_PK, &[&core]);
            let mut sk = Vec::with_capacity(33);
            sk.push(MODE_SIM);
            sk.extend_from_slice(&core);
            let mut pk = Vec::with_capacity(33);
            pk.push(MODE_SIM);
            pk.extend_from_slice(&pk_core);
            Ok(KeyPair { sk: SecretKey(sk), pk: PublicKey(pk) })
        }
    }
}

/// Evaluate the VRF on `input`. Deterministic: proving twice yields identical
/// output and proof bytes.
pub fn vrf_prove(params: &SecurityParams, sk: &SecretKey, input: &[u8]) -> Result<VrfEvaluation> {
    match (params.mode, sk.0.first()) {
        (VrfMode::Strict, Some(&MODE_STRICT)) => {
            if sk.0.len() != 65 {
                return Err(Error::Vrf("malformed secret key".into()));
            }
            let x: Option<Scalar> =
                Scalar::from_canonical_bytes(sk.0[1..33].try_into().unwrap()).into();
            let x = x.ok_or_else(|| Error::Vrf("malformed secret key".into()))?;
            let pk_bytes = &sk.0[33..65];

            let h = RistrettoPoint::from_uniform_bytes(&sha512_tagged(
                domain::VRF_H2C,
                &[pk_bytes, input],
            ));
            let gamma = x * h;
            let gamma_c = gamma.compress();

            let k = scalar_from_wide(domain::VRF_NONCE, &[&sk.0[1..33], gamma_c.as_bytes(), input]);
            let u = (k * RISTRETTO_BASEPOINT_POINT).compress();
            let v = (k * h).compress();
            let c = scalar_from_wide(
                domain::VRF_CHALLENGE,
                &[
                    pk_bytes,
                    h.compress().as_bytes(),
                    gamma_c.as_bytes(),
                    u.as_bytes(),
                    v.as_bytes(),
                ],
            );
            let s = k + c * x;

            let mut proof = Vec::with_capacity(96);
            proof.extend_from_slice(gamma_c.as_bytes());
            proof.extend_from_slice(c.as_bytes());
            proof.extend_from_slice(s.as_bytes());

            let output = truncate_digest(
                &sha256_tagged(domain::VRF_OUT, &[gamma_c.as_bytes()]),
                params.kappa,
            );
            Ok(VrfEvaluation { output, proof })
        }
        (VrfMode::Simulation, Some(&MODE_SIM)) => {
            if sk.0.len() != 33 {
                return Err(Error::Vrf("malformed secret key".into()));
            }
            let core = &sk.0[1..33];
            let output =
                truncate_digest(&sha256_tagged(domain::SIM_OUT, &[core, input]), params.kappa);
            Ok(VrfEvaluation { output, proof: core.to_vec() })
        }
        _ => Err(Error::Vrf("secret key mode does not match parameters".into())),
    }
}

/// Check a claimed evaluation against a public key and input. Returns false
/// on any defect: wrong output, undecodable proof, wrong mode, foreign key.
pub fn vrf_verify(
    params: &SecurityParams,
    pk: &PublicKey,
    input: &[u8],
    eval: &VrfEvaluation,
) -> bool {
    if eval.output >= params.output_space() {
        return false;
    }
    match (params.mode, pk.0.first()) {
        (VrfMode::Strict, Some(&MODE_STRICT)) => {
            if pk.0.len() != 33 || eval.proof.len() != 96 {
                return false;
            }
            let pk_bytes: &[u8] = &pk.0[1..33];
            let Some(y) = CompressedRistretto::from_slice(pk_bytes)
                .ok()
                .and_then(|c| c.decompress())
            else {
                return false;
            };
            let Some(gamma) = CompressedRistretto::from_slice(&eval.proof[..32])
                .ok()
                .and_then(|c| c.decompress())
            else {
                return false;
            };
            let c: Option<Scalar> =
                Scalar::from_canonical_bytes(eval.proof[32..64].try_into().unwrap()).into();
            let Some(c) = c else { return false };
            let s: Option<Scalar> =
                Scalar::from_canonical_bytes(eval.proof[64..96].try_into().unwrap()).into();
            let Some(s) = s else { return false };

            let h = RistrettoPoint::from_uniform_bytes(&sha512_tagged(
                domain::VRF_H2C,
                &[pk_bytes, input],
            ));
            // u = s·B − c·pk and v = s·h − c·Γ reconstruct the prover's
            // commitments iff the DLEQ relation holds.
            let u = RistrettoPoint::vartime_double_scalar_mul_basepoint(&-c, &y, &s);
            let v = RistrettoPoint::vartime_multiscalar_mul([s, -c], [h, gamma]);
            let expected_c = scalar_from_wide(
                domain::VRF_CHALLENGE,
                &[
                    pk_bytes,
                    h.compress().as_bytes(),
                    eval.proof[..32].try_into().unwrap(),
                    u.compress().as_bytes(),
                    v.compress().as_bytes(),
                ],
            );
            if expected_c != c {
                return false;
            }
            let expected_out = truncate_digest(
                &sha256_tagged(domain::VRF_OUT, &[&eval.proof[..32]]),
                params.kappa,
            );
            expected_out == eval.output
        }
        (VrfMode::Simulation, Some(&MODE_SIM)) => {
            if pk.0.len() != 33 || eval.proof.len() != 32 {
                return false;
            }
            let pk_core = sha256_tagged(domain::SIM_PK, &[&eval.proof]);
            if pk_core[..] != pk.0[1..33] {
                return false;
            }
            let expected =
                truncate_digest(&sha256_tagged(domain::SIM_OUT, &[&eval.proof, input]), params.kappa);
            expected == eval.output
        }
        _ => false,
    }
}

/// Sortition predicate: output < ⌊c·2^κ⌋.
pub fn is_qualified(params: &SecurityParams, c: &SelectionFraction, output: &BigUint) -> bool {
    *output < c.threshold(params)
}
