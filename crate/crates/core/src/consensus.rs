//! Block-sealing strategies: hash-based proof of work (plain or
//! memory-mixed), stake-weighted proposer selection, and a single-round
//! endorsement quorum.

use std::collections::{BTreeMap, BTreeSet};

use hmac::{Hmac, KeyInit, Mac};
use num_bigint::BigUint;
use num_traits::ToPrimitive;
use sha2::Sha256;
use thiserror::Error;

use crate::codec::{CodecError, Decode, Decoder, Encode, Encoder};
use crate::primitives::{sha256_concat, Address, Digest};

pub const MAX_DIFFICULTY_BITS: u8 = 24;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ConsensusError {
    #[error("difficulty {0} above desk-scale cap {MAX_DIFFICULTY_BITS}")]
    DifficultyTooHigh(u8),
    #[error("nonce space exhausted")]
    SearchExhausted,
    #[error("total stake is zero")]
    EmptyStake,
    #[error("proposal from unknown validator '{0}'")]
    UnknownValidator(String),
    #[error("no transaction reached the endorsement threshold")]
    NoQuorum,
    #[error("invalid quorum configuration: {0}")]
    BadConfig(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WorkVariant {
    PlainHash,
    MemoryMixed,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct WorkParams {
    pub difficulty_bits: u8,
    pub variant: WorkVariant,
    /// Buffer size in 32-byte blocks for `MemoryMixed`.
    pub memory_cost: u32,
}

impl WorkParams {
    pub fn plain(difficulty_bits: u8) -> Self {
        WorkParams { difficulty_bits, variant: WorkVariant::PlainHash, memory_cost: 0 }
    }

    pub fn memory_mixed(difficulty_bits: u8, memory_cost: u32) -> Self {
        WorkParams { difficulty_bits, variant: WorkVariant::MemoryMixed, memory_cost }
    }
}

/// Hash of `(header_digest, nonce)` under the chosen work function.
pub fn work_hash(header_digest: &Digest, nonce: u64, params: &WorkParams) -> Digest {
    let seed = sha256_concat(&[b"deedchain/work", header_digest.as_bytes(), &nonce.to_be_bytes()]);
    match params.variant {
        WorkVariant::PlainHash => seed,
        WorkVariant::MemoryMixed => memory_mix(seed, params.memory_cost.max(1) as usize),
    }
}

/// Fill a buffer with a hash chain, then fold it back in data-dependent
/// order.
fn memory_mix(seed: Digest, blocks: usize) -> Digest {
    let mut buf = Vec::with_capacity(blocks);
    let mut cur = seed;
    for _ in 0..blocks {
        cur = sha256_concat(&[cur.as_bytes()]);
        buf.push(cur);
    }
    let mut acc = cur;
    for _ in 0..blocks {
        let j = u64::from_be_bytes(acc.0[..8].try_into().expect("8 bytes")) as usize % blocks;
        acc = sha256_concat(&[acc.as_bytes(), buf[j].as_bytes()]);
    }
    acc
}

pub fn verify_pow(header_digest: &Digest, nonce: u64, params: &WorkParams) -> bool {
    params.difficulty_bits <= MAX_DIFFICULTY_BITS
        && work_hash(header_digest, nonce, params).leading_zero_bits() >= params.difficulty_bits as u32
}

/// Smallest nonce `n ≥ start_nonce` satisfying the work predicate.
pub fn pow_seal(header_digest: &Digest, params: &WorkParams, start_nonce: u64) -> Result<u64, ConsensusError> {
    if params.difficulty_bits > MAX_DIFFICULTY_BITS {
        return Err(ConsensusError::DifficultyTooHigh(params.difficulty_bits));
    }
    let mut n = start_nonce;
    loop {
        if verify_pow(header_digest, n, params) {
            return Ok(n);
        }
        n = n.checked_add(1).ok_or(ConsensusError::SearchExhausted)?;
    }
}

/// Validator id → stake. Iteration order (ascending id) defines the
/// cumulative intervals used for selection.
pub type StakeTable = BTreeMap<String, u128>;

/// `u = int(sha256(seed)) mod total_stake`; pick the validator whose
/// cumulative interval contains `u`.
pub fn pos_select_proposer(stakes: &StakeTable, round_seed: &Digest) -> Result<String, ConsensusError> {
    let total: u128 = stakes.values().sum();
    if total == 0 {
        return Err(ConsensusError::EmptyStake);
    }
    let h = sha256_concat(&[round_seed.as_bytes()]);
    let u = (BigUint::from_bytes_be(h.as_bytes()) % BigUint::from(total)).to_u128().expect("below total");
    let mut acc = 0u128;
    for (id, s) in stakes {
        acc += s;
        if u < acc {
            return Ok(id.clone());
        }
    }
    unreachable!("u < total stake")
}

/// Per-round seed: hash of the parent block hash and the new height.
pub fn pos_round_seed(parent_hash: &Digest, height: u64) -> Digest {
    sha256_concat(&[b"deedchain/pos-seed", parent_hash.as_bytes(), &height.to_be_bytes()])
}

/// Account credited with tips when `validator_id` proposes.
pub fn validator_address(validator_id: &str) -> Address {
    Address::derive(&format!("validator/{validator_id}"))
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct QuorumConfig {
    /// Validator id → signing key.
    pub validators: BTreeMap<String, Vec<u8>>,
    pub threshold_num: u64,
    pub threshold_den: u64,
}

impl QuorumConfig {
    pub fn new(validators: BTreeMap<String, Vec<u8>>) -> Self {
        QuorumConfig { validators, threshold_num: 4, threshold_den: 5 }
    }

    pub fn validate(&self) -> Result<(), ConsensusError> {
        if self.validators.is_empty() {
            return Err(ConsensusError::BadConfig("empty validator set".into()));
        }
        let (n, d) = (self.threshold_num as u128, self.threshold_den as u128);
        if d == 0 || 2 * n <= d || n > d {
            return Err(ConsensusError::BadConfig("threshold must lie in (1/2, 1]".into()));
        }
        Ok(())
    }

    /// `count / |validators| ≥ threshold`.
    pub fn meets_threshold(&self, count: usize) -> bool {
        count as u128 * self.threshold_den as u128 >= self.threshold_num as u128 * self.validators.len() as u128
    }
}

/// One endorsement-counting round. Returns agreed tx ids in ascending order.
pub fn quorum_round(
    proposals: &BTreeMap<String, BTreeSet<Digest>>,
    config: &QuorumConfig,
) -> Result<Vec<Digest>, ConsensusError> {
    config.validate()?;
    let mut counts: BTreeMap<Digest, usize> = BTreeMap::new();
    for (validator, txs) in proposals {
        if !config.validators.contains_key(validator) {
            return Err(ConsensusError::UnknownValidator(validator.clone()));
        }
        for t in txs {
            *counts.entry(*t).or_default() += 1;
        }
    }
    let agreed: Vec<Digest> = counts.into_iter().filter(|(_, c)| config.meets_threshold(*c)).map(|(t, _)| t).collect();
    if agreed.is_empty() && proposals.values().any(|s| !s.is_empty()) {
        return Err(ConsensusError::NoQuorum);
    }
    Ok(agreed)
}

pub fn quorum_signature(key: &[u8], sealing_digest: &Digest) -> [u8; 32] {
    let mut mac = Hmac::<Sha256>::new_from_slice(key).expect("hmac accepts any key length");
    mac.update(b"deedchain/quorum");
    mac.update(sealing_digest.as_bytes());
    mac.finalize().into_bytes().into()
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Strategy {
    Work(WorkParams),
    Stake(StakeTable),
    Quorum(QuorumConfig),
}

impl Strategy {
    pub fn name(&self) -> &'static str {
        match self {
            Strategy::Work(p) if p.variant == WorkVariant::MemoryMixed => "pow-memory",
            Strategy::Work(_) => "pow",
            Strategy::Stake(_) => "pos",
            Strategy::Quorum(_) => "quorum",
        }
    }
}

/// Strategy-specific block proof.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Seal {
    Genesis,
    Work { nonce: u64 },
    Stake { proposer: String, seed: Digest },
    Quorum { signatures: Vec<(String, [u8; 32])> },
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum SealError {
    #[error("seal kind does not match the {0} strategy")]
    WrongKind(&'static str),
    #[error("work predicate not met")]
    InsufficientWork,
    #[error("nonce {nonce} is not the minimal solution ({minimal})")]
    NonMinimalNonce { nonce: u64, minimal: u64 },
    #[error("round seed does not match parent and height")]
    BadSeed,
    #[error("proposer '{got}' but stake selection gives '{expected}'")]
    WrongProposer { got: String, expected: String },
    #[error("beneficiary address does not belong to the proposer")]
    WrongBeneficiary,
    #[error("bad quorum certificate: {0}")]
    BadCertificate(String),
    #[error(transparent)]
    Consensus(#[from] ConsensusError),
}

/// Inputs needed to seal or check one block.
pub struct SealContext<'a> {
    pub sealing_digest: Digest,
    pub parent_hash: &'a Digest,
    pub height: u64,
}

impl Strategy {
    /// Produce the seal for a block whose header (minus seal) hashes to
    /// `ctx.sealing_digest`.
    pub fn seal(&self, ctx: &SealContext<'_>) -> Result<Seal, ConsensusError> {
        match self {
            Strategy::Work(p) => Ok(Seal::Work { nonce: pow_seal(&ctx.sealing_digest, p, 0)? }),
            Strategy::Stake(stakes) => {
                let seed = pos_round_seed(ctx.parent_hash, ctx.height);
                Ok(Seal::Stake { proposer: pos_select_proposer(stakes, &seed)?, seed })
            }
            Strategy::Quorum(cfg) => {
                cfg.validate()?;
                // honest validators all endorse; certificate carries every signature
                let signatures = cfg
                    .validators
                    .iter()
                    .map(|(id, key)| (id.clone(), quorum_signature(key, &ctx.sealing_digest)))
                    .collect();
                Ok(Seal::Quorum { signatures })
            }
        }
    }

    /// Beneficiary the stake strategy requires, if any.
    pub fn required_beneficiary(&self, ctx: &SealContext<'_>) -> Result<Option<Address>, ConsensusError> {
        match self {
            Strategy::Stake(stakes) => {
                let seed = pos_round_seed(ctx.parent_hash, ctx.height);
                Ok(Some(validator_address(&pos_select_proposer(stakes, &seed)?)))
            }
            _ => Ok(None),
        }
    }

    pub fn verify(&self, seal: &Seal, beneficiary: &Address, ctx: &SealContext<'_>) -> Result<(), SealError> {
        match (self, seal) {
            (Strategy::Work(p), Seal::Work { nonce }) => {
                if !verify_pow(&ctx.sealing_digest, *nonce, p) {
                    return Err(SealError::InsufficientWork);
                }
                // the canonical seal is the smallest solution from 0
                let minimal = pow_seal(&ctx.sealing_digest, p, 0)?;
                if minimal != *nonce {
                    return Err(SealError::NonMinimalNonce { nonce: *nonce, minimal });
                }
                Ok(())
            }
            (Strategy::Stake(stakes), Seal::Stake { proposer, seed }) => {
                if *seed != pos_round_seed(ctx.parent_hash, ctx.height) {
                    return Err(SealError::BadSeed);
                }
                let expected = pos_select_proposer(stakes, seed)?;
                if *proposer != expected {
                    return Err(SealError::WrongProposer { got: proposer.clone(), expected });
                }
                if *beneficiary != validator_address(proposer) {
                    return Err(SealError::WrongBeneficiary);
                }
                Ok(())
            }
            (Strategy::Quorum(cfg), Seal::Quorum { signatures }) => {
                cfg.validate()?;
                let mut prev: Option<&str> = None;
                for (id, sig) in signatures {
                    if prev.is_some_and(|p| p >= id.as_str()) {
                        return Err(SealError::BadCertificate("signers not strictly ascending".into()));
                    }
                    prev = Some(id);
                    let key = cfg
                        .validators
                        .get(id)
                        .ok_or_else(|| SealError::BadCertificate(format!("unknown signer '{id}'")))?;
                    if quorum_signature(key, &ctx.sealing_digest) != *sig {
                        return Err(SealError::BadCertificate(format!("bad signature from '{id}'")));
                    }
                }
                if !cfg.meets_threshold(signatures.len()) {
                    return Err(SealError::BadCertificate(format!("{} signatures below threshold", signatures.len())));
                }
                Ok(())
            }
            _ => Err(SealError::WrongKind(self.name())),
        }
    }
}

impl Encode for Seal {
    fn encode_to(&self, enc: &mut Encoder) {
        match self {
            Seal::Genesis => {
                enc.u8(0);
            }
            Seal::Work { nonce } => {
                enc.u8(1).u64(*nonce);
            }
            Seal::Stake { proposer, seed } => {
                enc.u8(2).str(proposer).digest(seed);
            }
            Seal::Quorum { signatures } => {
                enc.u8(3).len(signatures.len());
                for (id, sig) in signatures {
                    enc.str(id).raw(sig);
                }
            }
        }
    }
}

impl Decode for Seal {
    fn decode_from(dec: &mut Decoder<'_>) -> Result<Self, CodecError> {
        match dec.u8()? {
            0 => Ok(Seal::Genesis),
            1 => Ok(Seal::Work { nonce: dec.u64()? }),
            2 => Ok(Seal::Stake { proposer: dec.string()?, seed: dec.digest()? }),
            3 => {
                let n = dec.len()?;
                let mut signatures = Vec::with_capacity(n.min(256));
                for _ in 0..n {
                    let id = dec.string()?;
                    let mut sig = [0u8; 32];
                    sig.copy_from_slice(dec.take(32)?);
                    signatures.push((id, sig));
                }
                Ok(Seal::Quorum { signatures })
            }
            tag => Err(CodecError::BadTag { what: "seal", tag }),
        }
    }
}

impl Encode for Strategy {
    fn encode_to(&self, enc: &mut Encoder) {
        match self {
            Strategy::Work(p) => {
                let variant = match p.variant {
                    WorkVariant::PlainHash => 0,
                    WorkVariant::MemoryMixed => 1,
                };
                enc.u8(0).u8(p.difficulty_bits).u8(variant).u32(p.memory_cost);
            }
            Strategy::Stake(stakes) => {
                enc.u8(1).len(stakes.len());
                for (id, s) in stakes {
                    enc.str(id).u128(*s);
                }
            }
            Strategy::Quorum(cfg) => {
                enc.u8(2).len(cfg.validators.len());
                for (id, k) in &cfg.validators {
                    enc.str(id).bytes(k);
                }
                enc.u64(cfg.threshold_num).u64(cfg.threshold_den);
            }
        }
    }
}

impl Decode for Strategy {
    fn decode_from(dec: &mut Decoder<'_>) -> Result<Self, CodecError> {
        match dec.u8()? {
            0 => {
                let difficulty_bits = dec.u8()?;
                let variant = match dec.u8()? {
                    0 => WorkVariant::PlainHash,
                    1 => WorkVariant::MemoryMixed,
                    tag => return Err(CodecError::BadTag { what: "work variant", tag }),
                };
                Ok(Strategy::Work(WorkParams { difficulty_bits, variant, memory_cost: dec.u32()? }))
            }
            1 => {
                let mut stakes = StakeTable::new();
                for _ in 0..dec.len()? {
                    let id = dec.string()?;
                    stakes.insert(id, dec.u128()?);
                }
                Ok(Strategy::Stake(stakes))
            }
            2 => {
                let mut validators = BTreeMap::new();
                for _ in 0..dec.len()? {
                    let id = dec.string()?;
                    validators.insert(id, dec.bytes()?.to_vec());
                }
                Ok(Strategy::Quorum(QuorumConfig {
                    validators,
                    threshold_num: dec.u64()?,
                    threshold_den: dec.u64()?,
                }))
            }
            tag => Err(CodecError::BadTag { what: "strategy", tag }),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::primitives::sha256;

    fn fixture() -> Digest {
        sha256(b"deedchain pow fixture")
    }

    #[test]
    fn difficulty_zero_returns_start() {
        assert_eq!(pow_seal(&fixture(), &WorkParams::plain(0), 12345).unwrap(), 12345);
        assert!(verify_pow(&Digest([0xab; 32]), 99, &WorkParams::plain(0)));
    }

    #[test]
    fn difficulty_cap() {
        assert_eq!(pow_seal(&fixture(), &WorkParams::plain(25), 0), Err(ConsensusError::DifficultyTooHigh(25)));
    }

    /// Frozen from an exhaustive scan of nonces 0.. over the fixture digest.
    #[test]
    fn golden_nonces() {
        let d = fixture();
        assert_eq!(pow_seal(&d, &WorkParams::plain(8), 0).unwrap(), GOLDEN_NONCE_8);
        let n16 = pow_seal(&d, &WorkParams::plain(16), 0).unwrap();
        assert_eq!(n16, GOLDEN_NONCE_16);
        assert!(!verify_pow(&d, n16 + 1, &WorkParams::plain(16)));
        assert!(!verify_pow(&sha256(b"tampered"), n16, &WorkParams::plain(16)));
        assert_eq!(pow_seal(&d, &WorkParams::memory_mixed(8, 64), 0).unwrap(), GOLDEN_NONCE_MEM_8);
    }

    const GOLDEN_NONCE_8: u64 = 268;
    const GOLDEN_NONCE_16: u64 = 6817;
    const GOLDEN_NONCE_MEM_8: u64 = 29;

    #[test]
    fn memory_variant_differs_from_plain() {
        let d = fixture();
        assert_ne!(work_hash(&d, 1, &WorkParams::plain(0)), work_hash(&d, 1, &WorkParams::memory_mixed(0, 16)));
        assert_ne!(
            work_hash(&d, 1, &WorkParams::memory_mixed(0, 16)),
            work_hash(&d, 1, &WorkParams::memory_mixed(0, 17))
        );
    }

    #[test]
    fn pos_edge_cases() {
        let single: StakeTable = [("A".to_string(), 5)].into();
        let zero_b: StakeTable = [("A".to_string(), 1), ("B".to_string(), 0)].into();
        for i in 0..200u64 {
            let seed = sha256(&i.to_be_bytes());
            assert_eq!(pos_select_proposer(&single, &seed).unwrap(), "A");
            assert_eq!(pos_select_proposer(&zero_b, &seed).unwrap(), "A");
        }
        let empty: StakeTable = [("A".to_string(), 0)].into();
        assert_eq!(pos_select_proposer(&empty, &Digest::ZERO), Err(ConsensusError::EmptyStake));
    }

    fn five() -> QuorumConfig {
        QuorumConfig::new((1..=5).map(|i| (format!("v{i}"), vec![i as u8])).collect())
    }

    #[test]
    fn quorum_exact_threshold() {
        let t = sha256(b"T");
        let cfg = five();
        let mut props: BTreeMap<String, BTreeSet<Digest>> =
            (1..=4).map(|i| (format!("v{i}"), [t].into())).collect();
        props.insert("v5".into(), BTreeSet::new());
        assert_eq!(quorum_round(&props, &cfg).unwrap(), vec![t]);

        props.insert("v4".into(), BTreeSet::new());
        assert_eq!(quorum_round(&props, &cfg), Err(ConsensusError::NoQuorum));

        let stranger: BTreeMap<String, BTreeSet<Digest>> = [("x".to_string(), BTreeSet::new())].into();
        assert_eq!(quorum_round(&stranger, &cfg), Err(ConsensusError::UnknownValidator("x".into())));
    }

    #[test]
    fn quorum_threshold_validation() {
        let mut cfg = five();
        cfg.threshold_num = 1;
        cfg.threshold_den = 2;
        assert!(cfg.validate().is_err());
        cfg.threshold_num = 1;
        cfg.threshold_den = 1;
        assert!(cfg.validate().is_ok());
    }

    #[test]
    fn seal_round_trips_per_strategy() {
        let parent = sha256(b"parent");
        let ctx = SealContext { sealing_digest: sha256(b"header"), parent_hash: &parent, height: 7 };
        let stakes: StakeTable = [("A".to_string(), 1), ("B".to_string(), 3)].into();
        for s in [
            Strategy::Work(WorkParams::plain(6)),
            Strategy::Work(WorkParams::memory_mixed(4, 32)),
            Strategy::Stake(stakes),
            Strategy::Quorum(five()),
        ] {
            let seal = s.seal(&ctx).unwrap();
            let who = s.required_beneficiary(&ctx).unwrap().unwrap_or(Address::derive("miner"));
            s.verify(&seal, &who, &ctx).unwrap();
            let mut d = Decoder::new(&[]);
            assert!(Seal::decode_from(&mut d).is_err());
            let bytes = seal.canonical_bytes();
            assert_eq!(crate::codec::decode_exact::<Seal>(&bytes).unwrap(), seal);
        }
    }

    #[test]
    fn quorum_certificate_checks() {
        let parent = Digest::ZERO;
        let ctx = SealContext { sealing_digest: sha256(b"h"), parent_hash: &parent, height: 1 };
        let s = Strategy::Quorum(five());
        let Seal::Quorum { mut signatures } = s.seal(&ctx).unwrap() else { panic!() };
        signatures.truncate(3);
        assert!(s.verify(&Seal::Quorum { signatures: signatures.clone() }, &Address::ZERO, &ctx).is_err());
        let mut full = match s.seal(&ctx).unwrap() {
            Seal::Quorum { signatures } => signatures,
            _ => unreachable!(),
        };
        full[0].1[0] ^= 1;
        assert!(s.verify(&Seal::Quorum { signatures: full }, &Address::ZERO, &ctx).is_err());
    }
}
