//! Signed oracle attestations, price feeds, salted field commitments and
//! per-deed read access.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use hmac::{Hmac, KeyInit, Mac};
use sha2::Sha256;
use thiserror::Error;

use crate::assets::DeedRegistry;
use crate::codec::{CodecError, Decode, Decoder, Encode, Encoder};
use crate::primitives::{sha256_concat, Address, Digest, Rational};

/// Default number of ticks a price observation stays usable.
pub const DEFAULT_STALENESS_BOUND: u64 = 100;

pub const KIND_PRICE: &str = "price";
pub const KIND_LEGAL_DOCS: &str = "legal-docs";
pub const KIND_SPEC: &str = "spec";
pub const KIND_RESERVE: &str = "reserve";

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum OracleError {
    #[error("oracle '{0}' is not registered")]
    UnknownOracle(String),
    #[error("attestation signature does not verify")]
    BadSignature,
    #[error("tick {tick} does not follow last observation {last} for {asset}")]
    NonMonotonicTick { asset: String, last: u64, tick: u64 },
    #[error("no price observation for {0}")]
    NoData(String),
    #[error("latest {asset} price is {age} ticks old (bound {bound})")]
    StalePrice { asset: String, age: u64, bound: u64 },
    #[error("salt must be exactly 32 bytes, got {0}")]
    BadSalt(usize),
    #[error("caller is not the deed owner")]
    NotOwner,
    #[error("unknown deed {0}")]
    UnknownDeed(Digest),
}

impl OracleError {
    pub fn code(&self) -> &'static str {
        match self {
            OracleError::UnknownOracle(_) => "UnknownOracle",
            OracleError::BadSignature => "BadSignature",
            OracleError::NonMonotonicTick { .. } => "NonMonotonicTick",
            OracleError::NoData(_) => "NoData",
            OracleError::StalePrice { .. } => "StalePrice",
            OracleError::BadSalt(_) => "BadSalt",
            OracleError::NotOwner => "NotOwner",
            OracleError::UnknownDeed(_) => "UnknownDeed",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum AttestPayload {
    Price(Rational),
    LegalDocs(Digest),
    Spec(String),
    /// Fraction of the stablecoin reserve reported lost.
    ReserveHaircut(Rational),
}

impl AttestPayload {
    pub fn kind(&self) -> &'static str {
        match self {
            AttestPayload::Price(_) => KIND_PRICE,
            AttestPayload::LegalDocs(_) => KIND_LEGAL_DOCS,
            AttestPayload::Spec(_) => KIND_SPEC,
            AttestPayload::ReserveHaircut(_) => KIND_RESERVE,
        }
    }
}

impl Encode for AttestPayload {
    fn encode_to(&self, enc: &mut Encoder) {
        match self {
            AttestPayload::Price(p) => enc.u8(0).rational(p),
            AttestPayload::LegalDocs(d) => enc.u8(1).digest(d),
            AttestPayload::Spec(s) => enc.u8(2).str(s),
            AttestPayload::ReserveHaircut(f) => enc.u8(3).rational(f),
        };
    }
}

impl Decode for AttestPayload {
    fn decode_from(dec: &mut Decoder<'_>) -> Result<Self, CodecError> {
        match dec.u8()? {
            0 => Ok(AttestPayload::Price(dec.rational()?)),
            1 => Ok(AttestPayload::LegalDocs(dec.digest()?)),
            2 => Ok(AttestPayload::Spec(dec.string()?)),
            3 => Ok(AttestPayload::ReserveHaircut(dec.rational()?)),
            tag => Err(CodecError::BadTag { what: "attestation payload", tag }),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Attestation {
    pub oracle_id: String,
    /// Hex deed id or asset symbol.
    pub subject: String,
    pub payload: AttestPayload,
    pub tick: u64,
    pub signature: [u8; 32],
}

impl Attestation {
    pub fn kind(&self) -> &'static str {
        self.payload.kind()
    }

    fn signing_bytes(oracle_id: &str, subject: &str, payload: &AttestPayload, tick: u64) -> Vec<u8> {
        let mut e = Encoder::new();
        e.str("deedchain/attestation").str(oracle_id).str(subject).item(payload).u64(tick);
        e.finish()
    }

    /// Build and sign an attestation with `key`.
    pub fn sign(key: &[u8], oracle_id: &str, subject: &str, payload: AttestPayload, tick: u64) -> Attestation {
        let mut mac = Hmac::<Sha256>::new_from_slice(key).expect("hmac accepts any key length");
        mac.update(&Self::signing_bytes(oracle_id, subject, &payload, tick));
        Attestation {
            oracle_id: oracle_id.to_string(),
            subject: subject.to_string(),
            payload,
            tick,
            signature: mac.finalize().into_bytes().into(),
        }
    }

    fn check(&self, key: &[u8]) -> bool {
        let mut mac = Hmac::<Sha256>::new_from_slice(key).expect("hmac accepts any key length");
        mac.update(&Self::signing_bytes(&self.oracle_id, &self.subject, &self.payload, self.tick));
        mac.verify_slice(&self.signature).is_ok()
    }
}

impl Encode for Attestation {
    fn encode_to(&self, enc: &mut Encoder) {
        enc.str(&self.oracle_id).str(&self.subject).item(&self.payload).u64(self.tick).raw(&self.signature);
    }
}

impl Decode for Attestation {
    fn decode_from(dec: &mut Decoder<'_>) -> Result<Self, CodecError> {
        let oracle_id = dec.string()?;
        let subject = dec.string()?;
        let payload = dec.item()?;
        let tick = dec.u64()?;
        let mut signature = [0u8; 32];
        signature.copy_from_slice(dec.take(32)?);
        Ok(Attestation { oracle_id, subject, payload, tick, signature })
    }
}

/// Registered oracle keys. The keyed-hash scheme needs the key to verify, so
/// the registry is public chain configuration.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct OracleRegistry {
    keys: BTreeMap<String, Vec<u8>>,
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum RegistryParseError {
    #[error("line {line}: expected 'oracle_id,hex_key'")]
    Shape { line: usize },
    #[error("line {line}: empty oracle id")]
    EmptyId { line: usize },
    #[error("line {line}: bad hex key: {msg}")]
    BadKey { line: usize, msg: String },
    #[error("line {line}: duplicate oracle '{id}'")]
    Duplicate { line: usize, id: String },
}

impl OracleRegistry {
    pub fn register(&mut self, oracle_id: impl Into<String>, key: Vec<u8>) {
        self.keys.insert(oracle_id.into(), key);
    }

    pub fn key(&self, oracle_id: &str) -> Option<&[u8]> {
        self.keys.get(oracle_id).map(Vec::as_slice)
    }

    pub fn ids(&self) -> impl Iterator<Item = &str> {
        self.keys.keys().map(String::as_str)
    }

    /// Parse the registry file format: one `oracle_id,hex_key` per line,
    /// blank lines and `#` comments ignored.
    pub fn parse(text: &str) -> Result<OracleRegistry, RegistryParseError> {
        let mut reg = OracleRegistry::default();
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let l = raw.trim();
            if l.is_empty() || l.starts_with('#') {
                continue;
            }
            let (id, key) = l.split_once(',').ok_or(RegistryParseError::Shape { line })?;
            let (id, key) = (id.trim(), key.trim());
            if id.is_empty() {
                return Err(RegistryParseError::EmptyId { line });
            }
            if key.contains(',') {
                return Err(RegistryParseError::Shape { line });
            }
            let key = hex::decode(key.strip_prefix("0x").unwrap_or(key))
                .map_err(|e| RegistryParseError::BadKey { line, msg: e.to_string() })?;
            if key.is_empty() {
                return Err(RegistryParseError::BadKey { line, msg: "empty key".into() });
            }
            if reg.keys.contains_key(id) {
                return Err(RegistryParseError::Duplicate { line, id: id.to_string() });
            }
            reg.keys.insert(id.to_string(), key);
        }
        Ok(reg)
    }

    pub fn to_file_string(&self) -> String {
        self.keys.iter().map(|(id, k)| format!("{id},{}\n", hex::encode(k))).collect()
    }
}

impl Encode for OracleRegistry {
    fn encode_to(&self, enc: &mut Encoder) {
        enc.len(self.keys.len());
        for (id, k) in &self.keys {
            enc.str(id).bytes(k);
        }
    }
}

impl Decode for OracleRegistry {
    fn decode_from(dec: &mut Decoder<'_>) -> Result<Self, CodecError> {
        let mut keys = BTreeMap::new();
        for _ in 0..dec.len()? {
            let id = dec.string()?;
            keys.insert(id, dec.bytes()?.to_vec());
        }
        Ok(OracleRegistry { keys })
    }
}

/// True iff the signature verifies under the key registered for the
/// attestation's oracle id.
pub fn verify_attestation(att: &Attestation, registry: &OracleRegistry) -> bool {
    registry.key(&att.oracle_id).is_some_and(|k| att.check(k))
}

/// Per-asset, tick-ordered price observations.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct PriceFeed {
    series: BTreeMap<String, Vec<(u64, Rational)>>,
}

impl PriceFeed {
    pub fn push(&mut self, asset: &str, tick: u64, price: Rational) -> Result<(), OracleError> {
        self.check_next(asset, tick)?;
        self.series.entry(asset.to_string()).or_default().push((tick, price));
        Ok(())
    }

    pub fn check_next(&self, asset: &str, tick: u64) -> Result<(), OracleError> {
        if let Some(&(last, _)) = self.series.get(asset).and_then(|s| s.last()) {
            if tick <= last {
                return Err(OracleError::NonMonotonicTick { asset: asset.to_string(), last, tick });
            }
        }
        Ok(())
    }

    pub fn observations(&self, asset: &str) -> &[(u64, Rational)] {
        self.series.get(asset).map(Vec::as_slice).unwrap_or(&[])
    }

    pub fn assets(&self) -> impl Iterator<Item = &str> {
        self.series.keys().map(String::as_str)
    }

    /// Most recent observation at or before `now_tick`.
    pub fn latest_price(&self, asset: &str, now_tick: u64, staleness_bound: u64) -> Result<Rational, OracleError> {
        let obs = self.observations(asset);
        let idx = obs.partition_point(|(t, _)| *t <= now_tick);
        if idx == 0 {
            return Err(OracleError::NoData(asset.to_string()));
        }
        let (tick, price) = &obs[idx - 1];
        let age = now_tick - tick;
        if age > staleness_bound {
            return Err(OracleError::StalePrice { asset: asset.to_string(), age, bound: staleness_bound });
        }
        Ok(price.clone())
    }
}

impl Encode for PriceFeed {
    fn encode_to(&self, enc: &mut Encoder) {
        enc.len(self.series.len());
        for (asset, obs) in &self.series {
            enc.str(asset).len(obs.len());
            for (t, p) in obs {
                enc.u64(*t).rational(p);
            }
        }
    }
}

/// Append-only log of accepted attestations.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct AttestationLog {
    entries: Vec<Attestation>,
}

impl AttestationLog {
    pub fn entries(&self) -> &[Attestation] {
        &self.entries
    }

    pub(crate) fn append(&mut self, att: Attestation) {
        self.entries.push(att);
    }

    /// Any logged attestation of `kind` about `subject` at or after `since`.
    pub fn find(&self, subject: &str, kind: &str, since: u64) -> Option<&Attestation> {
        self.entries.iter().rev().find(|a| a.subject == subject && a.kind() == kind && a.tick >= since)
    }
}

impl Encode for AttestationLog {
    fn encode_to(&self, enc: &mut Encoder) {
        enc.list(&self.entries);
    }
}

/// Validate and record an attestation. Price observations also extend the
/// feed.
pub fn submit_attestation(
    registry: &OracleRegistry,
    log: &mut AttestationLog,
    feed: &mut PriceFeed,
    att: Attestation,
) -> Result<(), OracleError> {
    let key = registry.key(&att.oracle_id).ok_or_else(|| OracleError::UnknownOracle(att.oracle_id.clone()))?;
    if !att.check(key) {
        return Err(OracleError::BadSignature);
    }
    if let AttestPayload::Price(p) = &att.payload {
        feed.push(&att.subject, att.tick, p.clone())?;
    }
    log.append(att);
    Ok(())
}

/// Hash commitment to one private field.
#[derive(Clone, PartialEq, Eq)]
pub struct Commitment {
    pub field_name: String,
    pub digest: Digest,
}

impl fmt::Debug for Commitment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Commitment({}: {})", self.field_name, self.digest)
    }
}

fn commitment_digest(value: &str, salt: &[u8]) -> Result<Digest, OracleError> {
    if salt.len() != 32 {
        return Err(OracleError::BadSalt(salt.len()));
    }
    let mut e = Encoder::new();
    e.str(value);
    Ok(sha256_concat(&[&e.finish(), salt]))
}

/// `digest = sha256(len_be32(value) ‖ value ‖ salt)`.
pub fn commit_field(field_name: &str, value: &str, salt: &[u8]) -> Result<Commitment, OracleError> {
    Ok(Commitment { field_name: field_name.to_string(), digest: commitment_digest(value, salt)? })
}

pub fn reveal_verify(commitment: &Commitment, value: &str, salt: &[u8]) -> bool {
    commitment_digest(value, salt).is_ok_and(|d| d == commitment.digest)
}

/// Addresses granted read access to each deed's private fields. The current
/// owner is always implicitly authorized and never stored.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct AccessControlList {
    grants: BTreeMap<Digest, BTreeSet<Address>>,
}

impl AccessControlList {
    pub fn grant_access(
        &mut self,
        deeds: &DeedRegistry,
        deed_id: &Digest,
        grantee: Address,
        caller: &Address,
    ) -> Result<(), OracleError> {
        let owner = deeds.owner(deed_id).ok_or(OracleError::UnknownDeed(*deed_id))?;
        if owner != *caller {
            return Err(OracleError::NotOwner);
        }
        self.grants.entry(*deed_id).or_default().insert(grantee);
        Ok(())
    }

    pub fn check_access(&self, deeds: &DeedRegistry, deed_id: &Digest, reader: &Address) -> bool {
        deeds.owner(deed_id) == Some(*reader) || self.grants.get(deed_id).is_some_and(|s| s.contains(reader))
    }
}

impl Encode for AccessControlList {
    fn encode_to(&self, enc: &mut Encoder) {
        enc.len(self.grants.len());
        for (deed, set) in &self.grants {
            enc.digest(deed).len(set.len());
            for a in set {
                enc.address(a);
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::assets::PublicMetadata;
    use chrono::NaiveDate;

    fn registry() -> OracleRegistry {
        let mut r = OracleRegistry::default();
        r.register("o1", b"key-one".to_vec());
        r.register("o2", b"key-two".to_vec());
        r
    }

    fn price(s: &str) -> Rational {
        s.parse().unwrap()
    }

    #[test]
    fn price_read_back_and_monotonic_ticks() {
        let reg = registry();
        let (mut log, mut feed) = (AttestationLog::default(), PriceFeed::default());
        let a = Attestation::sign(b"key-one", "o1", "BTC", AttestPayload::Price(price("16000.00")), 5);
        submit_attestation(&reg, &mut log, &mut feed, a).unwrap();
        assert_eq!(feed.latest_price("BTC", 5, 100).unwrap(), price("16000"));
        let back = Attestation::sign(b"key-one", "o1", "BTC", AttestPayload::Price(price("1")), 3);
        assert!(matches!(
            submit_attestation(&reg, &mut log, &mut feed, back),
            Err(OracleError::NonMonotonicTick { .. })
        ));
        assert_eq!(log.entries().len(), 1);
    }

    #[test]
    fn unknown_oracle_rejected() {
        let reg = registry();
        let a = Attestation::sign(b"k", "nobody", "BTC", AttestPayload::Price(price("1")), 1);
        let r = submit_attestation(&reg, &mut AttestationLog::default(), &mut PriceFeed::default(), a);
        assert_eq!(r, Err(OracleError::UnknownOracle("nobody".into())));
    }

    #[test]
    fn verification() {
        let reg = registry();
        let a = Attestation::sign(b"key-one", "o1", "deed", AttestPayload::LegalDocs(Digest([1; 32])), 4);
        assert!(verify_attestation(&a, &reg));

        let mut mutated = a.clone();
        mutated.payload = AttestPayload::LegalDocs(Digest([2; 32]));
        assert!(!verify_attestation(&mutated, &reg));

        // signed with o2's key but claiming to be o1
        let forged = Attestation::sign(b"key-two", "o1", "deed", AttestPayload::LegalDocs(Digest([1; 32])), 4);
        assert!(!verify_attestation(&forged, &reg));
    }

    #[test]
    fn latest_price_rules() {
        let mut feed = PriceFeed::default();
        assert!(matches!(feed.latest_price("X", 0, 100), Err(OracleError::NoData(_))));
        feed.push("X", 10, price("1")).unwrap();
        feed.push("X", 20, price("2")).unwrap();
        feed.push("X", 30, price("3")).unwrap();
        assert_eq!(feed.latest_price("X", 25, 100).unwrap(), price("2"));
        assert_eq!(feed.latest_price("X", 30, 100).unwrap(), price("3"));
        assert!(matches!(feed.latest_price("X", 5, 100), Err(OracleError::NoData(_))));
        assert!(matches!(feed.latest_price("X", 131, 100), Err(OracleError::StalePrice { age: 101, .. })));
        assert_eq!(feed.latest_price("X", 130, 100).unwrap(), price("3"));
    }

    #[test]
    fn commitments() {
        let salt = [9u8; 32];
        let c = commit_field("price", "500000", &salt).unwrap();
        assert!(reveal_verify(&c, "500000", &salt));
        assert!(!reveal_verify(&c, "500001", &salt));
        assert!(!reveal_verify(&c, "500000", &[8u8; 32]));
        assert_eq!(commit_field("price", "x", &[0u8; 31]), Err(OracleError::BadSalt(31)));
    }

    #[test]
    fn golden_commitment_matches_external_hasher() {
        // printf '\x00\x00\x00\x0cprice:500000' + bytes 0x01..=0x20 | sha256sum
        let salt: Vec<u8> = (1..=32).collect();
        let c = commit_field("price", "price:500000", &salt).unwrap();
        assert_eq!(c.digest.to_hex(), GOLDEN_COMMITMENT);
    }

    const GOLDEN_COMMITMENT: &str = "fe94b0657088e77afc2a03fb16c74cd00c8dbb128c5639edbaba656a218995ea";

    #[test]
    fn access_follows_ownership() {
        let (alice, bob, carol) = (Address::derive("alice"), Address::derive("bob"), Address::derive("carol"));
        let mut deeds = DeedRegistry::default();
        let meta = PublicMetadata {
            square_footage: 900,
            bedrooms: 2,
            last_renovation: NaiveDate::from_ymd_opt(2010, 1, 1).unwrap(),
        };
        let id = deeds.mint(&Digest([3; 32]), alice, meta, BTreeMap::new(), 0).unwrap();
        let mut acl = AccessControlList::default();
        assert!(acl.check_access(&deeds, &id, &alice));
        assert!(!acl.check_access(&deeds, &id, &carol));
        assert_eq!(acl.grant_access(&deeds, &id, carol, &bob), Err(OracleError::NotOwner));
        acl.grant_access(&deeds, &id, carol, &alice).unwrap();
        assert!(acl.check_access(&deeds, &id, &carol));

        deeds.reassign(&id, &alice, bob, 1).unwrap();
        assert!(acl.check_access(&deeds, &id, &bob));
        assert!(!acl.check_access(&deeds, &id, &alice));
        acl.grant_access(&deeds, &id, alice, &bob).unwrap();
        assert!(acl.check_access(&deeds, &id, &alice));
    }

    #[test]
    fn registry_file_parsing() {
        let reg = OracleRegistry::parse("# oracles\nlegal,00ff\n\nprices, 0xabcd \n").unwrap();
        assert_eq!(reg.key("legal"), Some(&[0x00, 0xff][..]));
        assert_eq!(reg.key("prices"), Some(&[0xab, 0xcd][..]));
        assert_eq!(OracleRegistry::parse(&reg.to_file_string()).unwrap(), reg);
        assert!(matches!(OracleRegistry::parse("a"), Err(RegistryParseError::Shape { line: 1 })));
        assert!(matches!(OracleRegistry::parse("a,zz"), Err(RegistryParseError::BadKey { .. })));
        assert!(matches!(OracleRegistry::parse("a,00\na,01"), Err(RegistryParseError::Duplicate { line: 2, .. })));
    }
}
