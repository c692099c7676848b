//! Transactions and their kind-specific payloads.

use std::collections::BTreeMap;
use std::fmt;

use crate::assets::PublicMetadata;
use crate::codec::{decode_exact, CodecError, Decode, Decoder, Encode, Encoder};
use crate::oracle::Attestation;
use crate::primitives::{sha256, Address, Digest, Rational};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum TxKind {
    TokenTransfer,
    TokenApprove,
    StableMint,
    StableRedeem,
    DeedMint,
    DeedTransfer,
    List,
    Offer,
    FundEscrow,
    Settle,
    Cancel,
    AttachCovenant,
    OpenLoan,
    Repay,
    Liquidate,
    Attest,
    GrantAccess,
}

impl TxKind {
    pub const ALL: [TxKind; 17] = [
        TxKind::TokenTransfer,
        TxKind::TokenApprove,
        TxKind::StableMint,
        TxKind::StableRedeem,
        TxKind::DeedMint,
        TxKind::DeedTransfer,
        TxKind::List,
        TxKind::Offer,
        TxKind::FundEscrow,
        TxKind::Settle,
        TxKind::Cancel,
        TxKind::AttachCovenant,
        TxKind::OpenLoan,
        TxKind::Repay,
        TxKind::Liquidate,
        TxKind::Attest,
        TxKind::GrantAccess,
    ];

    pub fn tag(self) -> u8 {
        self as u8
    }

    pub fn from_tag(tag: u8) -> Option<TxKind> {
        TxKind::ALL.get(tag as usize).copied()
    }
}

impl fmt::Display for TxKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TxPayload {
    TokenTransfer { token: String, to: Address, amount: u128 },
    TokenApprove { token: String, spender: Address, amount: u128 },
    StableMint { to: Address, fiat_deposit: u128 },
    /// `burn_only` destroys tokens without releasing reserve (rebalancing).
    StableRedeem { amount: u128, burn_only: bool },
    DeedMint { metadata: PublicMetadata, commitments: BTreeMap<String, Digest> },
    DeedTransfer { deed_id: Digest, to: Address },
    List { deed_id: Digest, token: String, ask_price: u128, attestation_kind: String },
    Offer { sale_id: Digest, offer_price: u128 },
    FundEscrow { sale_id: Digest },
    Settle { sale_id: Digest },
    Cancel { sale_id: Digest },
    AttachCovenant { deed_id: Digest, predicate: String },
    OpenLoan {
        collateral_token: String,
        collateral_amount: u128,
        borrow_amount: u128,
        rate_per_block: Rational,
        liquidation_threshold: Rational,
    },
    Repay { loan_id: Digest, amount: u128 },
    Liquidate { loan_id: Digest },
    Attest { attestation: Attestation },
    GrantAccess { deed_id: Digest, grantee: Address },
}

impl TxPayload {
    pub fn kind(&self) -> TxKind {
        match self {
            TxPayload::TokenTransfer { .. } => TxKind::TokenTransfer,
            TxPayload::TokenApprove { .. } => TxKind::TokenApprove,
            TxPayload::StableMint { .. } => TxKind::StableMint,
            TxPayload::StableRedeem { .. } => TxKind::StableRedeem,
            TxPayload::DeedMint { .. } => TxKind::DeedMint,
            TxPayload::DeedTransfer { .. } => TxKind::DeedTransfer,
            TxPayload::List { .. } => TxKind::List,
            TxPayload::Offer { .. } => TxKind::Offer,
            TxPayload::FundEscrow { .. } => TxKind::FundEscrow,
            TxPayload::Settle { .. } => TxKind::Settle,
            TxPayload::Cancel { .. } => TxKind::Cancel,
            TxPayload::AttachCovenant { .. } => TxKind::AttachCovenant,
            TxPayload::OpenLoan { .. } => TxKind::OpenLoan,
            TxPayload::Repay { .. } => TxKind::Repay,
            TxPayload::Liquidate { .. } => TxKind::Liquidate,
            TxPayload::Attest { .. } => TxKind::Attest,
            TxPayload::GrantAccess { .. } => TxKind::GrantAccess,
        }
    }

    /// Payload body without the kind tag. Its length drives per-byte gas.
    pub fn body_bytes(&self) -> Vec<u8> {
        let mut e = Encoder::new();
        match self {
            TxPayload::TokenTransfer { token, to, amount } => e.str(token).address(to).u128(*amount),
            TxPayload::TokenApprove { token, spender, amount } => e.str(token).address(spender).u128(*amount),
            TxPayload::StableMint { to, fiat_deposit } => e.address(to).u128(*fiat_deposit),
            TxPayload::StableRedeem { amount, burn_only } => e.u128(*amount).bool(*burn_only),
            TxPayload::DeedMint { metadata, commitments } => {
                e.item(metadata).len(commitments.len());
                for (k, v) in commitments {
                    e.str(k).digest(v);
                }
                &mut e
            }
            TxPayload::DeedTransfer { deed_id, to } => e.digest(deed_id).address(to),
            TxPayload::List { deed_id, token, ask_price, attestation_kind } => {
                e.digest(deed_id).str(token).u128(*ask_price).str(attestation_kind)
            }
            TxPayload::Offer { sale_id, offer_price } => e.digest(sale_id).u128(*offer_price),
            TxPayload::FundEscrow { sale_id } | TxPayload::Settle { sale_id } | TxPayload::Cancel { sale_id } => {
                e.digest(sale_id)
            }
            TxPayload::AttachCovenant { deed_id, predicate } => e.digest(deed_id).str(predicate),
            TxPayload::OpenLoan {
                collateral_token,
                collateral_amount,
                borrow_amount,
                rate_per_block,
                liquidation_threshold,
            } => e
                .str(collateral_token)
                .u128(*collateral_amount)
                .u128(*borrow_amount)
                .rational(rate_per_block)
                .rational(liquidation_threshold),
            TxPayload::Repay { loan_id, amount } => e.digest(loan_id).u128(*amount),
            TxPayload::Liquidate { loan_id } => e.digest(loan_id),
            TxPayload::Attest { attestation } => e.item(attestation),
            TxPayload::GrantAccess { deed_id, grantee } => e.digest(deed_id).address(grantee),
        };
        e.finish()
    }

    fn decode_body(kind: TxKind, body: &[u8]) -> Result<TxPayload, CodecError> {
        let mut d = Decoder::new(body);
        let p = match kind {
            TxKind::TokenTransfer => TxPayload::TokenTransfer { token: d.string()?, to: d.address()?, amount: d.u128()? },
            TxKind::TokenApprove => {
                TxPayload::TokenApprove { token: d.string()?, spender: d.address()?, amount: d.u128()? }
            }
            TxKind::StableMint => TxPayload::StableMint { to: d.address()?, fiat_deposit: d.u128()? },
            TxKind::StableRedeem => TxPayload::StableRedeem { amount: d.u128()?, burn_only: d.bool()? },
            TxKind::DeedMint => {
                let metadata = d.item()?;
                let mut commitments = BTreeMap::new();
                for _ in 0..d.len()? {
                    let k = d.string()?;
                    commitments.insert(k, d.digest()?);
                }
                TxPayload::DeedMint { metadata, commitments }
            }
            TxKind::DeedTransfer => TxPayload::DeedTransfer { deed_id: d.digest()?, to: d.address()? },
            TxKind::List => TxPayload::List {
                deed_id: d.digest()?,
                token: d.string()?,
                ask_price: d.u128()?,
                attestation_kind: d.string()?,
            },
            TxKind::Offer => TxPayload::Offer { sale_id: d.digest()?, offer_price: d.u128()? },
            TxKind::FundEscrow => TxPayload::FundEscrow { sale_id: d.digest()? },
            TxKind::Settle => TxPayload::Settle { sale_id: d.digest()? },
            TxKind::Cancel => TxPayload::Cancel { sale_id: d.digest()? },
            TxKind::AttachCovenant => TxPayload::AttachCovenant { deed_id: d.digest()?, predicate: d.string()? },
            TxKind::OpenLoan => TxPayload::OpenLoan {
                collateral_token: d.string()?,
                collateral_amount: d.u128()?,
                borrow_amount: d.u128()?,
                rate_per_block: d.rational()?,
                liquidation_threshold: d.rational()?,
            },
            TxKind::Repay => TxPayload::Repay { loan_id: d.digest()?, amount: d.u128()? },
            TxKind::Liquidate => TxPayload::Liquidate { loan_id: d.digest()? },
            TxKind::Attest => TxPayload::Attest { attestation: d.item()? },
            TxKind::GrantAccess => TxPayload::GrantAccess { deed_id: d.digest()?, grantee: d.address()? },
        };
        d.finish()?;
        Ok(p)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Transaction {
    pub sender: Address,
    pub payload: TxPayload,
    pub gas_limit: u64,
    pub tip: u128,
    pub nonce: u64,
}

impl Transaction {
    pub fn kind(&self) -> TxKind {
        self.payload.kind()
    }

    /// Digest of the canonical encoding.
    pub fn tx_id(&self) -> Digest {
        sha256(&self.canonical_bytes())
    }

    pub fn decode(bytes: &[u8]) -> Result<Transaction, CodecError> {
        decode_exact(bytes)
    }
}

/// kind tag (u8) ‖ sender (32) ‖ payload body (u32 length + bytes) ‖
/// gas_limit (u64) ‖ tip (u128) ‖ nonce (u64)
impl Encode for Transaction {
    fn encode_to(&self, enc: &mut Encoder) {
        enc.u8(self.kind().tag())
            .address(&self.sender)
            .bytes(&self.payload.body_bytes())
            .u64(self.gas_limit)
            .u128(self.tip)
            .u64(self.nonce);
    }
}

impl Decode for Transaction {
    fn decode_from(dec: &mut Decoder<'_>) -> Result<Self, CodecError> {
        let tag = dec.u8()?;
        let kind = TxKind::from_tag(tag).ok_or(CodecError::BadTag { what: "tx kind", tag })?;
        let sender = dec.address()?;
        let body = dec.bytes()?;
        let payload = TxPayload::decode_body(kind, body)?;
        Ok(Transaction { sender, payload, gas_limit: dec.u64()?, tip: dec.u128()?, nonce: dec.u64()? })
    }
}
