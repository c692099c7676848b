//! Fungible tokens with allowances, the reserve-backed stablecoin, and the
//! deed registry.

use std::collections::BTreeMap;

use chrono::NaiveDate;
use thiserror::Error;

use crate::codec::{CodecError, Decode, Decoder, Encode, Encoder};
use crate::primitives::{sha256, Address, Digest, Rational};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum AssetError {
    #[error("insufficient balance: have {have}, need {need}")]
    BadBalance { have: u128, need: u128 },
    #[error("insufficient allowance: have {have}, need {need}")]
    BadAllowance { have: u128, need: u128 },
    #[error("stablecoin reserve {reserve} cannot cover {need}")]
    ReserveUnderflow { reserve: u128, need: u128 },
    #[error("zero-amount mint")]
    ZeroMint,
    #[error("haircut fraction must lie in [0, 1)")]
    BadHaircut,
    #[error("deed {0} already registered")]
    DuplicateDeed(Digest),
    #[error("unknown deed {0}")]
    UnknownDeed(Digest),
    #[error("caller is not the deed owner")]
    NotOwner,
    #[error("amount overflow")]
    Overflow,
}

impl AssetError {
    pub fn code(&self) -> &'static str {
        match self {
            AssetError::BadBalance { .. } | AssetError::ZeroMint => "BadBalance",
            AssetError::BadAllowance { .. } => "BadAllowance",
            AssetError::ReserveUnderflow { .. } => "ReserveUnderflow",
            AssetError::BadHaircut => "BadHaircut",
            AssetError::DuplicateDeed(_) => "DuplicateDeed",
            AssetError::UnknownDeed(_) => "UnknownDeed",
            AssetError::NotOwner => "NotOwner",
            AssetError::Overflow => "Overflow",
        }
    }
}

/// ERC-20-style token. Zero balances and allowances are never stored, which
/// keeps the canonical encoding unique.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FungibleToken {
    pub symbol: String,
    pub total_supply: u128,
    balances: BTreeMap<Address, u128>,
    allowances: BTreeMap<(Address, Address), u128>,
}

impl FungibleToken {
    pub fn new(symbol: impl Into<String>) -> Self {
        FungibleToken {
            symbol: symbol.into(),
            total_supply: 0,
            balances: BTreeMap::new(),
            allowances: BTreeMap::new(),
        }
    }

    pub fn balance(&self, who: &Address) -> u128 {
        self.balances.get(who).copied().unwrap_or(0)
    }

    pub fn allowance(&self, owner: &Address, spender: &Address) -> u128 {
        self.allowances.get(&(*owner, *spender)).copied().unwrap_or(0)
    }

    pub fn balances(&self) -> impl Iterator<Item = (&Address, &u128)> {
        self.balances.iter()
    }

    pub fn sum_of_balances(&self) -> u128 {
        self.balances.values().sum()
    }

    fn set_balance(&mut self, who: Address, v: u128) {
        if v == 0 {
            self.balances.remove(&who);
        } else {
            self.balances.insert(who, v);
        }
    }

    pub fn transfer(&mut self, from: &Address, to: &Address, amount: u128) -> Result<(), AssetError> {
        let have = self.balance(from);
        if have < amount {
            return Err(AssetError::BadBalance { have, need: amount });
        }
        if from == to || amount == 0 {
            return Ok(());
        }
        let to_bal = self.balance(to).checked_add(amount).ok_or(AssetError::Overflow)?;
        self.set_balance(*from, have - amount);
        self.set_balance(*to, to_bal);
        Ok(())
    }

    pub fn approve(&mut self, owner: &Address, spender: &Address, amount: u128) {
        if amount == 0 {
            self.allowances.remove(&(*owner, *spender));
        } else {
            self.allowances.insert((*owner, *spender), amount);
        }
    }

    /// Move `amount` from `owner` to `to` on behalf of `spender`. Checks both
    /// preconditions before touching anything.
    pub fn transfer_from(
        &mut self,
        spender: &Address,
        owner: &Address,
        to: &Address,
        amount: u128,
    ) -> Result<(), AssetError> {
        let allowed = self.allowance(owner, spender);
        if allowed < amount {
            return Err(AssetError::BadAllowance { have: allowed, need: amount });
        }
        self.transfer(owner, to, amount)?;
        self.approve(owner, spender, allowed - amount);
        Ok(())
    }

    pub fn mint(&mut self, to: &Address, amount: u128) -> Result<(), AssetError> {
        let supply = self.total_supply.checked_add(amount).ok_or(AssetError::Overflow)?;
        let bal = self.balance(to).checked_add(amount).ok_or(AssetError::Overflow)?;
        self.total_supply = supply;
        self.set_balance(*to, bal);
        Ok(())
    }

    pub fn burn(&mut self, from: &Address, amount: u128) -> Result<(), AssetError> {
        let have = self.balance(from);
        if have < amount {
            return Err(AssetError::BadBalance { have, need: amount });
        }
        self.set_balance(*from, have - amount);
        self.total_supply -= amount;
        Ok(())
    }
}

impl Encode for FungibleToken {
    fn encode_to(&self, enc: &mut Encoder) {
        enc.str(&self.symbol).u128(self.total_supply);
        enc.len(self.balances.len());
        for (a, v) in &self.balances {
            enc.address(a).u128(*v);
        }
        enc.len(self.allowances.len());
        for ((o, s), v) in &self.allowances {
            enc.address(o).address(s).u128(*v);
        }
    }
}

impl Decode for FungibleToken {
    fn decode_from(dec: &mut Decoder<'_>) -> Result<Self, CodecError> {
        let mut t = FungibleToken::new(dec.string()?);
        t.total_supply = dec.u128()?;
        for _ in 0..dec.len()? {
            let a = dec.address()?;
            t.balances.insert(a, dec.u128()?);
        }
        for _ in 0..dec.len()? {
            let o = dec.address()?;
            let s = dec.address()?;
            t.allowances.insert((o, s), dec.u128()?);
        }
        Ok(t)
    }
}

/// Token backed one-to-one by a fiat reserve.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StableCoin {
    pub token: FungibleToken,
    pub reserve: u128,
    /// Set by a reserve haircut; cleared once supply is back under the reserve.
    pub backing_suspended: bool,
}

impl StableCoin {
    pub fn new(symbol: impl Into<String>) -> Self {
        StableCoin { token: FungibleToken::new(symbol), reserve: 0, backing_suspended: false }
    }

    pub fn is_fully_backed(&self) -> bool {
        self.token.total_supply <= self.reserve
    }

    /// Fiat value of one token implied by the reserve, capped at the peg.
    pub fn implied_price(&self) -> Rational {
        if self.token.total_supply == 0 || self.is_fully_backed() {
            return Rational::one();
        }
        Rational::new(self.reserve, self.token.total_supply).expect("nonzero supply")
    }

    pub fn mint(&mut self, to: &Address, fiat_deposit: u128) -> Result<(), AssetError> {
        if fiat_deposit == 0 {
            return Err(AssetError::ZeroMint);
        }
        let reserve = self.reserve.checked_add(fiat_deposit).ok_or(AssetError::Overflow)?;
        self.token.mint(to, fiat_deposit)?;
        self.reserve = reserve;
        self.refresh_flag();
        Ok(())
    }

    /// Burn tokens and release reserve one-for-one. While backing is
    /// suspended the release is pro rata, so redemptions never worsen the
    /// backing ratio.
    pub fn redeem(&mut self, from: &Address, amount: u128) -> Result<u128, AssetError> {
        let have = self.token.balance(from);
        if have < amount {
            return Err(AssetError::BadBalance { have, need: amount });
        }
        let release = if self.backing_suspended {
            self.implied_price().mul_int(amount).floor_u128()
        } else {
            amount
        };
        if self.reserve < release {
            return Err(AssetError::ReserveUnderflow { reserve: self.reserve, need: release });
        }
        self.token.burn(from, amount)?;
        self.reserve -= release;
        self.refresh_flag();
        Ok(release)
    }

    /// Rebalancing burn: tokens destroyed, reserve untouched.
    pub fn burn(&mut self, from: &Address, amount: u128) -> Result<(), AssetError> {
        self.token.burn(from, amount)?;
        self.refresh_flag();
        Ok(())
    }

    /// Remove `fraction` of the reserve and return the published price.
    pub fn depeg(&mut self, fraction: &Rational) -> Result<Rational, AssetError> {
        if *fraction >= Rational::one() {
            return Err(AssetError::BadHaircut);
        }
        let loss = fraction.mul_int(self.reserve).floor_u128();
        self.reserve -= loss;
        self.refresh_flag();
        Ok(self.implied_price())
    }

    fn refresh_flag(&mut self) {
        self.backing_suspended = !self.is_fully_backed();
    }
}

impl Encode for StableCoin {
    fn encode_to(&self, enc: &mut Encoder) {
        enc.item(&self.token).u128(self.reserve).bool(self.backing_suspended);
    }
}

impl Decode for StableCoin {
    fn decode_from(dec: &mut Decoder<'_>) -> Result<Self, CodecError> {
        Ok(StableCoin { token: dec.item()?, reserve: dec.u128()?, backing_suspended: dec.bool()? })
    }
}

/// Publicly readable property facts.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PublicMetadata {
    pub square_footage: u64,
    pub bedrooms: u32,
    pub last_renovation: NaiveDate,
}

impl Encode for PublicMetadata {
    fn encode_to(&self, enc: &mut Encoder) {
        enc.u64(self.square_footage).u32(self.bedrooms).date(self.last_renovation);
    }
}

impl Decode for PublicMetadata {
    fn decode_from(dec: &mut Decoder<'_>) -> Result<Self, CodecError> {
        Ok(PublicMetadata { square_footage: dec.u64()?, bedrooms: dec.u32()?, last_renovation: dec.date()? })
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum HistoryEntry {
    Mint { owner: Address, tick: u64 },
    Transfer { from: Address, to: Address, tick: u64 },
}

impl HistoryEntry {
    pub fn owner_after(&self) -> Address {
        match self {
            HistoryEntry::Mint { owner, .. } => *owner,
            HistoryEntry::Transfer { to, .. } => *to,
        }
    }
}

impl Encode for HistoryEntry {
    fn encode_to(&self, enc: &mut Encoder) {
        match self {
            HistoryEntry::Mint { owner, tick } => enc.u8(0).address(owner).u64(*tick),
            HistoryEntry::Transfer { from, to, tick } => enc.u8(1).address(from).address(to).u64(*tick),
        };
    }
}

impl Decode for HistoryEntry {
    fn decode_from(dec: &mut Decoder<'_>) -> Result<Self, CodecError> {
        match dec.u8()? {
            0 => Ok(HistoryEntry::Mint { owner: dec.address()?, tick: dec.u64()? }),
            1 => Ok(HistoryEntry::Transfer { from: dec.address()?, to: dec.address()?, tick: dec.u64()? }),
            tag => Err(CodecError::BadTag { what: "history entry", tag }),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DeedToken {
    pub deed_id: Digest,
    pub owner: Address,
    pub public_metadata: PublicMetadata,
    pub private_commitments: BTreeMap<String, Digest>,
    pub covenant_ids: Vec<Digest>,
    pub history: Vec<HistoryEntry>,
}

impl Encode for DeedToken {
    fn encode_to(&self, enc: &mut Encoder) {
        enc.digest(&self.deed_id).address(&self.owner).item(&self.public_metadata);
        enc.len(self.private_commitments.len());
        for (k, v) in &self.private_commitments {
            enc.str(k).digest(v);
        }
        enc.list(&self.covenant_ids).list(&self.history);
    }
}

impl Decode for DeedToken {
    fn decode_from(dec: &mut Decoder<'_>) -> Result<Self, CodecError> {
        let deed_id = dec.digest()?;
        let owner = dec.address()?;
        let public_metadata = dec.item()?;
        let mut private_commitments = BTreeMap::new();
        for _ in 0..dec.len()? {
            let k = dec.string()?;
            private_commitments.insert(k, dec.digest()?);
        }
        Ok(DeedToken {
            deed_id,
            owner,
            public_metadata,
            private_commitments,
            covenant_ids: dec.list()?,
            history: dec.list()?,
        })
    }
}

/// The deed id rule: hash of the minting transaction id.
pub fn deed_id_for(mint_tx_id: &Digest) -> Digest {
    sha256(mint_tx_id.as_bytes())
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct DeedRegistry {
    deeds: BTreeMap<Digest, DeedToken>,
}

impl DeedRegistry {
    pub fn get(&self, id: &Digest) -> Option<&DeedToken> {
        self.deeds.get(id)
    }

    pub(crate) fn get_mut(&mut self, id: &Digest) -> Option<&mut DeedToken> {
        self.deeds.get_mut(id)
    }

    pub fn owner(&self, id: &Digest) -> Option<Address> {
        self.deeds.get(id).map(|d| d.owner)
    }

    pub fn iter(&self) -> impl Iterator<Item = &DeedToken> {
        self.deeds.values()
    }

    pub fn len(&self) -> usize {
        self.deeds.len()
    }

    pub fn is_empty(&self) -> bool {
        self.deeds.is_empty()
    }

    /// Self-registration: the minter becomes the owner.
    pub fn mint(
        &mut self,
        mint_tx_id: &Digest,
        minter: Address,
        public_metadata: PublicMetadata,
        private_commitments: BTreeMap<String, Digest>,
        tick: u64,
    ) -> Result<Digest, AssetError> {
        let deed_id = deed_id_for(mint_tx_id);
        if self.deeds.contains_key(&deed_id) {
            return Err(AssetError::DuplicateDeed(deed_id));
        }
        self.deeds.insert(
            deed_id,
            DeedToken {
                deed_id,
                owner: minter,
                public_metadata,
                private_commitments,
                covenant_ids: Vec::new(),
                history: vec![HistoryEntry::Mint { owner: minter, tick }],
            },
        );
        Ok(deed_id)
    }

    /// Ownership change without covenant checks; callers evaluate covenants
    /// first (see `contracts::covenant`).
    pub(crate) fn reassign(&mut self, id: &Digest, from: &Address, to: Address, tick: u64) -> Result<(), AssetError> {
        let deed = self.deeds.get_mut(id).ok_or(AssetError::UnknownDeed(*id))?;
        if deed.owner != *from {
            return Err(AssetError::NotOwner);
        }
        deed.owner = to;
        deed.history.push(HistoryEntry::Transfer { from: *from, to, tick });
        Ok(())
    }

    pub fn history(&self, id: &Digest) -> Option<&[HistoryEntry]> {
        self.deeds.get(id).map(|d| d.history.as_slice())
    }
}

impl Encode for DeedRegistry {
    fn encode_to(&self, enc: &mut Encoder) {
        enc.len(self.deeds.len());
        for d in self.deeds.values() {
            enc.item(d);
        }
    }
}

impl Decode for DeedRegistry {
    fn decode_from(dec: &mut Decoder<'_>) -> Result<Self, CodecError> {
        let mut deeds = BTreeMap::new();
        for _ in 0..dec.len()? {
            let d: DeedToken = dec.item()?;
            deeds.insert(d.deed_id, d);
        }
        Ok(DeedRegistry { deeds })
    }
}
