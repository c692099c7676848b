//! Chain state and the genesis configuration it is built from.

use std::collections::BTreeMap;

use crate::assets::{DeedRegistry, FungibleToken, StableCoin};
use crate::codec::{CodecError, Decode, Decoder, Encode, Encoder};
use crate::consensus::{Strategy, WorkParams};
use crate::contracts::{Covenant, EscrowSale, LoanPosition};
use crate::gas::{FeeState, GasSchedule};
use crate::oracle::{AccessControlList, AttestationLog, OracleRegistry, PriceFeed, DEFAULT_STALENESS_BOUND};
use crate::primitives::{sha256, Address, Digest};

pub const FEE_TOKEN: &str = "DCT";
pub const STABLE_TOKEN: &str = "USDS";

/// Everything needed to rebuild the chain from nothing. Stored in the
/// genesis block so a persisted chain is self-describing.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GenesisConfig {
    pub strategy: Strategy,
    pub fee_token: String,
    pub stable_symbol: String,
    /// Additional fungible tokens, e.g. market assets used as collateral.
    pub tokens: Vec<String>,
    /// (token, holder, amount); the stable symbol mints against reserve.
    pub allocations: Vec<(String, Address, u128)>,
    pub oracles: OracleRegistry,
    pub fee: FeeState,
    pub staleness_bound: u64,
    /// Credited with tips when the strategy does not name a proposer.
    pub beneficiary: Address,
}

impl Default for GenesisConfig {
    fn default() -> Self {
        GenesisConfig {
            strategy: Strategy::Work(WorkParams::plain(8)),
            fee_token: FEE_TOKEN.into(),
            stable_symbol: STABLE_TOKEN.into(),
            tokens: Vec::new(),
            allocations: Vec::new(),
            oracles: OracleRegistry::default(),
            fee: FeeState::default(),
            staleness_bound: DEFAULT_STALENESS_BOUND,
            beneficiary: Address::derive("proposer"),
        }
    }
}

impl Encode for GenesisConfig {
    fn encode_to(&self, enc: &mut Encoder) {
        enc.item(&self.strategy)
            .str(&self.fee_token)
            .str(&self.stable_symbol)
            .len(self.tokens.len());
        for t in &self.tokens {
            enc.str(t);
        }
        enc.len(self.allocations.len());
        for (t, a, v) in &self.allocations {
            enc.str(t).address(a).u128(*v);
        }
        enc.item(&self.oracles).item(&self.fee).u64(self.staleness_bound).address(&self.beneficiary);
    }
}

impl Decode for GenesisConfig {
    fn decode_from(dec: &mut Decoder<'_>) -> Result<Self, CodecError> {
        let strategy = dec.item()?;
        let fee_token = dec.string()?;
        let stable_symbol = dec.string()?;
        let mut tokens = Vec::new();
        for _ in 0..dec.len()? {
            tokens.push(dec.string()?);
        }
        let mut allocations = Vec::new();
        for _ in 0..dec.len()? {
            allocations.push((dec.string()?, dec.address()?, dec.u128()?));
        }
        Ok(GenesisConfig {
            strategy,
            fee_token,
            stable_symbol,
            tokens,
            allocations,
            oracles: dec.item()?,
            fee: dec.item()?,
            staleness_bound: dec.u64()?,
            beneficiary: dec.address()?,
        })
    }
}

/// Parameters fixed at genesis.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ChainParams {
    pub fee_token: String,
    pub stable_symbol: String,
    pub staleness_bound: u64,
    pub oracles: OracleRegistry,
    pub gas: GasSchedule,
}

impl Encode for ChainParams {
    fn encode_to(&self, enc: &mut Encoder) {
        enc.str(&self.fee_token)
            .str(&self.stable_symbol)
            .u64(self.staleness_bound)
            .item(&self.oracles)
            .item(&self.gas);
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ChainState {
    pub params: ChainParams,
    pub tokens: BTreeMap<String, FungibleToken>,
    pub stable: StableCoin,
    pub deeds: DeedRegistry,
    pub covenants: BTreeMap<Digest, Covenant>,
    pub sales: BTreeMap<Digest, EscrowSale>,
    pub loans: BTreeMap<Digest, LoanPosition>,
    pub attestations: AttestationLog,
    pub feed: PriceFeed,
    pub acl: AccessControlList,
    /// Last accepted nonce per sender.
    pub nonces: BTreeMap<Address, u64>,
    pub fee: FeeState,
    pub height: u64,
    pub tick: u64,
    /// Beneficiary of the most recent block.
    pub proposer: Address,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum GenesisError {
    #[error("duplicate token symbol '{0}'")]
    DuplicateToken(String),
    #[error("allocation of unknown token '{0}'")]
    UnknownToken(String),
    #[error("invalid genesis: {0}")]
    Invalid(String),
}

impl ChainState {
    pub fn from_genesis(cfg: &GenesisConfig) -> Result<ChainState, GenesisError> {
        cfg.fee.validate().map_err(|e| GenesisError::Invalid(e.to_string()))?;
        let mut tokens = BTreeMap::new();
        for sym in std::iter::once(&cfg.fee_token).chain(&cfg.tokens) {
            if *sym == cfg.stable_symbol || tokens.insert(sym.clone(), FungibleToken::new(sym.clone())).is_some() {
                return Err(GenesisError::DuplicateToken(sym.clone()));
            }
        }
        let mut stable = StableCoin::new(cfg.stable_symbol.clone());
        for (sym, holder, amount) in &cfg.allocations {
            let r = if *sym == cfg.stable_symbol {
                stable.mint(holder, *amount)
            } else {
                tokens.get_mut(sym).ok_or_else(|| GenesisError::UnknownToken(sym.clone()))?.mint(holder, *amount)
            };
            r.map_err(|e| GenesisError::Invalid(e.to_string()))?;
        }
        Ok(ChainState {
            params: ChainParams {
                fee_token: cfg.fee_token.clone(),
                stable_symbol: cfg.stable_symbol.clone(),
                staleness_bound: cfg.staleness_bound,
                oracles: cfg.oracles.clone(),
                gas: GasSchedule::default(),
            },
            tokens,
            stable,
            deeds: DeedRegistry::default(),
            covenants: BTreeMap::new(),
            sales: BTreeMap::new(),
            loans: BTreeMap::new(),
            attestations: AttestationLog::default(),
            feed: PriceFeed::default(),
            acl: AccessControlList::default(),
            nonces: BTreeMap::new(),
            fee: cfg.fee.clone(),
            height: 0,
            tick: 0,
            proposer: Address::ZERO,
        })
    }

    pub fn token(&self, symbol: &str) -> Option<&FungibleToken> {
        if symbol == self.params.stable_symbol {
            Some(&self.stable.token)
        } else {
            self.tokens.get(symbol)
        }
    }

    pub(crate) fn token_mut(&mut self, symbol: &str) -> Option<&mut FungibleToken> {
        if symbol == self.params.stable_symbol {
            Some(&mut self.stable.token)
        } else {
            self.tokens.get_mut(symbol)
        }
    }

    pub fn balance(&self, symbol: &str, who: &Address) -> u128 {
        self.token(symbol).map_or(0, |t| t.balance(who))
    }

    /// Symbols of every fungible token including the stablecoin, ascending.
    pub fn token_symbols(&self) -> Vec<String> {
        let mut v: Vec<String> = self.tokens.keys().cloned().collect();
        v.push(self.params.stable_symbol.clone());
        v.sort();
        v
    }

    /// The open sale for a deed, if any.
    pub fn open_sale_for(&self, deed_id: &Digest) -> Option<&EscrowSale> {
        self.sales.values().find(|s| s.deed_id == *deed_id && s.state.is_open())
    }

    pub fn state_root(&self) -> Digest {
        sha256(&self.canonical_bytes())
    }
}

impl Encode for ChainState {
    fn encode_to(&self, enc: &mut Encoder) {
        enc.item(&self.params).len(self.tokens.len());
        for t in self.tokens.values() {
            enc.item(t);
        }
        enc.item(&self.stable).item(&self.deeds).len(self.covenants.len());
        for c in self.covenants.values() {
            enc.item(c);
        }
        enc.len(self.sales.len());
        for s in self.sales.values() {
            enc.item(s);
        }
        enc.len(self.loans.len());
        for l in self.loans.values() {
            enc.item(l);
        }
        enc.item(&self.attestations).item(&self.feed).item(&self.acl).len(self.nonces.len());
        for (a, n) in &self.nonces {
            enc.address(a).u64(*n);
        }
        enc.item(&self.fee).u64(self.height).u64(self.tick).address(&self.proposer);
    }
}
