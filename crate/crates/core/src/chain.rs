//! The hash-linked chain: block production, block acceptance and full
//! replay validation.

use std::collections::{BTreeMap, BTreeSet};
use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::block::{tx_root, Block, BlockHeader};
use crate::codec::{decode_exact, Encode};
use crate::consensus::{quorum_round, ConsensusError, Seal, SealContext, SealError, Strategy};
use crate::gas::GasError;
use crate::ledger::{apply_transactions, BlockContext, Receipt, Rejection, TxError};
use crate::persist::{self, PersistError};
use crate::primitives::{Address, Digest};
use crate::state::{ChainState, GenesisConfig, GenesisError};
use crate::tx::Transaction;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ChainError {
    #[error("bad parent link: {0}")]
    BadParent(String),
    #[error("bad seal: {0}")]
    BadSeal(#[from] SealError),
    #[error("bad state root: {0}")]
    BadStateRoot(String),
    #[error("base fee {got} differs from expected {expected}")]
    BadBaseFee { expected: u128, got: u128 },
    #[error("transaction {index} rejected: {error}")]
    RejectedTx { index: usize, error: TxError },
    #[error("bad genesis block: {0}")]
    BadGenesis(String),
    #[error("malformed block: {0}")]
    Malformed(String),
    #[error(transparent)]
    Consensus(#[from] ConsensusError),
    #[error(transparent)]
    Genesis(#[from] GenesisError),
    #[error("gas: {0}")]
    Gas(String),
    #[error(transparent)]
    Persist(#[from] PersistError),
}

impl From<GasError> for ChainError {
    fn from(e: GasError) -> Self {
        ChainError::Gas(e.to_string())
    }
}

impl ChainError {
    pub fn code(&self) -> &'static str {
        match self {
            ChainError::BadParent(_) => "BadParent",
            ChainError::BadSeal(_) => "BadSeal",
            ChainError::BadStateRoot(_) => "BadStateRoot",
            ChainError::BadBaseFee { .. } => "BadBaseFee",
            ChainError::RejectedTx { .. } => "RejectedTx",
            ChainError::BadGenesis(_) => "BadGenesis",
            ChainError::Malformed(_) => "Malformed",
            ChainError::Consensus(_) => "Consensus",
            ChainError::Genesis(_) => "BadGenesis",
            ChainError::Gas(_) => "Gas",
            ChainError::Persist(_) => "Persist",
        }
    }
}

/// First fault found while validating a chain: position of the offending
/// block (0 = genesis) and the reason.
#[derive(Debug, Error, Clone, PartialEq, Eq)]
#[error("fault at height {height}: {error}")]
pub struct ChainFault {
    pub height: u64,
    pub error: ChainError,
}

/// What happened to the transactions offered for one block.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BlockReport {
    pub height: u64,
    pub tick: u64,
    pub hash: Digest,
    pub base_fee: u128,
    pub gas_used: u64,
    pub receipts: Vec<Receipt>,
    pub rejections: Vec<Rejection>,
}

pub fn genesis_block(cfg: &GenesisConfig) -> Result<(Block, ChainState), ChainError> {
    let state = ChainState::from_genesis(cfg)?;
    let header = BlockHeader {
        height: 0,
        parent_hash: Digest::ZERO,
        state_root: state.state_root(),
        tx_root: tx_root(&[]),
        base_fee: cfg.fee.base_fee,
        timestamp: 0,
        beneficiary: Address::ZERO,
        extra: cfg.canonical_bytes(),
        seal: Seal::Genesis,
    };
    Ok((Block { header, txs: Vec::new() }, state))
}

fn check_genesis(block: &Block) -> Result<(GenesisConfig, ChainState), ChainError> {
    let cfg: GenesisConfig =
        decode_exact(&block.header.extra).map_err(|e| ChainError::BadGenesis(format!("config: {e}")))?;
    let (expected, state) = genesis_block(&cfg)?;
    if expected != *block {
        return Err(ChainError::BadGenesis("block differs from the one its config produces".into()));
    }
    Ok((cfg, state))
}

fn seal_ctx<'a>(header: &BlockHeader, parent_hash: &'a Digest) -> SealContext<'a> {
    SealContext { sealing_digest: header.sealing_digest(), parent_hash, height: header.height }
}

/// Tip beneficiary for the block at `height` on top of `parent_hash`.
fn beneficiary_for(cfg: &GenesisConfig, parent_hash: &Digest, height: u64) -> Result<Address, ConsensusError> {
    let ctx = SealContext { sealing_digest: Digest::ZERO, parent_hash, height };
    Ok(cfg.strategy.required_beneficiary(&ctx)?.unwrap_or(cfg.beneficiary))
}

/// Check `block` against its parent and the pre-state. Returns the
/// post-state.
fn check_block(
    cfg: &GenesisConfig,
    parent: &BlockHeader,
    pre: &ChainState,
    block: &Block,
) -> Result<(ChainState, Vec<Receipt>, u64), ChainError> {
    let h = &block.header;
    let parent_hash = parent.hash();
    if h.height != parent.height + 1 {
        return Err(ChainError::BadParent(format!("height {} after {}", h.height, parent.height)));
    }
    if h.parent_hash != parent_hash {
        return Err(ChainError::BadParent("parent hash mismatch".into()));
    }
    if h.timestamp != parent.timestamp + 1 {
        return Err(ChainError::BadParent(format!("tick {} after {}", h.timestamp, parent.timestamp)));
    }
    if !h.extra.is_empty() {
        return Err(ChainError::Malformed("extra data outside genesis".into()));
    }
    if tx_root(&block.txs) != h.tx_root {
        return Err(ChainError::BadStateRoot("transaction list does not match tx root".into()));
    }
    let ctx = seal_ctx(h, &parent_hash);
    cfg.strategy.verify(&h.seal, &h.beneficiary, &ctx)?;
    if !matches!(cfg.strategy, Strategy::Stake(_)) && h.beneficiary != cfg.beneficiary {
        return Err(SealError::WrongBeneficiary.into());
    }
    if h.base_fee != pre.fee.base_fee {
        return Err(ChainError::BadBaseFee { expected: pre.fee.base_fee, got: h.base_fee });
    }
    let mut st = pre.clone();
    st.height = h.height;
    st.tick = h.timestamp;
    st.proposer = h.beneficiary;
    let bctx = BlockContext { tick: h.timestamp, beneficiary: h.beneficiary };
    let out = apply_transactions(&mut st, &block.txs, &bctx);
    if let Some(r) = out.rejections.first() {
        let index = block.txs.iter().position(|t| t.tx_id() == r.tx_id).unwrap_or(0);
        return Err(ChainError::RejectedTx { index, error: r.error.clone() });
    }
    st.fee.update(out.gas_used)?;
    if st.state_root() != h.state_root {
        return Err(ChainError::BadStateRoot("replayed state differs from committed root".into()));
    }
    Ok((st, out.receipts, out.gas_used))
}

/// Replay `blocks` from genesis; the earliest fault is reported.
pub fn validate_chain(blocks: &[Block]) -> Result<ChainState, ChainFault> {
    Chain::from_blocks(blocks.to_vec()).map(|c| c.state)
}

#[derive(Debug, Clone)]
pub struct Chain {
    cfg: GenesisConfig,
    blocks: Vec<Block>,
    state: ChainState,
    pending: Vec<Transaction>,
    store: Option<PathBuf>,
}

impl Chain {
    pub fn new(cfg: GenesisConfig) -> Result<Chain, ChainError> {
        if let Strategy::Quorum(q) = &cfg.strategy {
            q.validate()?;
        }
        let (genesis, state) = genesis_block(&cfg)?;
        Ok(Chain { cfg, blocks: vec![genesis], state, pending: Vec::new(), store: None })
    }

    pub fn from_blocks(blocks: Vec<Block>) -> Result<Chain, ChainFault> {
        let fault = |height: u64| move |error: ChainError| ChainFault { height, error };
        let first = blocks.first().ok_or_else(|| fault(0)(ChainError::BadGenesis("empty chain".into())))?;
        let (cfg, mut state) = check_genesis(first).map_err(fault(0))?;
        for (i, w) in blocks.windows(2).enumerate() {
            let pos = i as u64 + 1;
            state = check_block(&cfg, &w[0].header, &state, &w[1]).map_err(fault(pos))?.0;
        }
        Ok(Chain { cfg, blocks, state, pending: Vec::new(), store: None })
    }

    /// Create a new chain persisted at `path`.
    pub fn create(path: &Path, cfg: GenesisConfig) -> Result<Chain, ChainError> {
        let mut chain = Chain::new(cfg)?;
        persist::write_chain(path, &chain.blocks)?;
        chain.store = Some(path.to_path_buf());
        Ok(chain)
    }

    /// Load and fully validate a persisted chain.
    pub fn open(path: &Path) -> Result<Chain, ChainFault> {
        let blocks = persist::read_chain(path).map_err(|e| ChainFault { height: e.record_index(), error: e.into() })?;
        let mut chain = Chain::from_blocks(blocks)?;
        chain.store = Some(path.to_path_buf());
        Ok(chain)
    }

    pub fn config(&self) -> &GenesisConfig {
        &self.cfg
    }

    pub fn blocks(&self) -> &[Block] {
        &self.blocks
    }

    pub fn state(&self) -> &ChainState {
        &self.state
    }

    pub fn tip(&self) -> &Block {
        self.blocks.last().expect("chain has genesis")
    }

    pub fn height(&self) -> u64 {
        self.tip().header.height
    }

    pub fn tick(&self) -> u64 {
        self.tip().header.timestamp
    }

    pub fn pending(&self) -> &[Transaction] {
        &self.pending
    }

    pub fn submit(&mut self, tx: Transaction) {
        self.pending.push(tx);
    }

    /// Seal one block at the next tick from the pending pool. Rejected
    /// transactions are dropped; those that did not fit stay pending.
    pub fn produce_block(&mut self) -> Result<BlockReport, ChainError> {
        let parent = self.tip().header.clone();
        let parent_hash = parent.hash();
        let height = parent.height + 1;
        let tick = parent.timestamp + 1;
        let beneficiary = beneficiary_for(&self.cfg, &parent_hash, height)?;
        let mut candidates = std::mem::take(&mut self.pending);
        if let Strategy::Quorum(q) = &self.cfg.strategy {
            // every validator endorses the whole pool
            let ids: BTreeSet<Digest> = candidates.iter().map(Transaction::tx_id).collect();
            let proposals: BTreeMap<String, BTreeSet<Digest>> =
                q.validators.keys().map(|v| (v.clone(), ids.clone())).collect();
            let agreed: BTreeSet<Digest> = quorum_round(&proposals, q)?.into_iter().collect();
            candidates.retain(|t| agreed.contains(&t.tx_id()));
        }
        let mut st = self.state.clone();
        st.height = height;
        st.tick = tick;
        st.proposer = beneficiary;
        let base_fee = st.fee.base_fee;
        let out = apply_transactions(&mut st, &candidates, &BlockContext { tick, beneficiary });
        st.fee.update(out.gas_used)?;
        let mut rejections = Vec::new();
        for r in out.rejections {
            if r.error == TxError::BlockFull {
                let tx = candidates.iter().find(|t| t.tx_id() == r.tx_id).expect("rejected tx came from pool");
                self.pending.push(tx.clone());
            } else {
                rejections.push(r);
            }
        }
        let mut header = BlockHeader {
            height,
            parent_hash,
            state_root: st.state_root(),
            tx_root: tx_root(&out.accepted),
            base_fee,
            timestamp: tick,
            beneficiary,
            extra: Vec::new(),
            seal: Seal::Genesis,
        };
        header.seal = self.cfg.strategy.seal(&seal_ctx(&header, &parent_hash))?;
        let block = Block { header, txs: out.accepted };
        if let Some(path) = &self.store {
            persist::append_block(path, &block)?;
        }
        let hash = block.hash();
        self.blocks.push(block);
        self.state = st;
        Ok(BlockReport {
            height,
            tick,
            hash,
            base_fee,
            gas_used: out.gas_used,
            receipts: out.receipts,
            rejections,
        })
    }

    /// Produce `n` blocks, one per tick.
    pub fn advance_ticks(&mut self, n: u64) -> Result<Vec<BlockReport>, ChainError> {
        (0..n).map(|_| self.produce_block()).collect()
    }

    /// Validate and append an externally built block.
    pub fn append_block(&mut self, block: Block) -> Result<(), ChainError> {
        let (st, _, _) = check_block(&self.cfg, &self.tip().header, &self.state, &block)?;
        if let Some(path) = &self.store {
            persist::append_block(path, &block)?;
        }
        self.blocks.push(block);
        self.state = st;
        Ok(())
    }
}
