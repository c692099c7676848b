//! Core of the deedchain ledger: canonical encoding, assets, contracts,
//! oracles, gas pricing, consensus and the hash-linked chain itself.

pub mod assets;
pub mod block;
pub mod chain;
pub mod codec;
pub mod consensus;
pub mod contracts;
pub mod gas;
pub mod ledger;
pub mod oracle;
pub mod persist;
pub mod primitives;
pub mod state;
pub mod tx;
pub mod wallet;
pub mod workload;

pub use block::{Block, BlockHeader};
pub use chain::{validate_chain, BlockReport, Chain, ChainError, ChainFault};
pub use primitives::{Address, Digest, Rational};
pub use state::{ChainState, GenesisConfig};
pub use tx::{Transaction, TxKind, TxPayload};
