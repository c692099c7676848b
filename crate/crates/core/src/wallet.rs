//! Named actors that sign transactions with increasing nonces.

use crate::primitives::Address;
use crate::tx::{Transaction, TxPayload};

pub const DEFAULT_GAS_LIMIT: u64 = 1_000_000;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Wallet {
    pub name: String,
    pub address: Address,
    pub next_nonce: u64,
    pub gas_limit: u64,
    pub tip: u128,
}

pub fn actor_address(name: &str) -> Address {
    Address::derive(&format!("actor:{name}"))
}

impl Wallet {
    pub fn named(name: &str) -> Wallet {
        Wallet {
            name: name.to_string(),
            address: actor_address(name),
            next_nonce: 1,
            gas_limit: DEFAULT_GAS_LIMIT,
            tip: 0,
        }
    }

    pub fn tx(&mut self, payload: TxPayload) -> Transaction {
        let nonce = self.next_nonce;
        self.next_nonce += 1;
        Transaction { sender: self.address, payload, gas_limit: self.gas_limit, tip: self.tip, nonce }
    }
}
