//! Block headers, blocks and their hashes.

use crate::codec::{decode_exact, CodecError, Decode, Decoder, Encode, Encoder};
use crate::consensus::Seal;
use crate::primitives::{sha256, Address, Digest};
use crate::tx::Transaction;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BlockHeader {
    pub height: u64,
    pub parent_hash: Digest,
    pub state_root: Digest,
    pub tx_root: Digest,
    pub base_fee: u128,
    /// Simulated tick.
    pub timestamp: u64,
    /// Credited with tips.
    pub beneficiary: Address,
    /// Genesis configuration in block 0, empty otherwise.
    pub extra: Vec<u8>,
    pub seal: Seal,
}

impl BlockHeader {
    fn encode_unsealed(&self, enc: &mut Encoder) {
        enc.u64(self.height)
            .digest(&self.parent_hash)
            .digest(&self.state_root)
            .digest(&self.tx_root)
            .u128(self.base_fee)
            .u64(self.timestamp)
            .address(&self.beneficiary)
            .bytes(&self.extra);
    }

    /// Digest of every header field except the seal.
    pub fn sealing_digest(&self) -> Digest {
        let mut e = Encoder::new();
        self.encode_unsealed(&mut e);
        sha256(&e.finish())
    }

    pub fn hash(&self) -> Digest {
        sha256(&self.canonical_bytes())
    }
}

impl Encode for BlockHeader {
    fn encode_to(&self, enc: &mut Encoder) {
        self.encode_unsealed(enc);
        enc.item(&self.seal);
    }
}

impl Decode for BlockHeader {
    fn decode_from(dec: &mut Decoder<'_>) -> Result<Self, CodecError> {
        Ok(BlockHeader {
            height: dec.u64()?,
            parent_hash: dec.digest()?,
            state_root: dec.digest()?,
            tx_root: dec.digest()?,
            base_fee: dec.u128()?,
            timestamp: dec.u64()?,
            beneficiary: dec.address()?,
            extra: dec.bytes()?.to_vec(),
            seal: dec.item()?,
        })
    }
}

/// Commitment to an ordered transaction list.
pub fn tx_root(txs: &[Transaction]) -> Digest {
    let ids: Vec<Digest> = txs.iter().map(Transaction::tx_id).collect();
    let mut e = Encoder::new();
    e.list(&ids);
    sha256(&e.finish())
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Block {
    pub header: BlockHeader,
    pub txs: Vec<Transaction>,
}

impl Block {
    pub fn hash(&self) -> Digest {
        self.header.hash()
    }

    pub fn height(&self) -> u64 {
        self.header.height
    }

    pub fn decode(bytes: &[u8]) -> Result<Block, CodecError> {
        decode_exact(bytes)
    }
}

impl Encode for Block {
    fn encode_to(&self, enc: &mut Encoder) {
        enc.item(&self.header).list(&self.txs);
    }
}

impl Decode for Block {
    fn decode_from(dec: &mut Decoder<'_>) -> Result<Self, CodecError> {
        Ok(Block { header: dec.item()?, txs: dec.list()? })
    }
}
