//! Chain file: the magic `DCL1`, then one record per block, each a 4-byte
//! big-endian length followed by the canonical block encoding.

use std::fs::{self, OpenOptions};
use std::io::Write;
use std::path::Path;

use thiserror::Error;

use crate::block::Block;
use crate::codec::{CodecError, Encode};

pub const MAGIC: &[u8; 4] = b"DCL1";

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum PersistError {
    #[error("i/o: {0}")]
    Io(String),
    #[error("missing DCL1 magic")]
    BadMagic,
    #[error("record {record} is truncated")]
    Truncated { record: u64 },
    #[error("record {record} does not decode: {error}")]
    Decode { record: u64, error: CodecError },
}

impl PersistError {
    /// Index of the offending record, 0 for file-level problems.
    pub fn record_index(&self) -> u64 {
        match self {
            PersistError::Truncated { record } | PersistError::Decode { record, .. } => *record,
            _ => 0,
        }
    }
}

impl From<std::io::Error> for PersistError {
    fn from(e: std::io::Error) -> Self {
        PersistError::Io(e.to_string())
    }
}

fn record(block: &Block) -> Vec<u8> {
    let body = block.canonical_bytes();
    let mut out = Vec::with_capacity(body.len() + 4);
    out.extend_from_slice(&(body.len() as u32).to_be_bytes());
    out.extend_from_slice(&body);
    out
}

pub fn encode_chain(blocks: &[Block]) -> Vec<u8> {
    let mut out = MAGIC.to_vec();
    for b in blocks {
        out.extend(record(b));
    }
    out
}

pub fn decode_chain(bytes: &[u8]) -> Result<Vec<Block>, PersistError> {
    let rest = bytes.strip_prefix(MAGIC.as_slice()).ok_or(PersistError::BadMagic)?;
    let mut pos = 0usize;
    let mut blocks = Vec::new();
    while pos < rest.len() {
        let record = blocks.len() as u64;
        let len_bytes = rest.get(pos..pos + 4).ok_or(PersistError::Truncated { record })?;
        let len = u32::from_be_bytes(len_bytes.try_into().expect("4 bytes")) as usize;
        pos += 4;
        let body = rest.get(pos..pos + len).ok_or(PersistError::Truncated { record })?;
        pos += len;
        blocks.push(Block::decode(body).map_err(|error| PersistError::Decode { record, error })?);
    }
    Ok(blocks)
}

pub fn write_chain(path: &Path, blocks: &[Block]) -> Result<(), PersistError> {
    fs::write(path, encode_chain(blocks))?;
    Ok(())
}

pub fn append_block(path: &Path, block: &Block) -> Result<(), PersistError> {
    let mut f = OpenOptions::new().append(true).open(path)?;
    f.write_all(&record(block))?;
    Ok(())
}

pub fn read_chain(path: &Path) -> Result<Vec<Block>, PersistError> {
    decode_chain(&fs::read(path)?)
}
