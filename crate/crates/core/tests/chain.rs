use deedchain_core::block::tx_root;
use deedchain_core::chain::{genesis_block, validate_chain, Chain, ChainError};
use deedchain_core::codec::Encode;
use deedchain_core::consensus::{QuorumConfig, StakeTable, Strategy, WorkParams};
use deedchain_core::persist::{decode_chain, encode_chain, read_chain, PersistError};
use deedchain_core::state::{GenesisConfig, FEE_TOKEN};
use deedchain_core::wallet::Wallet;
use deedchain_core::{Address, TxPayload};

fn genesis(strategy: Strategy) -> GenesisConfig {
    let mut cfg = GenesisConfig { strategy, ..GenesisConfig::default() };
    for name in ["alice", "bob"] {
        cfg.allocations.push((FEE_TOKEN.into(), Wallet::named(name).address, 1_000_000_000_000));
    }
    cfg
}

/// Ten blocks with a couple of transfers in each.
fn ten_block_chain(strategy: Strategy) -> Chain {
    let mut chain = Chain::new(genesis(strategy)).unwrap();
    let mut alice = Wallet::named("alice");
    let bob = Wallet::named("bob");
    for i in 0..10u128 {
        chain.submit(alice.tx(TxPayload::TokenTransfer { token: FEE_TOKEN.into(), to: bob.address, amount: 10 + i }));
        chain.submit(alice.tx(TxPayload::TokenTransfer { token: FEE_TOKEN.into(), to: bob.address, amount: 1 }));
        let r = chain.produce_block().unwrap();
        assert!(r.rejections.is_empty(), "{:?}", r.rejections);
    }
    chain
}

#[test]
fn fresh_chain_validates() {
    for strategy in [
        Strategy::Work(WorkParams::plain(8)),
        Strategy::Work(WorkParams::memory_mixed(6, 32)),
        Strategy::Stake(StakeTable::from([("a".into(), 1), ("b".into(), 3)])),
        Strategy::Quorum(QuorumConfig::new((0..5).map(|i| (format!("v{i}"), vec![i as u8; 16])).collect())),
    ] {
        let chain = ten_block_chain(strategy);
        assert_eq!(chain.height(), 10);
        let st = validate_chain(chain.blocks()).unwrap();
        assert_eq!(st.state_root(), chain.tip().header.state_root);
    }
}

#[test]
fn replay_is_deterministic() {
    let a = ten_block_chain(Strategy::Work(WorkParams::plain(4)));
    let b = ten_block_chain(Strategy::Work(WorkParams::plain(4)));
    assert_eq!(encode_chain(a.blocks()), encode_chain(b.blocks()));
    let s1 = validate_chain(a.blocks()).unwrap();
    let s2 = validate_chain(a.blocks()).unwrap();
    assert_eq!(s1.canonical_bytes(), s2.canonical_bytes());
}

#[test]
fn mutated_payload_faults_at_its_height() {
    let chain = ten_block_chain(Strategy::Work(WorkParams::plain(8)));
    let bytes = encode_chain(chain.blocks());
    // offset of block 4's last byte (inside its transaction list)
    let mut end = 4;
    for b in &chain.blocks()[..5] {
        end += 4 + b.canonical_bytes().len();
    }
    let mut m = bytes.clone();
    m[end - 9] ^= 0x01;
    let blocks = decode_chain(&m).unwrap();
    let fault = validate_chain(&blocks).unwrap_err();
    assert_eq!(fault.height, 4);
}

#[test]
fn swapped_blocks_fault_at_lower_height() {
    let chain = ten_block_chain(Strategy::Work(WorkParams::plain(4)));
    let mut blocks = chain.blocks().to_vec();
    blocks.swap(5, 6);
    let fault = validate_chain(&blocks).unwrap_err();
    assert_eq!(fault.height, 5);
    assert_eq!(fault.error.code(), "BadParent");
}

#[test]
fn append_block_checks() {
    let source = ten_block_chain(Strategy::Work(WorkParams::plain(8)));
    let mut target = Chain::new(genesis(Strategy::Work(WorkParams::plain(8)))).unwrap();

    let mut wrong_parent = source.blocks()[1].clone();
    wrong_parent.header.parent_hash.0[0] ^= 1;
    assert_eq!(target.append_block(wrong_parent).unwrap_err().code(), "BadParent");

    let mut fewer_txs = source.blocks()[1].clone();
    fewer_txs.txs.pop();
    assert_eq!(target.append_block(fewer_txs).unwrap_err().code(), "BadStateRoot");

    let mut bad_nonce = source.blocks()[1].clone();
    if let deedchain_core::consensus::Seal::Work { nonce } = &mut bad_nonce.header.seal {
        *nonce += 1;
    }
    assert_eq!(target.append_block(bad_nonce).unwrap_err().code(), "BadSeal");

    let mut bad_root = source.blocks()[1].clone();
    bad_root.header.state_root.0[3] ^= 0x80;
    assert!(matches!(target.append_block(bad_root), Err(ChainError::BadSeal(_) | ChainError::BadStateRoot(_))));

    for b in &source.blocks()[1..] {
        target.append_block(b.clone()).unwrap();
    }
    assert_eq!(target.tip().hash(), source.tip().hash());
}

#[test]
fn difficulty_eight_block_is_accepted() {
    let chain = ten_block_chain(Strategy::Work(WorkParams::plain(8)));
    for b in &chain.blocks()[1..] {
        let deedchain_core::consensus::Seal::Work { nonce } = b.header.seal else { panic!("work seal") };
        assert!(deedchain_core::consensus::verify_pow(&b.header.sealing_digest(), nonce, &WorkParams::plain(8)));
    }
    let mut fresh = Chain::new(genesis(Strategy::Work(WorkParams::plain(8)))).unwrap();
    fresh.append_block(chain.blocks()[1].clone()).unwrap();
}

#[test]
fn persisted_chain_round_trips_and_detects_tamper() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("chain.dcl");
    let mut chain = Chain::create(&path, genesis(Strategy::Work(WorkParams::plain(6)))).unwrap();
    let mut alice = Wallet::named("alice");
    for _ in 0..5 {
        chain.submit(alice.tx(TxPayload::TokenTransfer {
            token: FEE_TOKEN.into(),
            to: Address::derive("x"),
            amount: 5,
        }));
        chain.produce_block().unwrap();
    }
    let bytes = std::fs::read(&path).unwrap();
    assert_eq!(&bytes[..4], b"DCL1");
    assert_eq!(read_chain(&path).unwrap(), chain.blocks());
    let reopened = Chain::open(&path).unwrap();
    assert_eq!(reopened.state(), chain.state());

    let mut bad = bytes.clone();
    bad[0] = b'X';
    assert_eq!(decode_chain(&bad).unwrap_err(), PersistError::BadMagic);
    let truncated = &bytes[..bytes.len() - 3];
    assert!(matches!(decode_chain(truncated), Err(PersistError::Truncated { record: 5 })));
}

/// Genesis encoding hashed with `sha256sum` over the bytes printed by
/// `genesis_fixture_bytes` (set `DEEDCHAIN_DUMP_GENESIS` to a path).
const GOLDEN_GENESIS_HASH: &str = "3dfa5827eda892061526c86ce0d3c7d5ee8044a0a943e7de601d409c243e6241";

fn fixture_genesis() -> GenesisConfig {
    let mut cfg = GenesisConfig::default();
    cfg.allocations.push((FEE_TOKEN.into(), Address([0x11; 32]), 1_000_000));
    cfg
}

#[test]
fn genesis_fixture_bytes() {
    let (block, _) = genesis_block(&fixture_genesis()).unwrap();
    let bytes = block.header.canonical_bytes();
    if let Ok(p) = std::env::var("DEEDCHAIN_DUMP_GENESIS") {
        std::fs::write(p, &bytes).unwrap();
    }
    assert_eq!(block.header.tx_root, tx_root(&[]));
    assert_eq!(block.hash().to_hex(), GOLDEN_GENESIS_HASH);
}
