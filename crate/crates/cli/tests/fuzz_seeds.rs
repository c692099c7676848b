use std::path::{Path, PathBuf};

use deedchain::config::Config;
use deedchain::deeds::parse_deeds;
use deedchain::scenario::SALE_HAPPY_PATH;
use deedchain::{run_scenario, RunOptions, Scenario};
use deedchain_analytics::{daily_returns, parse_series, volatility};
use deedchain_core::codec::Encode;
use deedchain_core::contracts::covenant::Predicate;
use deedchain_core::oracle::OracleRegistry;
use deedchain_core::persist::{decode_chain, encode_chain};
use deedchain_core::{Block, Chain, Rational, Transaction};

fn corpus(target: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../fuzz/corpus").join(target)
}

fn seeds(target: &str) -> Vec<Vec<u8>> {
    let mut files: Vec<PathBuf> = std::fs::read_dir(corpus(target))
        .unwrap_or_else(|e| panic!("{target}: {e}"))
        .map(|e| e.unwrap().path())
        .collect();
    files.sort();
    assert!(!files.is_empty(), "{target} has no seeds");
    files.iter().map(|f| std::fs::read(f).unwrap()).collect()
}

fn text_seeds(target: &str) -> Vec<String> {
    seeds(target).into_iter().map(|b| String::from_utf8(b).unwrap()).collect()
}

#[test]
fn binary_seeds_decode() {
    for data in seeds("block_decode") {
        let block = Block::decode(&data).unwrap();
        assert_eq!(block.canonical_bytes(), data);
    }
    for data in seeds("tx_decode") {
        let tx = Transaction::decode(&data).unwrap();
        assert_eq!(tx.canonical_bytes(), data);
    }
    for data in seeds("chain_file") {
        let blocks = decode_chain(&data).unwrap();
        assert_eq!(encode_chain(&blocks), data);
        Chain::from_blocks(blocks).unwrap();
    }
}

#[test]
fn text_seeds_parse() {
    let mut parsed = 0;
    for text in text_seeds("covenant_parse") {
        let p = Predicate::parse(&text).unwrap();
        assert_eq!(Predicate::parse(&p.to_string()).unwrap().to_string(), p.to_string());
        parsed += 1;
    }
    for data in seeds("price_csv") {
        if let Ok(s) = parse_series("X", data.as_slice()) {
            let _ = daily_returns(&s).and_then(|r| volatility(&r));
            parsed += 1;
        }
    }
    for data in seeds("deed_csv") {
        parse_deeds(data.as_slice()).unwrap();
        parsed += 1;
    }
    for text in text_seeds("oracle_registry") {
        if let Ok(r) = OracleRegistry::parse(&text) {
            let _ = r.canonical_bytes();
            parsed += 1;
        }
    }
    for text in text_seeds("scenario_parse") {
        Scenario::parse(&text).unwrap();
        parsed += 1;
    }
    for text in text_seeds("config_parse") {
        Config::parse(&text).unwrap().genesis().unwrap();
        parsed += 1;
    }
    for text in text_seeds("decimal_rational") {
        if let Ok(r) = text.parse::<Rational>() {
            let _ = r.to_decimal_string(40).parse::<Rational>();
            parsed += 1;
        }
    }
    assert!(parsed > 15);
}

#[test]
#[ignore = "rewrites the binary corpus seeds"]
fn write_binary_seeds() {
    let s = Scenario::parse(SALE_HAPPY_PATH).unwrap();
    let (_, chain) = run_scenario(&s, &RunOptions { seed: Some(1), data_dir: None }).unwrap();
    std::fs::write(corpus("chain_file").join("sale_happy_path"), encode_chain(chain.blocks())).unwrap();
    std::fs::write(corpus("block_decode").join("genesis"), chain.blocks()[0].canonical_bytes()).unwrap();
    let busiest = chain.blocks().iter().max_by_key(|b| b.txs.len()).unwrap();
    std::fs::write(corpus("block_decode").join("busiest"), busiest.canonical_bytes()).unwrap();
    let mut kinds = std::collections::BTreeSet::new();
    for tx in chain.blocks().iter().flat_map(|b| &b.txs) {
        if kinds.insert(tx.kind()) {
            std::fs::write(corpus("tx_decode").join(format!("{:?}", tx.kind()).to_lowercase()), tx.canonical_bytes())
                .unwrap();
        }
    }
}
