#![no_main]

use deedchain_core::persist::{decode_chain, encode_chain};
use deedchain_core::Chain;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(blocks) = decode_chain(data) {
        assert_eq!(encode_chain(&blocks), data);
        let _ = Chain::from_blocks(blocks);
    }
});
