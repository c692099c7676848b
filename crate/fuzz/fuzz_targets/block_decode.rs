#![no_main]

use deedchain_core::codec::Encode;
use deedchain_core::Block;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(block) = Block::decode(data) {
        assert_eq!(block.canonical_bytes(), data);
        let _ = block.hash();
    }
});
