#![no_main]

use deedchain_core::codec::Encode;
use deedchain_core::Transaction;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(tx) = Transaction::decode(data) {
        assert_eq!(tx.canonical_bytes(), data);
        let _ = tx.tx_id();
    }
});
