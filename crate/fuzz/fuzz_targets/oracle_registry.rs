#![no_main]

use deedchain_core::codec::Encode;
use deedchain_core::oracle::OracleRegistry;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(reg) = OracleRegistry::parse(text) {
        let _ = reg.canonical_bytes();
    }
});
