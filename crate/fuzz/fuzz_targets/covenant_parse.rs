#![no_main]

use deedchain_core::contracts::covenant::Predicate;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(p) = Predicate::parse(text) {
        let shown = p.to_string();
        let again = Predicate::parse(&shown).expect("display output parses");
        assert_eq!(again.to_string(), shown);
    }
});
