#![no_main]

use deedchain_core::Rational;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(r) = text.parse::<Rational>() {
        let exact = r.to_decimal_string(40);
        let _ = exact.parse::<Rational>();
        let _ = r.round_half_up_u128();
    }
});
