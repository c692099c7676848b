#![no_main]

use deedchain::deeds::parse_deeds;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let _ = parse_deeds(data);
});
