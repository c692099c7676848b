#![no_main]

use deedchain_analytics::{daily_returns, parse_series, volatility};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(series) = parse_series("X", data) {
        assert!(series.prices().iter().all(|p| *p > 0.0));
        if let Ok(r) = daily_returns(&series) {
            let _ = volatility(&r);
        }
    }
});
