#![no_main]

use iterforms::expr::parse;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(s) = std::str::from_utf8(data) {
        let _ = parse(s, &["x", "y", "theta", "r"]);
    }
});
