#![no_main]

use iterforms::cli::model::load_model_str;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(s) = std::str::from_utf8(data) {
        let _ = load_model_str("fuzz", s);
    }
});
