#![no_main]

use libfuzzer_sys::fuzz_target;
use openness_cert::RunConfig;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    for command in ["rate", "certify", "simulate"] {
        let _ = RunConfig::parse(text, command);
    }
});
