#![no_main]

use libfuzzer_sys::fuzz_target;
use openness_core::systems::{parse_descriptor, to_descriptor_json, ControlSystem};

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    let Ok(sys) = parse_descriptor(text) else {
        return;
    };
    // Accepted descriptors round-trip and evaluate at the origin.
    let again = parse_descriptor(&to_descriptor_json(&sys)).expect("re-parse of a valid descriptor");
    assert_eq!(again, sys);
    let _ = sys.evaluate(&vec![0.0; sys.input_dim()]);
});
