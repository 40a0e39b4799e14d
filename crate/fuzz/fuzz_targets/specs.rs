#![no_main]

use libfuzzer_sys::fuzz_target;
use openness_core::simulate::ClosedLoopField;
use openness_core::systems::builtin;
use openness_core::{GainClass, InverseGrowthBound, NormChoice, PowerLaw};

fuzz_target!(|data: &[u8]| {
    let Ok(s) = std::str::from_utf8(data) else {
        return;
    };
    if let Ok(d) = s.parse::<GainClass>() {
        assert_eq!(d.to_string().parse::<GainClass>().ok(), Some(d.clone()));
        let _ = d.eval(0.5);
    }
    if let Ok(h) = s.parse::<InverseGrowthBound>() {
        let _ = h.eval(0.5);
        let _ = h.as_power();
    }
    if let Ok(g) = s.parse::<PowerLaw>() {
        assert!(g.coefficient > 0.0 && g.exponent > 0.0);
    }
    let _ = s.parse::<ClosedLoopField>();
    let _ = s.parse::<NormChoice>();
    // Large identity dimensions are rejected before allocation.
    let _ = builtin(s);
});
