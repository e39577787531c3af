#![no_main]

use libfuzzer_sys::fuzz_target;
use obcs::config::{
    parse_json, EstimateConfig, LambdaConfig, MeanWidthConfig, SimulateConfig, SweepFileConfig,
    TessellateConfig,
};

fuzz_target!(|data: &[u8]| {
    // Config parsing and validation must be total on arbitrary bytes.
    if let Ok(c) = parse_json::<SimulateConfig>(data) {
        let _ = c.validate();
    }
    if let Ok(c) = parse_json::<EstimateConfig>(data) {
        let _ = c.validate();
    }
    if let Ok(c) = parse_json::<SweepFileConfig>(data) {
        let _ = c.sweep.validate();
    }
    if let Ok(c) = parse_json::<MeanWidthConfig>(data) {
        let _ = c.validate();
    }
    if let Ok(c) = parse_json::<TessellateConfig>(data) {
        let _ = c.validate();
    }
    if let Ok(c) = parse_json::<LambdaConfig>(data) {
        let _ = c.validate();
    }
});
