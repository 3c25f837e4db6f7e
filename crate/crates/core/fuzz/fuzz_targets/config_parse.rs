#![no_main]

use fastmwem::harness::ExperimentConfig;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(config) = ExperimentConfig::from_json(text) {
        let _ = config.hash();
    }
});
