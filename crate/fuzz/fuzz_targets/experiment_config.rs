#![no_main]

use libfuzzer_sys::fuzz_target;
use plateau_core::experiment::ExperimentConfig;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    if let Ok(config) = ExperimentConfig::from_json(text) {
        // planning parses every embedded input but runs nothing
        let _ = config.plan(None);
        let _ = config.hash();
    }
});
