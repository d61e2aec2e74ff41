#![no_main]
use libfuzzer_sys::fuzz_target;

use abelfem::harness::{RawConfig, StudyConfig};

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    if let Ok(raw) = RawConfig::parse(text) {
        let mut config = StudyConfig::default();
        if config.apply(&raw).is_ok() {
            let _ = config.validate();
            let _ = config.modes();
        }
    }
});
