#![no_main]

use libfuzzer_sys::fuzz_target;
use psob_core::augment::AugConfig;

fuzz_target!(|data: &[u8]| {
    if let Ok(cfg) = serde_json::from_slice::<AugConfig>(data) {
        let _ = cfg.validate();
    }
});
