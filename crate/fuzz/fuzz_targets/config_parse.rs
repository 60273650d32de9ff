#![no_main]

use libfuzzer_sys::fuzz_target;
use sketchguard_cli::config::{parse_config_bytes, KEYS};

fuzz_target!(|data: &[u8]| {
    if let Ok(cfg) = parse_config_bytes(data) {
        assert!(cfg.len() <= KEYS.len());
        for key in KEYS {
            let _ = cfg.get::<f64>(key);
            let _ = cfg.get::<usize>(key);
        }
    }
});
