#![no_main]

use libfuzzer_sys::fuzz_target;
use spectral_lab::lab::ExperimentConfig;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    // from_json validates; nothing is sampled
    if let Ok(cfg) = ExperimentConfig::from_json(text) {
        let again = ExperimentConfig::from_json(&cfg.to_json().unwrap()).expect("valid config round-trips");
        assert_eq!(again.digest(), cfg.digest());
    }
});
