#![no_main]

use libfuzzer_sys::fuzz_target;
use spectral_lab::ensembles::EnsembleSpec;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    let Ok(spec) = EnsembleSpec::from_json(text) else { return };
    let _ = spec.validate_shape();
    let _ = spec.atom.validate();
    let json = spec.to_json().expect("spec serializes");
    assert_eq!(EnsembleSpec::from_json(&json).unwrap(), spec);
});
