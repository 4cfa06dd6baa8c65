#![no_main]

use libfuzzer_sys::fuzz_target;
use spectral_lab::formats::{parse_spectrum_csv, write_spectrum_csv};

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(s) = parse_spectrum_csv(text) {
        assert!(s.singular_values.windows(2).all(|w| w[0] >= w[1]));
        let again = parse_spectrum_csv(&write_spectrum_csv(&s)).expect("written spectrum parses");
        assert_eq!(again, s);
    }
});
