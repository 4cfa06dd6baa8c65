#![no_main]

use libfuzzer_sys::fuzz_target;
use spectral_lab::formats::{parse_matrix_csv, write_matrix_csv};

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(m) = parse_matrix_csv(text) {
        let again = parse_matrix_csv(&write_matrix_csv(&m)).expect("written matrix parses");
        assert_eq!(again, m);
    }
});
