#![no_main]

use libfuzzer_sys::fuzz_target;
use spectral_lab::lab::{parse_metrics_csv, write_metrics_csv};

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(rows) = parse_metrics_csv(text) {
        let again = parse_metrics_csv(&write_metrics_csv(&rows)).expect("written rows parse");
        assert_eq!(again, rows);
    }
});
