#![no_main]

// One input exercises every line-oriented list parser.

use libfuzzer_sys::fuzz_target;
use spectral_lab::formats::{parse_measure, parse_points, parse_values, write_points};

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(mu) = parse_measure(text) {
        let total: f64 = mu.weights().iter().sum();
        assert!((total - 1.0).abs() <= 1e-12);
        assert!(mu.weights().iter().all(|w| *w > 0.0));
        assert!(mu.points().windows(2).all(|p| p[0] <= p[1]));
    }
    if let Ok(values) = parse_values(text) {
        assert!(values.iter().all(|v| v.is_finite()));
    }
    if let Ok(points) = parse_points(text) {
        assert_eq!(parse_points(&write_points(&points)).unwrap(), points);
    }
});
