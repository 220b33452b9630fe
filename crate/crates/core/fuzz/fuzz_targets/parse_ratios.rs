#![no_main]

use hcsketch::bench::parse_ratios;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(s) = std::str::from_utf8(data) else {
        return;
    };
    if let Ok(ratios) = parse_ratios(s) {
        assert!(!ratios.is_empty());
        assert!(ratios.iter().all(|r| r.is_finite() && *r >= 1.0));
        assert_eq!(ratios.len(), s.split(',').count());
    }
});
