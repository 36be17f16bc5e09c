#![no_main]

use libfuzzer_sys::fuzz_target;
use newton_series::convexity::GridSpec;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(grid) = GridSpec::parse(text) {
        assert!(grid.count >= 2);
        assert!(grid.start < grid.end);
    }
});
