#![no_main]

use libfuzzer_sys::fuzz_target;
use newton_series::Real;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(x) = Real::parse(text, 128) {
        if x.is_finite() {
            let back = Real::parse(&x.to_decimal_string(), 128).expect("printed value parses");
            assert_eq!(back, x);
        }
    }
});
