#![no_main]

use libfuzzer_sys::fuzz_target;
use newton_series::expr;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(e) = expr::parse(text) {
        // Anything accepted must print to a form that parses back unchanged.
        let printed = e.to_string();
        let again = expr::parse(&printed).expect("printed expression parses");
        assert_eq!(again.to_string(), printed);
    }
});
