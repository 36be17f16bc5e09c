#![no_main]

use libfuzzer_sys::fuzz_target;
use newton_series::registry;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok((name, params)) = registry::parse_fn_spec(text) {
        assert!(!name.is_empty());
        assert!(params.keys().all(|k| !k.is_empty()));
    }
    let _ = registry::lookup_spec(text);
});
