//! Replays the checked-in fuzz corpus through the invariants the fuzz targets assert.

use std::fs;
use std::path::PathBuf;

use newton_series::convexity::GridSpec;
use newton_series::{expr, registry, Real};

fn seeds(target: &str) -> Vec<String> {
    let dir = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fuzz/corpus").join(target);
    let mut out: Vec<String> = fs::read_dir(&dir)
        .unwrap_or_else(|e| panic!("{}: {e}", dir.display()))
        .map(|entry| fs::read_to_string(entry.unwrap().path()).unwrap())
        .collect();
    out.sort();
    assert!(!out.is_empty(), "no seeds for {target}");
    out
}

#[test]
fn expression_seeds() {
    let mut accepted = 0;
    for text in seeds("expr_parse") {
        if let Ok(e) = expr::parse(&text) {
            let printed = e.to_string();
            assert_eq!(expr::parse(&printed).unwrap().to_string(), printed, "{text}");
            accepted += 1;
        }
    }
    assert!(accepted >= 3);
}

#[test]
fn fn_spec_seeds() {
    for text in seeds("fn_spec") {
        if let Ok((name, params)) = registry::parse_fn_spec(&text) {
            assert!(!name.is_empty());
            assert!(params.keys().all(|k| !k.is_empty()));
        }
        let _ = registry::lookup_spec(&text);
    }
}

#[test]
fn grid_seeds() {
    let parsed: Vec<_> = seeds("grid_spec").iter().map(|t| GridSpec::parse(t)).collect();
    assert_eq!(parsed.iter().filter(|g| g.is_ok()).count(), 2);
    for grid in parsed.into_iter().flatten() {
        assert!(grid.count >= 2 && grid.start < grid.end);
    }
}

#[test]
fn decimal_seeds() {
    for text in seeds("decimal") {
        if let Ok(x) = Real::parse(&text, 128) {
            if x.is_finite() {
                assert_eq!(Real::parse(&x.to_decimal_string(), 128).unwrap(), x, "{text}");
            }
        }
    }
}
