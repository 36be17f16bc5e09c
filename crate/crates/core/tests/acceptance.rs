//! Runs every acceptance criterion and prints one PASS/FAIL line per
//! criterion. Exits with status 1 when any criterion fails.
//!
//! A few headline values are recomputed here from first principles so the
//! run does not rely solely on the library's own oracles.

use std::process::ExitCode;

use newton_series::verify::{run, Suite, VerifyOptions};
use newton_series::Real;

/// `ln Γ(x)` for `x > 0` by the shift-and-Stirling route in f64, written
/// independently of the library oracle.
fn ln_gamma_f64(mut x: f64) -> f64 {
    let mut shift = 0.0;
    while x < 20.0 {
        shift -= x.ln();
        x += 1.0;
    }
    let inv = 1.0 / x;
    let inv2 = inv * inv;
    let series = inv * (1.0 / 12.0 - inv2 * (1.0 / 360.0 - inv2 * (1.0 / 1260.0 - inv2 / 1680.0)));
    shift + (x - 0.5) * x.ln() - x + 0.5 * (2.0 * std::f64::consts::PI).ln() + series
}

/// `H(x) = Σ_{k>=1} (1/k - 1/(k+x))` with an integral tail estimate.
fn harmonic_f64(x: f64) -> f64 {
    let terms = 200_000u32;
    let mut s = 0.0;
    for k in (1..=terms).rev() {
        let k = f64::from(k);
        s += x / (k * (k + x));
    }
    let n = f64::from(terms);
    s + x / (n + 0.5)
}

fn cross_checks() -> Vec<(String, bool)> {
    let mut out = Vec::new();
    for x in [0.5, 1.5, 4.2] {
        let lib = newton_series::oracles::log_gamma(&Real::from_f64(x, 128)).unwrap().to_f64();
        let ind = ln_gamma_f64(x);
        out.push((format!("ln Gamma({x}) library {lib:.12} vs independent {ind:.12}"), (lib - ind).abs() < 1e-10));
    }
    for x in [1.5, 2.0, 3.5] {
        let lib = newton_series::oracles::harmonic(&Real::from_f64(x - 1.0, 128)).unwrap().to_f64();
        let ind = harmonic_f64(x - 1.0);
        out.push((format!("H({}) library {lib:.10} vs independent {ind:.10}", x - 1.0), (lib - ind).abs() < 1e-9));
    }
    out
}

fn main() -> ExitCode {
    let mut ok = true;
    for (line, pass) in cross_checks() {
        println!("{} oracle cross-check: {line}", if pass { "ok  " } else { "BAD " });
        ok &= pass;
    }
    let outcomes = run(Suite::All, &VerifyOptions::default());
    for o in &outcomes {
        println!("{}", o.line());
        ok &= o.passed;
    }
    let passed = outcomes.iter().filter(|o| o.passed).count();
    println!("acceptance: {passed} of {} criteria passed", outcomes.len());
    if ok {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
