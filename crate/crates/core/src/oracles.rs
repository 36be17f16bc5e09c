//! Independent reference values: `ln Γ`, digamma, the harmonic-number
//! function and Euler's constant.
//!
//! Nothing here depends on the Newton-series or indefinite-sum machinery;
//! these functions exist to check it. `ln Γ` and `ψ` use an upward
//! argument shift followed by the Stirling asymptotic series with exact
//! Bernoulli numbers. Euler's constant comes from the Brent–McMillan
//! modified-Bessel scheme, with an Euler–Maclaurin evaluation of
//! `H_N - ln N` kept alongside as a second, independent route.

use std::collections::HashMap;
use std::sync::{Mutex, OnceLock, RwLock};

use rug::{Float, Integer, Rational};

use crate::arith::{CompensatedSum, Real};
use crate::error::{Error, Result};

const GUARD_BITS: u32 = 32;

/// Bernoulli numbers `B_0 ..= B_m`, computed exactly and cached.
fn bernoulli_upto(m: usize) -> Vec<Rational> {
    static CACHE: OnceLock<Mutex<Vec<Rational>>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(vec![Rational::from(1)]));
    let mut table = cache.lock().unwrap_or_else(|e| e.into_inner());
    // sum_{j=0}^{k} C(k+1, j) B_j = 0
    while table.len() <= m {
        let k = table.len();
        let mut acc = Rational::new();
        let mut binom = Integer::from(1);
        for (j, b) in table.iter().enumerate() {
            acc += Rational::from(&binom * b.numer()) / b.denom();
            binom *= k + 1 - j;
            binom /= j + 1;
        }
        table.push(-acc / Integer::from(k + 1));
    }
    table[..=m].to_vec()
}

/// `B_{2k}` as a float at `bits`.
fn bernoulli_even(k: usize, bits: u32) -> Float {
    let table = bernoulli_upto(2 * k);
    Float::with_val(bits, &table[2 * k])
}

fn check_positive(x: &Real, what: &str) -> Result<()> {
    if x.signum() <= 0 || !x.is_finite() {
        return Err(Error::domain(format!("{what} requires x > 0, got {x}")));
    }
    Ok(())
}

/// Smallest integer shift `m` with `x + m >= 20 * bits / 128`.
fn shift_for(x: &Real, bits: u32) -> u64 {
    let threshold = (20.0 * f64::from(bits) / 128.0).max(10.0);
    let xf = x.to_f64();
    if xf >= threshold {
        0
    } else {
        (threshold - xf).ceil() as u64
    }
}

/// `ln Γ(x)` for `x > 0`.
pub fn log_gamma(x: &Real) -> Result<Real> {
    check_positive(x, "log_gamma")?;
    let bits = x.precision();
    let work = bits + GUARD_BITS;
    let m = shift_for(x, bits);
    let z = Float::with_val(work, x.as_float() + m);

    // (z - 1/2) ln z - z + ln(2 pi)/2
    let ln_z = Float::with_val(work, z.ln_ref());
    let mut main = Float::with_val(work, &z - 0.5) * &ln_z;
    main -= &z;
    let two_pi = Float::with_val(work, rug::float::Constant::Pi) * 2u32;
    main += two_pi.ln() / 2u32;

    let eps = Float::with_val(work, 1) >> (bits as i32 + 20);
    let z_sq = Float::with_val(work, z.square_ref());
    let mut z_pow = z.clone(); // z^(2k-1)
    let mut series = CompensatedSum::new(work);
    let mut prev_term: Option<Float> = None;
    for k in 1.. {
        let b = bernoulli_even(k, work);
        let denom = Float::with_val(work, (2 * k) * (2 * k - 1)) * &z_pow;
        let term = b / denom;
        let magnitude = Float::with_val(work, &*term.as_abs());
        if let Some(prev) = &prev_term {
            if magnitude > *prev {
                return Err(Error::domain(format!(
                    "Stirling series for ln Gamma at {x} diverged before reaching the target error"
                )));
            }
        }
        series.add(&Real::from_float(term));
        if magnitude < eps {
            break;
        }
        prev_term = Some(magnitude);
        z_pow *= &z_sq;
    }
    let mut total = CompensatedSum::new(work);
    total.add(&Real::from_float(main));
    total.add(&series.value());

    // ln Gamma(x) = ln Gamma(x + m) - ln(x (x+1) ... (x+m-1))
    if m > 0 {
        let mut product = Float::with_val(work, x.as_float());
        for j in 1..m {
            product *= Float::with_val(work, x.as_float() + j);
        }
        total.sub(&Real::from_float(product.ln()));
    }
    Ok(total.value().with_precision(bits))
}

/// Digamma `ψ(x) = Γ'(x)/Γ(x)` for `x > 0`.
pub fn digamma(x: &Real) -> Result<Real> {
    check_positive(x, "digamma")?;
    let bits = x.precision();
    let work = bits + GUARD_BITS;
    let m = shift_for(x, bits);
    let z = Float::with_val(work, x.as_float() + m);

    // psi(z) ~ ln z - 1/(2z) - sum B_{2k} / (2k z^{2k})
    let mut total = CompensatedSum::new(work);
    total.add(&Real::from_float(Float::with_val(work, z.ln_ref())));
    total.sub(&Real::from_float(Float::with_val(work, z.recip_ref()) / 2u32));

    let eps = Float::with_val(work, 1) >> (bits as i32 + 20);
    let z_sq = Float::with_val(work, z.square_ref());
    let mut z_pow = z_sq.clone();
    let mut prev: Option<Float> = None;
    for k in 1.. {
        let b = bernoulli_even(k, work);
        let term = b / (Float::with_val(work, 2 * k) * &z_pow);
        let magnitude = Float::with_val(work, &*term.as_abs());
        if let Some(p) = &prev {
            if magnitude > *p {
                return Err(Error::domain(format!(
                    "asymptotic series for digamma at {x} diverged before reaching the target error"
                )));
            }
        }
        total.sub(&Real::from_float(term));
        if magnitude < eps {
            break;
        }
        prev = Some(magnitude);
        z_pow *= &z_sq;
    }
    // psi(x) = psi(x + m) - sum_{j<m} 1/(x + j)
    for j in 0..m {
        let shifted = Float::with_val(work, x.as_float() + j);
        total.sub(&Real::from_float(shifted.recip()));
    }
    Ok(total.value().with_precision(bits))
}

/// Harmonic-number function `H_x = ψ(x + 1) + γ` for `x > -1`.
pub fn harmonic(x: &Real) -> Result<Real> {
    let bits = x.precision();
    let shifted = x + &Real::one(bits);
    if shifted.signum() <= 0 {
        return Err(Error::domain(format!("harmonic requires x > -1, got {x}")));
    }
    Ok(digamma(&shifted)? + euler_gamma(bits))
}

/// Euler's constant at `bits` of precision, cached per precision.
pub fn euler_gamma(bits: u32) -> Real {
    static CACHE: OnceLock<RwLock<HashMap<u32, Real>>> = OnceLock::new();
    let bits = bits.max(crate::arith::MIN_PRECISION);
    let cache = CACHE.get_or_init(|| RwLock::new(HashMap::new()));
    if let Some(v) = cache.read().unwrap_or_else(|e| e.into_inner()).get(&bits) {
        return v.clone();
    }
    let value = euler_gamma_brent_mcmillan(bits);
    let mut guard = cache.write().unwrap_or_else(|e| e.into_inner());
    guard.entry(bits).or_insert(value).clone()
}

/// Brent–McMillan: with `A = Σ (n^k/k!)^2 (H_k - ln n)` and
/// `B = Σ (n^k/k!)^2`, `γ = A/B + O(e^{-4n})`.
pub fn euler_gamma_brent_mcmillan(bits: u32) -> Real {
    let bits = bits.max(crate::arith::MIN_PRECISION);
    // 4n >= (bits + 20) ln 2
    let n = ((f64::from(bits + 20) * std::f64::consts::LN_2) / 4.0).ceil() as u64 + 1;
    // truncation index: alpha n with alpha (ln alpha - 1) = 3, alpha ~ 4.9706
    let terms = (4.971 * n as f64).ceil() as u64 + 8;
    // terms peak near e^{2n}; carry enough extra bits to absorb it
    let work = bits + GUARD_BITS + (3.0 * n as f64).ceil() as u32;
    let n_sq = Float::with_val(work, n * n);
    let ln_n = Float::with_val(work, n).ln();
    let mut a_k = Float::with_val(work, -&ln_n);
    let mut b_k = Float::with_val(work, 1);
    let mut u = a_k.clone();
    let mut v = b_k.clone();
    for k in 1..=terms {
        b_k *= &n_sq;
        b_k /= k * k;
        a_k *= &n_sq;
        a_k /= k;
        a_k += &b_k;
        a_k /= k;
        u += &a_k;
        v += &b_k;
    }
    Real::from_float(Float::with_val(bits, u / v))
}

/// Euler–Maclaurin: `γ = H_N - ln N - 1/(2N) + Σ B_{2k} / (2k N^{2k})`.
pub fn euler_gamma_euler_maclaurin(bits: u32) -> Real {
    let bits = bits.max(crate::arith::MIN_PRECISION);
    let work = bits + GUARD_BITS;
    // smallest series term is about e^{-2 pi N}
    let big_n = ((f64::from(bits + 40) * std::f64::consts::LN_2) / (2.0 * std::f64::consts::PI))
        .ceil() as u64
        + 4;
    let mut total = CompensatedSum::new(work);
    for k in 1..=big_n {
        total.add(&Real::from_float(Float::with_val(work, k).recip()));
    }
    let n_f = Float::with_val(work, big_n);
    total.sub(&Real::from_float(Float::with_val(work, n_f.ln_ref())));
    total.sub(&Real::from_float(Float::with_val(work, n_f.recip_ref()) / 2u32));
    let eps = Float::with_val(work, 1) >> (bits as i32 + 20);
    let n_sq = Float::with_val(work, n_f.square_ref());
    let mut n_pow = n_sq.clone();
    for k in 1.. {
        let term = bernoulli_even(k, work) / (Float::with_val(work, 2 * k) * &n_pow);
        let small = Float::with_val(work, &*term.as_abs()) < eps;
        total.add(&Real::from_float(term));
        if small || k > 4 * big_n as usize {
            break;
        }
        n_pow *= &n_sq;
    }
    total.value().with_precision(bits)
}

#[cfg(test)]
mod tests {
    use super::*;

    const GAMMA_40: &str = "0.5772156649015328606065120900824024310422";

    fn close(a: &Real, b: &Real, log2_tol: i32) -> bool {
        let bits = a.precision().max(b.precision());
        let tol = Real::one(bits) / Real::from_f64(2f64.powi(log2_tol), bits);
        (a - b).abs() <= tol
    }

    #[test]
    fn bernoulli_known_values() {
        let b = bernoulli_upto(12);
        assert_eq!(b[1], Rational::from((-1, 2)));
        assert_eq!(b[2], Rational::from((1, 6)));
        assert_eq!(b[4], Rational::from((-1, 30)));
        assert_eq!(b[12], Rational::from((-691, 2730)));
        assert_eq!(b[7], Rational::new());
    }

    #[test]
    fn gamma_constant_sanity() {
        for bits in [128, 256] {
            let reference = Real::parse(GAMMA_40, bits).unwrap();
            let bm = euler_gamma_brent_mcmillan(bits);
            let em = euler_gamma_euler_maclaurin(bits);
            assert!(close(&bm, &reference, 128), "bm {bm}");
            assert!(close(&em, &reference, 128), "em {em}");
            assert!(close(&bm, &em, bits as i32 - 4));
        }
    }

    #[test]
    fn gamma_constant_is_cached_and_stable() {
        let a = euler_gamma(192);
        let b = euler_gamma(192);
        assert_eq!(a, b);
        assert_eq!(a, euler_gamma_brent_mcmillan(192));
        let wide = euler_gamma(256);
        assert_eq!(a, wide.with_precision(192));
    }

    #[test]
    fn log_gamma_small_values() {
        let bits = 128;
        assert!(close(&log_gamma(&Real::one(bits)).unwrap(), &Real::zero(bits), 112));
        let two = Real::from_i64(2, bits);
        assert!(close(&log_gamma(&Real::from_i64(3, bits)).unwrap(), &two.ln(), 112));
        let half = Real::from_f64(0.5, bits);
        let expected = Real::pi(bits).ln() * half.clone();
        assert!(close(&log_gamma(&half).unwrap(), &expected, 112));
    }

    #[test]
    fn log_gamma_matches_mpfr() {
        for &v in &[1e-6, 0.1, 0.5, 1.5, 3.3, 7.0, 19.5, 42.25, 500.0] {
            let x = Real::from_f64(v, 192);
            let ours = log_gamma(&x).unwrap();
            let mpfr = Real::from_float(x.as_float().clone().ln_abs_gamma().0);
            assert!(close(&ours, &mpfr, 192 - 16), "x={v}: {ours} vs {mpfr}");
        }
    }

    #[test]
    fn digamma_matches_mpfr() {
        for &v in &[1e-3, 0.25, 1.0, 2.5, 13.0, 77.7] {
            let x = Real::from_f64(v, 160);
            let ours = digamma(&x).unwrap();
            let mpfr = Real::from_float(x.as_float().clone().digamma());
            assert!(close(&ours, &mpfr, 160 - 20), "x={v}: {ours} vs {mpfr}");
        }
    }

    #[test]
    fn digamma_identities() {
        let bits = 128;
        let g = euler_gamma(bits);
        assert!(close(&(digamma(&Real::one(bits)).unwrap() + &g), &Real::zero(bits), 108));
        let two = Real::from_i64(2, bits);
        assert!(close(&digamma(&two).unwrap(), &(Real::one(bits) - &g), 108));
        let half = Real::from_f64(0.5, bits);
        let expected = -(&g + &(two.ln() * two.clone()));
        assert!(close(&digamma(&half).unwrap(), &expected, 108));
    }

    #[test]
    fn harmonic_values() {
        let bits = 128;
        assert!(close(&harmonic(&Real::zero(bits)).unwrap(), &Real::zero(bits), 108));
        assert!(close(&harmonic(&Real::one(bits)).unwrap(), &Real::one(bits), 108));
        let x = Real::from_f64(2.5, bits);
        let expected = digamma(&Real::from_f64(3.5, bits)).unwrap() + euler_gamma(bits);
        assert!(close(&harmonic(&x).unwrap(), &expected, 108));
        assert!(harmonic(&Real::from_f64(-1.0, bits)).is_err());
    }

    #[test]
    fn domain_errors() {
        assert!(matches!(log_gamma(&Real::zero(128)), Err(Error::Domain(_))));
        assert!(matches!(digamma(&Real::from_f64(-0.5, 128)), Err(Error::Domain(_))));
    }
}
