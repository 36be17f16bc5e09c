//! Configurable-precision real scalars and the combinatorial primitives
//! (falling factorials, generalized binomial coefficients, ratios of
//! falling factorials in log space) shared by every other module.
//!
//! [`Real`] wraps an MPFR float. Binary operations on two values are
//! carried out at the larger of the two operand precisions, rounding to
//! nearest.

use std::cmp::Ordering;
use std::fmt;
use std::ops::{Add, AddAssign, Div, Mul, MulAssign, Neg, Sub, SubAssign};

use rug::float::{Constant, Special};
use rug::ops::Pow;
use rug::Float;
use serde::{Serialize, Serializer};

use crate::error::{Error, Result};

/// Smallest supported significand width in bits.
pub const MIN_PRECISION: u32 = 53;

/// Working precision used when the caller does not ask for one.
pub const DEFAULT_PRECISION: u32 = 128;

fn clamp_precision(bits: u32) -> u32 {
    bits.max(MIN_PRECISION)
}

/// Number of significant decimal digits printed for a value carried at
/// `bits` of precision.
pub fn decimal_digits(bits: u32) -> usize {
    let digits = (f64::from(clamp_precision(bits)) * 0.301).floor() as usize;
    digits.saturating_sub(2).max(1)
}

#[derive(Clone, PartialEq, PartialOrd)]
pub struct Real(Float);

impl Real {
    /// Wraps an MPFR float, raising its precision to [`MIN_PRECISION`] if needed.
    pub fn from_float(mut value: Float) -> Self {
        if value.prec() < MIN_PRECISION {
            value.set_prec(MIN_PRECISION);
        }
        Real(value)
    }

    pub fn from_f64(value: f64, bits: u32) -> Self {
        Real(Float::with_val(clamp_precision(bits), value))
    }

    pub fn from_i64(value: i64, bits: u32) -> Self {
        Real(Float::with_val(clamp_precision(bits), value))
    }

    pub fn from_u64(value: u64, bits: u32) -> Self {
        Real(Float::with_val(clamp_precision(bits), value))
    }

    pub fn zero(bits: u32) -> Self {
        Real(Float::new(clamp_precision(bits)))
    }

    pub fn one(bits: u32) -> Self {
        Real::from_i64(1, bits)
    }

    pub fn infinity(bits: u32, negative: bool) -> Self {
        let special = if negative {
            Special::NegInfinity
        } else {
            Special::Infinity
        };
        Real(Float::with_val(clamp_precision(bits), special))
    }

    pub fn pi(bits: u32) -> Self {
        Real(Float::with_val(clamp_precision(bits), Constant::Pi))
    }

    /// Parses a decimal literal (`-1.25e-3`, `7`, `.5`) rounded to nearest
    /// at `bits` of precision.
    pub fn parse(text: &str, bits: u32) -> Result<Self> {
        let trimmed = text.trim();
        let valid = !trimmed.is_empty()
            && trimmed
                .bytes()
                .all(|b| b.is_ascii_digit() || matches!(b, b'.' | b'e' | b'E' | b'+' | b'-'))
            && trimmed.bytes().any(|b| b.is_ascii_digit());
        if !valid {
            return Err(Error::invalid(format!("`{text}` is not a decimal number")));
        }
        let parsed = Float::parse(trimmed)
            .map_err(|e| Error::invalid(format!("`{text}` is not a decimal number: {e}")))?;
        let value = Float::with_val(clamp_precision(bits), parsed);
        if !value.is_finite() {
            return Err(Error::invalid(format!("`{text}` is not a finite number")));
        }
        Ok(Real(value))
    }

    pub fn precision(&self) -> u32 {
        self.0.prec()
    }

    /// Rounds (or exactly widens) to a new precision.
    pub fn with_precision(&self, bits: u32) -> Self {
        Real(Float::with_val(clamp_precision(bits), &self.0))
    }

    pub fn as_float(&self) -> &Float {
        &self.0
    }

    pub fn into_float(self) -> Float {
        self.0
    }

    pub fn to_f64(&self) -> f64 {
        self.0.to_f64()
    }

    pub fn is_zero(&self) -> bool {
        self.0.is_zero()
    }

    pub fn is_finite(&self) -> bool {
        self.0.is_finite()
    }

    pub fn is_sign_negative(&self) -> bool {
        self.0.is_sign_negative() && !self.0.is_zero()
    }

    /// -1, 0 or +1.
    pub fn signum(&self) -> i32 {
        match self.0.cmp0() {
            Some(Ordering::Less) => -1,
            Some(Ordering::Greater) => 1,
            _ => 0,
        }
    }

    pub fn abs(&self) -> Self {
        Real(self.0.clone().abs())
    }

    pub fn ln(&self) -> Self {
        Real(self.0.clone().ln())
    }

    pub fn exp(&self) -> Self {
        Real(self.0.clone().exp())
    }

    pub fn sin(&self) -> Self {
        Real(self.0.clone().sin())
    }

    pub fn cos(&self) -> Self {
        Real(self.0.clone().cos())
    }

    pub fn sqrt(&self) -> Self {
        Real(self.0.clone().sqrt())
    }

    pub fn recip(&self) -> Self {
        Real(self.0.clone().recip())
    }

    pub fn square(&self) -> Self {
        Real(self.0.clone().square())
    }

    pub fn powi(&self, exponent: i32) -> Self {
        Real(self.0.clone().pow(exponent))
    }

    /// `self^exponent` at the larger operand precision.
    pub fn pow(&self, exponent: &Real) -> Self {
        let bits = self.precision().max(exponent.precision());
        Real(Float::with_val(bits, (&self.0).pow(&exponent.0)))
    }

    pub fn max<'a>(&'a self, other: &'a Real) -> &'a Real {
        if other > self {
            other
        } else {
            self
        }
    }

    pub fn min<'a>(&'a self, other: &'a Real) -> &'a Real {
        if other < self {
            other
        } else {
            self
        }
    }

    /// Returns the integer `m` when `self` lies within
    /// `2^(16 - precision) * max(1, |self|)` of `m`.
    pub fn nearest_integer(&self) -> Option<i64> {
        if !self.0.is_finite() {
            return None;
        }
        let rounded = self.0.clone().round();
        let gap = Float::with_val(self.precision(), &self.0 - &rounded).abs();
        let scale = self.0.clone().abs().max(&Float::with_val(53, 1));
        let tol = Float::with_val(self.precision(), 1) >> (self.precision() as i32 - 16);
        if gap <= tol * scale {
            rounded.to_integer().and_then(|i| i.to_i64())
        } else {
            None
        }
    }

    /// Decimal rendering with [`decimal_digits`] significant digits.
    pub fn to_decimal_string(&self) -> String {
        self.to_digits(decimal_digits(self.precision()))
    }

    pub fn to_digits(&self, digits: usize) -> String {
        if self.0.is_zero() {
            return "0".to_string();
        }
        self.0.to_string_radix(10, Some(digits.max(1)))
    }
}

impl fmt::Display for Real {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match f.precision() {
            Some(digits) => f.write_str(&self.to_digits(digits)),
            None => f.write_str(&self.to_decimal_string()),
        }
    }
}

impl fmt::Debug for Real {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Real({}@{})", self.to_decimal_string(), self.precision())
    }
}

impl Serialize for Real {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.serialize_str(&self.to_decimal_string())
    }
}

macro_rules! binary_op {
    ($trait:ident, $method:ident, $op:tt) => {
        impl $trait<&Real> for &Real {
            type Output = Real;
            fn $method(self, rhs: &Real) -> Real {
                let bits = self.precision().max(rhs.precision());
                Real(Float::with_val(bits, &self.0 $op &rhs.0))
            }
        }
        impl $trait<Real> for Real {
            type Output = Real;
            fn $method(self, rhs: Real) -> Real {
                (&self).$method(&rhs)
            }
        }
        impl $trait<&Real> for Real {
            type Output = Real;
            fn $method(self, rhs: &Real) -> Real {
                (&self).$method(rhs)
            }
        }
        impl $trait<Real> for &Real {
            type Output = Real;
            fn $method(self, rhs: Real) -> Real {
                self.$method(&rhs)
            }
        }
    };
}

binary_op!(Add, add, +);
binary_op!(Sub, sub, -);
binary_op!(Mul, mul, *);
binary_op!(Div, div, /);

impl AddAssign<&Real> for Real {
    fn add_assign(&mut self, rhs: &Real) {
        *self = &*self + rhs;
    }
}

impl SubAssign<&Real> for Real {
    fn sub_assign(&mut self, rhs: &Real) {
        *self = &*self - rhs;
    }
}

impl MulAssign<&Real> for Real {
    fn mul_assign(&mut self, rhs: &Real) {
        *self = &*self * rhs;
    }
}

impl Neg for Real {
    type Output = Real;
    fn neg(self) -> Real {
        Real(-self.0)
    }
}

impl Neg for &Real {
    type Output = Real;
    fn neg(self) -> Real {
        Real(Float::with_val(self.precision(), -&self.0))
    }
}

/// A real interval, possibly unbounded on either side.
#[derive(Clone, Debug, PartialEq)]
pub struct Interval {
    lower: Option<Real>,
    lower_open: bool,
    upper: Option<Real>,
    upper_open: bool,
}

impl Interval {
    /// `(0, ∞)`.
    pub fn positive_half_line() -> Self {
        Interval {
            lower: Some(Real::zero(MIN_PRECISION)),
            lower_open: true,
            upper: None,
            upper_open: true,
        }
    }

    /// `(-∞, ∞)`.
    pub fn real_line() -> Self {
        Interval {
            lower: None,
            lower_open: true,
            upper: None,
            upper_open: true,
        }
    }

    /// `(lower, ∞)` or `[lower, ∞)`.
    pub fn right_unbounded_from(lower: Real, open: bool) -> Self {
        Interval {
            lower: Some(lower),
            lower_open: open,
            upper: None,
            upper_open: true,
        }
    }

    /// `(-∞, upper)` or `(-∞, upper]`.
    pub fn left_unbounded_to(upper: Real, open: bool) -> Self {
        Interval {
            lower: None,
            lower_open: true,
            upper: Some(upper),
            upper_open: open,
        }
    }

    /// `[lower, upper]`.
    pub fn closed(lower: Real, upper: Real) -> Result<Self> {
        if lower >= upper {
            return Err(Error::invalid(format!(
                "empty or degenerate interval [{lower}, {upper}]"
            )));
        }
        Ok(Interval {
            lower: Some(lower),
            lower_open: false,
            upper: Some(upper),
            upper_open: false,
        })
    }

    pub fn lower(&self) -> Option<&Real> {
        self.lower.as_ref()
    }

    pub fn upper(&self) -> Option<&Real> {
        self.upper.as_ref()
    }

    pub fn lower_open(&self) -> bool {
        self.lower_open
    }

    pub fn right_unbounded(&self) -> bool {
        self.upper.is_none()
    }

    pub fn is_bounded(&self) -> bool {
        self.lower.is_some() && self.upper.is_some()
    }

    pub fn contains(&self, x: &Real) -> bool {
        if !x.is_finite() {
            return false;
        }
        let above = match &self.lower {
            None => true,
            Some(lo) if self.lower_open => x > lo,
            Some(lo) => x >= lo,
        };
        let below = match &self.upper {
            None => true,
            Some(hi) if self.upper_open => x < hi,
            Some(hi) => x <= hi,
        };
        above && below
    }

    /// `true` when `other` lies entirely inside `self`.
    pub fn contains_interval(&self, other: &Interval) -> bool {
        let lower_ok = match (&self.lower, &other.lower) {
            (None, _) => true,
            (Some(_), None) => false,
            (Some(a), Some(b)) => {
                if self.lower_open && !other.lower_open {
                    b > a
                } else {
                    b >= a
                }
            }
        };
        let upper_ok = match (&self.upper, &other.upper) {
            (None, _) => true,
            (Some(_), None) => false,
            (Some(a), Some(b)) => {
                if self.upper_open && !other.upper_open {
                    b < a
                } else {
                    b <= a
                }
            }
        };
        lower_ok && upper_ok
    }

    /// The mirror image `{-x : x in self}`.
    pub fn reflected(&self) -> Self {
        Interval {
            lower: self.upper.as_ref().map(|u| -u),
            lower_open: self.upper_open,
            upper: self.lower.as_ref().map(|l| -l),
            upper_open: self.lower_open,
        }
    }
}

impl fmt::Display for Interval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let open = if self.lower_open || self.lower.is_none() { '(' } else { '[' };
        let close = if self.upper_open || self.upper.is_none() { ')' } else { ']' };
        let lo = self
            .lower
            .as_ref()
            .map_or_else(|| "-inf".to_string(), |l| l.to_digits(17));
        let hi = self
            .upper
            .as_ref()
            .map_or_else(|| "inf".to_string(), |u| u.to_digits(17));
        write!(f, "{open}{lo}, {hi}{close}")
    }
}

impl Serialize for Interval {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.serialize_str(&self.to_string())
    }
}

/// `x (x-1) ... (x-k+1)`; the empty product 1 when `k = 0`.
pub fn falling_factorial(x: &Real, k: u64) -> Real {
    let bits = x.precision();
    let mut acc = Float::with_val(bits, 1);
    let mut factor = Float::with_val(bits, &x.0);
    for _ in 0..k {
        acc *= &factor;
        factor -= 1;
    }
    Real(acc)
}

/// Generalized binomial coefficient `C(x, k) = x^(k falling) / k!`.
///
/// Built as the running product of `(x - j) / (j + 1)`, so an integer `x`
/// in `0..k` produces an exact zero.
pub fn gen_binomial(x: &Real, k: u64) -> Real {
    let bits = x.precision();
    let mut acc = Float::with_val(bits, 1);
    let mut factor = Float::with_val(bits, &x.0);
    for j in 0..k {
        acc *= &factor;
        acc /= j + 1;
        factor -= 1;
    }
    Real(acc)
}

/// `k!` at the given precision.
pub fn factorial(k: u64, bits: u32) -> Real {
    let mut acc = Float::with_val(clamp_precision(bits), 1);
    for j in 2..=k {
        acc *= j;
    }
    Real(acc)
}

/// Log-magnitude and sign of `(x-a)^(n falling) / (b-a)^(n falling)`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FallingRatio {
    /// `ln |ratio|`; negative infinity when the ratio vanishes.
    pub log_magnitude: Real,
    /// -1, 0 or +1.
    pub sign: i8,
}

impl FallingRatio {
    /// `sign * exp(log_magnitude)`.
    pub fn value(&self) -> Real {
        let magnitude = self.log_magnitude.exp();
        match self.sign {
            0 => Real::zero(magnitude.precision()),
            s if s < 0 => -magnitude,
            _ => magnitude,
        }
    }
}

/// Accumulates `ln |(x-a-i)/(b-a-i)|` for `i < n` one factor at a time.
///
/// Requires `a > b`, which keeps every denominator factor strictly
/// negative. The sign is zero exactly when `x - a` is (numerically) one of
/// `0, 1, ..., n-1`.
pub fn log_abs_falling_ratio(x: &Real, a: &Real, b: &Real, n: u64) -> Result<FallingRatio> {
    if a <= b {
        return Err(Error::domain(format!(
            "falling-factorial ratio needs a > b (a = {a}, b = {b})"
        )));
    }
    let bits = x.precision().max(a.precision()).max(b.precision());
    let offset = (x - a).with_precision(bits);
    if let Some(m) = offset.nearest_integer() {
        if m >= 0 && (m as u64) < n {
            return Ok(FallingRatio {
                log_magnitude: Real::infinity(bits, true),
                sign: 0,
            });
        }
    }
    let mut num = Float::with_val(bits, offset.as_float());
    let mut den = Float::with_val(bits, (b - a).as_float());
    let mut log_sum = CompensatedSum::new(bits);
    let mut negatives: u64 = 0;
    let mut quotient = Float::new(bits);
    for _ in 0..n {
        if num.is_sign_negative() {
            negatives += 1;
        }
        // Denominator factors are always negative.
        negatives += 1;
        quotient.assign_div(&num, &den);
        quotient.abs_mut();
        quotient.ln_mut();
        log_sum.add_float(&quotient);
        num -= 1;
        den -= 1;
    }
    Ok(FallingRatio {
        log_magnitude: log_sum.value(),
        sign: if negatives % 2 == 0 { 1 } else { -1 },
    })
}

trait AssignDiv {
    fn assign_div(&mut self, num: &Float, den: &Float);
}

impl AssignDiv for Float {
    fn assign_div(&mut self, num: &Float, den: &Float) {
        use rug::Assign;
        self.assign(num / den);
    }
}

/// Neumaier-compensated summation at a fixed precision.
#[derive(Clone, Debug)]
pub struct CompensatedSum {
    sum: Float,
    compensation: Float,
    scratch: Float,
}

impl CompensatedSum {
    pub fn new(bits: u32) -> Self {
        let bits = clamp_precision(bits);
        CompensatedSum {
            sum: Float::new(bits),
            compensation: Float::new(bits),
            scratch: Float::new(bits),
        }
    }

    pub fn precision(&self) -> u32 {
        self.sum.prec()
    }

    pub fn add(&mut self, value: &Real) {
        self.add_float(&value.0);
    }

    pub fn sub(&mut self, value: &Real) {
        let negated = Float::with_val(value.precision(), -&value.0);
        self.add_float(&negated);
    }

    fn add_float(&mut self, value: &Float) {
        use rug::Assign;
        let bits = self.sum.prec();
        let v = Float::with_val(bits, value);
        self.scratch.assign(&self.sum + &v);
        if self.sum.cmp_abs(&v) != Some(Ordering::Less) {
            let mut err = Float::with_val(bits, &self.sum - &self.scratch);
            err += &v;
            self.compensation += &err;
        } else {
            let mut err = Float::with_val(bits, &v - &self.scratch);
            err += &self.sum;
            self.compensation += &err;
        }
        std::mem::swap(&mut self.sum, &mut self.scratch);
    }

    pub fn value(&self) -> Real {
        Real(Float::with_val(self.sum.prec(), &self.sum + &self.compensation))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn r(v: f64) -> Real {
        Real::from_f64(v, DEFAULT_PRECISION)
    }

    #[test]
    fn falling_factorial_small_cases() {
        assert_eq!(falling_factorial(&r(5.0), 3), r(60.0));
        assert_eq!(falling_factorial(&r(3.7), 0), r(1.0));
        assert_eq!(falling_factorial(&r(2.5), 4), r(-0.9375));
    }

    #[test]
    fn binomial_small_cases() {
        assert_eq!(gen_binomial(&r(0.5), 2), r(-0.125));
        assert!(gen_binomial(&r(1.0), 3).is_zero());
        assert_eq!(gen_binomial(&r(6.0), 2), r(15.0));
        assert_eq!(gen_binomial(&r(-1.0), 5), r(-1.0));
    }

    #[test]
    fn binomial_zero_only_for_small_nonnegative_integers() {
        for n in 0..8 {
            for k in 0..10u64 {
                let c = gen_binomial(&r(n as f64), k);
                assert_eq!(c.is_zero(), (n as u64) < k, "n={n} k={k}");
            }
        }
        assert!(!gen_binomial(&r(2.5), 7).is_zero());
    }

    #[test]
    fn falling_factorial_recurrence() {
        for &x in &[0.3, -2.25, 7.0, 12.5] {
            let x = r(x);
            let mut prev = falling_factorial(&x, 0);
            for k in 0..100u64 {
                let next = falling_factorial(&x, k + 1);
                let expected = &prev * &(&x - &Real::from_u64(k, 128));
                assert_eq!(next, expected);
                prev = next;
            }
        }
    }

    #[test]
    fn pascal_rule_real_upper() {
        let bits = 160;
        let tol = Real::one(bits) / Real::from_f64(2f64.powi(bits as i32 - 8), bits);
        for &x in &[0.5, 3.25, -1.75, 10.1] {
            let x = Real::from_f64(x, bits);
            let xm1 = &x - &Real::one(bits);
            for k in 1..40u64 {
                let lhs = gen_binomial(&x, k);
                let rhs = gen_binomial(&xm1, k) + gen_binomial(&xm1, k - 1);
                let scale = lhs.abs().max(&Real::from_f64(1e-300, bits)).clone();
                assert!(((&lhs - &rhs).abs() / scale) <= tol, "x={x} k={k}");
            }
        }
    }

    #[test]
    fn ratio_requires_a_above_b() {
        assert!(matches!(
            log_abs_falling_ratio(&r(2.0), &r(1.0), &r(1.0), 3),
            Err(Error::Domain(_))
        ));
        assert!(log_abs_falling_ratio(&r(2.0), &r(1.0), &r(1.5), 3).is_err());
    }

    #[test]
    fn ratio_sign_zero_at_integer_offsets() {
        let a = r(1.0);
        let b = r(0.5);
        assert_eq!(log_abs_falling_ratio(&a, &a, &b, 1).unwrap().sign, 0);
        let x = r(4.0);
        // 3! / ((-0.5)(-1.5)(-2.5)) is negative
        assert_eq!(log_abs_falling_ratio(&x, &a, &b, 3).unwrap().sign, -1);
        for n in 4..8 {
            assert_eq!(log_abs_falling_ratio(&x, &a, &b, n).unwrap().sign, 0);
        }
        // a decimal anchor still hits the integer branch
        let a = Real::parse("0.1", 128).unwrap();
        let x = Real::parse("2.1", 128).unwrap();
        let b = Real::parse("0.05", 128).unwrap();
        assert_eq!(log_abs_falling_ratio(&x, &a, &b, 5).unwrap().sign, 0);
    }

    #[test]
    fn ratio_is_unit_at_b() {
        let a = r(1.0);
        let b = r(0.5);
        for n in [0, 1, 7, 300] {
            let ratio = log_abs_falling_ratio(&b, &a, &b, n).unwrap();
            assert!(ratio.log_magnitude.is_zero());
            assert_eq!(ratio.sign, 1);
        }
    }

    #[test]
    fn ratio_matches_direct_quotient() {
        let tol = r(1e-20);
        for &(x, a, b) in &[(2.0, 1.0, 0.5), (0.3, 1.7, 0.1), (9.25, 2.0, -3.0)] {
            let (x, a, b) = (r(x), r(a), r(b));
            for n in 0..=30u64 {
                let direct = falling_factorial(&(&x - &a), n) / falling_factorial(&(&b - &a), n);
                let via_log = log_abs_falling_ratio(&x, &a, &b, n).unwrap().value();
                if direct.is_zero() {
                    assert!(via_log.is_zero(), "x={x} n={n}");
                    continue;
                }
                let rel = (&direct - &via_log).abs() / direct.abs();
                assert!(rel < tol, "x={x} n={n} rel={rel}");
            }
        }
    }

    #[test]
    fn nearest_integer_detection() {
        assert_eq!(r(3.0).nearest_integer(), Some(3));
        assert_eq!(Real::parse("-2.0", 128).unwrap().nearest_integer(), Some(-2));
        assert_eq!(r(3.5).nearest_integer(), None);
        assert_eq!(r(1e-10).nearest_integer(), None);
        let sum = Real::parse("0.1", 128).unwrap() + Real::parse("2.9", 128).unwrap();
        assert_eq!(sum.nearest_integer(), Some(3));
    }

    #[test]
    fn decimal_digit_count() {
        assert_eq!(decimal_digits(128), 36);
        assert_eq!(decimal_digits(256), 75);
        assert_eq!(decimal_digits(53), 13);
    }

    #[test]
    fn decimal_string_round_trip() {
        for text in ["0.1", "-2.5e-7", "3.14159265358979323846264338327950288", "123456789"] {
            let first = Real::parse(text, 128).unwrap();
            let printed = first.to_decimal_string();
            let again = Real::parse(&printed, 128).unwrap();
            assert_eq!(printed, again.to_decimal_string());
        }
    }

    #[test]
    fn parse_rejects_garbage() {
        for text in ["", "abc", "1.2.3", "inf", "nan", "--"] {
            assert!(Real::parse(text, 128).is_err(), "{text}");
        }
    }

    #[test]
    fn mixed_precision_takes_max() {
        let a = Real::from_f64(1.0, 64);
        let b = Real::from_f64(3.0, 200);
        assert_eq!((&a / &b).precision(), 200);
        assert_eq!(Real::from_f64(1.0, 8).precision(), MIN_PRECISION);
    }

    #[test]
    fn compensated_sum_recovers_cancellation() {
        let bits = 64;
        let big = Real::from_f64(1e20, bits);
        let mut s = CompensatedSum::new(bits);
        s.add(&big);
        for _ in 0..1000 {
            s.add(&Real::from_f64(0.1, bits));
        }
        s.sub(&big);
        let got = s.value().to_f64();
        assert!((got - 100.0).abs() < 1e-9, "{got}");
    }

    #[test]
    fn interval_membership() {
        let half = Interval::positive_half_line();
        assert!(!half.contains(&r(0.0)));
        assert!(half.contains(&r(1e-300)));
        assert!(half.right_unbounded());
        let w = Interval::closed(r(1.0), r(50.0)).unwrap();
        assert!(w.contains(&r(1.0)) && w.contains(&r(50.0)));
        assert!(half.contains_interval(&w));
        assert!(!w.contains_interval(&half));
        let refl = half.reflected();
        assert!(refl.contains(&r(-3.0)) && !refl.contains(&r(0.0)));
        assert!(Interval::closed(r(2.0), r(2.0)).is_err());
    }
}
