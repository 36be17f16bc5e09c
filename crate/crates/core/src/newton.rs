//! Newton series `f(x) = Σ_k C(x-a, k) Δ^k f(a)` with remainder control.
//!
//! When the caller certifies that `(-1)^q`-signed complete monotonicity holds
//! from order `q` on, the truncation error after `n >= q` terms satisfies
//!
//! ```text
//! |R_n(x)| <= |(x-a)^(n falling) / (b-a)^(n falling)| * |R_n(b)|
//!          <= |(x-a)^(n falling) / (b-a)^(n falling)| * |f(b) - Σ_{k<q} C(b-a,k) Δ^k f(a)|
//! ```
//!
//! for any `b < min(a, x)` in the domain. [`eval`] tracks the first form,
//! which is never larger than the second and decays faster, and also reports
//! the second.

use std::collections::VecDeque;

use serde::Serialize;

use crate::arith::{factorial, falling_factorial, log_abs_falling_ratio, CompensatedSum, FallingRatio, Interval, Real, MIN_PRECISION};
use crate::error::{Error, Result};
use crate::finite_diff::{build_table, divided_difference, DiffTable, TableSource};
use crate::registry::FuncHandle;

/// Orders cross-checked between a closed form and the numeric table.
pub const CROSS_CHECK_ORDERS: usize = 10;
const DIVERGENCE_WINDOW: usize = 32;
const SMALL_TERM_RUN: usize = 4;

#[derive(Clone, Debug, Serialize)]
pub struct CrossCheck {
    pub orders_checked: usize,
    pub max_abs_difference: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct NewtonExpansion {
    #[serde(rename = "function")]
    #[serde(serialize_with = "serialize_name")]
    pub f: FuncHandle,
    pub anchor: Real,
    pub table: DiffTable,
    pub domain: Interval,
    pub precision: u32,
    /// Every coefficient is negligible next to values of `f` between the
    /// nodes, so the series sums to zero whatever `f` does off the nodes.
    pub identically_zero_series: bool,
    pub cross_check: Option<CrossCheck>,
}

fn serialize_name<S: serde::Serializer>(f: &FuncHandle, s: S) -> std::result::Result<S::Ok, S::Error> {
    s.serialize_str(f.name())
}

impl NewtonExpansion {
    pub fn order(&self) -> usize {
        self.table.max_order
    }

    pub fn coefficient(&self, k: usize) -> &Real {
        self.table.value(k)
    }

    /// `C(x-a, k) Δ^k f(a)`.
    pub fn term(&self, k: usize, x: &Real) -> Real {
        let w = self.table.working_precision;
        let t = x.with_precision(w) - &self.anchor;
        crate::arith::gen_binomial(&t, k as u64) * self.table.value(k)
    }
}

/// Builds the coefficient table of order `K` at anchor `a`.
///
/// Closed-form differences are preferred when the handle has them, after a
/// comparison with the numeric table for the first [`CROSS_CHECK_ORDERS`]
/// orders.
pub fn expand(f: &FuncHandle, a: &Real, max_order: usize, bits: u32) -> Result<NewtonExpansion> {
    if !f.domain().right_unbounded() {
        return Err(Error::NotRightUnbounded(f.name().to_string()));
    }
    if !f.domain().contains(a) {
        return Err(Error::domain(format!("anchor {a} is outside the domain {} of `{}`", f.domain(), f.name())));
    }
    let bits = bits.max(MIN_PRECISION);
    let (table, cross_check) = if f.has_closed_form_diff() {
        let closed = DiffTable::from_closed_form(f, a, max_order, bits)?;
        let check_order = max_order.min(CROSS_CHECK_ORDERS);
        let numeric = build_table(f, a, check_order, bits)?;
        let mut worst = 0f64;
        for k in 0..=check_order {
            let diff = (closed.value(k) - numeric.value(k)).abs();
            let allowed = Real::from_i64(8, bits) * (closed.error(k) + numeric.error(k))
                + numeric.value(k).abs() * Real::from_f64(2f64.powi(8 - bits as i32), bits);
            if diff > allowed {
                return Err(Error::CrossCheck {
                    function: f.name().to_string(),
                    order: k,
                    closed: closed.value(k).to_digits(20),
                    numeric: numeric.value(k).to_digits(20),
                });
            }
            worst = worst.max(diff.to_f64());
        }
        (
            closed,
            Some(CrossCheck {
                orders_checked: check_order + 1,
                max_abs_difference: worst,
            }),
        )
    } else {
        (build_table(f, a, max_order, bits)?, None)
    };
    let identically_zero_series = zero_series(f, a, &table, bits)?;
    Ok(NewtonExpansion {
        f: f.clone(),
        anchor: table.anchor.clone(),
        domain: f.domain().clone(),
        table,
        precision: bits,
        identically_zero_series,
        cross_check,
    })
}

/// Compares the coefficients with `f` sampled halfway between nodes.
fn zero_series(f: &FuncHandle, a: &Real, table: &DiffTable, bits: u32) -> Result<bool> {
    let w = table.working_precision;
    let mut scale = Real::zero(w);
    for offset in [0.5, 0.25, 1.5] {
        let probe = a.with_precision(w) + Real::from_f64(offset, w);
        scale = scale.max(&f.eval(&probe, w)?.abs()).clone();
    }
    let cutoff = scale * Real::from_f64(2f64.powi(-(bits as i32) / 2), w);
    Ok(table.values.iter().all(|v| v.abs() <= cutoff))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum EvalStatus {
    ConvergedBounded,
    ConvergedHeuristic,
    FiniteExact,
    Diverged,
    MaxTerms,
}

impl std::fmt::Display for EvalStatus {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            EvalStatus::ConvergedBounded => "converged_bounded",
            EvalStatus::ConvergedHeuristic => "converged_heuristic",
            EvalStatus::FiniteExact => "finite_exact",
            EvalStatus::Diverged => "diverged",
            EvalStatus::MaxTerms => "max_terms",
        })
    }
}

/// Caller-supplied complete-monotonicity hypothesis: `(-1)^k f` is
/// `(k-1)`-convex with sign `(-1)^q` for every `k >= q`. `q = 0` means `f`
/// itself is completely monotone.
#[derive(Clone, Debug)]
pub struct Certificate {
    pub q: usize,
    /// Comparison point; defaults to [`default_b`].
    pub b: Option<Real>,
}

#[derive(Clone, Debug)]
pub struct EvalOptions {
    pub tolerance: f64,
    pub max_terms: usize,
    pub certificate: Option<Certificate>,
}

#[derive(Clone, Debug, Serialize)]
pub struct EvalReport {
    pub value: Real,
    pub terms_used: usize,
    pub status: EvalStatus,
    /// Truncation bound plus the accumulated rounding estimate.
    pub remainder_bound: Option<Real>,
    /// The n-independent factor version of the bound, at the final `n`.
    pub apriori_bound: Option<Real>,
    pub b_used: Option<Real>,
    pub q: Option<usize>,
    pub rounding_error: Real,
    pub identically_zero_series: bool,
    /// A coefficient sign contradicted the supplied certificate, so no
    /// bound was claimed.
    pub certificate_rejected: bool,
}

/// `min(a,x) - min(0.5, (min(a,x) - inf I) / 2)`.
pub fn default_b(a: &Real, x: &Real, domain: &Interval) -> Real {
    let m = a.min(x).clone();
    let bits = m.precision();
    let half = Real::from_f64(0.5, bits);
    let step = match domain.lower() {
        Some(lo) => {
            let room = (&m - lo) / Real::from_i64(2, bits);
            room.min(&half).clone()
        }
        None => half,
    };
    m - step
}

struct BoundState {
    q: usize,
    b: Real,
    s: Real,
    f_b: Real,
    ratio: Real,
    binom_b: Real,
    partial_b: CompensatedSum,
    abs_b: CompensatedSum,
    err_b: CompensatedSum,
    apriori_factor: Option<Real>,
}

/// Sums the series at `x` under the stopping rules described on [`EvalStatus`].
pub fn eval(exp: &NewtonExpansion, x: &Real, options: &EvalOptions) -> Result<EvalReport> {
    if !exp.domain.contains(x) {
        return Err(Error::domain(format!("{x} is outside the domain {} of `{}`", exp.domain, exp.f.name())));
    }
    if options.max_terms == 0 {
        return Err(Error::invalid("max_terms must be positive"));
    }
    let w = exp.table.working_precision;
    let tol = Real::from_f64(options.tolerance, w);
    let a = exp.anchor.clone();
    let xw = x.with_precision(w);
    let t = &xw - &a;
    let limit = options.max_terms.min(exp.order() + 1);
    let ulp = Real::from_f64(2f64.powi(-(w as i32) + 2), w);

    let mut bound_state = match &options.certificate {
        None => None,
        Some(cert) => {
            if cert.q > exp.order() {
                return Err(Error::invalid(format!(
                    "q = {} exceeds the table order {}",
                    cert.q,
                    exp.order()
                )));
            }
            let b = match &cert.b {
                Some(b) => b.with_precision(w),
                None => default_b(&a, &xw, &exp.domain),
            };
            let m = a.min(&xw);
            if &b >= m {
                return Err(Error::invalid(format!("b = {} must lie below min(a, x) = {}", b.to_digits(17), m.to_digits(17))));
            }
            if !exp.domain.contains(&b) {
                return Err(Error::domain(format!("b = {b} is outside the domain {}", exp.domain)));
            }
            let f_b = exp.f.eval(&b, w)?.with_precision(w);
            Some(BoundState {
                q: cert.q,
                s: &b - &a,
                b,
                f_b,
                ratio: Real::one(w),
                binom_b: Real::one(w),
                partial_b: CompensatedSum::new(w),
                abs_b: CompensatedSum::new(w),
                err_b: CompensatedSum::new(w),
                apriori_factor: None,
            })
        }
    };
    let b_used = bound_state.as_ref().map(|s| s.b.clone());
    let f_eval_err = Real::from_f64(exp.f.eval_abs_error().unwrap_or(0.0), w);
    let q_used = bound_state.as_ref().map(|s| s.q);

    let mut sum = CompensatedSum::new(w);
    let mut abs_sum = CompensatedSum::new(w);
    let mut table_err = CompensatedSum::new(w);
    let mut binom = Real::one(w);
    let integer_hit = t.nearest_integer().filter(|&m| m >= 0 && (m as usize) <= exp.order());
    let mut certificate_rejected = false;
    let mut small_run = 0usize;
    let mut recent: VecDeque<Real> = VecDeque::with_capacity(DIVERGENCE_WINDOW + 1);
    let mut status = EvalStatus::MaxTerms;
    let mut remainder_bound = None;
    let mut apriori_bound = None;
    let mut terms_used = 0usize;
    let zero_series = exp.identically_zero_series;

    let finish_rounding = |abs_sum: &CompensatedSum, table_err: &CompensatedSum| -> Real {
        table_err.value() + abs_sum.value() * &ulp
    };

    for k in 0..limit {
        let coeff = exp.table.value(k);
        let term = &binom * coeff;
        sum.add(&term);
        abs_sum.add(&term.abs());
        table_err.add(&(binom.abs() * exp.table.error(k)));
        terms_used = k + 1;
        let n = k + 1;

        if let Some(m) = integer_hit {
            if n == m as usize + 1 {
                status = EvalStatus::FiniteExact;
                remainder_bound = Some(finish_rounding(&abs_sum, &table_err));
                break;
            }
        }

        let mut bounded_now = false;
        if integer_hit.is_none() && !zero_series && !certificate_rejected {
            if let Some(st) = bound_state.as_mut() {
                if k == st.q {
                    st.apriori_factor = Some((&st.f_b - &st.partial_b.value()).abs());
                }
                let term_b = &st.binom_b * coeff;
                let err_k = st.binom_b.abs() * exp.table.error(k);
                if k >= st.q {
                    let signed = if st.q % 2 == 0 { term_b.clone() } else { -term_b.clone() };
                    if signed < -(&err_k * &Real::from_i64(4, w)) {
                        certificate_rejected = true;
                    }
                }
                st.partial_b.add(&term_b);
                st.abs_b.add(&term_b.abs());
                st.err_b.add(&err_k);
                st.ratio = &st.ratio * &((&t - &Real::from_u64(k as u64, w)) / (&st.s - &Real::from_u64(k as u64, w)));
                st.binom_b = &st.binom_b * &((&st.s - &Real::from_u64(k as u64, w)) / Real::from_u64(k as u64 + 1, w));
                if n >= st.q && !certificate_rejected {
                    let r_b = &st.f_b - &st.partial_b.value();
                    let err_b = st.err_b.value() + (st.abs_b.value() + st.f_b.abs()) * &ulp + &f_eval_err;
                    let signed = if st.q % 2 == 0 { r_b.clone() } else { -r_b.clone() };
                    if signed < -(&err_b * &Real::from_i64(4, w)) {
                        certificate_rejected = true;
                    } else {
                        let rounding = finish_rounding(&abs_sum, &table_err);
                        let bound = st.ratio.abs() * (r_b.abs() + &err_b) + &rounding;
                        if let Some(factor) = &st.apriori_factor {
                            apriori_bound = Some(st.ratio.abs() * factor);
                        }
                        if bound < tol {
                            status = EvalStatus::ConvergedBounded;
                            remainder_bound = Some(bound);
                            bounded_now = true;
                        } else {
                            remainder_bound = Some(bound);
                        }
                    }
                }
            }
        }
        if bounded_now {
            break;
        }

        let certified = bound_state.is_some() && !certificate_rejected && !zero_series && integer_hit.is_none();
        let magnitude = term.abs();
        if !certified {
            if magnitude < &tol / &Real::from_i64(4, w) {
                small_run += 1;
                if small_run >= SMALL_TERM_RUN {
                    status = EvalStatus::ConvergedHeuristic;
                    break;
                }
            } else {
                small_run = 0;
            }
        }

        recent.push_back(magnitude);
        if recent.len() > DIVERGENCE_WINDOW {
            recent.pop_front();
        }
        if recent.len() == DIVERGENCE_WINDOW {
            let growing = recent.iter().zip(recent.iter().skip(1)).all(|(p, q)| q >= p);
            let huge = recent.back().expect("nonempty") > &(&tol * &Real::from_f64(1e6, w));
            if growing && huge {
                status = EvalStatus::Diverged;
                break;
            }
        }

        binom = &binom * &((&t - &Real::from_u64(k as u64, w)) / Real::from_u64(k as u64 + 1, w));
    }
    if certificate_rejected || zero_series {
        remainder_bound = None;
        apriori_bound = None;
    }
    Ok(EvalReport {
        value: sum.value(),
        terms_used,
        status,
        remainder_bound,
        apriori_bound,
        b_used,
        q: q_used,
        rounding_error: finish_rounding(&abs_sum, &table_err),
        identically_zero_series: zero_series,
        certificate_rejected,
    })
}

/// Both sides of `f(x) - Σ_{k<n} C(x-a,k) Δ^k f(a) = (x-a)^(n falling) f[a, ..., a+n-1, x]`.
#[derive(Clone, Debug, Serialize)]
pub struct RemainderCheck {
    pub lhs: Real,
    pub rhs: Real,
    pub residual: Real,
}

pub fn remainder_identity_check(f: &FuncHandle, a: &Real, x: &Real, n: usize, bits: u32) -> Result<RemainderCheck> {
    let bits = bits.max(MIN_PRECISION);
    let mut nodes: Vec<Real> = (0..n).map(|j| a + &Real::from_u64(j as u64, bits)).collect();
    nodes.push(x.clone());
    let dd = divided_difference(f, &nodes, bits)?;
    let f_x = if n == 0 {
        f.eval(x, dd.working_precision)?
    } else {
        f.eval(x, dd.working_precision.max(bits + n as u32 + 64))?
    };
    let lhs = if n == 0 {
        f_x.clone()
    } else {
        let table = build_table(f, a, n - 1, bits)?;
        let w = table.working_precision;
        let t = x.with_precision(w) - &table.anchor;
        let mut sum = CompensatedSum::new(w);
        let mut binom = Real::one(w);
        for k in 0..n {
            sum.add(&(&binom * table.value(k)));
            binom = &binom * &((&t - &Real::from_u64(k as u64, w)) / Real::from_u64(k as u64 + 1, w));
        }
        f_x.with_precision(w) - sum.value()
    };
    let w = dd.working_precision.max(lhs.precision());
    let rhs = falling_factorial(&(x.with_precision(w) - a.with_precision(w)), n as u64) * &dd.value;
    let residual = (&lhs - &rhs).abs();
    Ok(RemainderCheck { lhs, rhs, residual })
}

/// Direction of the monotonicity hypothesis for [`taylor_eval`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Monotone {
    /// `f^(q)` absolutely monotone: compare with a point `b > a`.
    Absolute,
    /// `f^(q)` completely monotone: work with `x -> f(-x)`, i.e. `b < a`.
    Complete,
}

#[derive(Clone, Debug, Serialize)]
pub struct TaylorReport {
    pub partial_sum: Real,
    pub bound: Real,
    pub apriori_bound: Real,
    pub b: Real,
}

/// Taylor partial sum with the geometric remainder bound
/// `|(x-a)/(b-a)|^n R_n(b)`, where `|x - a| < |b - a|`.
pub fn taylor_eval(
    f: &FuncHandle,
    a: &Real,
    x: &Real,
    n: usize,
    q: usize,
    direction: Monotone,
    b: Option<&Real>,
    bits: u32,
) -> Result<TaylorReport> {
    if !f.has_derivative() {
        return Err(Error::MissingDerivative(f.name().to_string()));
    }
    if n < q {
        return Err(Error::invalid(format!("n = {n} must be at least q = {q}")));
    }
    let w = bits.max(MIN_PRECISION) + 32;
    let a = a.with_precision(w);
    let x = x.with_precision(w);
    let dist = (&x - &a).abs();
    let b = match b {
        Some(b) => b.with_precision(w),
        None => default_taylor_b(&a, &dist, direction, f.domain(), w)?,
    };
    let gap = match direction {
        Monotone::Absolute => &b - &a,
        Monotone::Complete => &a - &b,
    };
    if gap <= dist || !f.domain().contains(&b) {
        return Err(Error::invalid(format!(
            "no valid comparison point: need b in {} with |b - a| > |x - a| on the {} side",
            f.domain(),
            if direction == Monotone::Absolute { "right" } else { "left" }
        )));
    }
    // Partial sum and the sum of |terms|, which scales its rounding error.
    let taylor = |point: &Real, terms: usize| -> Result<(Real, Real)> {
        let h = point - &a;
        let mut sum = CompensatedSum::new(w);
        let mut abs_sum = CompensatedSum::new(w);
        let mut power = Real::one(w);
        for k in 0..terms {
            let d = f.derivative(k as u32, &a, w)?;
            let term = &d * &power / factorial(k as u64, w);
            abs_sum.add(&term.abs());
            sum.add(&term);
            power = &power * &h;
        }
        Ok((sum.value(), abs_sum.value()))
    };
    let rounding = |abs_sum: &Real, terms: usize| -> Real {
        abs_sum * &Real::from_f64(2f64.powi(-(w as i32) + 2), w) * Real::from_u64(terms as u64 + 2, w)
    };
    let (partial_sum, abs_x) = taylor(&x, n)?;
    let f_b = f.eval(&b, w)?;
    let (at_b, abs_b) = taylor(&b, n)?;
    let err_b = rounding(&(&abs_b + &f_b.abs()), n);
    let r_b = (&f_b - &at_b).abs() + &err_b;
    let apriori_factor = (&f_b - &taylor(&b, q)?.0).abs();
    let ratio = (&dist / &gap).powi(n as i32);
    Ok(TaylorReport {
        partial_sum,
        bound: &ratio * &r_b + rounding(&abs_x, n),
        apriori_bound: ratio * apriori_factor,
        b,
    })
}

fn default_taylor_b(a: &Real, dist: &Real, direction: Monotone, domain: &Interval, w: u32) -> Result<Real> {
    let half = Real::from_f64(0.5, w);
    let two = Real::from_i64(2, w);
    match direction {
        Monotone::Complete => {
            let edge = a - dist;
            let step = match domain.lower() {
                Some(lo) => ((&edge - lo) / &two).min(&half).clone(),
                None => half,
            };
            if step.signum() <= 0 {
                return Err(Error::invalid("x is too far below a for a comparison point inside the domain"));
            }
            Ok(edge - step)
        }
        Monotone::Absolute => {
            let edge = a + dist;
            let step = match domain.upper() {
                Some(hi) => ((hi - &edge) / &two).min(&half).clone(),
                None => half,
            };
            if step.signum() <= 0 {
                return Err(Error::invalid("x is too far above a for a comparison point inside the domain"));
            }
            Ok(edge + step)
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct RatioRow {
    pub n: u64,
    pub ratio_log: Real,
    pub sign: i8,
}

impl From<(u64, FallingRatio)> for RatioRow {
    fn from((n, r): (u64, FallingRatio)) -> Self {
        RatioRow {
            n,
            ratio_log: r.log_magnitude,
            sign: r.sign,
        }
    }
}

/// `ln |(x-a)^(n falling) / (b-a)^(n falling)|` for each `n`.
pub fn ratio_table(x: &Real, a: &Real, b: &Real, n_list: &[u64]) -> Result<Vec<RatioRow>> {
    if x < b {
        return Err(Error::domain(format!("x = {x} must not lie below b = {b}")));
    }
    n_list
        .iter()
        .map(|&n| log_abs_falling_ratio(x, a, b, n).map(|r| RatioRow::from((n, r))))
        .collect()
}

/// Least-squares slope of `ratio_log` against `ln n` over rows with a
/// nonzero ratio; `None` with fewer than two such rows.
pub fn fit_slope(rows: &[RatioRow]) -> Option<f64> {
    let pts: Vec<(f64, f64)> = rows
        .iter()
        .filter(|r| r.sign != 0 && r.n > 0)
        .map(|r| ((r.n as f64).ln(), r.ratio_log.to_f64()))
        .collect();
    if pts.len() < 2 {
        return None;
    }
    let len = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / len;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / len;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    if sxx == 0.0 {
        None
    } else {
        Some(sxy / sxx)
    }
}

/// `count` integers spaced geometrically over `[lo, hi]`, deduplicated.
pub fn log_spaced(lo: u64, hi: u64, count: usize) -> Vec<u64> {
    if count <= 1 || lo >= hi {
        return vec![lo.max(1)];
    }
    let (l, h) = ((lo.max(1) as f64).ln(), (hi as f64).ln());
    let mut out: Vec<u64> = (0..count)
        .map(|i| (l + (h - l) * i as f64 / (count - 1) as f64).exp().round() as u64)
        .collect();
    out.dedup();
    out
}

/// True when the table came from a closed form.
pub fn uses_closed_form(exp: &NewtonExpansion) -> bool {
    exp.table.source == TableSource::ClosedForm
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::arith::gen_binomial;
    use crate::registry::{log, neg_exp, power_base, recip, sin_pi};

    fn r(v: f64) -> Real {
        Real::from_f64(v, 256)
    }

    fn opts(tol: f64, max_terms: usize, cert: Option<Certificate>) -> EvalOptions {
        EvalOptions {
            tolerance: tol,
            max_terms,
            certificate: cert,
        }
    }

    fn cm(b: f64) -> Option<Certificate> {
        Some(Certificate { q: 0, b: Some(r(b)) })
    }

    #[test]
    fn recip_coefficients_match_formula() {
        let e = expand(&recip(), &r(1.0), 50, 128).unwrap();
        assert!(uses_closed_form(&e));
        for k in 0..=50u64 {
            // (-1)^k / C(1 + k, k) = (-1)^k / (k + 1)
            let expected = gen_binomial(&Real::from_u64(1 + k, 200), k).recip();
            let expected = if k % 2 == 1 { -expected } else { expected };
            let diff = (e.coefficient(k as usize) - &expected).abs().to_f64();
            assert!(diff < 1e-35, "k={k}");
        }
        assert_eq!(e.cross_check.as_ref().unwrap().orders_checked, 11);
    }

    #[test]
    fn sin_pi_expansion_vanishes() {
        let e = expand(&sin_pi(), &r(1.0), 30, 128).unwrap();
        assert!(e.identically_zero_series);
        // Samples of sin(pi n) are rounding noise of size ~2^-w * pi * n.
        for k in 0..=30 {
            assert!(e.coefficient(k).abs().to_f64() < 1e-40, "k={k}");
        }
        let report = eval(&e, &r(1.5), &opts(1e-12, 31, cm(0.5))).unwrap();
        assert_eq!(report.status, EvalStatus::ConvergedHeuristic);
        assert!(report.identically_zero_series);
        assert!(report.remainder_bound.is_none());
        assert!(report.value.abs().to_f64() < 1e-30);
    }

    #[test]
    fn log_first_coefficients() {
        let e = expand(&log(), &r(1.0), 5, 128).unwrap();
        assert!(e.coefficient(0).is_zero());
        assert!((e.coefficient(1).to_f64() - 2f64.ln()).abs() < 1e-15);
        assert!(!e.identically_zero_series);
    }

    #[test]
    fn expand_needs_right_unbounded_domain() {
        let f = recip().reflected();
        assert!(matches!(expand(&f, &r(-1.0), 5, 128), Err(Error::NotRightUnbounded(_))));
        assert!(matches!(expand(&recip(), &r(-1.0), 5, 128), Err(Error::Domain(_))));
    }

    #[test]
    fn bounded_evaluation_of_recip() {
        let e = expand(&recip(), &r(1.0), 2000, 256).unwrap();
        let report = eval(&e, &r(2.5), &opts(1e-8, 2001, cm(0.5))).unwrap();
        assert_eq!(report.status, EvalStatus::ConvergedBounded);
        let err = (&report.value - &r(0.4)).abs().to_f64();
        assert!(err < 1e-8, "err={err}");
        let bound = report.remainder_bound.unwrap().to_f64();
        assert!(err <= bound);
        assert!(report.apriori_bound.unwrap().to_f64() >= bound * 0.5);
    }

    #[test]
    fn integer_offset_is_finite_exact() {
        let e = expand(&recip(), &r(1.0), 20, 128).unwrap();
        let report = eval(&e, &r(4.0), &opts(1e-12, 21, None)).unwrap();
        assert_eq!(report.status, EvalStatus::FiniteExact);
        assert_eq!(report.terms_used, 4);
        assert!((report.value.to_f64() - 0.25).abs() < 1e-30);
    }

    #[test]
    fn power_base_divergence_and_convergence() {
        let e = expand(&power_base("2").unwrap(), &r(0.0), 1000, 128).unwrap();
        let report = eval(&e, &r(0.5), &opts(1e-10, 1001, None)).unwrap();
        assert_eq!(report.status, EvalStatus::Diverged);
        assert!(report.terms_used <= 1000);
        let e = expand(&power_base("0.5").unwrap(), &r(0.0), 400, 128).unwrap();
        let report = eval(&e, &r(0.3), &opts(1e-12, 401, None)).unwrap();
        assert_eq!(report.status, EvalStatus::ConvergedHeuristic);
        let oracle = (Real::from_f64(0.3, 128) * Real::from_f64(1.5, 128).ln()).exp();
        assert!((&report.value - &oracle).abs().to_f64() < 1e-10);
    }

    #[test]
    fn invalid_b_and_q_are_rejected() {
        let e = expand(&recip(), &r(1.0), 20, 128).unwrap();
        assert!(eval(&e, &r(2.5), &opts(1e-12, 21, cm(1.0))).is_err());
        assert!(eval(&e, &r(0.5), &opts(1e-12, 21, cm(0.6))).is_err());
        let cert = Some(Certificate { q: 30, b: None });
        assert!(eval(&e, &r(2.5), &opts(1e-12, 21, cert)).is_err());
    }

    #[test]
    fn wrong_certificate_is_detected() {
        // e^{-x} with an odd q claims the wrong sign pattern.
        let e = expand(&neg_exp(), &r(1.0), 200, 128).unwrap();
        let cert = Some(Certificate { q: 1, b: Some(r(0.5)) });
        let report = eval(&e, &r(2.5), &opts(1e-12, 201, cert)).unwrap();
        assert!(report.certificate_rejected);
        assert_ne!(report.status, EvalStatus::ConvergedBounded);
    }

    #[test]
    fn default_b_respects_domain_edge() {
        let d = Interval::positive_half_line();
        assert_eq!(default_b(&r(1.0), &r(3.0), &d).to_f64(), 0.5);
        assert_eq!(default_b(&r(0.4), &r(3.0), &d).to_f64(), 0.2);
        assert_eq!(default_b(&r(2.0), &r(0.6), &d).to_f64(), 0.3);
        assert_eq!(default_b(&r(-3.0), &r(3.0), &Interval::real_line()).to_f64(), -3.5);
    }

    #[test]
    fn remainder_identity_examples() {
        let c = remainder_identity_check(&recip(), &r(1.0), &r(2.5), 6, 256).unwrap();
        assert!(c.residual.to_f64() <= 1e-30);
        let c = remainder_identity_check(&log(), &r(1.0), &r(3.7), 10, 256).unwrap();
        assert!(c.residual.to_f64() <= 1e-28);
        let c = remainder_identity_check(&neg_exp(), &r(0.3), &r(1.7), 0, 256).unwrap();
        assert!(c.residual.is_zero());
        assert!(remainder_identity_check(&recip(), &r(1.0), &r(3.0), 4, 256).is_err());
    }

    #[test]
    fn taylor_examples() {
        let rep = taylor_eval(&neg_exp(), &r(0.0), &r(1.0), 30, 0, Monotone::Complete, None, 128).unwrap();
        let oracle = (-Real::one(128)).exp();
        let err = (&rep.partial_sum - &oracle).abs();
        assert!(err <= rep.bound.clone() * Real::from_i64(2, 128) + Real::from_f64(1e-36, 128));
        assert!(rep.bound.to_f64() < 1e-20);

        let b = r(1.0);
        let rep = taylor_eval(&recip(), &r(2.0), &r(1.5), 40, 0, Monotone::Complete, Some(&b), 128).unwrap();
        // R_n(b) for 1/x at b = 1 about a = 2 is exactly 1 - Σ_{k<n} (1/2)(1/2)^k = 2^{-n}
        let expected = 0.5f64.powi(40) * 0.5f64.powi(40);
        assert!((rep.bound.to_f64() / expected - 1.0).abs() < 1e-12);
        assert!((rep.partial_sum.to_f64() - 1.0 / 1.5).abs() < 1e-12);

        let rep = taylor_eval(&recip(), &r(2.0), &r(2.0), 5, 0, Monotone::Complete, None, 128).unwrap();
        assert!((rep.partial_sum.to_f64() - 0.5).abs() < 1e-30);
        // Only the rounding estimate remains when x = a.
        assert!(rep.bound.to_f64() < 1e-45);
        assert!(matches!(
            taylor_eval(&sin_pi(), &r(2.0), &r(2.0), 5, 0, Monotone::Complete, None, 128),
            Err(Error::MissingDerivative(_))
        ));
        assert!(taylor_eval(&recip(), &r(2.0), &r(1.5), 5, 0, Monotone::Complete, Some(&r(1.6)), 128).is_err());
    }

    #[test]
    fn ratio_table_examples() {
        let rows = ratio_table(&r(0.5), &r(1.0), &r(0.5), &[1, 10, 100]).unwrap();
        assert!(rows.iter().all(|row| row.ratio_log.is_zero()));
        let rows = ratio_table(&r(4.0), &r(1.0), &r(0.0), &[1, 2, 3, 4, 5]).unwrap();
        let signs: Vec<i8> = rows.iter().map(|row| row.sign).collect();
        assert_eq!(signs[3..], [0, 0]);
        assert!(signs[..3].iter().all(|&s| s != 0));
        let rows = ratio_table(&r(2.5), &r(1.0), &r(0.5), &log_spaced(100, 10_000, 15)).unwrap();
        let slope = fit_slope(&rows).unwrap();
        assert!((slope + 2.0).abs() < 0.05, "slope={slope}");
        // an integer offset makes every ratio past n = x - a vanish
        let rows = ratio_table(&r(2.0), &r(1.0), &r(0.5), &[100, 1000]).unwrap();
        assert!(rows.iter().all(|row| row.sign == 0));
        assert!(fit_slope(&rows).is_none());
    }

    #[test]
    fn log_spacing() {
        let v = log_spaced(100, 10_000, 5);
        assert_eq!(v, vec![100, 316, 1000, 3162, 10_000]);
        assert_eq!(log_spaced(5, 5, 3), vec![5]);
    }
}
