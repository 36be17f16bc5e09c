//! Forward-difference tables, divided differences and `D^p` tail detection.
//!
//! Differences of order `k` are alternating sums whose weights add up to
//! `2^k`, so a table of order `K` loses about `K` bits to cancellation. Every
//! table is therefore built at `target + K + 32` bits.

use serde::Serialize;

use crate::arith::{Real, MIN_PRECISION};
use crate::error::{Error, Result};
use crate::registry::FuncHandle;

/// Extra bits on top of `target + K`.
pub const GUARD_BITS: u32 = 32;

/// Where the entries of a [`DiffTable`] came from.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum TableSource {
    Numeric,
    ClosedForm,
}

/// `Δ^k f(a)` for `k = 0..=K` with a per-entry absolute error estimate.
#[derive(Clone, Debug, Serialize)]
pub struct DiffTable {
    pub anchor: Real,
    pub max_order: usize,
    pub values: Vec<Real>,
    pub working_precision: u32,
    pub error_bound: Vec<Real>,
    pub source: TableSource,
}

impl DiffTable {
    pub fn value(&self, k: usize) -> &Real {
        &self.values[k]
    }

    pub fn error(&self, k: usize) -> &Real {
        &self.error_bound[k]
    }

    /// Table filled from a handle's closed-form differences.
    pub fn from_closed_form(f: &FuncHandle, a: &Real, max_order: usize, target: u32) -> Result<Self> {
        let working = target.max(MIN_PRECISION) + GUARD_BITS;
        let values = f
            .closed_form_diffs(&a.with_precision(working), max_order, working)
            .ok_or_else(|| Error::invalid(format!("`{}` has no closed-form differences", f.name())))??;
        if values.len() != max_order + 1 {
            return Err(Error::invalid(format!(
                "closed form of `{}` returned {} entries, expected {}",
                f.name(),
                values.len(),
                max_order + 1
            )));
        }
        let ulp = unit_roundoff(working);
        // Each closed-form entry is a product of at most k+2 rounded factors.
        let error_bound = values
            .iter()
            .enumerate()
            .map(|(k, v)| v.abs() * &ulp * Real::from_u64(4 * (k as u64 + 2), working))
            .collect::<Vec<Real>>();
        // The order-0 entry is f(a) itself, as accurate as f's evaluator.
        let mut error_bound = error_bound;
        if let Some(e) = f.eval_abs_error() {
            error_bound[0] += &Real::from_f64(e, working);
        }
        Ok(DiffTable {
            anchor: a.with_precision(working),
            max_order,
            values,
            working_precision: working,
            error_bound,
            source: TableSource::ClosedForm,
        })
    }
}

fn unit_roundoff(bits: u32) -> Real {
    pow2(-(bits as i32), bits)
}

fn pow2(exp: i32, bits: u32) -> Real {
    Real::from_float(rug::Float::with_val(bits, rug::Float::u_exp(1, exp)))
}

/// Working precision used by [`build_table`].
pub fn table_precision(max_order: usize, target: u32) -> u32 {
    target.max(MIN_PRECISION) + max_order as u32 + GUARD_BITS
}

/// Samples `f(a), ..., f(a+K)` and runs the triangular difference scheme.
pub fn build_table(f: &FuncHandle, a: &Real, max_order: usize, target: u32) -> Result<DiffTable> {
    let working = table_precision(max_order, target);
    let anchor = a.with_precision(working);
    let mut samples = Vec::with_capacity(max_order + 1);
    for j in 0..=max_order {
        let x = &anchor + &Real::from_u64(j as u64, working);
        samples.push(f.eval(&x, working)?.with_precision(working));
    }
    Ok(table_from_samples(f, anchor, samples, working))
}

/// Same as [`build_table`] but from precomputed samples `f(a+j)`.
pub(crate) fn table_from_samples(
    f: &FuncHandle,
    anchor: Real,
    samples: Vec<Real>,
    working: u32,
) -> DiffTable {
    let max_order = samples.len() - 1;
    let ulp = unit_roundoff(working);
    let mut running_max = Real::zero(working);
    let mut maxima = Vec::with_capacity(samples.len());
    for s in &samples {
        running_max = running_max.max(&s.abs()).clone();
        maxima.push(running_max.clone());
    }
    let eval_error = f.eval_abs_error().map(|e| Real::from_f64(e, working));
    let error_bound = maxima
        .iter()
        .enumerate()
        .map(|(k, m)| {
            let amplification = pow2(k as i32, working);
            let mut bound = &amplification * &ulp * m;
            if let Some(e) = &eval_error {
                bound += &(&amplification * e);
            }
            bound
        })
        .collect();

    let mut v = samples;
    for level in 1..=max_order {
        for j in (level..=max_order).rev() {
            v[j] = &v[j] - &v[j - 1];
        }
    }
    DiffTable {
        anchor,
        max_order,
        values: v,
        working_precision: working,
        error_bound,
        source: TableSource::Numeric,
    }
}

/// `f[x_0, ..., x_n]` on sorted, pairwise distinct nodes.
#[derive(Clone, Debug, Serialize)]
pub struct DividedDiff {
    pub nodes: Vec<Real>,
    pub value: Real,
    pub working_precision: u32,
}

/// Standard recursion on sorted nodes, with guard bits scaled to the ratio of
/// the node span to the smallest gap.
pub fn divided_difference(f: &FuncHandle, nodes: &[Real], target: u32) -> Result<DividedDiff> {
    if nodes.is_empty() {
        return Err(Error::invalid("divided difference needs at least one node"));
    }
    let target = target.max(MIN_PRECISION);
    let mut sorted: Vec<Real> = nodes.to_vec();
    sorted.sort_by(|x, y| x.partial_cmp(y).expect("nodes must be finite"));
    let n = sorted.len() - 1;

    let mut guard = GUARD_BITS;
    if n > 0 {
        let separation = pow2(-(target as i32 / 2), target);
        let mut min_gap: Option<Real> = None;
        for pair in sorted.windows(2) {
            let gap = &pair[1] - &pair[0];
            if gap <= separation {
                return Err(Error::DuplicateNode {
                    node: pair[1].to_string(),
                });
            }
            min_gap = Some(match min_gap {
                Some(m) if m <= gap => m,
                _ => gap,
            });
        }
        let span = &sorted[n] - &sorted[0];
        let ratio = (span / min_gap.expect("n > 0")).to_f64();
        let per_level = ratio.log2().ceil().max(1.0) as u32;
        guard += (n as u32).saturating_mul(per_level).min(1 << 16);
    }
    let working = target + guard;
    let nodes_w: Vec<Real> = sorted.iter().map(|x| x.with_precision(working)).collect();
    let mut table = Vec::with_capacity(n + 1);
    for x in &nodes_w {
        table.push(f.eval(x, working)?.with_precision(working));
    }
    for level in 1..=n {
        for i in (level..=n).rev() {
            let span = &nodes_w[i] - &nodes_w[i - level];
            table[i] = (&table[i] - &table[i - 1]) / span;
        }
    }
    Ok(DividedDiff {
        nodes: sorted,
        value: table.pop().expect("nonempty"),
        working_precision: working,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum DpVerdict {
    Member,
    NonMember,
    Inconclusive,
}

/// Samples of `|Δ^p g(n)|` on the geometric schedule and the verdict drawn
/// from them. The verdict is a heuristic reading of a limit property.
#[derive(Clone, Debug, Serialize)]
pub struct DpEvidence {
    pub p: usize,
    pub verdict: DpVerdict,
    pub samples: Vec<(u64, f64)>,
    pub threshold: f64,
    pub heuristic: bool,
}

/// Looks for `Δ^p g(n) -> 0` along `n = 8, 16, ..., n_max`.
pub fn dp_membership(g: &FuncHandle, p: usize, n_max: u64, threshold: f64, target: u32) -> Result<DpEvidence> {
    if n_max < 64 {
        return Err(Error::invalid(format!("n_max must be at least 64, got {n_max}")));
    }
    let mut samples = Vec::new();
    let mut n = 8u64;
    while n <= n_max {
        let table = build_table(g, &Real::from_u64(n, target), p, target)?;
        samples.push((n, table.value(p).abs().to_f64()));
        match n.checked_mul(2) {
            Some(next) => n = next,
            None => break,
        }
    }
    let mags: Vec<f64> = samples.iter().map(|s| s.1).collect();
    let verdict = classify_tail(&mags, threshold);
    Ok(DpEvidence {
        p,
        verdict,
        samples,
        threshold,
        heuristic: true,
    })
}

fn classify_tail(mags: &[f64], threshold: f64) -> DpVerdict {
    let len = mags.len();
    let last = mags[len - 1];
    if len >= 4 {
        let tail = &mags[len - 4..];
        if tail.windows(2).all(|w| w[1] <= w[0]) && last < threshold {
            return DpVerdict::Member;
        }
    }
    if len >= 3 {
        let tail = &mags[len - 3..];
        if tail.iter().all(|&m| m > 10.0 * threshold) && tail.windows(2).all(|w| w[1] >= w[0]) {
            return DpVerdict::NonMember;
        }
    }
    DpVerdict::Inconclusive
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::arith::gen_binomial;
    use crate::registry::{log, neg_exp, recip, sin_pi, FuncHandle};
    use crate::arith::{factorial, Interval};
    use rand::seq::SliceRandom;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn rel(a: &Real, b: &Real) -> f64 {
        let scale = a.abs().max(&b.abs()).clone();
        if scale.is_zero() {
            0.0
        } else {
            ((a - b).abs() / scale).to_f64()
        }
    }

    fn square() -> FuncHandle {
        FuncHandle::new("square", Interval::real_line(), |x, _| Ok(x.square()))
    }

    #[test]
    fn recip_second_difference() {
        let t = build_table(&recip(), &Real::one(128), 2, 128).unwrap();
        let third = Real::one(128) / Real::from_i64(3, 128);
        assert!(rel(t.value(2), &third) < 1e-35);
        assert_eq!(t.working_precision, 128 + 2 + 32);
        assert_eq!(t.source, TableSource::Numeric);
    }

    #[test]
    fn order_zero_is_the_sample() {
        let a = Real::from_f64(3.25, 128);
        let t = build_table(&log(), &a, 0, 128).unwrap();
        assert_eq!(t.value(0).with_precision(128), a.ln());
    }

    #[test]
    fn neg_exp_high_order_matches_telescoping_form() {
        let bits = 128;
        let t = build_table(&neg_exp(), &Real::one(bits), 20, bits).unwrap();
        let e1 = (-Real::one(bits)).exp();
        let expected = &e1 * &(&e1 - &Real::one(bits)).powi(20);
        assert!(rel(t.value(20), &expected) < 1e-20);
    }

    #[test]
    fn error_bound_is_the_a_priori_amplification() {
        let t = build_table(&recip(), &Real::one(128), 10, 128).unwrap();
        for k in 0..=10 {
            let bound = t.error(k).to_f64();
            let expected = 2f64.powi(k as i32) * 2f64.powi(-(t.working_precision as i32));
            assert!((bound - expected).abs() <= expected * 1e-12, "k={k}");
        }
    }

    #[test]
    fn rebuild_at_next_anchor_is_consistent() {
        let bits = 128;
        for f in [recip(), log(), neg_exp()] {
            let a = Real::from_f64(1.7, bits);
            let t = build_table(&f, &a, 12, bits).unwrap();
            let shifted = build_table(&f, &(&a + &Real::one(bits)), 11, bits).unwrap();
            for k in 0..11 {
                let lhs = shifted.value(k) - t.value(k);
                let err = (&lhs - t.value(k + 1)).abs();
                let allowed = shifted.error(k) + t.error(k) + t.error(k + 1).clone();
                assert!(err <= allowed, "{} k={k}", f.name());
            }
        }
    }

    #[test]
    fn binomial_expansion_identity() {
        let bits = 200;
        for f in [recip(), log(), neg_exp()] {
            let a = Real::from_f64(2.3, bits);
            let t = build_table(&f, &a, 12, bits).unwrap();
            let working = t.working_precision;
            for k in 0..=12u64 {
                let mut direct = Real::zero(working);
                for j in 0..=k {
                    let c = gen_binomial(&Real::from_u64(k, working), j);
                    let x = &a.with_precision(working) + &Real::from_u64(j, working);
                    let term = c * f.eval(&x, working).unwrap();
                    direct = if (k - j) % 2 == 0 { direct + term } else { direct - term };
                }
                let err = (&direct - t.value(k as usize)).abs();
                assert!(err <= Real::from_f64(2.0, working) * t.error(k as usize), "{} k={k}", f.name());
            }
        }
    }

    #[test]
    fn closed_form_table_has_small_bounds() {
        let t = DiffTable::from_closed_form(&recip(), &Real::one(128), 50, 128).unwrap();
        assert_eq!(t.source, TableSource::ClosedForm);
        assert_eq!(t.values.len(), 51);
        assert!(t.error(50).to_f64() < 1e-40);
        assert!(DiffTable::from_closed_form(&log(), &Real::one(128), 5, 128).is_err());
    }

    #[test]
    fn divided_difference_basics() {
        let bits = 128;
        let f = recip();
        let single = divided_difference(&f, &[Real::from_i64(3, bits)], bits).unwrap();
        assert!(rel(&single.value, &(Real::one(bits) / Real::from_i64(3, bits))) < 1e-35);
        let nodes: Vec<Real> = (1..=3).map(|i| Real::from_i64(i, bits)).collect();
        let dd = divided_difference(&f, &nodes, bits).unwrap();
        assert!(rel(&dd.value, &(Real::one(bits) / Real::from_i64(6, bits))) < 1e-35);
        let q = square();
        let odd = [0.3, -2.0, 7.75].map(|v| Real::from_f64(v, bits));
        let dq = divided_difference(&q, &odd, bits).unwrap();
        assert!((dq.value.to_f64() - 1.0).abs() < 1e-30);
    }

    #[test]
    fn duplicate_nodes_are_rejected() {
        let bits = 128;
        let nodes = [Real::one(bits), Real::from_i64(2, bits), Real::one(bits)];
        assert!(matches!(
            divided_difference(&recip(), &nodes, bits),
            Err(Error::DuplicateNode { .. })
        ));
        assert!(divided_difference(&recip(), &[], bits).is_err());
    }

    #[test]
    fn unit_spaced_nodes_match_table() {
        let bits = 256;
        for f in [recip(), log(), neg_exp()] {
            let a = Real::from_f64(1.25, bits);
            let t = build_table(&f, &a, 20, bits).unwrap();
            for n in 0..=20usize {
                let nodes: Vec<Real> = (0..=n).map(|j| &a + &Real::from_u64(j as u64, bits)).collect();
                let dd = divided_difference(&f, &nodes, bits).unwrap();
                let expected = t.value(n) / factorial(n as u64, bits);
                assert!(rel(&dd.value, &expected) <= 1e-20, "{} n={n}", f.name());
            }
        }
    }

    #[test]
    fn divided_difference_is_permutation_invariant() {
        let bits = 128;
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let mut nodes: Vec<Real> = [0.5, 1.1, 2.9, 3.3, 8.0, 4.4].iter().map(|&v| Real::from_f64(v, bits)).collect();
        let reference = divided_difference(&log(), &nodes, bits).unwrap().value;
        for _ in 0..10 {
            nodes.shuffle(&mut rng);
            assert_eq!(divided_difference(&log(), &nodes, bits).unwrap().value, reference);
        }
    }

    #[test]
    fn dp_membership_examples() {
        let n_max = 1 << 20;
        assert_eq!(dp_membership(&log(), 1, n_max, 1e-4, 128).unwrap().verdict, DpVerdict::Member);
        assert_eq!(dp_membership(&log(), 0, n_max, 1e-4, 128).unwrap().verdict, DpVerdict::NonMember);
        assert_eq!(dp_membership(&recip(), 0, n_max, 1e-4, 128).unwrap().verdict, DpVerdict::Member);
        let e = dp_membership(&sin_pi(), 0, 64, 1e-4, 128).unwrap();
        assert_eq!(e.samples.len(), 4);
        assert!(e.heuristic);
        assert!(dp_membership(&log(), 0, 32, 1e-4, 128).is_err());
    }

    #[test]
    fn tail_classifier_inconclusive_on_oscillation() {
        assert_eq!(classify_tail(&[1.0, 0.1, 1.0, 0.1, 1.0], 1e-4), DpVerdict::Inconclusive);
        assert_eq!(classify_tail(&[1.0, 0.5, 0.25, 0.125], 1e-4), DpVerdict::Inconclusive);
    }
}
