//! Sampled higher-order convexity.
//!
//! A function is `p`-convex on a window when every divided difference on
//! `p + 2` points is nonnegative, and `p`-concave when every one is
//! nonpositive. Order `-1` is the plain sign of `f`, order `0` monotonicity,
//! order `1` ordinary convexity.
//!
//! The absolute, complete and regular monotonicity labels are read off the
//! per-order signs: with `n` running over `p, p+1, ...` and the order being
//! `n - 1`,
//!
//! * `AM^p_±`: every order from `p - 1` on has sign `±`;
//! * `CM^p_±`: order `n - 1` has sign `±(-1)^(n-p)`;
//! * `RM^p`: every order from `p - 1` on has some definite sign.

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::arith::{Interval, Real, MIN_PRECISION};
use crate::error::{Error, Result};
use crate::finite_diff::{divided_difference, dp_membership, DpEvidence, DpVerdict};
use crate::registry::FuncHandle;

pub const DEFAULT_SEED: u64 = 0x5EED_2024;
pub const DEFAULT_SAMPLES: usize = 200;
/// Largest order that may be requested from [`classify`].
pub const MAX_ORDER: usize = 40;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum OrderSign {
    Plus,
    Minus,
    Zero,
    Mixed,
}

impl OrderSign {
    fn allows(self, want_plus: bool) -> bool {
        match self {
            OrderSign::Zero => true,
            OrderSign::Plus => want_plus,
            OrderSign::Minus => !want_plus,
            OrderSign::Mixed => false,
        }
    }

    /// The sign of `-f` at the same order.
    pub fn negated(self) -> OrderSign {
        match self {
            OrderSign::Plus => OrderSign::Minus,
            OrderSign::Minus => OrderSign::Plus,
            other => other,
        }
    }

    pub fn symbol(self) -> &'static str {
        match self {
            OrderSign::Plus => "+",
            OrderSign::Minus => "-",
            OrderSign::Zero => "0",
            OrderSign::Mixed => "?",
        }
    }
}

impl fmt::Display for OrderSign {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            OrderSign::Plus => "plus",
            OrderSign::Minus => "minus",
            OrderSign::Zero => "zero",
            OrderSign::Mixed => "mixed",
        })
    }
}

/// `START:END:COUNT`, an equally spaced sampling grid.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GridSpec {
    pub start: Real,
    pub end: Real,
    pub count: usize,
}

impl GridSpec {
    pub fn parse(text: &str) -> Result<Self> {
        let parts: Vec<&str> = text.split(':').collect();
        if parts.len() != 3 {
            return Err(Error::invalid(format!("grid `{text}` must look like START:END:COUNT")));
        }
        let start = Real::parse(parts[0].trim(), 128)?;
        let end = Real::parse(parts[1].trim(), 128)?;
        let count: usize = parts[2]
            .trim()
            .parse()
            .map_err(|_| Error::invalid(format!("grid count `{}` is not a positive integer", parts[2])))?;
        if count < 2 {
            return Err(Error::invalid("grid needs at least 2 points"));
        }
        if start >= end {
            return Err(Error::invalid(format!("grid start {start} must be below end {end}")));
        }
        Ok(GridSpec { start, end, count })
    }

    pub fn window(&self) -> Interval {
        Interval::closed(self.start.clone(), self.end.clone()).expect("validated in parse")
    }
}

impl FromStr for GridSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        GridSpec::parse(s)
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct ClassifyOptions {
    pub samples: usize,
    /// Absolute sign tolerance; `None` means `2^(-precision/2) * max |f|` over the grid.
    pub tolerance: Option<f64>,
    pub seed: u64,
    pub precision: u32,
    pub dp_n_max: u64,
    pub dp_threshold: f64,
}

impl Default for ClassifyOptions {
    fn default() -> Self {
        ClassifyOptions {
            samples: DEFAULT_SAMPLES,
            tolerance: None,
            seed: DEFAULT_SEED,
            precision: 128,
            dp_n_max: 1 << 20,
            dp_threshold: 1e-4,
        }
    }
}

/// Verdict for one order, with the range of divided differences seen.
#[derive(Clone, Debug, Serialize)]
pub struct OrderReport {
    pub p: i32,
    pub sign: OrderSign,
    pub min_value: f64,
    pub max_value: f64,
    pub evaluated: usize,
}

/// Smallest `p` for which each label holds over the tested orders.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct Labels {
    pub am_plus: Option<usize>,
    pub am_minus: Option<usize>,
    pub cm_plus: Option<usize>,
    pub cm_minus: Option<usize>,
    pub rm: Option<usize>,
}

impl Labels {
    /// Human-readable list such as `["CM_+ from p=0", "RM from p=0"]`.
    pub fn names(&self) -> Vec<String> {
        let mut out = Vec::new();
        let entries = [
            ("AM_+", self.am_plus),
            ("AM_-", self.am_minus),
            ("CM_+", self.cm_plus),
            ("CM_-", self.cm_minus),
            ("RM", self.rm),
        ];
        for (name, p) in entries {
            if let Some(p) = p {
                out.push(format!("{name} from p={p}"));
            }
        }
        out
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct ConvexitySignature {
    pub function: String,
    pub orders_tested: usize,
    pub per_order: Vec<OrderReport>,
    pub window: Interval,
    pub samples_per_order: usize,
    pub tolerance: f64,
    pub seed: u64,
    pub precision: u32,
    /// The window spans at least a factor of ten, so the verdicts are
    /// reported as evidence for the eventual classes.
    pub eventual: bool,
    pub labels: Labels,
    pub dp_evidence: Vec<DpEvidence>,
}

impl ConvexitySignature {
    /// Sign at order `p` (`p >= -1`).
    pub fn sign(&self, p: i32) -> Option<OrderSign> {
        self.per_order.iter().find(|r| r.p == p).map(|r| r.sign)
    }

    /// Compact pattern such as `+-+-+` starting at order -1.
    pub fn pattern(&self) -> String {
        self.per_order.iter().map(|r| r.sign.symbol()).collect()
    }
}

fn window_bounds(window: &Interval) -> Result<(Real, Real)> {
    match (window.lower(), window.upper()) {
        (Some(lo), Some(hi)) if lo < hi => Ok((lo.clone(), hi.clone())),
        _ => Err(Error::invalid(format!("classification window {window} must be bounded"))),
    }
}

/// Equally spaced grid including both end points.
fn grid(lo: &Real, hi: &Real, count: usize, bits: u32) -> (Vec<Real>, Real) {
    let lo = lo.with_precision(bits);
    let step = (hi.with_precision(bits) - &lo) / Real::from_u64(count as u64 - 1, bits);
    let points = (0..count)
        .map(|i| &lo + &(&step * &Real::from_u64(i as u64, bits)))
        .collect();
    (points, step)
}

fn sign_of(values: &[f64], tolerance: f64) -> OrderSign {
    if values.iter().all(|v| v.abs() <= tolerance) {
        OrderSign::Zero
    } else if values.iter().all(|&v| v >= -tolerance) {
        OrderSign::Plus
    } else if values.iter().all(|&v| v <= tolerance) {
        OrderSign::Minus
    } else {
        OrderSign::Mixed
    }
}

fn order_seed(seed: u64, p: i32) -> u64 {
    seed ^ ((p + 2) as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15)
}

/// Precomputed grid samples shared by every order.
struct GridSamples {
    /// Divided differences over consecutive windows: `levels[k][i] = f[x_i..x_{i+k}]`.
    levels: Vec<Vec<Real>>,
    max_abs: f64,
}

fn grid_samples(f: &FuncHandle, lo: &Real, hi: &Real, samples: usize, max_level: usize, bits: u32) -> Result<GridSamples> {
    let per_level = ((samples as f64).log2().ceil() as u32).max(1) + 1;
    let working = bits + 32 + per_level * (max_level as u32 + 1);
    let (points, step) = grid(lo, hi, samples, working);
    let mut current = Vec::with_capacity(samples);
    let mut max_abs = 0f64;
    for x in &points {
        let v = f.eval(x, working)?.with_precision(working);
        max_abs = max_abs.max(v.abs().to_f64());
        current.push(v);
    }
    let mut levels = vec![current];
    for k in 1..=max_level.min(samples - 1) {
        let prev = &levels[k - 1];
        let span = &step * &Real::from_u64(k as u64, working);
        let next: Vec<Real> = prev.windows(2).map(|w| (&w[1] - &w[0]) / span.clone()).collect();
        levels.push(next);
    }
    Ok(GridSamples { levels, max_abs })
}

fn random_tuple_values(
    f: &FuncHandle,
    p: i32,
    lo: &Real,
    hi: &Real,
    samples: usize,
    seed: u64,
    bits: u32,
) -> Result<Vec<f64>> {
    let m = (p + 2) as usize;
    let mut rng = ChaCha8Rng::seed_from_u64(order_seed(seed, p));
    let lo_f = lo.to_f64();
    let hi_f = hi.to_f64();
    let width = hi_f - lo_f;
    let min_gap = width * 1e-4;
    let mut out = Vec::with_capacity(samples);
    let mut attempts = 0usize;
    while out.len() < samples && attempts < samples * 100 {
        attempts += 1;
        let mut xs: Vec<f64> = (0..m).map(|_| rng.gen_range(lo_f..=hi_f)).collect();
        xs.sort_by(|a, b| a.partial_cmp(b).expect("finite"));
        if xs.windows(2).any(|w| w[1] - w[0] < min_gap) {
            continue;
        }
        let nodes: Vec<Real> = xs.iter().map(|&x| Real::from_f64(x, bits)).collect();
        out.push(divided_difference(f, &nodes, bits)?.value.to_f64());
    }
    Ok(out)
}

/// Sign verdict of the order-`p` divided differences of `f` on `window`.
pub fn test_order(
    f: &FuncHandle,
    p: i32,
    window: &Interval,
    samples: usize,
    tolerance: f64,
    seed: u64,
    bits: u32,
) -> Result<OrderReport> {
    let (lo, hi) = check_window(f, window)?;
    if p < -1 {
        return Err(Error::invalid(format!("order must be at least -1, got {p}")));
    }
    if samples < (p + 2) as usize {
        return Err(Error::invalid(format!("{samples} samples cannot hold {} points", p + 2)));
    }
    let bits = bits.max(MIN_PRECISION);
    let gs = grid_samples(f, &lo, &hi, samples, (p + 1) as usize, bits)?;
    order_report(f, p, &gs, &lo, &hi, samples, tolerance, seed, bits)
}

fn check_window(f: &FuncHandle, window: &Interval) -> Result<(Real, Real)> {
    let (lo, hi) = window_bounds(window)?;
    if !f.domain().contains_interval(window) {
        return Err(Error::domain(format!(
            "window {window} is not inside the domain {} of `{}`",
            f.domain(),
            f.name()
        )));
    }
    Ok((lo, hi))
}

#[allow(clippy::too_many_arguments)]
fn order_report(
    f: &FuncHandle,
    p: i32,
    gs: &GridSamples,
    lo: &Real,
    hi: &Real,
    samples: usize,
    tolerance: f64,
    seed: u64,
    bits: u32,
) -> Result<OrderReport> {
    let level = (p + 1) as usize;
    let mut values: Vec<f64> = gs.levels[level].iter().map(Real::to_f64).collect();
    if p >= 0 {
        values.extend(random_tuple_values(f, p, lo, hi, samples, seed, bits)?);
    }
    let min_value = values.iter().copied().fold(f64::INFINITY, f64::min);
    let max_value = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    Ok(OrderReport {
        p,
        sign: sign_of(&values, tolerance),
        min_value,
        max_value,
        evaluated: values.len(),
    })
}

/// Derives the monotonicity labels from signs listed for orders `-1..=P`.
pub fn derive_labels(signs: &[OrderSign]) -> Labels {
    // signs[i] is the sign at order i - 1, i.e. n = i.
    let max_order = signs.len() as i32 - 2;
    let holds_from = |p: usize, want: &dyn Fn(usize) -> Option<bool>| -> bool {
        signs[p..].iter().enumerate().all(|(offset, s)| match want(p + offset) {
            Some(plus) => s.allows(plus),
            None => *s != OrderSign::Mixed,
        })
    };
    let first = |want: &dyn Fn(usize, usize) -> Option<bool>| -> Option<usize> {
        (0..=max_order.max(0) as usize)
            .filter(|&p| p < signs.len())
            .find(|&p| holds_from(p, &|n| want(p, n)))
    };
    Labels {
        am_plus: first(&|_, _| Some(true)),
        am_minus: first(&|_, _| Some(false)),
        cm_plus: first(&|p, n| Some((n - p) % 2 == 0)),
        cm_minus: first(&|p, n| Some((n - p) % 2 == 1)),
        rm: first(&|_, _| None),
    }
}

/// Runs [`test_order`] for `p = -1..=P`, derives the labels and collects
/// `D^p` evidence for `p = 0..=P`.
pub fn classify(f: &FuncHandle, max_order: usize, window: &Interval, options: &ClassifyOptions) -> Result<ConvexitySignature> {
    if max_order > MAX_ORDER {
        return Err(Error::invalid(format!("at most {MAX_ORDER} orders are supported")));
    }
    let (lo, hi) = check_window(f, window)?;
    if options.samples < max_order + 2 {
        return Err(Error::invalid(format!(
            "{} samples cannot hold {} points",
            options.samples,
            max_order + 2
        )));
    }
    let bits = options.precision.max(MIN_PRECISION);
    let gs = grid_samples(f, &lo, &hi, options.samples, max_order + 1, bits)?;
    let tolerance = options
        .tolerance
        .unwrap_or_else(|| 2f64.powi(-(bits as i32) / 2) * gs.max_abs.max(f64::MIN_POSITIVE));
    let mut per_order = Vec::with_capacity(max_order + 2);
    for p in -1..=max_order as i32 {
        per_order.push(order_report(f, p, &gs, &lo, &hi, options.samples, tolerance, options.seed, bits)?);
    }
    let signs: Vec<OrderSign> = per_order.iter().map(|r| r.sign).collect();
    let labels = derive_labels(&signs);
    let dp_evidence = (0..=max_order)
        .map(|p| {
            dp_membership(f, p, options.dp_n_max, options.dp_threshold, bits).unwrap_or(DpEvidence {
                p,
                verdict: DpVerdict::Inconclusive,
                samples: Vec::new(),
                threshold: options.dp_threshold,
                heuristic: true,
            })
        })
        .collect();
    let eventual = lo.signum() > 0 && hi >= &lo * &Real::from_i64(10, bits);
    Ok(ConvexitySignature {
        function: f.name().to_string(),
        orders_tested: max_order,
        per_order,
        window: window.clone(),
        samples_per_order: options.samples,
        tolerance,
        seed: options.seed,
        precision: bits,
        eventual,
        labels,
        dp_evidence,
    })
}

/// Outcome of re-classifying `Δf` one order lower.
#[derive(Clone, Debug, Serialize)]
pub struct TransferReport {
    pub p: i32,
    pub f_sign: OrderSign,
    pub delta_sign: OrderSign,
    /// `None` when `f` has no definite sign at order `p`.
    pub holds: Option<bool>,
}

/// Checks that a sign of `f` at order `p` carries over to `Δf` at order `p - 1`.
pub fn transfer_check(
    f: &FuncHandle,
    p: i32,
    window: &Interval,
    samples: usize,
    tolerance: f64,
    seed: u64,
    bits: u32,
) -> Result<TransferReport> {
    if p < 0 {
        return Err(Error::invalid(format!("transfer needs p >= 0, got {p}")));
    }
    let f_sign = test_order(f, p, window, samples, tolerance, seed, bits)?.sign;
    let delta = f.forward_difference();
    let delta_sign = test_order(&delta, p - 1, window, samples, tolerance, seed, bits)?.sign;
    let holds = match f_sign {
        OrderSign::Mixed => None,
        OrderSign::Zero => Some(delta_sign == OrderSign::Zero),
        OrderSign::Plus => Some(delta_sign.allows(true)),
        OrderSign::Minus => Some(delta_sign.allows(false)),
    };
    Ok(TransferReport {
        p,
        f_sign,
        delta_sign,
        holds,
    })
}
