//! Principal indefinite sums `Σg` as the limit of
//!
//! ```text
//! f_n^p[g](x) = Σ_{k=1}^{n-1} g(k) - Σ_{k=0}^{n-1} g(x+k) + Σ_{j=1}^{p} C(x,j) Δ^{j-1} g(n)
//! ```
//!
//! on a doubling schedule of `n`. The three blocks are accumulated
//! incrementally, so reaching `n` costs `O(n)` evaluations of `g` in total,
//! and integer samples `g(k)` are shared between calls through a memo.

use std::collections::HashMap;
use std::sync::{Arc, RwLock};

use serde::Serialize;

use crate::arith::{gen_binomial, CompensatedSum, Interval, Real, MIN_PRECISION};
use crate::error::{Error, Result};
use crate::finite_diff::{build_table, dp_membership, DpEvidence, DpVerdict};
use crate::newton::{self, Certificate, EvalOptions, EvalStatus};
use crate::oracles;
use crate::registry::{recip, FuncHandle};

/// Largest `p` tried by automatic selection.
pub const MAX_AUTO_P: usize = 8;
/// Extra orders added on top of the smallest admissible `p`.
pub const AUTO_P_BOOST: usize = 2;
pub const FIRST_N: u64 = 64;
pub const DP_THRESHOLD: f64 = 1e-4;
const DP_N_MAX: u64 = 1 << 20;

#[derive(Clone, Debug)]
pub struct SigmaRequest {
    pub g: FuncHandle,
    pub p: Option<usize>,
    pub x: Real,
    pub tolerance: f64,
    pub n_max: u64,
    pub extrapolate: bool,
    pub precision: u32,
}

impl SigmaRequest {
    pub fn new(g: FuncHandle, x: Real, tolerance: f64) -> Self {
        SigmaRequest {
            g,
            p: None,
            x,
            tolerance,
            n_max: 1 << 20,
            extrapolate: false,
            precision: 128,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SigmaStatus {
    Converged,
    MaxN,
    PRejected,
}

impl std::fmt::Display for SigmaStatus {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            SigmaStatus::Converged => "converged",
            SigmaStatus::MaxN => "max_n",
            SigmaStatus::PRejected => "p_rejected",
        })
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct SigmaResult {
    pub value: Real,
    pub p_used: usize,
    /// Smallest `p` with `D^p` membership evidence, when `p` was auto-selected.
    pub p_min: Option<usize>,
    pub n_final: u64,
    pub successive_delta: f64,
    pub status: SigmaStatus,
    /// `(n, f_n)` along the schedule.
    pub schedule: Vec<(u64, f64)>,
    /// Observed `log2` ratio of successive deltas at the end of the schedule.
    pub empirical_rate: Option<f64>,
    /// Two-point Richardson value with the empirical rate (reported only).
    pub extrapolated: Option<Real>,
    /// `|Σg(1)|` from a companion run at `x = 1`.
    pub normalization_residual: Option<f64>,
    pub dp_evidence: Vec<DpEvidence>,
}

/// Indefinite-sum evaluator for one `g`, holding the integer-sample memo.
pub struct SigmaEvaluator {
    g: FuncHandle,
    bits: u32,
    memo: RwLock<HashMap<u32, Arc<Vec<Real>>>>,
}

impl std::fmt::Debug for SigmaEvaluator {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("SigmaEvaluator")
            .field("g", &self.g.name())
            .field("bits", &self.bits)
            .finish()
    }
}

impl SigmaEvaluator {
    pub fn new(g: FuncHandle, bits: u32) -> Self {
        SigmaEvaluator {
            g,
            bits: bits.max(MIN_PRECISION),
            memo: RwLock::new(HashMap::new()),
        }
    }

    pub fn function(&self) -> &FuncHandle {
        &self.g
    }

    fn working(&self) -> u32 {
        self.bits + 64
    }

    /// `g(1), ..., g(count)` at the working precision, extended on demand.
    fn integer_samples(&self, count: u64) -> Result<Arc<Vec<Real>>> {
        let w = self.working();
        {
            let memo = self.memo.read().expect("memo lock poisoned");
            if let Some(v) = memo.get(&w) {
                if v.len() as u64 >= count {
                    return Ok(Arc::clone(v));
                }
            }
        }
        let mut memo = self.memo.write().expect("memo lock poisoned");
        let entry = memo.entry(w).or_insert_with(|| Arc::new(Vec::new()));
        if (entry.len() as u64) < count {
            let mut extended: Vec<Real> = entry.as_ref().clone();
            extended.reserve(count as usize - extended.len());
            for k in extended.len() as u64 + 1..=count {
                extended.push(self.g.eval(&Real::from_u64(k, w), w)?.with_precision(w));
            }
            *entry = Arc::new(extended);
        }
        Ok(Arc::clone(entry))
    }

    /// Number of memoized integer samples at the working precision.
    pub fn memo_len(&self) -> usize {
        self.memo
            .read()
            .expect("memo lock poisoned")
            .get(&self.working())
            .map_or(0, |v| v.len())
    }

    /// `Σ_{j=1}^p C(x,j) Δ^{j-1} g(n)`.
    fn correction(&self, p: usize, n: u64, x: &Real) -> Result<Real> {
        let w = self.working();
        if p == 0 {
            return Ok(Real::zero(w));
        }
        let table = build_table(&self.g, &Real::from_u64(n, w), p - 1, self.bits)?;
        let mut sum = CompensatedSum::new(w);
        for j in 1..=p {
            sum.add(&(gen_binomial(&x.with_precision(w), j as u64) * table.value(j - 1)));
        }
        Ok(sum.value())
    }

    fn check_x(&self, x: &Real) -> Result<()> {
        if x.signum() <= 0 {
            return Err(Error::domain(format!("indefinite sums are evaluated at x > 0, got {x}")));
        }
        if !self.g.domain().contains(x) {
            return Err(Error::domain(format!("{x} is outside the domain {} of `{}`", self.g.domain(), self.g.name())));
        }
        Ok(())
    }

    /// One value of `f_n^p[g](x)`.
    pub fn f_np(&self, p: usize, n: u64, x: &Real) -> Result<Real> {
        if n < 2 {
            return Err(Error::invalid(format!("n must be at least 2, got {n}")));
        }
        self.check_x(x)?;
        let mut blocks = Blocks::new(self, x)?;
        blocks.advance_to(n)?;
        blocks.value(p)
    }

    /// Runs the doubling schedule at `x`.
    pub fn eval(&self, x: &Real, p: usize, tolerance: f64, n_max: u64, extrapolate: bool) -> Result<SigmaResult> {
        self.check_x(x)?;
        let w = self.working();
        let tol = Real::from_f64(tolerance, w);
        let half_tol = &tol / &Real::from_i64(2, w);
        let mut blocks = Blocks::new(self, x)?;
        let mut schedule = Vec::new();
        let mut values: Vec<Real> = Vec::new();
        let mut deltas: Vec<Real> = Vec::new();
        let mut n = FIRST_N;
        let mut status = SigmaStatus::MaxN;
        while n <= n_max.max(FIRST_N) {
            blocks.advance_to(n)?;
            let v = blocks.value(p)?;
            schedule.push((n, v.to_f64()));
            if let Some(prev) = values.last() {
                let d = (&v - prev).abs();
                deltas.push(d.clone());
                values.push(v);
                if d < half_tol {
                    status = SigmaStatus::Converged;
                    break;
                }
            } else {
                values.push(v);
            }
            n *= 2;
        }
        let n_final = schedule.last().map_or(FIRST_N, |s| s.0);
        let value = values.last().expect("schedule is nonempty").clone();
        let successive_delta = deltas.last().map_or(f64::INFINITY, Real::to_f64);
        let empirical_rate = match deltas.len() {
            0 | 1 => None,
            len => {
                let (older, newer) = (deltas[len - 2].to_f64(), deltas[len - 1].to_f64());
                (older > 0.0 && newer > 0.0).then(|| (older / newer).log2())
            }
        };
        let extrapolated = match (extrapolate, empirical_rate, values.len()) {
            (true, Some(rate), len) if len >= 2 && rate > 0.0 => {
                let last = &values[len - 1];
                let prev = &values[len - 2];
                let factor = Real::from_f64(2f64.powf(rate) - 1.0, w);
                Some(last + &((last - prev) / factor))
            }
            _ => None,
        };
        Ok(SigmaResult {
            value,
            p_used: p,
            p_min: None,
            n_final,
            successive_delta,
            status,
            schedule,
            empirical_rate,
            extrapolated,
            normalization_residual: None,
            dp_evidence: Vec::new(),
        })
    }
}

/// Running sums `Σ_{k=1}^{n-1} g(k)` and `Σ_{k=0}^{n-1} g(x+k)`.
struct Blocks<'a> {
    ev: &'a SigmaEvaluator,
    x: Real,
    integer_x: Option<u64>,
    n: u64,
    s1: CompensatedSum,
    s2: CompensatedSum,
}

impl<'a> Blocks<'a> {
    fn new(ev: &'a SigmaEvaluator, x: &Real) -> Result<Self> {
        let w = ev.working();
        let x = x.with_precision(w);
        let integer_x = x
            .nearest_integer()
            .filter(|&m| m >= 1 && Real::from_i64(m, w) == x)
            .map(|m| m as u64);
        Ok(Blocks {
            ev,
            x,
            integer_x,
            n: 0,
            s1: CompensatedSum::new(w),
            s2: CompensatedSum::new(w),
        })
    }

    fn advance_to(&mut self, n: u64) -> Result<()> {
        let w = self.ev.working();
        if n <= self.n {
            return Ok(());
        }
        let reach = match self.integer_x {
            Some(m) => (n - 1).max(m + n - 1),
            None => n - 1,
        };
        let samples = self.ev.integer_samples(reach)?;
        // s1 covers k = 1..n-1, i.e. samples[0..n-1].
        let start1 = self.n.max(1);
        for k in start1..n {
            self.s1.add(&samples[(k - 1) as usize]);
        }
        for k in self.n..n {
            match self.integer_x {
                Some(m) => self.s2.add(&samples[(m + k - 1) as usize]),
                None => {
                    let point = &self.x + &Real::from_u64(k, w);
                    self.s2.add(&self.ev.g.eval(&point, w)?.with_precision(w));
                }
            }
        }
        self.n = n;
        Ok(())
    }

    fn value(&self, p: usize) -> Result<Real> {
        let correction = self.ev.correction(p, self.n, &self.x)?;
        Ok(self.s1.value() - self.s2.value() + correction)
    }
}

/// `f_n^p[g](x)` with a fresh evaluator.
pub fn f_np(g: &FuncHandle, p: usize, n: u64, x: &Real, bits: u32) -> Result<Real> {
    SigmaEvaluator::new(g.clone(), bits).f_np(p, n, x)
}

/// Smallest `p <= MAX_AUTO_P` with `D^p` membership evidence, plus the
/// evidence gathered on the way.
pub fn select_p(g: &FuncHandle, n_max: u64, bits: u32) -> Result<(Option<usize>, Vec<DpEvidence>)> {
    let mut evidence = Vec::new();
    for p in 0..=MAX_AUTO_P {
        let e = dp_membership(g, p, n_max.clamp(64, DP_N_MAX), DP_THRESHOLD, bits)?;
        let member = e.verdict == DpVerdict::Member;
        evidence.push(e);
        if member {
            return Ok((Some(p), evidence));
        }
    }
    Ok((None, evidence))
}

/// Full evaluation: optional automatic `p`, the doubling schedule, and the
/// normalization check at `x = 1`.
pub fn sigma_eval_with(ev: &SigmaEvaluator, req: &SigmaRequest) -> Result<SigmaResult> {
    let (p, p_min, evidence) = match req.p {
        Some(p) => (p, None, Vec::new()),
        None => {
            let (p_min, evidence) = select_p(&ev.g, req.n_max, req.precision)?;
            match p_min {
                Some(p) => ((p + AUTO_P_BOOST).min(MAX_AUTO_P), Some(p), evidence),
                None => {
                    return Err(Error::PRejected {
                        function: ev.g.name().to_string(),
                        max_p: MAX_AUTO_P,
                    })
                }
            }
        }
    };
    let mut result = ev.eval(&req.x, p, req.tolerance, req.n_max, req.extrapolate)?;
    let one = Real::one(req.precision);
    let normalization = ev.eval(&one, p, req.tolerance, req.n_max, false)?;
    result.normalization_residual = Some(normalization.value.abs().to_f64());
    result.p_min = p_min;
    result.dp_evidence = evidence;
    Ok(result)
}

pub fn sigma_eval(req: &SigmaRequest) -> Result<SigmaResult> {
    let ev = SigmaEvaluator::new(req.g.clone(), req.precision);
    sigma_eval_with(&ev, req)
}

/// `|f_n^q[g](x) - f_n^p[g](x)|` for each `n`.
pub fn wellposedness_check(g: &FuncHandle, p: usize, q: usize, x: &Real, n_list: &[u64], bits: u32) -> Result<Vec<f64>> {
    let ev = SigmaEvaluator::new(g.clone(), bits);
    n_list
        .iter()
        .map(|&n| Ok((ev.f_np(q, n, x)? - ev.f_np(p, n, x)?).abs().to_f64()))
        .collect()
}

#[derive(Clone, Debug, Serialize)]
pub struct DifferenceCheck {
    pub residual: f64,
    pub at_x: SigmaResult,
    pub at_x_plus_one: SigmaResult,
}

/// `|Σg(x+1) - Σg(x) - g(x)|` with both sums from the same request settings.
pub fn difference_equation_check(req: &SigmaRequest) -> Result<DifferenceCheck> {
    let ev = SigmaEvaluator::new(req.g.clone(), req.precision);
    let at_x = sigma_eval_with(&ev, req)?;
    let mut next = req.clone();
    next.x = &req.x + &Real::one(req.precision);
    next.p = Some(at_x.p_used);
    let at_x_plus_one = sigma_eval_with(&ev, &next)?;
    let w = at_x.value.precision();
    let g_x = req.g.eval(&req.x, w)?;
    let residual = (&at_x_plus_one.value - &at_x.value - g_x).abs().to_f64();
    Ok(DifferenceCheck {
        residual,
        at_x,
        at_x_plus_one,
    })
}

/// A handle evaluating `x -> Σg(x)` through a shared evaluator.
///
/// When `g` has closed-form differences, so does the handle:
/// `Δ^k Σg(a) = Δ^{k-1} g(a)` for `k >= 1`.
pub fn sigma_handle(g: &FuncHandle, tolerance: f64, bits: u32) -> Result<FuncHandle> {
    let (p_min, _) = select_p(g, DP_N_MAX, bits)?;
    let p = match p_min {
        Some(p) => (p + AUTO_P_BOOST).min(MAX_AUTO_P),
        None => {
            return Err(Error::PRejected {
                function: g.name().to_string(),
                max_p: MAX_AUTO_P,
            })
        }
    };
    let ev = Arc::new(SigmaEvaluator::new(g.clone(), bits));
    let value_at = {
        let ev = Arc::clone(&ev);
        move |x: &Real| -> Result<Real> {
            let r = ev.eval(x, p, tolerance, 1 << 22, false)?;
            if r.status != SigmaStatus::Converged {
                return Err(Error::domain(format!(
                    "indefinite sum of `{}` did not converge at {x}",
                    ev.g.name()
                )));
            }
            Ok(r.value)
        }
    };
    let eval_fn = value_at.clone();
    let mut handle = FuncHandle::new(
        format!("sigma[{}]", g.name()),
        Interval::positive_half_line(),
        move |x, _bits| eval_fn(x),
    )
    .with_eval_abs_error(tolerance);
    if g.has_closed_form_diff() {
        let g = g.clone();
        handle = handle.with_closed_form_diff(move |a, k, bits| {
            let mut out = vec![value_at(a)?.with_precision(bits)];
            if k > 0 {
                let inner = g.closed_form_diffs(a, k - 1, bits).expect("checked above")?;
                out.extend(inner);
            }
            Ok(out)
        });
    }
    Ok(handle)
}

#[derive(Clone, Debug, Serialize)]
pub struct SternReport {
    pub x: Real,
    pub value: Real,
    pub terms_used: usize,
    pub status: EvalStatus,
    pub remainder_bound: Option<Real>,
    pub sigma_value: Real,
    pub oracle: Real,
}

/// The Newton series of `Σ(1/t)` at anchor 1,
/// `Σ_{k>=1} C(x-1,k) (-1)^(k-1) / k`, checked against `Σ(1/t)` from the
/// limit and against `ψ(x) + γ`.
///
/// `Σ(1/t)` has a completely monotone derivative, which is passed to the
/// engine as a `q = 1` certificate. Its terms share one sign from `k = 2`
/// on, so a small-terms heuristic alone would stop while the tail is still
/// several times the last term.
pub fn stern_series(x: &Real, tolerance: f64, max_terms: usize, bits: u32) -> Result<SternReport> {
    stern_series_with(&recip(), x, tolerance, max_terms, bits)
}

/// [`stern_series`] with a caller-supplied handle standing in for `1/t`.
/// The oracle side always uses the true `ψ(x) + γ`.
pub fn stern_series_with(g: &FuncHandle, x: &Real, tolerance: f64, max_terms: usize, bits: u32) -> Result<SternReport> {
    if x.signum() <= 0 {
        return Err(Error::domain(format!("Stern's series needs x > 0, got {x}")));
    }
    let g = g.clone();
    let handle = sigma_handle(&g, tolerance / 100.0, bits)?;
    let one = Real::one(bits);
    let expansion = newton::expand(&handle, &one, max_terms.max(1) - 1, bits)?;
    let report = newton::eval(
        &expansion,
        x,
        &EvalOptions {
            tolerance,
            max_terms,
            certificate: Some(Certificate { q: 1, b: None }),
        },
    )?;
    let sigma_value = sigma_eval(&SigmaRequest::new(g, x.clone(), tolerance))?.value;
    let oracle = oracles::harmonic(&(x.with_precision(bits) - &one))?;
    Ok(SternReport {
        x: x.clone(),
        value: report.value,
        terms_used: report.terms_used,
        status: report.status,
        remainder_bound: report.remainder_bound,
        sigma_value,
        oracle,
    })
}
