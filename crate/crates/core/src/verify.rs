//! The acceptance suite, shared by `newton-series verify` and the
//! `acceptance` test target.
//!
//! Each criterion runs to completion and reports a verdict together with the
//! measured quantities behind it. A criterion that cannot be met is reported
//! as a failure with the reason; nothing here relaxes a threshold.

use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::arith::{Interval, Real};
use crate::convexity::{classify, ClassifyOptions, OrderSign, DEFAULT_SEED};
use crate::error::{Error, Result};
use crate::finite_diff::build_table;
use crate::newton::{self, fit_slope, log_spaced, ratio_table, Certificate, EvalOptions, EvalStatus};
use crate::oracles;
use crate::registry::{self, FuncHandle};
use crate::sigma::{
    difference_equation_check, sigma_eval_with, stern_series_with, wellposedness_check, SigmaEvaluator,
    SigmaRequest, SigmaStatus,
};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Suite {
    All,
    Newton,
    Sigma,
    Classify,
    Oracle,
}

impl Suite {
    pub fn criteria(self) -> Vec<u8> {
        match self {
            Suite::All => (1..=11).collect(),
            Suite::Newton => vec![1, 2, 3, 4],
            Suite::Sigma => vec![5, 6, 7, 8, 10],
            Suite::Classify => vec![9],
            Suite::Oracle => vec![11],
        }
    }
}

impl FromStr for Suite {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "all" => Ok(Suite::All),
            "newton" => Ok(Suite::Newton),
            "sigma" => Ok(Suite::Sigma),
            "classify" => Ok(Suite::Classify),
            "oracle" => Ok(Suite::Oracle),
            other => Err(Error::invalid(format!(
                "unknown suite `{other}` (expected all, newton, sigma, classify or oracle)"
            ))),
        }
    }
}

impl fmt::Display for Suite {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Suite::All => "all",
            Suite::Newton => "newton",
            Suite::Sigma => "sigma",
            Suite::Classify => "classify",
            Suite::Oracle => "oracle",
        })
    }
}

#[derive(Clone, Debug, Default)]
pub struct VerifyOptions {
    /// Replace `recip` by a copy whose fourth closed-form coefficient has
    /// the wrong sign. Used to check that the suite notices.
    pub inject_fault: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct Outcome {
    pub id: u8,
    pub title: &'static str,
    pub passed: bool,
    /// Measured values, one entry per checked point.
    pub details: Vec<String>,
    pub seconds: f64,
}

impl Outcome {
    pub fn line(&self) -> String {
        format!(
            "{} [{:>2}] {} ({:.2} s): {}",
            if self.passed { "PASS" } else { "FAIL" },
            self.id,
            self.title,
            self.seconds,
            self.details.join("; ")
        )
    }
}

pub fn title(id: u8) -> &'static str {
    match id {
        1 => "Newton series of 1/x, golden values",
        2 => "remainder identity",
        3 => "divergence detection",
        4 => "falling-factorial ratio exponent",
        5 => "indefinite sum of log vs ln Gamma",
        6 => "indefinite sum of 1/x vs digamma, Stern series",
        7 => "Newton coefficients of the log-gamma sum",
        8 => "well-posedness in p",
        9 => "convexity classifier",
        10 => "difference equation",
        11 => "oracle self-tests",
        _ => "unknown criterion",
    }
}

/// Collects per-point verdicts for one criterion.
struct Checks {
    passed: bool,
    details: Vec<String>,
}

impl Checks {
    fn new() -> Self {
        Checks {
            passed: true,
            details: Vec::new(),
        }
    }

    fn record(&mut self, ok: bool, detail: String) {
        self.passed &= ok;
        self.details.push(if ok { detail } else { format!("FAILED {detail}") });
    }

    fn note(&mut self, detail: String) {
        self.details.push(detail);
    }

    fn error(&mut self, context: &str, err: &Error) {
        self.record(false, format!("{context}: error: {err}"));
    }
}

fn r(v: f64, bits: u32) -> Real {
    Real::from_f64(v, bits)
}

fn sci(v: f64) -> String {
    format!("{v:.3e}")
}

fn recip_for(options: &VerifyOptions) -> FuncHandle {
    if !options.inject_fault {
        return registry::recip();
    }
    let good = registry::recip();
    let source = good.clone();
    FuncHandle::new("recip", Interval::positive_half_line(), move |x, bits| good.eval(x, bits)).with_closed_form_diff(
        move |a, k, bits| {
            let mut out = source.closed_form_diffs(a, k, bits).expect("recip has closed-form differences")?;
            if let Some(c) = out.get_mut(3) {
                *c = -c.clone();
            }
            Ok(out)
        },
    )
}

pub fn run_criterion(id: u8, options: &VerifyOptions) -> Outcome {
    let start = Instant::now();
    let mut checks = Checks::new();
    match id {
        1 => newton_golden(&mut checks, options),
        2 => remainder_identity(&mut checks),
        3 => divergence(&mut checks),
        4 => ratio_exponent(&mut checks),
        5 => log_gamma_sum(&mut checks),
        6 => digamma_sum(&mut checks, options),
        7 => hermite_coefficients(&mut checks),
        8 => wellposedness(&mut checks),
        9 => classifier(&mut checks),
        10 => difference_equation(&mut checks),
        11 => oracle_self_tests(&mut checks),
        other => checks.record(false, format!("no criterion numbered {other}")),
    }
    Outcome {
        id,
        title: title(id),
        passed: checks.passed,
        details: checks.details,
        seconds: start.elapsed().as_secs_f64(),
    }
}

pub fn run(suite: Suite, options: &VerifyOptions) -> Vec<Outcome> {
    suite.criteria().into_iter().map(|id| run_criterion(id, options)).collect()
}

fn newton_golden(checks: &mut Checks, options: &VerifyOptions) {
    const BITS: u32 = 256;
    const TOL: f64 = 1e-10;
    const MAX_TERMS: usize = 10_000;
    let f = recip_for(options);
    for a in [1.0, 2.5] {
        let anchor = r(a, BITS);
        let expansion = match newton::expand(&f, &anchor, MAX_TERMS - 1, BITS) {
            Ok(e) => e,
            Err(e) => {
                checks.error(&format!("a={a}"), &e);
                continue;
            }
        };
        for x in [0.5, 2.5, 7.3] {
            let point = Instant::now();
            let xr = r(x, BITS);
            let opts = EvalOptions {
                tolerance: TOL,
                max_terms: MAX_TERMS,
                certificate: Some(Certificate {
                    q: 0,
                    b: Some(r(a - 0.4, BITS)),
                }),
            };
            let label = format!("a={a} x={x}");
            match newton::eval(&expansion, &xr, &opts) {
                Ok(report) => {
                    let secs = point.elapsed().as_secs_f64();
                    let err = (&report.value - &xr.recip()).abs().to_f64();
                    let bound = report.remainder_bound.as_ref().map(Real::to_f64);
                    // An integer offset ends the series exactly; its rigorous
                    // bound is then the rounding estimate alone.
                    let status_ok = match report.status {
                        EvalStatus::ConvergedBounded => true,
                        EvalStatus::FiniteExact => bound.is_some_and(|b| b < TOL),
                        _ => false,
                    };
                    let ok = status_ok && err <= TOL && report.terms_used <= MAX_TERMS && secs < 5.0;
                    checks.record(
                        ok,
                        format!(
                            "{label}: {} after {} terms, |err|={}, bound={}, {secs:.2} s",
                            report.status,
                            report.terms_used,
                            sci(err),
                            bound.map_or("none".into(), sci)
                        ),
                    );
                }
                Err(e) => checks.error(&format!("{label} (b={})", a - 0.4), &e),
            }
        }
    }
}

fn remainder_identity(checks: &mut Checks) {
    const BITS: u32 = 256;
    let start = Instant::now();
    let functions = [registry::recip(), registry::log(), registry::neg_exp()];
    let mut rng = ChaCha8Rng::seed_from_u64(DEFAULT_SEED);
    let mut worst = 0.0f64;
    let mut worst_case = String::new();
    let mut failures = 0;
    for _ in 0..50 {
        let f = &functions[rng.gen_range(0..functions.len())];
        let a = rng.gen_range(0.5..5.0);
        let x = rng.gen_range(0.1..10.0);
        let n = rng.gen_range(0..=20usize);
        match newton::remainder_identity_check(f, &r(a, BITS), &r(x, BITS), n, BITS) {
            Ok(c) => {
                let res = c.residual.to_f64();
                if res > worst || worst_case.is_empty() {
                    worst = res;
                    worst_case = format!("{} a={a:.4} x={x:.4} n={n}", f.name());
                }
            }
            Err(e) => {
                failures += 1;
                checks.error(&format!("{} a={a} x={x} n={n}", f.name()), &e);
            }
        }
    }
    let secs = start.elapsed().as_secs_f64();
    checks.record(
        failures == 0 && worst <= 1e-28 && secs < 10.0,
        format!("50 cases, max residual {} at {worst_case}, {secs:.2} s", sci(worst)),
    );
}

fn divergence(checks: &mut Checks) {
    const BITS: u32 = 128;
    let zero = Real::zero(BITS);
    match registry::power_base("2").and_then(|f| newton::expand(&f, &zero, 999, BITS)) {
        Ok(exp) => {
            let opts = EvalOptions {
                tolerance: 1e-10,
                max_terms: 1000,
                certificate: None,
            };
            match newton::eval(&exp, &r(0.5, BITS), &opts) {
                Ok(rep) => checks.record(
                    rep.status == EvalStatus::Diverged && rep.terms_used <= 1000,
                    format!("power_base[c=2] at x=0.5: {} after {} terms", rep.status, rep.terms_used),
                ),
                Err(e) => checks.error("power_base[c=2]", &e),
            }
        }
        Err(e) => checks.error("power_base[c=2]", &e),
    }
    match registry::power_base("0.5").and_then(|f| newton::expand(&f, &zero, 999, BITS)) {
        Ok(exp) => {
            for x in [0.5, 3.7] {
                let opts = EvalOptions {
                    tolerance: 1e-12,
                    max_terms: 1000,
                    certificate: None,
                };
                let xr = r(x, BITS);
                match newton::eval(&exp, &xr, &opts) {
                    Ok(rep) => {
                        let oracle = (&xr * &r(1.5, BITS).ln()).exp();
                        let err = (&rep.value - &oracle).abs().to_f64();
                        let converged = matches!(
                            rep.status,
                            EvalStatus::ConvergedHeuristic | EvalStatus::ConvergedBounded
                        );
                        checks.record(
                            converged && err <= 1e-10,
                            format!(
                                "power_base[c=0.5] at x={x}: {} after {} terms, |err|={}",
                                rep.status,
                                rep.terms_used,
                                sci(err)
                            ),
                        );
                    }
                    Err(e) => checks.error("power_base[c=0.5]", &e),
                }
            }
        }
        Err(e) => checks.error("power_base[c=0.5]", &e),
    }
}

fn ratio_exponent(checks: &mut Checks) {
    const BITS: u32 = 128;
    let ns = log_spaced(100, 10_000, 25);
    for (x, expected) in [(2.0, -1.5), (3.0, -2.5)] {
        let label = format!("x={x} a=1 b=0.5");
        let rows = match ratio_table(&r(x, BITS), &r(1.0, BITS), &r(0.5, BITS), &ns) {
            Ok(rows) => rows,
            Err(e) => {
                checks.error(&label, &e);
                continue;
            }
        };
        let zero_rows = rows.iter().filter(|row| row.sign == 0).count();
        match fit_slope(&rows) {
            Some(slope) => checks.record(
                (slope - expected).abs() <= 0.1,
                format!("{label}: slope {slope:.4} (expected {expected} +/- 0.1)"),
            ),
            None => {
                checks.record(
                    false,
                    format!(
                        "{label}: no slope, the ratio is exactly zero in {zero_rows} of {} rows \
                         because x-a is a nonnegative integer below n",
                        rows.len()
                    ),
                );
                // Shown for context only; it does not count towards the verdict.
                let nearby = x + 1e-3;
                if let Ok(rows) = ratio_table(&r(nearby, BITS), &r(1.0, BITS), &r(0.5, BITS), &ns) {
                    if let Some(slope) = fit_slope(&rows) {
                        checks.note(format!("diagnostic only: x={nearby} gives slope {slope:.4}"));
                    }
                }
            }
        }
    }
}

fn log_gamma_sum(checks: &mut Checks) {
    const BITS: u32 = 128;
    let start = Instant::now();
    let ev = SigmaEvaluator::new(registry::log(), BITS);
    for x in [0.5, 1.5, 4.2] {
        let mut req = SigmaRequest::new(registry::log(), r(x, BITS), 1e-8);
        req.n_max = 1 << 20;
        match sigma_eval_with(&ev, &req) {
            Ok(res) => {
                let oracle = oracles::log_gamma(&r(x, BITS)).expect("x > 0");
                let err = (&res.value - &oracle).abs().to_f64();
                let norm = res.normalization_residual.unwrap_or(f64::INFINITY);
                checks.record(
                    res.p_used >= 2 && err <= 1e-6 && norm <= 1e-5 && res.status == SigmaStatus::Converged,
                    format!(
                        "x={x}: p={} n={} |err|={} sum(1)={} rate={}",
                        res.p_used,
                        res.n_final,
                        sci(err),
                        sci(norm),
                        res.empirical_rate.map_or("n/a".into(), |v| format!("{v:.2}"))
                    ),
                );
            }
            Err(e) => checks.error(&format!("x={x}"), &e),
        }
    }
    let secs = start.elapsed().as_secs_f64();
    checks.record(secs < 60.0, format!("total {secs:.2} s"));
}

fn digamma_sum(checks: &mut Checks, options: &VerifyOptions) {
    const BITS: u32 = 128;
    let ev = SigmaEvaluator::new(registry::recip(), BITS);
    for x in [1.5, 2.0, 3.5] {
        let req = SigmaRequest::new(registry::recip(), r(x, BITS), 1e-8);
        match sigma_eval_with(&ev, &req) {
            Ok(res) => {
                let oracle = oracles::harmonic(&r(x - 1.0, BITS)).expect("x > 0");
                let err = (&res.value - &oracle).abs().to_f64();
                checks.record(
                    err <= 1e-6,
                    format!("sum x={x}: p={} n={} |err|={}", res.p_used, res.n_final, sci(err)),
                );
            }
            Err(e) => checks.error(&format!("x={x}"), &e),
        }
    }
    let x = r(3.5, BITS);
    match stern_series_with(&recip_for(options), &x, 1e-6, 10_000, BITS) {
        Ok(s) => {
            let err = (&s.value - &s.oracle).abs().to_f64();
            checks.record(
                err <= 1e-6 && s.terms_used <= 10_000,
                format!(
                    "Stern x=3.5: {} after {} terms, |err|={}",
                    s.status,
                    s.terms_used,
                    sci(err)
                ),
            );
            let rows: Vec<(f64, f64)> = (10..=s.terms_used.max(11) as u64)
                .map(|k| {
                    let kr = Real::from_u64(k, BITS);
                    let term = crate::arith::gen_binomial(&(&x - &Real::one(BITS)), k) / kr;
                    ((k as f64).ln(), term.abs().ln().to_f64())
                })
                .collect();
            if let Some(slope) = least_squares_slope(&rows) {
                checks.note(format!("Stern term decay exponent {slope:.3}"));
            }
        }
        Err(e) => checks.error("Stern x=3.5", &e),
    }
}

fn least_squares_slope(points: &[(f64, f64)]) -> Option<f64> {
    let pts: Vec<_> = points.iter().filter(|(_, y)| y.is_finite()).collect();
    if pts.len() < 2 {
        return None;
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    (sxx > 0.0).then(|| sxy / sxx)
}

fn hermite_coefficients(checks: &mut Checks) {
    const BITS: u32 = 128;
    const ORDERS: usize = 11;
    const SUM_TOL: f64 = 1e-12;
    let ev = std::sync::Arc::new(SigmaEvaluator::new(registry::log(), BITS));
    let sum_ev = std::sync::Arc::clone(&ev);
    // Values only: the table below is built by differencing samples.
    let sum_log = FuncHandle::new("sigma[log]", Interval::positive_half_line(), move |x, _| {
        let res = sum_ev.eval(x, 3, SUM_TOL, 1 << 22, false)?;
        if res.status != SigmaStatus::Converged {
            return Err(Error::domain(format!("sum of log did not converge at {x}")));
        }
        Ok(res.value)
    })
    .with_eval_abs_error(SUM_TOL);
    let one = Real::one(BITS);
    let sum_table = match build_table(&sum_log, &one, ORDERS, BITS) {
        Ok(t) => t,
        Err(e) => return checks.error("sum table", &e),
    };
    let log_table = match build_table(&registry::log(), &one, ORDERS - 1, BITS) {
        Ok(t) => t,
        Err(e) => return checks.error("log table", &e),
    };
    let mut worst = sum_table.value(0).abs().to_f64();
    for k in 1..=ORDERS {
        let diff = (sum_table.value(k) - log_table.value(k - 1)).abs().to_f64();
        worst = worst.max(diff);
    }
    checks.record(
        worst <= 1e-6,
        format!("12 coefficients, max |difference| {}", sci(worst)),
    );
}

fn wellposedness(checks: &mut Checks) {
    const BITS: u32 = 128;
    let ns: Vec<u64> = (8..=16).map(|e| 1u64 << e).collect();
    match wellposedness_check(&registry::log(), 1, 3, &r(2.5, BITS), &ns, BITS) {
        Ok(gaps) => {
            let monotone = gaps.windows(2).all(|w| w[1] < w[0]);
            let last = *gaps.last().expect("nonempty");
            checks.record(
                monotone && last < 1e-4,
                format!(
                    "gaps {}",
                    gaps.iter().map(|g| sci(*g)).collect::<Vec<_>>().join(", ")
                ),
            );
        }
        Err(e) => checks.error("log", &e),
    }
}

fn classifier(checks: &mut Checks) {
    let start = Instant::now();
    let window = match Interval::closed(Real::from_i64(1, 128), Real::from_i64(50, 128)) {
        Ok(w) => w,
        Err(e) => return checks.error("window", &e),
    };
    let options = ClassifyOptions {
        dp_n_max: 1 << 12,
        ..ClassifyOptions::default()
    };
    let cases: [(FuncHandle, usize); 4] = [
        (registry::recip(), 8),
        (registry::log(), 8),
        (registry::sin_pi(), 3),
        (registry::neg_exp(), 8),
    ];
    for (f, orders) in cases {
        let name = f.name().to_string();
        match classify(&f, orders, &window, &options) {
            Ok(sig) => {
                let ok = match name.as_str() {
                    "recip" | "neg_exp" => sig.labels.cm_plus == Some(0),
                    "log" => sig.labels.cm_plus == Some(1) && sig.sign(0) == Some(OrderSign::Plus),
                    _ => (0..=orders as i32).all(|p| sig.sign(p) == Some(OrderSign::Mixed)),
                };
                let labels = sig.labels.names();
                checks.record(
                    ok,
                    format!(
                        "{name}: pattern {} labels [{}]",
                        sig.pattern(),
                        if labels.is_empty() { "none".into() } else { labels.join(", ") }
                    ),
                );
            }
            Err(e) => checks.error(&name, &e),
        }
    }
    let secs = start.elapsed().as_secs_f64();
    checks.record(secs < 30.0, format!("total {secs:.2} s, seed {DEFAULT_SEED:#x}"));
}

fn difference_equation(checks: &mut Checks) {
    const BITS: u32 = 128;
    const TOL: f64 = 1e-6;
    for g in [registry::log(), registry::recip(), registry::log_over_x_neg()] {
        for x in [1.5, 2.0, 3.3] {
            let req = SigmaRequest::new(g.clone(), r(x, BITS), TOL);
            match difference_equation_check(&req) {
                Ok(d) => checks.record(
                    d.residual < 4.0 * TOL,
                    format!("{} x={x}: residual {}", g.name(), sci(d.residual)),
                ),
                Err(e) => checks.error(&format!("{} x={x}", g.name()), &e),
            }
        }
    }
}

fn oracle_self_tests(checks: &mut Checks) {
    const BITS: u32 = 128;
    let mut run = || -> Result<()> {
        let mut worst_gamma = 0.0f64;
        let mut worst_psi = 0.0f64;
        for x in [0.3, 1.0, 2.5, 7.75, 31.2] {
            let xr = r(x, BITS);
            let next = &xr + &Real::one(BITS);
            let g = oracles::log_gamma(&next)? - oracles::log_gamma(&xr)? - xr.ln();
            worst_gamma = worst_gamma.max(g.abs().to_f64());
            let p = oracles::digamma(&next)? - oracles::digamma(&xr)? - xr.recip();
            worst_psi = worst_psi.max(p.abs().to_f64());
        }
        checks.record(worst_gamma <= 1e-30, format!("ln Gamma recurrence max residual {}", sci(worst_gamma)));
        checks.record(worst_psi <= 1e-30, format!("digamma recurrence max residual {}", sci(worst_psi)));
        let half = oracles::log_gamma(&r(0.5, BITS))?;
        let sqrt_pi = Real::pi(BITS).sqrt().ln();
        let e = (&half - &sqrt_pi).abs().to_f64();
        checks.record(e <= 1e-30, format!("ln Gamma(1/2) - ln sqrt(pi) = {}", sci(e)));
        let gamma = oracles::euler_gamma(BITS);
        let e = (oracles::digamma(&Real::one(BITS))? + &gamma).abs().to_f64();
        checks.record(e <= 1e-30, format!("digamma(1) + gamma = {}", sci(e)));
        let bm = oracles::euler_gamma_brent_mcmillan(BITS);
        let em = oracles::euler_gamma_euler_maclaurin(BITS);
        let gap = (&bm - &em).abs().to_f64();
        let agreement = if gap == 0.0 {
            format!("in all {BITS} bits")
        } else {
            format!("to {:.1} digits", -gap.log10())
        };
        checks.record(
            gap == 0.0 || -gap.log10() >= 30.0,
            format!("two gamma computations agree {agreement} ({})", bm.to_digits(32)),
        );
        Ok(())
    };
    if let Err(e) = run() {
        checks.error("oracles", &e);
    }
}

/// Exit status for `verify`: 0 when every outcome passed.
pub fn exit_code(outcomes: &[Outcome]) -> i32 {
    if outcomes.iter().all(|o| o.passed) {
        0
    } else {
        1
    }
}
