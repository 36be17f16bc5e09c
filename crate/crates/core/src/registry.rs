//! Named built-in functions and adapters around parsed expressions.
//!
//! A [`FuncHandle`] bundles an evaluator with its domain and, where known,
//! closed-form derivatives and closed-form forward differences. Tags are
//! descriptive metadata; no algorithm uses them to skip a numerical check.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::sync::Arc;

use serde::Serialize;

use crate::arith::{factorial, Interval, Real};
use crate::error::{Error, Result};
use crate::expr::Expr;

pub type EvalFn = dyn Fn(&Real, u32) -> Result<Real> + Send + Sync;
/// `(order, x, bits) -> f^(order)(x)`.
pub type DerivativeFn = dyn Fn(u32, &Real, u32) -> Result<Real> + Send + Sync;
/// `(anchor, max_order, bits) -> [Δ^0 f(a), ..., Δ^K f(a)]`.
pub type ClosedDiffFn = dyn Fn(&Real, usize, u32) -> Result<Vec<Real>> + Send + Sync;

pub const BUILTIN_NAMES: [&str; 6] = [
    "recip",
    "log",
    "neg_exp",
    "power_base",
    "sin_pi",
    "log_over_x_neg",
];

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Tag {
    KnownCm,
    KnownAm,
    KnownCounterexample,
}

#[derive(Clone)]
pub struct FuncHandle {
    name: String,
    domain: Interval,
    eval: Arc<EvalFn>,
    derivative: Option<Arc<DerivativeFn>>,
    closed_form_diff: Option<Arc<ClosedDiffFn>>,
    tags: BTreeSet<Tag>,
    eval_abs_error: Option<f64>,
}

impl fmt::Debug for FuncHandle {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("FuncHandle")
            .field("name", &self.name)
            .field("domain", &self.domain)
            .field("derivative", &self.derivative.is_some())
            .field("closed_form_diff", &self.closed_form_diff.is_some())
            .field("tags", &self.tags)
            .finish()
    }
}

impl FuncHandle {
    pub fn new(
        name: impl Into<String>,
        domain: Interval,
        eval: impl Fn(&Real, u32) -> Result<Real> + Send + Sync + 'static,
    ) -> Self {
        FuncHandle {
            name: name.into(),
            domain,
            eval: Arc::new(eval),
            derivative: None,
            closed_form_diff: None,
            tags: BTreeSet::new(),
            eval_abs_error: None,
        }
    }

    pub fn with_derivative(
        mut self,
        derivative: impl Fn(u32, &Real, u32) -> Result<Real> + Send + Sync + 'static,
    ) -> Self {
        self.derivative = Some(Arc::new(derivative));
        self
    }

    pub fn with_closed_form_diff(
        mut self,
        diff: impl Fn(&Real, usize, u32) -> Result<Vec<Real>> + Send + Sync + 'static,
    ) -> Self {
        self.closed_form_diff = Some(Arc::new(diff));
        self
    }

    pub fn with_tag(mut self, tag: Tag) -> Self {
        self.tags.insert(tag);
        self
    }

    /// Declares that `eval` is only accurate to an absolute error `err`
    /// (for evaluators that are themselves limits, e.g. indefinite sums).
    pub fn with_eval_abs_error(mut self, err: f64) -> Self {
        self.eval_abs_error = Some(err);
        self
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn domain(&self) -> &Interval {
        &self.domain
    }

    pub fn tags(&self) -> &BTreeSet<Tag> {
        &self.tags
    }

    pub fn has_tag(&self, tag: Tag) -> bool {
        self.tags.contains(&tag)
    }

    pub fn has_derivative(&self) -> bool {
        self.derivative.is_some()
    }

    pub fn has_closed_form_diff(&self) -> bool {
        self.closed_form_diff.is_some()
    }

    pub fn eval_abs_error(&self) -> Option<f64> {
        self.eval_abs_error
    }

    /// `f(x)` at `bits`; rejects points outside the domain.
    pub fn eval(&self, x: &Real, bits: u32) -> Result<Real> {
        if !self.domain.contains(x) {
            return Err(Error::domain(format!(
                "{} is outside the domain {} of `{}`",
                x, self.domain, self.name
            )));
        }
        (self.eval)(&x.with_precision(bits.max(x.precision())), bits)
    }

    /// `f^(order)(x)`.
    pub fn derivative(&self, order: u32, x: &Real, bits: u32) -> Result<Real> {
        let d = self
            .derivative
            .as_ref()
            .ok_or_else(|| Error::MissingDerivative(self.name.clone()))?;
        if !self.domain.contains(x) {
            return Err(Error::domain(format!(
                "{} is outside the domain {} of `{}`",
                x, self.domain, self.name
            )));
        }
        d(order, x, bits)
    }

    /// Closed-form `Δ^k f(a)` for `k = 0..=max_order`, if this handle has one.
    pub fn closed_form_diffs(&self, a: &Real, max_order: usize, bits: u32) -> Option<Result<Vec<Real>>> {
        self.closed_form_diff.as_ref().map(|d| d(a, max_order, bits))
    }

    /// Closed-form `Δ^k f(a)` for a single order.
    pub fn closed_form_diff(&self, k: usize, a: &Real, bits: u32) -> Option<Result<Real>> {
        self.closed_form_diffs(a, k, bits)
            .map(|r| r.map(|mut v| v.pop().expect("closed form returned an empty table")))
    }

    /// `x -> c * f(x)`; derivatives and closed forms scale along.
    pub fn scaled(&self, c: f64) -> FuncHandle {
        let inner = self.clone();
        let mut out = FuncHandle::new(format!("{}*{}", c, self.name), self.domain.clone(), {
            let inner = inner.clone();
            move |x, bits| Ok(inner.eval(x, bits)? * Real::from_f64(c, bits))
        });
        if self.derivative.is_some() {
            let inner = inner.clone();
            out = out.with_derivative(move |m, x, bits| {
                Ok(inner.derivative(m, x, bits)? * Real::from_f64(c, bits))
            });
        }
        if self.closed_form_diff.is_some() {
            let inner = inner.clone();
            out = out.with_closed_form_diff(move |a, k, bits| {
                let table = inner.closed_form_diffs(a, k, bits).expect("checked above")?;
                Ok(table
                    .into_iter()
                    .map(|v| v * Real::from_f64(c, bits))
                    .collect())
            });
        }
        if let Some(e) = self.eval_abs_error {
            out = out.with_eval_abs_error(e * c.abs());
        }
        out
    }

    /// `x -> f(-x)` on the reflected domain.
    pub fn reflected(&self) -> FuncHandle {
        let inner = self.clone();
        let mut out = FuncHandle::new(
            format!("{}(-x)", self.name),
            self.domain.reflected(),
            move |x, bits| inner.eval(&-x, bits),
        );
        if self.derivative.is_some() {
            let inner = self.clone();
            out = out.with_derivative(move |m, x, bits| {
                let d = inner.derivative(m, &-x, bits)?;
                Ok(if m % 2 == 1 { -d } else { d })
            });
        }
        out
    }

    /// `x -> f(x+1) - f(x)`.
    pub fn forward_difference(&self) -> FuncHandle {
        let inner = self.clone();
        let mut out = FuncHandle::new(
            format!("delta[{}]", self.name),
            self.domain.clone(),
            move |x, bits| {
                let next = x + &Real::one(bits);
                Ok(inner.eval(&next, bits)? - inner.eval(x, bits)?)
            },
        );
        if let Some(e) = self.eval_abs_error {
            out = out.with_eval_abs_error(2.0 * e);
        }
        out
    }
}

/// Splits `name[key=value,key=value]` into its parts.
pub fn parse_fn_spec(spec: &str) -> Result<(String, BTreeMap<String, String>)> {
    let spec = spec.trim();
    let bad = |msg: &str| Error::invalid(format!("malformed function spec `{spec}`: {msg}"));
    let (name, rest) = match spec.find('[') {
        Some(open) => (&spec[..open], Some(&spec[open + 1..])),
        None => (spec, None),
    };
    let name = name.trim();
    if name.is_empty() || !name.bytes().all(|b| b.is_ascii_alphanumeric() || b == b'_') {
        return Err(bad("function names use letters, digits and `_`"));
    }
    let mut params = BTreeMap::new();
    if let Some(rest) = rest {
        let body = rest.strip_suffix(']').ok_or_else(|| bad("missing `]`"))?;
        if body.contains('[') || body.contains(']') {
            return Err(bad("nested brackets"));
        }
        for pair in body.split(',').filter(|p| !p.trim().is_empty()) {
            let (key, value) = pair.split_once('=').ok_or_else(|| bad("expected key=value"))?;
            let key = key.trim();
            let value = value.trim();
            if key.is_empty() || value.is_empty() {
                return Err(bad("empty key or value"));
            }
            if params.insert(key.to_string(), value.to_string()).is_some() {
                return Err(bad("duplicate parameter"));
            }
        }
    }
    Ok((name.to_string(), params))
}

/// Resolves a spec such as `recip` or `power_base[c=0.5]`.
pub fn lookup_spec(spec: &str) -> Result<FuncHandle> {
    let (name, params) = parse_fn_spec(spec)?;
    lookup(&name, &params)
}

fn no_params(name: &str, params: &BTreeMap<String, String>) -> Result<()> {
    match params.keys().next() {
        Some(key) => Err(Error::InvalidParameter {
            function: name.to_string(),
            message: format!("unexpected parameter `{key}`"),
        }),
        None => Ok(()),
    }
}

/// Looks up a built-in by name.
pub fn lookup(name: &str, params: &BTreeMap<String, String>) -> Result<FuncHandle> {
    match name {
        "recip" => no_params(name, params).map(|_| recip()),
        "log" => no_params(name, params).map(|_| log()),
        "neg_exp" => no_params(name, params).map(|_| neg_exp()),
        "sin_pi" => no_params(name, params).map(|_| sin_pi()),
        "log_over_x_neg" => no_params(name, params).map(|_| log_over_x_neg()),
        "power_base" => {
            let invalid = |message: String| Error::InvalidParameter {
                function: name.to_string(),
                message,
            };
            if let Some(key) = params.keys().find(|k| k.as_str() != "c") {
                return Err(invalid(format!("unexpected parameter `{key}`")));
            }
            let c = params
                .get("c")
                .ok_or_else(|| invalid("missing parameter `c`".into()))?;
            power_base(c)
        }
        _ => Err(Error::UnknownFunction {
            name: name.to_string(),
            known: BUILTIN_NAMES.iter().map(|s| s.to_string()).collect(),
        }),
    }
}

/// `1/x` on `(0, ∞)`, with `Δ^k f(a) = (-1)^k k! / (a (a+1) ... (a+k))`.
pub fn recip() -> FuncHandle {
    FuncHandle::new("recip", Interval::positive_half_line(), |x, bits| {
        Ok(x.with_precision(bits).recip())
    })
    .with_derivative(|m, x, bits| {
        // (-1)^m m! / x^(m+1)
        let x = x.with_precision(bits);
        let v = factorial(u64::from(m), bits) / x.powi(m as i32 + 1);
        Ok(if m % 2 == 1 { -v } else { v })
    })
    .with_closed_form_diff(|a, k, bits| {
        let a = a.with_precision(bits);
        let mut out = Vec::with_capacity(k + 1);
        let mut c = a.recip();
        out.push(c.clone());
        for j in 1..=k {
            let j_real = Real::from_u64(j as u64, bits);
            c = -(c * &j_real / (&a + &j_real));
            out.push(c.clone());
        }
        Ok(out)
    })
    .with_tag(Tag::KnownCm)
}

/// `ln x` on `(0, ∞)`.
pub fn log() -> FuncHandle {
    FuncHandle::new("log", Interval::positive_half_line(), |x, bits| {
        Ok(x.with_precision(bits).ln())
    })
    .with_derivative(|m, x, bits| {
        let x = x.with_precision(bits);
        if m == 0 {
            return Ok(x.ln());
        }
        // (-1)^(m-1) (m-1)! / x^m
        let v = factorial(u64::from(m - 1), bits) / x.powi(m as i32);
        Ok(if m % 2 == 0 { -v } else { v })
    })
}

/// `e^{-x}` on the real line, with `Δ^k f(a) = e^{-a} (e^{-1} - 1)^k`.
pub fn neg_exp() -> FuncHandle {
    FuncHandle::new("neg_exp", Interval::real_line(), |x, bits| {
        Ok((-x.with_precision(bits)).exp())
    })
    .with_derivative(|m, x, bits| {
        let v = (-x.with_precision(bits)).exp();
        Ok(if m % 2 == 1 { -v } else { v })
    })
    .with_closed_form_diff(|a, k, bits| {
        let base = (-a.with_precision(bits)).exp();
        let ratio = (-Real::one(bits)).exp() - Real::one(bits);
        let mut out = Vec::with_capacity(k + 1);
        let mut c = base;
        for _ in 0..=k {
            out.push(c.clone());
            c = c * &ratio;
        }
        Ok(out)
    })
    .with_tag(Tag::KnownCm)
}

/// `(c+1)^x` on the real line for `c > -1`, with `Δ^k f(a) = (c+1)^a c^k`.
pub fn power_base(c_text: &str) -> Result<FuncHandle> {
    let name = format!("power_base[c={c_text}]");
    let invalid = |message: String| Error::InvalidParameter {
        function: "power_base".into(),
        message,
    };
    let probe = Real::parse(c_text, 256).map_err(|e| invalid(e.to_string()))?;
    if probe <= Real::from_i64(-1, 256) {
        return Err(invalid(format!("c must exceed -1, got {c_text}")));
    }
    let sign = probe.signum();
    let c_owned = c_text.to_string();
    let parse_c = move |bits: u32| Real::parse(&c_owned, bits).expect("validated above");
    let eval_c = parse_c.clone();
    let deriv_c = parse_c.clone();
    let diff_c = parse_c;
    let mut handle = FuncHandle::new(name, Interval::real_line(), move |x, bits| {
        let base_log = (eval_c(bits) + Real::one(bits)).ln();
        Ok((x.with_precision(bits) * base_log).exp())
    })
    .with_derivative(move |m, x, bits| {
        // (ln(c+1))^m (c+1)^x
        let base_log = (deriv_c(bits) + Real::one(bits)).ln();
        let value = (x.with_precision(bits) * &base_log).exp();
        Ok(base_log.powi(m as i32) * value)
    })
    .with_closed_form_diff(move |a, k, bits| {
        let c = diff_c(bits);
        let base_log = (&c + &Real::one(bits)).ln();
        let mut term = (a.with_precision(bits) * base_log).exp();
        let mut out = Vec::with_capacity(k + 1);
        for _ in 0..=k {
            out.push(term.clone());
            term = term * &c;
        }
        Ok(out)
    });
    if sign <= 0 {
        handle = handle.with_tag(Tag::KnownCm);
    }
    if sign >= 0 {
        handle = handle.with_tag(Tag::KnownAm);
    }
    Ok(handle)
}

/// `sin(π x)` on `(0, ∞)`: every forward difference at integer anchors
/// vanishes, so its Newton series there is identically zero.
pub fn sin_pi() -> FuncHandle {
    FuncHandle::new("sin_pi", Interval::positive_half_line(), |x, bits| {
        Ok((Real::pi(bits) * x.with_precision(bits)).sin())
    })
    .with_tag(Tag::KnownCounterexample)
}

/// `-ln(x)/x` on `(0, ∞)`.
pub fn log_over_x_neg() -> FuncHandle {
    FuncHandle::new("log_over_x_neg", Interval::positive_half_line(), |x, bits| {
        let x = x.with_precision(bits);
        Ok(-(x.ln() / x))
    })
}

/// Wraps a parsed expression; no derivative or closed-form differences.
pub fn from_expr(ast: Expr, domain: Interval) -> FuncHandle {
    let name = format!("expr[{ast}]");
    FuncHandle::new(name, domain, move |x, bits| ast.evaluate(x, bits))
}
