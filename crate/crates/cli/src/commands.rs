use std::thread;

use newton_series::convexity::{classify, ClassifyOptions, GridSpec};
use newton_series::expr;
use newton_series::newton::{self, fit_slope, log_spaced, ratio_table, Certificate, EvalOptions, NewtonExpansion, RatioRow};
use newton_series::registry::{self, from_expr};
use newton_series::sigma::{difference_equation_check, SigmaRequest};
use newton_series::verify::{self, Suite, VerifyOptions};
use newton_series::{Error, FuncHandle, Interval, Real};
use serde_json::{json, Value};

use crate::output::{columns, float, json_real, opt_real, real, OutputRecord, Report};
use crate::{ClassifyArgs, Common, EvalArgs, ExpandArgs, FunctionArg, RatioArgs, SigmaArgs, VerifyArgs};

/// Why a command stopped early; decides the exit status.
#[derive(Debug)]
pub enum Failure {
    Usage(String),
    Evaluation(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Parse(_) | Error::UnknownFunction { .. } | Error::InvalidParameter { .. } | Error::InvalidArgument(_) => {
                Failure::Usage(e.to_string())
            }
            _ => Failure::Evaluation(e.to_string()),
        }
    }
}

type Outcome<T> = std::result::Result<T, Failure>;

fn resolve(function: &FunctionArg) -> Outcome<FuncHandle> {
    match (&function.name, &function.expr) {
        (Some(spec), None) => Ok(registry::lookup_spec(spec)?),
        (None, Some(text)) => {
            let ast = expr::parse(text).map_err(Error::from)?;
            Ok(from_expr(ast, Interval::positive_half_line()))
        }
        _ => Err(Failure::Usage("give exactly one of --fn and --expr".into())),
    }
}

fn record_function(record: &mut OutputRecord, function: &FunctionArg, handle: &FuncHandle) {
    record.input("fn", function.name.clone().map_or(Value::Null, Value::String));
    record.input("expr", function.expr.clone().map_or(Value::Null, Value::String));
    record.input("function", handle.name());
}

fn parse_real(flag: &str, text: &str, bits: u32) -> Outcome<Real> {
    Real::parse(text, bits).map_err(|e| Failure::Usage(format!("--{flag}: {e}")))
}

/// Runs `work` on every item on its own thread and returns the results in
/// input order.
fn in_parallel<T: Sync, R: Send>(items: &[T], work: impl Fn(&T) -> R + Sync) -> Vec<R> {
    if items.len() < 2 {
        return items.iter().map(&work).collect();
    }
    thread::scope(|scope| {
        let handles: Vec<_> = items.iter().map(|item| scope.spawn(|| work(item))).collect();
        handles.into_iter().map(|h| h.join().expect("worker thread panicked")).collect()
    })
}

/// The serialized (snake_case) name of a unit enum variant.
fn snake_name(value: &impl serde::Serialize) -> String {
    serde_json::to_value(value)
        .ok()
        .and_then(|v| v.as_str().map(String::from))
        .unwrap_or_default()
}

fn basis_label(anchor: &str, k: usize) -> String {
    match anchor.strip_prefix('-') {
        Some(rest) => format!("C(x+{rest},{k})"),
        None if anchor == "0" => format!("C(x,{k})"),
        None => format!("C(x-{anchor},{k})"),
    }
}

pub fn expand(args: &ExpandArgs) -> Outcome<Report> {
    let Common { prec, .. } = args.common;
    let f = resolve(&args.function)?;
    let anchor = parse_real("anchor", &args.anchor, prec)?;
    let exp = newton::expand(&f, &anchor, args.terms, prec)?;

    let mut record = OutputRecord::new("expand", prec);
    record_function(&mut record, &args.function, &f);
    record.input("anchor", args.anchor.clone());
    record.input("terms", args.terms);
    if exp.identically_zero_series {
        record.status = "identically_zero_series".into();
    }
    let coefficients: Vec<Value> = (0..=exp.order())
        .map(|k| {
            json!({
                "k": k,
                "delta": real(exp.coefficient(k), prec),
                "error_bound": real(exp.table.error(k), prec),
                "basis": basis_label(&args.anchor, k),
            })
        })
        .collect();
    record.result = json!({
        "coefficients": coefficients,
        "source": exp.table.source,
        "identically_zero_series": exp.identically_zero_series,
        "cross_check": exp.cross_check,
        "domain": exp.domain.to_string(),
    });

    let mut report = Report::new(record, vec!["k", "delta", "error_bound", "basis"]);
    for k in 0..=exp.order() {
        report.rows.push(vec![
            k.to_string(),
            real(exp.coefficient(k), prec),
            real(exp.table.error(k), prec),
            basis_label(&args.anchor, k),
        ]);
    }
    report.line(format!("function  {}", f.name()));
    report.line(format!("anchor    {}", args.anchor));
    report.line(format!("source    {:?}", exp.table.source));
    if let Some(c) = &exp.cross_check {
        report.line(format!(
            "cross-check against numeric differences: {} orders, max |difference| {:e}",
            c.orders_checked, c.max_abs_difference
        ));
    }
    if exp.identically_zero_series {
        report.line("note: every coefficient is zero to working precision, so the series sums to 0 and does not represent this function between the nodes");
        eprintln!("warning: `{}` has an identically zero Newton series at {}", f.name(), args.anchor);
    }
    let rows: Vec<Vec<String>> = report.rows.iter().map(|r| vec![r[0].clone(), r[1].clone(), r[3].clone()]).collect();
    report.text.extend(columns(&["k", "delta^k f(a)", "basis"], &rows));
    Ok(report)
}

fn eval_point(exp: &NewtonExpansion, x: &Real, options: &EvalOptions) -> Outcome<newton::EvalReport> {
    Ok(newton::eval(exp, x, options)?)
}

pub fn eval(args: &EvalArgs) -> Outcome<Report> {
    let Common { prec, .. } = args.common;
    let f = resolve(&args.function)?;
    let anchor = parse_real("anchor", &args.anchor, prec)?;
    let xs: Vec<Real> = args.x.iter().map(|x| parse_real("x", x, prec)).collect::<Outcome<_>>()?;
    let b = args.b.as_deref().map(|b| parse_real("b", b, prec)).transpose()?;
    if args.max_terms == 0 {
        return Err(Failure::Usage("--max-terms must be positive".into()));
    }
    let certificate = args.q.map(|q| Certificate { q, b: b.clone() });
    let options = EvalOptions {
        tolerance: args.tol,
        max_terms: args.max_terms,
        certificate,
    };
    let exp = newton::expand(&f, &anchor, args.max_terms - 1, prec)?;
    let results = in_parallel(&xs, |x| eval_point(&exp, x, &options));

    let mut record = OutputRecord::new("eval", prec);
    record_function(&mut record, &args.function, &f);
    record.input("anchor", args.anchor.clone());
    record.input("x", args.x.clone());
    record.input("tol", args.tol);
    record.input("max_terms", args.max_terms);
    record.input("b", args.b.clone().map_or(Value::Null, Value::String));
    record.input("q", args.q.map_or(Value::Null, |q| json!(q)));

    let mut points = Vec::new();
    let mut rows = Vec::new();
    let mut text = Vec::new();
    for (x_text, result) in args.x.iter().zip(results) {
        let rep = result?;
        points.push(json!({
            "x": x_text,
            "value": real(&rep.value, prec),
            "terms_used": rep.terms_used,
            "status": rep.status.to_string(),
            "remainder_bound": json_real(rep.remainder_bound.as_ref(), prec),
            "apriori_bound": json_real(rep.apriori_bound.as_ref(), prec),
            "b_used": json_real(rep.b_used.as_ref(), prec),
            "q": rep.q,
            "rounding_error": real(&rep.rounding_error, prec),
            "identically_zero_series": rep.identically_zero_series,
            "certificate_rejected": rep.certificate_rejected,
        }));
        rows.push(vec![
            x_text.clone(),
            real(&rep.value, prec),
            rep.terms_used.to_string(),
            rep.status.to_string(),
            opt_real(rep.remainder_bound.as_ref(), prec),
            opt_real(rep.apriori_bound.as_ref(), prec),
            opt_real(rep.b_used.as_ref(), prec),
            rep.q.map_or_else(String::new, |q| q.to_string()),
            real(&rep.rounding_error, prec),
            rep.identically_zero_series.to_string(),
            rep.certificate_rejected.to_string(),
        ]);
        text.push(format!("x = {x_text}"));
        text.push(format!("  value            {}", real(&rep.value, prec)));
        text.push(format!("  status           {}", rep.status));
        text.push(format!("  terms_used       {}", rep.terms_used));
        text.push(format!(
            "  remainder_bound  {}",
            rep.remainder_bound.as_ref().map_or("none".into(), |v| real(v, prec))
        ));
        if let Some(b) = &rep.b_used {
            text.push(format!("  b_used           {}", real(b, prec)));
        }
        if rep.certificate_rejected {
            text.push("  note: a coefficient contradicted the supplied certificate; no bound is claimed".into());
        }
        if rep.identically_zero_series {
            text.push("  note: the Newton series of this function is identically zero".into());
        }
    }
    if let [single] = points.as_slice() {
        record.status = single["status"].as_str().unwrap_or("ok").to_string();
    }
    record.result = json!({ "points": points });
    let mut report = Report::new(
        record,
        vec![
            "x",
            "value",
            "terms_used",
            "status",
            "remainder_bound",
            "apriori_bound",
            "b_used",
            "q",
            "rounding_error",
            "identically_zero_series",
            "certificate_rejected",
        ],
    );
    report.rows = rows;
    report.text = text;
    Ok(report)
}

pub fn sigma(args: &SigmaArgs) -> Outcome<Report> {
    let Common { prec, .. } = args.common;
    let g = resolve(&args.function)?;
    let xs: Vec<Real> = args.x.iter().map(|x| parse_real("x", x, prec)).collect::<Outcome<_>>()?;
    if args.max_n < 2 {
        return Err(Failure::Usage("--max-n must be at least 2".into()));
    }
    let results = in_parallel(&xs, |x| {
        let req = SigmaRequest {
            g: g.clone(),
            p: args.p,
            x: x.clone(),
            tolerance: args.tol,
            n_max: args.max_n,
            extrapolate: args.extrapolate,
            precision: prec,
        };
        difference_equation_check(&req)
    });

    let mut record = OutputRecord::new("sigma", prec);
    record_function(&mut record, &args.function, &g);
    record.input("x", args.x.clone());
    record.input("p", args.p.map_or(Value::Null, |p| json!(p)));
    record.input("tol", args.tol);
    record.input("max_n", args.max_n);
    record.input("extrapolate", args.extrapolate);

    let mut points = Vec::new();
    let mut rows = Vec::new();
    let mut text = Vec::new();
    for (x_text, result) in args.x.iter().zip(results) {
        let check = result?;
        let s = &check.at_x;
        points.push(json!({
            "x": x_text,
            "value": real(&s.value, prec),
            "p_used": s.p_used,
            "p_min": s.p_min,
            "n_final": s.n_final,
            "successive_delta": s.successive_delta,
            "status": s.status,
            "empirical_rate": s.empirical_rate,
            "extrapolated": json_real(s.extrapolated.as_ref(), prec),
            "normalization_residual": s.normalization_residual,
            "difference_residual": check.residual,
            "schedule": s.schedule,
            "dp_evidence": s.dp_evidence,
        }));
        rows.push(vec![
            x_text.clone(),
            real(&s.value, prec),
            s.p_used.to_string(),
            s.p_min.map_or_else(String::new, |p| p.to_string()),
            s.n_final.to_string(),
            float(Some(s.successive_delta)),
            snake_name(&s.status),
            float(s.empirical_rate),
            opt_real(s.extrapolated.as_ref(), prec),
            float(s.normalization_residual),
            float(Some(check.residual)),
        ]);
        text.push(format!("x = {x_text}"));
        text.push(format!("  value                {}", real(&s.value, prec)));
        text.push(format!("  status               {}", snake_name(&s.status)));
        text.push(format!(
            "  p                    {}{}",
            s.p_used,
            s.p_min.map_or_else(String::new, |m| format!(" (smallest admissible {m})"))
        ));
        text.push(format!("  n_final              {}", s.n_final));
        text.push(format!("  successive_delta     {:e}", s.successive_delta));
        if let Some(rate) = s.empirical_rate {
            text.push(format!("  empirical_rate       {rate:.3}"));
        }
        if let Some(e) = &s.extrapolated {
            text.push(format!("  extrapolated         {}", real(e, prec)));
        }
        if let Some(n) = s.normalization_residual {
            text.push(format!("  sum at x=1           {n:e}"));
        }
        text.push(format!("  difference_residual  {:e}", check.residual));
    }
    record.result = json!({ "points": points });
    let mut report = Report::new(
        record,
        vec![
            "x",
            "value",
            "p_used",
            "p_min",
            "n_final",
            "successive_delta",
            "status",
            "empirical_rate",
            "extrapolated",
            "normalization_residual",
            "difference_residual",
        ],
    );
    report.rows = rows;
    report.text = text;
    Ok(report)
}

pub fn classify_cmd(args: &ClassifyArgs) -> Outcome<Report> {
    let Common { prec, .. } = args.common;
    let f = resolve(&args.function)?;
    let grid = GridSpec::parse(&args.grid)?;
    let options = ClassifyOptions {
        samples: grid.count,
        tolerance: args.tol,
        seed: args.seed,
        precision: prec,
        ..ClassifyOptions::default()
    };
    let sig = classify(&f, args.orders, &grid.window(), &options)?;

    let mut record = OutputRecord::new("classify", prec);
    record_function(&mut record, &args.function, &f);
    record.input("orders", args.orders);
    record.input("grid", args.grid.clone());
    record.input("tol", args.tol.map_or(Value::Null, |t| json!(t)));
    record.input("seed", args.seed);
    record.seed = Some(args.seed);
    let labels = sig.labels.names();
    record.status = if labels.is_empty() { "no_label" } else { "labelled" }.into();
    record.result = serde_json::to_value(&sig).map_err(|e| Failure::Evaluation(e.to_string()))?;
    record.result["pattern"] = json!(sig.pattern());
    record.result["label_names"] = json!(labels);

    let mut report = Report::new(record, vec!["p", "sign", "min_value", "max_value", "evaluated"]);
    for o in &sig.per_order {
        report.rows.push(vec![
            o.p.to_string(),
            o.sign.to_string(),
            float(Some(o.min_value)),
            float(Some(o.max_value)),
            o.evaluated.to_string(),
        ]);
    }
    report.line(format!("function  {}", f.name()));
    report.line(format!("window    {}  ({} samples, seed {:#x})", sig.window, sig.samples_per_order, sig.seed));
    report.line(format!("tolerance {:e}", sig.tolerance));
    report.line(format!("pattern   {}  (orders -1..={})", sig.pattern(), sig.orders_tested));
    report.line(format!(
        "labels    {}",
        if labels.is_empty() { "none".to_string() } else { labels.join(", ") }
    ));
    if sig.eventual {
        report.line("the window spans at least a factor of ten; read the signs as evidence for the eventual classes");
    }
    let rows = report.rows.clone();
    report.text.extend(columns(&["p", "sign", "min", "max", "evaluated"], &rows));
    let dp: Vec<String> = sig
        .dp_evidence
        .iter()
        .map(|e| format!("D^{}: {:?}", e.p, e.verdict))
        .collect();
    report.line(format!("D^p evidence (heuristic): {}", dp.join(", ")));
    Ok(report)
}

/// Every `n` up to 100, log-spaced beyond.
fn ratio_ns(n_max: u64) -> Vec<u64> {
    if n_max <= 100 {
        (1..=n_max).collect()
    } else {
        log_spaced(1, n_max, 60)
    }
}

pub fn ratio(args: &RatioArgs) -> Outcome<Report> {
    let Common { prec, .. } = args.common;
    if args.n_max == 0 {
        return Err(Failure::Usage("--n-max must be positive".into()));
    }
    let x = parse_real("x", &args.x, prec)?;
    let a = parse_real("a", &args.a, prec)?;
    let b = parse_real("b", &args.b, prec)?;
    let rows: Vec<RatioRow> = ratio_table(&x, &a, &b, &ratio_ns(args.n_max))?;
    let fit_from = (args.n_max / 100).max(1);
    let fitted: Vec<RatioRow> = rows.iter().filter(|r| r.n >= fit_from).cloned().collect();
    let slope = fit_slope(&fitted);

    let mut record = OutputRecord::new("ratio", prec);
    record.input("x", args.x.clone());
    record.input("a", args.a.clone());
    record.input("b", args.b.clone());
    record.input("n_max", args.n_max);
    if slope.is_none() {
        record.status = "no_slope".into();
    }
    let json_rows: Vec<Value> = rows
        .iter()
        .map(|r| json!({ "n": r.n, "ratio_log": real(&r.ratio_log, prec), "sign": r.sign }))
        .collect();
    record.result = json!({
        "rows": json_rows,
        "slope": slope,
        "fit_range": [fit_from, args.n_max],
        "expected_slope": -(&x - &b).to_f64(),
    });

    let mut report = Report::new(record, vec!["n", "ratio_log", "sign"]);
    for r in &rows {
        report.rows.push(vec![r.n.to_string(), real(&r.ratio_log, prec), r.sign.to_string()]);
    }
    let rows = report.rows.clone();
    report.text.extend(columns(&["n", "ln|ratio|", "sign"], &rows));
    report.line(match slope {
        Some(s) => format!("fitted slope over n in [{fit_from}, {}]: {s:.6}", args.n_max),
        None => "fitted slope: none (the ratio is exactly zero over the fit range)".to_string(),
    });
    Ok(report)
}

pub fn verify_cmd(args: &VerifyArgs) -> Outcome<(Report, bool)> {
    let suite: Suite = args.suite.parse()?;
    let options = VerifyOptions {
        inject_fault: args.inject_fault,
    };
    let outcomes = verify::run(suite, &options);
    let passed = verify::exit_code(&outcomes) == 0;

    let mut record = OutputRecord::new("verify", args.common.prec);
    record.input("suite", suite.to_string());
    record.input("inject_fault", args.inject_fault);
    record.status = if passed { "pass" } else { "fail" }.into();
    record.result = json!({ "criteria": outcomes });

    let mut report = Report::new(record, vec!["id", "title", "passed", "seconds", "details"]);
    for o in &outcomes {
        report.rows.push(vec![
            o.id.to_string(),
            o.title.to_string(),
            o.passed.to_string(),
            format!("{:.3}", o.seconds),
            o.details.join("; "),
        ]);
        report.line(o.line());
    }
    let count = outcomes.iter().filter(|o| o.passed).count();
    report.line(format!("{count} of {} criteria passed", outcomes.len()));
    Ok((report, passed))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn basis_labels() {
        assert_eq!(basis_label("1", 3), "C(x-1,3)");
        assert_eq!(basis_label("-2.5", 0), "C(x+2.5,0)");
        assert_eq!(basis_label("0", 2), "C(x,2)");
    }

    #[test]
    fn ratio_grid() {
        assert_eq!(ratio_ns(10), (1..=10).collect::<Vec<_>>());
        let ns = ratio_ns(10_000);
        assert_eq!((ns[0], *ns.last().unwrap()), (1, 10_000));
        assert!(ns.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn parallel_map_keeps_order() {
        let out = in_parallel(&[3, 1, 2], |v| v * 10);
        assert_eq!(out, vec![30, 10, 20]);
    }

    #[test]
    fn errors_split_into_usage_and_evaluation() {
        assert!(matches!(Failure::from(Error::invalid("x")), Failure::Usage(_)));
        assert!(matches!(Failure::from(Error::domain("x")), Failure::Evaluation(_)));
    }
}
