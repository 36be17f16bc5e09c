//! `newton-series`: Newton series, convexity signatures and indefinite sums
//! from the command line.
//!
//! Exit status: 0 on success (divergence and mixed signs are findings, not
//! errors), 1 when `verify` finds a failing criterion, 2 on usage errors,
//! 3 on domain or evaluation errors.

mod commands;
mod output;

use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use newton_series::convexity::DEFAULT_SEED;

use commands::Failure;
use output::Format;

#[derive(Parser)]
#[command(name = "newton-series", version, about = "Newton series, higher-order convexity and principal indefinite sums")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Tabulate the Newton coefficients Δ^k f(a), k = 0..=K.
    Expand(ExpandArgs),
    /// Sum the Newton series at one or more points.
    Eval(EvalArgs),
    /// Principal indefinite sum Σg(x) as the limit of f_n^p[g](x).
    Sigma(SigmaArgs),
    /// Signs of divided differences by order, with monotonicity labels.
    Classify(ClassifyArgs),
    /// ln |(x-a)^(n falling) / (b-a)^(n falling)| and its log-log slope.
    Ratio(RatioArgs),
    /// Run the acceptance criteria and print one PASS/FAIL line each.
    Verify(VerifyArgs),
}

#[derive(Args, Debug)]
#[group(required = true, multiple = false)]
pub struct FunctionArg {
    /// Built-in function, optionally parameterised: recip, log, neg_exp,
    /// power_base[c=0.5], sin_pi, log_over_x_neg.
    #[arg(long = "fn", value_name = "NAME")]
    pub name: Option<String>,
    /// Expression in x, e.g. "-ln(x)/x"; its domain is taken as (0, inf).
    #[arg(long, value_name = "EXPR", allow_hyphen_values = true)]
    pub expr: Option<String>,
}

#[derive(Args, Debug, Clone, Copy)]
pub struct Common {
    /// Working precision in bits.
    #[arg(long, default_value_t = 128, value_parser = clap::value_parser!(u32).range(53..=16384))]
    pub prec: u32,
    #[arg(long, value_enum, default_value_t = Format::Text)]
    pub format: Format,
}

#[derive(Args, Debug)]
pub struct ExpandArgs {
    #[command(flatten)]
    pub function: FunctionArg,
    #[arg(long, allow_hyphen_values = true)]
    pub anchor: String,
    /// Highest order K.
    #[arg(long)]
    pub terms: usize,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Args, Debug)]
pub struct EvalArgs {
    #[command(flatten)]
    pub function: FunctionArg,
    #[arg(long, allow_hyphen_values = true)]
    pub anchor: String,
    /// Evaluation points; repeat the flag or separate with commas.
    #[arg(long, required = true, value_delimiter = ',', allow_hyphen_values = true)]
    pub x: Vec<String>,
    #[arg(long, default_value_t = 1e-12)]
    pub tol: f64,
    #[arg(long, default_value_t = 100_000)]
    pub max_terms: usize,
    /// Comparison point below min(a, x); needs --q.
    #[arg(long, requires = "q", allow_hyphen_values = true)]
    pub b: Option<String>,
    /// Complete-monotonicity certificate order; enables the rigorous bound.
    #[arg(long)]
    pub q: Option<usize>,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Args, Debug)]
pub struct SigmaArgs {
    #[command(flatten)]
    pub function: FunctionArg,
    #[arg(long, required = true, value_delimiter = ',')]
    pub x: Vec<String>,
    /// Order p of f_n^p; chosen from D^p evidence when omitted.
    #[arg(long)]
    pub p: Option<usize>,
    #[arg(long, default_value_t = 1e-8)]
    pub tol: f64,
    #[arg(long, default_value_t = 1 << 20)]
    pub max_n: u64,
    /// Also report a Richardson-extrapolated value.
    #[arg(long)]
    pub extrapolate: bool,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Args, Debug)]
pub struct ClassifyArgs {
    #[command(flatten)]
    pub function: FunctionArg,
    /// Highest order P; orders -1..=P are tested.
    #[arg(long, default_value_t = 8)]
    pub orders: usize,
    /// START:END:COUNT sampling grid.
    #[arg(long, default_value = "1:50:200")]
    pub grid: String,
    /// Absolute sign tolerance; scaled from the precision when omitted.
    #[arg(long)]
    pub tol: Option<f64>,
    #[arg(long, default_value_t = DEFAULT_SEED)]
    pub seed: u64,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Args, Debug)]
pub struct RatioArgs {
    #[arg(long, allow_hyphen_values = true)]
    pub x: String,
    #[arg(long, allow_hyphen_values = true)]
    pub a: String,
    #[arg(long, allow_hyphen_values = true)]
    pub b: String,
    #[arg(long, default_value_t = 10_000)]
    pub n_max: u64,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Args, Debug)]
pub struct VerifyArgs {
    /// all, newton, sigma, classify or oracle.
    #[arg(long, default_value = "all")]
    pub suite: String,
    /// Perturb one closed-form coefficient of 1/x to check that the suite fails.
    #[arg(long, hide = true)]
    pub inject_fault: bool,
    #[command(flatten)]
    pub common: Common,
}

fn finish(result: Result<output::Report, Failure>, format: Format) -> ExitCode {
    match result {
        Ok(report) => emit(&report, format, ExitCode::SUCCESS),
        Err(failure) => fail(failure),
    }
}

fn emit(report: &output::Report, format: Format, code: ExitCode) -> ExitCode {
    match report.emit(format) {
        Ok(()) => code,
        // A closed pipe (e.g. `| head`) is the reader's choice, not a failure.
        Err(e) if e.kind() == std::io::ErrorKind::BrokenPipe => code,
        Err(e) => {
            eprintln!("error: cannot write output: {e}");
            ExitCode::from(3)
        }
    }
}

fn fail(failure: Failure) -> ExitCode {
    match failure {
        Failure::Usage(msg) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Failure::Evaluation(msg) => {
            eprintln!("error: {msg}");
            ExitCode::from(3)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match &cli.command {
        Command::Expand(args) => finish(commands::expand(args), args.common.format),
        Command::Eval(args) => finish(commands::eval(args), args.common.format),
        Command::Sigma(args) => finish(commands::sigma(args), args.common.format),
        Command::Classify(args) => finish(commands::classify_cmd(args), args.common.format),
        Command::Ratio(args) => finish(commands::ratio(args), args.common.format),
        Command::Verify(args) => match commands::verify_cmd(args) {
            Ok((report, passed)) => emit(
                &report,
                args.common.format,
                if passed { ExitCode::SUCCESS } else { ExitCode::from(1) },
            ),
            Err(failure) => fail(failure),
        },
    }
}
