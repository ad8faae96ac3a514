//! Command-line front end. Every run prints one JSON document on stdout that
//! echoes the resolved configuration; diagnostics go to stderr.
//!
//! Exit codes: 0 when all checks pass, 1 when the requested evidence of a
//! violation was produced, 2 on configuration or numerical failure.

use std::fs::File;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;
use serde_json::{json, Value};

use crate::criterion::{certify_sign, counterexample_from_criterion, criterion_value, CriterionFunction, Verdict};
use crate::dominance::{
    build_curve, compare, monotonicity_audit, verify_inequality, CurveOptions, CurveStatus, DominanceError, Relation,
};
use crate::fuzz::{amgm_obstruction_check, check_lemma_rootcounts, fuzz_inequality, FuzzConfig, FuzzError, Sampler};
use crate::index_set::IndexSet;
use crate::sympoly::Point;

pub const EXIT_PASS: i32 = 0;
pub const EXIT_EVIDENCE: i32 = 1;
pub const EXIT_FAILURE: i32 = 2;

#[derive(Debug, Parser, Serialize)]
#[command(name = "symlog", version, about = "Coefficient dominance curves and sum inequalities for positive vectors")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand, Serialize)]
#[serde(tag = "subcommand", rename_all = "kebab-case")]
pub enum Command {
    /// Compare E_k(a) with E_k(b) and test sum f(a) <= sum f(b).
    Verify(VerifyArgs),
    /// Build a monotone curve from a to b and audit it.
    Curve(CurveArgs),
    /// Certify the sign of the differential criterion on a grid.
    Criterion(CriterionArgs),
    /// Construct a pair violating the inequality where the criterion is positive.
    Counterexample(CounterexampleArgs),
    /// Random falsification campaign for the inequality.
    Fuzz(FuzzArgs),
    /// Root-location audits for perturbed products and the all-equal obstruction.
    Lemmas(LemmasArgs),
    /// Check that criterion evidence and inequality evidence agree.
    Iff(IffArgs),
}

fn parse_function(s: &str) -> Result<String, String> {
    CriterionFunction::parse(s).map(|_| s.to_string()).map_err(|e| e.to_string())
}

#[derive(Debug, Args, Serialize)]
pub struct VerifyArgs {
    /// Dimension; checked against `--a` and `--b` when given.
    #[arg(long)]
    pub n: Option<usize>,
    /// Comma-separated positive entries of the start point.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true, required = true)]
    pub a: Vec<f64>,
    /// Comma-separated positive entries of the end point.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true, required = true)]
    pub b: Vec<f64>,
    /// `log2` or `pow:<p>`.
    #[arg(long, default_value = "log2", value_parser = parse_function)]
    pub f: String,
}

#[derive(Debug, Args, Serialize)]
pub struct CurveArgs {
    /// Dimension; checked against `--a` and `--b` when given.
    #[arg(long)]
    pub n: Option<usize>,
    /// Comma-separated positive entries of the start point.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true, required = true)]
    pub a: Vec<f64>,
    /// Comma-separated positive entries of the end point.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true, required = true)]
    pub b: Vec<f64>,
    #[arg(long, default_value = "log2", value_parser = parse_function)]
    pub f: String,
    /// Write every accepted step to this CSV file.
    #[arg(long)]
    pub csv: Option<PathBuf>,
    /// Local error tolerance of the integrator.
    #[arg(long, default_value_t = 1e-10)]
    pub tol: f64,
    /// Smallest admissible root gap (default `1e-7 (1 + max entry)`).
    #[arg(long)]
    pub min_gap: Option<f64>,
}

#[derive(Debug, Args, Serialize)]
pub struct CriterionArgs {
    #[arg(long, default_value = "log2", value_parser = parse_function)]
    pub f: String,
    #[arg(long)]
    pub n: usize,
    /// Comma-separated indices, e.g. `1,2`.
    #[arg(long = "s", visible_alias = "S")]
    pub s: IndexSet,
    #[arg(long, default_value_t = 1e-2)]
    pub lo: f64,
    #[arg(long, default_value_t = 1e2)]
    pub hi: f64,
    /// Number of log-spaced grid points on `[lo, hi]`.
    #[arg(long, default_value_t = 1024)]
    pub grid: usize,
}

#[derive(Debug, Args, Serialize)]
pub struct CounterexampleArgs {
    #[arg(long, default_value = "log2", value_parser = parse_function)]
    pub f: String,
    #[arg(long)]
    pub n: usize,
    /// Index of the coefficient that grows.
    #[arg(long)]
    pub k: usize,
    /// Centre of the construction; defaults to 1 when the criterion is
    /// positive there, else to the grid maximizer on `[lo, hi]`.
    #[arg(long)]
    pub x_star: Option<f64>,
    /// Initial coefficient added to `x^k`.
    #[arg(long, default_value_t = 1.0)]
    pub t: f64,
    #[arg(long, default_value_t = 1e-2)]
    pub lo: f64,
    #[arg(long, default_value_t = 1e2)]
    pub hi: f64,
}

#[derive(Debug, Args, Serialize)]
pub struct FuzzArgs {
    #[arg(long, default_value = "log2", value_parser = parse_function)]
    pub f: String,
    #[arg(long)]
    pub n: usize,
    #[arg(long = "s", visible_alias = "S")]
    pub s: IndexSet,
    #[arg(long, default_value_t = 1000)]
    pub trials: u64,
    #[arg(long, env = "SYMLOG_SEED", default_value_t = 0)]
    pub seed: u64,
    /// `forward-curve` or `rejection-filter`.
    #[arg(long, default_value = "forward-curve")]
    pub sampler: Sampler,
    #[arg(long, default_value_t = 1e-2)]
    pub scale_lo: f64,
    #[arg(long, default_value_t = 1e2)]
    pub scale_hi: f64,
    /// Worker threads; 0 uses all cores.
    #[arg(long, default_value_t = 0)]
    pub jobs: usize,
    /// Relative margin below which a pair counts as a violation.
    #[arg(long, default_value_t = 1e-9)]
    pub tolerance: f64,
    /// Write violations to this CSV file.
    #[arg(long)]
    pub csv: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
pub struct LemmasArgs {
    #[arg(long)]
    pub n: usize,
    #[arg(long, default_value_t = 10_000)]
    pub trials: u64,
    #[arg(long, env = "SYMLOG_SEED", default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 1e-2)]
    pub scale_lo: f64,
    #[arg(long, default_value_t = 1e2)]
    pub scale_hi: f64,
}

#[derive(Debug, Args, Serialize)]
pub struct IffArgs {
    #[arg(long, default_value = "log2", value_parser = parse_function)]
    pub f: String,
    #[arg(long)]
    pub n: usize,
    #[arg(long = "s", visible_alias = "S")]
    pub s: IndexSet,
    #[arg(long, default_value_t = 1e-2)]
    pub lo: f64,
    #[arg(long, default_value_t = 1e2)]
    pub hi: f64,
    /// Number of log-spaced grid points on `[lo, hi]`.
    #[arg(long, default_value_t = 1024)]
    pub grid: usize,
    #[arg(long, default_value_t = 1000)]
    pub trials: u64,
    #[arg(long, env = "SYMLOG_SEED", default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 0)]
    pub jobs: usize,
}

/// Outcome of one run: the exit code and the JSON `result` member.
struct Outcome {
    code: i32,
    result: Value,
}

#[derive(Debug, thiserror::Error)]
enum RunError {
    #[error("{0}")]
    Config(String),
    #[error(transparent)]
    Dominance(#[from] DominanceError),
    #[error(transparent)]
    Criterion(#[from] crate::criterion::CriterionError),
    #[error(transparent)]
    Fuzz(#[from] FuzzError),
    #[error(transparent)]
    Point(#[from] crate::sympoly::SymPolyError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl RunError {
    fn kind(&self) -> &'static str {
        match self {
            RunError::Config(_) => "config",
            RunError::Dominance(DominanceError::NotDominating(_)) => "not-dominating",
            RunError::Dominance(DominanceError::UnsupportedN(_)) => "unsupported-n",
            RunError::Dominance(DominanceError::Infeasible(_)) => "infeasible",
            RunError::Dominance(_) => "dominance",
            RunError::Criterion(crate::criterion::CriterionError::CriterionNotViolated { .. }) => {
                "criterion-not-violated"
            }
            RunError::Criterion(_) => "criterion",
            RunError::Fuzz(FuzzError::SamplerStarved { .. }) => "sampler-starved",
            RunError::Fuzz(_) => "fuzz",
            RunError::Point(_) => "point",
            RunError::Io(_) | RunError::Csv(_) => "io",
        }
    }
}

fn function(text: &str) -> Result<CriterionFunction, RunError> {
    Ok(CriterionFunction::parse(text)?)
}

fn point(name: &str, v: &[f64], n: Option<usize>) -> Result<Point, RunError> {
    if let Some(n) = n {
        if v.len() != n {
            return Err(RunError::Config(format!("--{name} has {} entries but --n is {n}", v.len())));
        }
    }
    Ok(Point::from_unsorted(v.to_vec())?)
}

fn verify(args: &VerifyArgs) -> Result<Outcome, RunError> {
    let f = function(&args.f)?;
    let a = point("a", &args.a, args.n)?;
    let b = point("b", &args.b, args.n)?;
    let profile = compare(&a, &b)?;
    if profile.relation == Relation::Incomparable {
        return Err(DominanceError::NotDominating(Relation::Incomparable).into());
    }
    let verdict = verify_inequality(&a, &b, &f)?;
    let code = if verdict.holds { EXIT_PASS } else { EXIT_EVIDENCE };
    Ok(Outcome { code, result: json!({ "a": a, "b": b, "profile": profile, "verdict": verdict }) })
}

fn curve(args: &CurveArgs) -> Result<Outcome, RunError> {
    let f = function(&args.f)?;
    let a = point("a", &args.a, args.n)?;
    let b = point("b", &args.b, args.n)?;
    let opts = CurveOptions { tol: args.tol, min_gap: args.min_gap, objective: f.clone(), ..CurveOptions::default() };
    let trace = match build_curve(&a, &b, &opts) {
        Err(DominanceError::UnsupportedN(n)) => {
            return Ok(Outcome {
                code: EXIT_FAILURE,
                result: json!({
                    "status": "unsupported",
                    "comparability": "inconclusive",
                    "detail": format!("boundary starts are only constructed for n <= 4 (n = {n}); failure here says nothing about comparability"),
                }),
            });
        }
        other => other?,
    };
    if let Some(path) = &args.csv {
        trace.write_csv(File::create(path)?)?;
    }
    let audit = monotonicity_audit(&trace, &f)?;
    let code = match (&trace.status, audit.passed) {
        (CurveStatus::Completed, true) => EXIT_PASS,
        (CurveStatus::Completed, false) => EXIT_EVIDENCE,
        (CurveStatus::Aborted(_), _) => EXIT_FAILURE,
    };
    let comparability = match (&trace.status, a.n()) {
        (CurveStatus::Completed, _) => "established",
        (_, n) if n >= 5 => "inconclusive",
        _ => "not established",
    };
    let last = trace.last();
    Ok(Outcome {
        code,
        result: json!({
            "status": trace.status,
            "comparability": comparability,
            "s": trace.s,
            "phases": trace.phases,
            "samples": trace.samples.len(),
            "steps_accepted": trace.steps_accepted,
            "steps_rejected": trace.steps_rejected,
            "steps_throttled": trace.steps_throttled,
            "endpoint": last.y,
            "endpoint_error": trace.endpoint_error,
            "max_manifold_drift": trace.max_manifold_drift,
            "eta_start": trace.samples[0].eta,
            "eta_end": last.eta,
            "audit": audit,
        }),
    })
}

fn criterion(args: &CriterionArgs) -> Result<Outcome, RunError> {
    let f = function(&args.f)?;
    let certs = certify_sign(&f, args.n, args.s, args.lo, args.hi, args.grid)?;
    let holds = certs.iter().all(|c| c.verdict == Verdict::AllNonpositiveOnGrid);
    let code = if holds { EXIT_PASS } else { EXIT_EVIDENCE };
    Ok(Outcome { code, result: json!({ "criterion_holds_on_grid": holds, "certificates": certs }) })
}

fn resolve_x_star(f: &CriterionFunction, n: usize, k: usize, lo: f64, hi: f64) -> Result<f64, RunError> {
    if f.interval().contains(1.0) && criterion_value(f, n, k, 1.0)? > 0.0 {
        return Ok(1.0);
    }
    let cert = certify_sign(f, n, IndexSet::empty().with(k), lo, hi, 1024)?;
    Ok(cert[0].argmax)
}

fn counterexample(args: &CounterexampleArgs) -> Result<Outcome, RunError> {
    let f = function(&args.f)?;
    let x_star = match args.x_star {
        Some(x) => x,
        None => resolve_x_star(&f, args.n, args.k, args.lo, args.hi)?,
    };
    let ce = counterexample_from_criterion(&f, args.n, args.k, x_star, args.t)?;
    let profile = compare(&ce.a, &ce.b)?;
    Ok(Outcome { code: EXIT_EVIDENCE, result: json!({ "x_star": x_star, "counterexample": ce, "profile": profile }) })
}

fn fuzz_config(f: &str, n: usize, s: IndexSet, trials: u64, seed: u64) -> Result<FuzzConfig, RunError> {
    Ok(FuzzConfig::new(function(f)?, n, s, trials, seed))
}

fn fuzz(args: &FuzzArgs) -> Result<Outcome, RunError> {
    let mut cfg = fuzz_config(&args.f, args.n, args.s, args.trials, args.seed)?;
    cfg.sampler = args.sampler;
    cfg.scale = (args.scale_lo, args.scale_hi);
    cfg.jobs = args.jobs;
    cfg.tolerance = args.tolerance;
    let report = fuzz_inequality(&cfg)?;
    if let Some(path) = &args.csv {
        report.write_violations_csv(File::create(path)?)?;
    }
    let code = if report.violations.is_empty() { EXIT_PASS } else { EXIT_EVIDENCE };
    Ok(Outcome { code, result: serde_json::to_value(report).expect("report serializes") })
}

fn lemmas(args: &LemmasArgs) -> Result<Outcome, RunError> {
    let counts = check_lemma_rootcounts(args.n, args.trials, args.seed, (args.scale_lo, args.scale_hi))?;
    let obstructions = IndexSet::range(1, args.n)
        .nonempty_subsets()
        .into_iter()
        .filter(|s| *s != IndexSet::range(1, args.n))
        .map(|s| amgm_obstruction_check(args.n, s, args.trials, args.seed))
        .collect::<Result<Vec<_>, _>>()?;
    let found = counts.total_violations + obstructions.iter().map(|o| o.all_real_found).sum::<u64>();
    let code = if found == 0 { EXIT_PASS } else { EXIT_EVIDENCE };
    Ok(Outcome { code, result: json!({ "root_counts": counts, "obstructions": obstructions }) })
}

fn iff(args: &IffArgs) -> Result<Outcome, RunError> {
    let f = function(&args.f)?;
    let certs = certify_sign(&f, args.n, args.s, args.lo, args.hi, args.grid)?;
    let criterion_holds = certs.iter().all(|c| c.verdict == Verdict::AllNonpositiveOnGrid);

    let mut counterexamples = Vec::new();
    for cert in certs.iter().filter(|c| c.verdict == Verdict::PositiveFound) {
        match counterexample_from_criterion(&f, args.n, cert.k, cert.argmax, 1.0) {
            Ok(ce) => counterexamples.push(json!(ce)),
            Err(e) => eprintln!("no counterexample for k = {}: {e}", cert.k),
        }
    }
    // With 0 in S the rejection sampler fixes only the product, so it can reach S only
    // when every other index is free; otherwise the criterion side is the sole evidence.
    let reachable = !args.s.contains(0) || IndexSet::range(1, args.n).is_subset(args.s);
    let report = if reachable {
        let mut cfg = FuzzConfig::new(f, args.n, args.s, args.trials, args.seed);
        cfg.scale = (args.lo, args.hi);
        cfg.jobs = args.jobs;
        if args.s.contains(0) {
            cfg.sampler = Sampler::RejectionFilter;
        }
        Some(fuzz_inequality(&cfg)?)
    } else {
        None
    };
    let fuzz_clean = report.as_ref().is_none_or(|r| r.violations.is_empty());
    let inequality_holds = fuzz_clean && counterexamples.is_empty();
    let agree = criterion_holds == inequality_holds;
    let code = match (agree, inequality_holds) {
        (true, true) => EXIT_PASS,
        (true, false) => EXIT_EVIDENCE,
        (false, _) => EXIT_FAILURE,
    };
    Ok(Outcome {
        code,
        result: json!({
            "agree": agree,
            "criterion_holds_on_grid": criterion_holds,
            "inequality_holds_on_samples": inequality_holds,
            "certificates": certs,
            "counterexamples": counterexamples,
            "fuzz": report,
            "fuzz_skipped": !reachable,
        }),
    })
}

fn execute(command: &Command) -> Result<Outcome, RunError> {
    match command {
        Command::Verify(a) => verify(a),
        Command::Curve(a) => curve(a),
        Command::Criterion(a) => criterion(a),
        Command::Counterexample(a) => counterexample(a),
        Command::Fuzz(a) => fuzz(a),
        Command::Lemmas(a) => lemmas(a),
        Command::Iff(a) => iff(a),
    }
}

/// Clap's error paragraph on one line, without the `error: ` prefix or usage block.
fn usage_message(e: &clap::Error) -> String {
    let text = e.to_string();
    let head = text.split("\n\n").next().unwrap_or_default();
    let joined = head.split_whitespace().collect::<Vec<_>>().join(" ");
    joined.strip_prefix("error: ").unwrap_or(&joined).to_string()
}

/// Parses `args` (including the program name) and runs the subcommand.
/// Returns the exit code and the JSON document for stdout; help and version
/// requests return their text instead.
pub fn run<I, T>(args: I) -> (i32, String)
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                return (EXIT_PASS, e.to_string());
            }
            eprintln!("{e}");
            let doc = json!({
                "config": Value::Null,
                "error": { "kind": "usage", "message": usage_message(&e) },
                "exit_code": EXIT_FAILURE,
            });
            return (EXIT_FAILURE, serde_json::to_string_pretty(&doc).expect("document serializes"));
        }
    };
    let config = serde_json::to_value(&cli.command).expect("config serializes");
    let doc = match execute(&cli.command) {
        Ok(outcome) => json!({ "config": config, "result": outcome.result, "exit_code": outcome.code }),
        Err(e) => {
            eprintln!("error: {e}");
            json!({
                "config": config,
                "error": { "kind": e.kind(), "message": e.to_string() },
                "exit_code": EXIT_FAILURE,
            })
        }
    };
    let code = doc["exit_code"].as_i64().expect("exit code present") as i32;
    (code, serde_json::to_string_pretty(&doc).expect("document serializes"))
}
