//! Command-line front end.
//!
//! Exit codes: 0 success, 1 I/O failure, 2 parse error, 3 bad options,
//! 4 reduction precondition violated, 5 the requested run reached ⊤.

use std::ffi::OsString;
use std::fs;
use std::io::{self, Read, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde_json::{json, Map, Value};

use crate::explorer::{
    expected_partial, explore, lexp_semidecide, termination_partial, uexp_refute, BoundReport, Budget, ExploreOptions,
    ExplorerError, LexpVerdict, UexpVerdict,
};
use crate::rational::{parse_rational, to_decimal_string, to_fraction_string, Rational};
use crate::reductions::{
    reduce_ast_to_exp, reduce_uh_to_ast, reduce_uh_to_uexp, ReductionError, ReductionKind, ReductionOutput,
};
use crate::sampler::{estimate_expectation, estimate_termination, SampleConfig, RNG_ALGORITHM};
use crate::semantics::{run as run_steps, ChoiceString, State, StepOutcome};
use crate::syntax::{parse, pretty_print, pretty_print_wrapped, Program, Var, DEFAULT_WIDTH};

pub const SCHEMA_VERSION: &str = "1";

pub const EXIT_OK: i32 = 0;
pub const EXIT_IO: i32 = 1;
pub const EXIT_PARSE: i32 = 2;
pub const EXIT_OPTIONS: i32 = 3;
pub const EXIT_PRECONDITION: i32 = 4;
pub const EXIT_TOP: i32 = 5;

const DECIMAL_DIGITS: usize = 20;

#[derive(Debug, Parser)]
#[command(name = "pgcl", version, about = "Analyze probabilistic guarded-command programs")]
struct Cli {
    /// Machine-readable JSON on stdout.
    #[arg(long, global = true)]
    json: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Parse and pretty-print a program.
    Parse {
        file: PathBuf,
        /// Line width for the human-readable layout.
        #[arg(long, default_value_t = DEFAULT_WIDTH)]
        width: usize,
    },
    /// Execute exactly K steps along a fixed choice string.
    Run {
        file: PathBuf,
        /// Choice string over L and R; empty by default.
        #[arg(long, default_value = "")]
        choices: String,
        #[arg(long)]
        max_steps: u64,
    },
    /// Lower bound on the expected final value of a variable.
    Expect {
        file: PathBuf,
        #[arg(long, value_parser = var_arg)]
        var: Var,
        #[command(flatten)]
        budget: BudgetArgs,
        #[command(flatten)]
        explore: ExploreArgs,
    },
    /// Bounds on the termination probability.
    Term {
        file: PathBuf,
        #[command(flatten)]
        budget: BudgetArgs,
        #[command(flatten)]
        explore: ExploreArgs,
    },
    /// Search for a witness that the expectation exceeds q.
    Lexp {
        file: PathBuf,
        #[arg(long, value_parser = var_arg)]
        var: Var,
        #[arg(long, value_parser = rational_arg)]
        q: Rational,
        #[command(flatten)]
        budget: BudgetArgs,
    },
    /// Search for a partial sum of at least q - delta.
    RefuteUexp {
        file: PathBuf,
        #[arg(long, value_parser = var_arg)]
        var: Var,
        #[arg(long, value_parser = rational_arg)]
        q: Rational,
        #[arg(long, value_parser = rational_arg)]
        delta: Rational,
        #[command(flatten)]
        budget: BudgetArgs,
    },
    /// Monte-Carlo estimate of an expectation or, without --var, of termination.
    Sample {
        file: PathBuf,
        #[arg(long, value_parser = var_arg)]
        var: Option<Var>,
        #[arg(short = 'n', default_value_t = 10_000, value_parser = clap::value_parser!(u64).range(1..))]
        n: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 10_000, value_parser = clap::value_parser!(u64).range(1..))]
        fuel: u64,
        #[arg(long, default_value_t = 1)]
        workers: usize,
    },
    /// Generate a reduction program.
    Reduce {
        file: PathBuf,
        #[arg(long, value_parser = kind_arg)]
        kind: ReductionKind,
        /// Output path; a JSON sidecar is written next to it as `<out>.json`.
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Debug, Args)]
struct BudgetArgs {
    /// Node budget for frontier exploration.
    #[arg(long, conflicts_with_all = ["y1", "y2"])]
    nodes: Option<u64>,
    /// Largest trace index of the double sum.
    #[arg(long, requires = "y2")]
    y1: Option<u64>,
    /// Largest step count of the double sum.
    #[arg(long, requires = "y1")]
    y2: Option<u64>,
}

const DEFAULT_NODES: u64 = 100_000;

impl BudgetArgs {
    fn budget(&self) -> Budget {
        match (self.nodes, self.y1, self.y2) {
            (_, Some(y1), Some(y2)) => Budget::Sums { y1, y2 },
            (nodes, _, _) => Budget::Nodes(nodes.unwrap_or(DEFAULT_NODES)),
        }
    }
}

#[derive(Debug, Args)]
struct ExploreArgs {
    /// Stop after this many complete layers.
    #[arg(long)]
    max_depth: Option<u64>,
    #[arg(long)]
    certify_divergence: bool,
    #[arg(long, default_value_t = 1)]
    workers: usize,
}

fn rational_arg(s: &str) -> Result<Rational, String> {
    parse_rational(s).map_err(|e| e.to_string())
}

fn var_arg(s: &str) -> Result<Var, String> {
    if Var::is_valid_name(s) {
        Ok(Var::new(s))
    } else {
        Err(format!("`{s}` is not a variable name"))
    }
}

fn kind_arg(s: &str) -> Result<ReductionKind, String> {
    s.parse()
}

/// A failure with its exit code.
#[derive(Debug)]
struct Failure {
    code: i32,
    message: String,
}

impl Failure {
    fn new(code: i32, message: impl Into<String>) -> Self {
        Failure { code, message: message.into() }
    }
}

impl From<ExplorerError> for Failure {
    fn from(e: ExplorerError) -> Self {
        Failure::new(EXIT_OPTIONS, e.to_string())
    }
}

/// Output of a successful command: JSON body plus human-readable lines.
struct Report {
    json: Map<String, Value>,
    text: Vec<String>,
}

impl Report {
    fn new(command: &str) -> Self {
        let mut json = Map::new();
        json.insert("schema_version".into(), json!(SCHEMA_VERSION));
        json.insert("command".into(), json!(command));
        Report { json, text: Vec::new() }
    }

    fn put(&mut self, key: &str, value: Value) {
        self.json.insert(key.into(), value);
    }

    fn exact(&mut self, key: &str, value: &Rational) {
        self.put(key, json!(to_fraction_string(value)));
        self.text.push(format!(
            "{key}: {} (approximately {})",
            to_fraction_string(value),
            to_decimal_string(value, DECIMAL_DIGITS)
        ));
    }

    fn line(&mut self, text: impl Into<String>) {
        self.text.push(text.into());
    }
}

/// Entry point: parses `args` (including the program name) and returns the
/// exit code.
pub fn main_with(args: impl IntoIterator<Item = OsString>, out: &mut dyn Write, err: &mut dyn Write) -> i32 {
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => EXIT_OK,
                _ => EXIT_OPTIONS,
            };
            let rendered = e.render().to_string();
            let _ = if code == EXIT_OK { write!(out, "{rendered}") } else { write!(err, "{rendered}") };
            return code;
        }
    };
    let json = cli.json;
    match dispatch(cli.command) {
        Ok(report) => {
            let written = if json {
                serde_json::to_string_pretty(&Value::Object(report.json)).map(|s| writeln!(out, "{s}"))
            } else {
                Ok(report.text.iter().try_for_each(|l| writeln!(out, "{l}")))
            };
            match written {
                Ok(Ok(())) => EXIT_OK,
                _ => EXIT_IO,
            }
        }
        Err(Failure { code, message }) => {
            if json {
                let body = json!({ "schema_version": SCHEMA_VERSION, "error": message, "exit_code": code });
                let _ = writeln!(out, "{body}");
            }
            let _ = writeln!(err, "error: {message}");
            code
        }
    }
}

fn dispatch(command: Command) -> Result<Report, Failure> {
    match command {
        Command::Parse { file, width } => cmd_parse(&load(&file)?, width),
        Command::Run { file, choices, max_steps } => cmd_run(&load(&file)?, &choices, max_steps),
        Command::Expect { file, var, budget, explore } => cmd_expect(&load(&file)?, &var, &budget, &explore),
        Command::Term { file, budget, explore } => cmd_term(&load(&file)?, &budget, &explore),
        Command::Lexp { file, var, q, budget } => cmd_lexp(&load(&file)?, &var, &q, budget.budget()),
        Command::RefuteUexp { file, var, q, delta, budget } => {
            cmd_refute_uexp(&load(&file)?, &var, &q, &delta, budget.budget())
        }
        Command::Sample { file, var, n, seed, fuel, workers } => {
            let cfg = SampleConfig::new(n, seed, fuel).workers(workers);
            cmd_sample(&load(&file)?, var.as_ref(), &cfg)
        }
        Command::Reduce { file, kind, out } => cmd_reduce(&load(&file)?, kind, &out),
    }
}

/// Reads and parses a program; `-` reads standard input.
fn load(path: &Path) -> Result<Program, Failure> {
    let text = if path == Path::new("-") {
        let mut s = String::new();
        io::stdin().read_to_string(&mut s).map(|_| s)
    } else {
        fs::read_to_string(path)
    }
    .map_err(|e| Failure::new(EXIT_IO, format!("{}: {e}", path.display())))?;
    parse(&text).map_err(|e| Failure::new(EXIT_PARSE, format!("{}: {e}", path.display())))
}

fn cmd_parse(p: &Program, width: usize) -> Result<Report, Failure> {
    let mut r = Report::new("parse");
    r.put("program", json!(pretty_print(p)));
    r.put("vars", json!(p.vars().iter().map(|v| v.name().to_string()).collect::<Vec<_>>()));
    r.put("ordinary", json!(p.is_ordinary()));
    r.put("choices", json!(p.choice_count()));
    r.put("size", json!(p.size()));
    r.line(pretty_print_wrapped(p, width));
    Ok(r)
}

fn cmd_run(p: &Program, choices: &str, k: u64) -> Result<Report, Failure> {
    let w: ChoiceString = choices.parse().map_err(|e| Failure::new(EXIT_OPTIONS, format!("--choices: {e}")))?;
    let s = match run_steps(&State::initial(p), k, &w) {
        StepOutcome::Next(s) => s,
        StepOutcome::Top => {
            return Err(Failure::new(
                EXIT_TOP,
                format!(
                    "running {k} steps along `{}` gets stuck (⊤)",
                    if w.is_empty() { "ε".to_string() } else { w.to_string() }
                ),
            ))
        }
    };
    let mut r = Report::new("run");
    r.put("steps", json!(k));
    r.put("control", json!(s.control.to_text()));
    r.line(format!("control: {}", s.control.to_text()));
    let mut env = Map::new();
    for v in p.vars() {
        let value = s.env.get(&v);
        r.line(format!("{v} = {}", to_fraction_string(&value)));
        env.insert(v.name().to_string(), json!(to_fraction_string(&value)));
    }
    r.put("env", Value::Object(env));
    r.exact("prob", &s.prob);
    r.put("trace", json!(s.trace.to_string()));
    r.line(format!("trace: {}", if s.trace.is_empty() { "ε".to_string() } else { s.trace.to_string() }));
    r.put("terminal", json!(s.is_terminal()));
    Ok(r)
}

fn explore_options(nodes: u64, args: &ExploreArgs) -> ExploreOptions {
    let mut opts = ExploreOptions::with_nodes(nodes).certify(args.certify_divergence).workers(args.workers);
    if let Some(d) = args.max_depth {
        opts = opts.max_depth(d);
    }
    opts
}

fn put_masses(r: &mut Report, report: &BoundReport) {
    r.exact("terminated_mass", &report.terminated_mass);
    r.exact("live_mass", &report.live_mass);
    r.exact("divergent_mass", &report.divergent_mass);
    let b = &report.budget_used;
    let cover = b.coverage().map(|c| json!({ "y1": c.y1, "y2": c.y2 }));
    r.put(
        "budget_used",
        json!({
            "expanded": b.expanded,
            "depth_completed": b.depth_completed,
            "partial_layer": b.partial_layer,
            "exhausted": b.exhausted,
            "coverage": cover,
        }),
    );
    r.line(format!(
        "expanded {} states, {} complete layers{}",
        b.expanded,
        b.depth_completed,
        if b.exhausted { ", search space exhausted" } else { "" }
    ));
}

fn cmd_expect(p: &Program, v: &Var, budget: &BudgetArgs, args: &ExploreArgs) -> Result<Report, Failure> {
    let mut r = Report::new("expect");
    r.put("var", json!(v.name()));
    match budget.budget() {
        Budget::Sums { y1, y2 } => {
            r.put("y1", json!(y1));
            r.put("y2", json!(y2));
            r.exact("expectation_mass", &expected_partial(p, v, y1, y2));
        }
        Budget::Nodes(n) => {
            let report = explore(p, &explore_options(n, args), std::slice::from_ref(v))?;
            r.exact("expectation_mass", report.expectation(v).expect("requested variable"));
            put_masses(&mut r, &report);
        }
    }
    Ok(r)
}

fn cmd_term(p: &Program, budget: &BudgetArgs, args: &ExploreArgs) -> Result<Report, Failure> {
    let mut r = Report::new("term");
    match budget.budget() {
        Budget::Sums { y1, y2 } => {
            r.put("y1", json!(y1));
            r.put("y2", json!(y2));
            r.exact("terminated_mass", &termination_partial(p, y1, y2));
        }
        Budget::Nodes(n) => {
            let report = explore(p, &explore_options(n, args), &[])?;
            put_masses(&mut r, &report);
        }
    }
    Ok(r)
}

fn budget_json(b: Budget) -> Value {
    match b {
        Budget::Sums { y1, y2 } => json!({ "y1": y1, "y2": y2 }),
        Budget::Nodes(n) => json!({ "nodes": n }),
    }
}

fn cmd_lexp(p: &Program, v: &Var, q: &Rational, budget: Budget) -> Result<Report, Failure> {
    let mut r = Report::new("lexp");
    r.put("var", json!(v.name()));
    r.put("q", json!(to_fraction_string(q)));
    match lexp_semidecide(p, v, q, budget)? {
        LexpVerdict::Witness { y1, y2, partial_sum } => {
            r.put("verdict", json!("witness"));
            r.put("witness", json!({ "y1": y1, "y2": y2 }));
            r.line(format!("witness: y1 = {y1}, y2 = {y2}"));
            r.exact("sum", &partial_sum);
        }
        LexpVerdict::Unknown { budget_exhausted, best_sum } => {
            r.put("verdict", json!("unknown"));
            r.put("budget", budget_json(budget_exhausted));
            r.line("unknown: no witness within the budget");
            r.exact("sum", &best_sum);
        }
    }
    Ok(r)
}

fn cmd_refute_uexp(p: &Program, v: &Var, q: &Rational, delta: &Rational, budget: Budget) -> Result<Report, Failure> {
    let mut r = Report::new("refute-uexp");
    r.put("var", json!(v.name()));
    r.put("q", json!(to_fraction_string(q)));
    r.put("delta", json!(to_fraction_string(delta)));
    match uexp_refute(p, v, q, delta, budget)? {
        UexpVerdict::Refuted { y1, y2, partial_sum } => {
            r.put("verdict", json!("refuted"));
            r.put("witness", json!({ "y1": y1, "y2": y2 }));
            r.line(format!("refuted: y1 = {y1}, y2 = {y2}"));
            r.exact("sum", &partial_sum);
        }
        UexpVerdict::NotRefuted { best_sum } => {
            r.put("verdict", json!("not_refuted"));
            r.line("not refuted within the budget");
            r.exact("sum", &best_sum);
        }
    }
    Ok(r)
}

fn cmd_sample(p: &Program, v: Option<&Var>, cfg: &SampleConfig) -> Result<Report, Failure> {
    let mut r = Report::new("sample");
    let est = match v {
        Some(v) => {
            r.put("var", json!(v.name()));
            estimate_expectation(p, v, cfg)
        }
        None => estimate_termination(p, cfg),
    };
    r.put("n", json!(cfg.n));
    r.put("seed", json!(cfg.seed));
    r.put("fuel", json!(cfg.fuel));
    r.put("rng", json!(RNG_ALGORITHM));
    r.put("mean", json!(est.mean));
    r.put("ci_halfwidth", json!(est.ci_halfwidth));
    r.put("timeout_fraction", json!(est.timeout_fraction));
    r.line(format!("mean: {} ± {} (95%)", est.mean, est.ci_halfwidth));
    r.line(format!("timeout fraction: {}", est.timeout_fraction));
    Ok(r)
}

/// Sidecar contents for a reduction output.
pub fn reduction_json(out: &ReductionOutput) -> Value {
    json!({
        "program": pretty_print(&out.program),
        "var": out.target_var.as_ref().map(|v| v.name().to_string()),
        "value": out.target_value.as_ref().map(to_fraction_string),
        "kind": out.kind,
        "source_hash": out.source_hash,
    })
}

fn cmd_reduce(q: &Program, kind: ReductionKind, path: &Path) -> Result<Report, Failure> {
    let out = match kind {
        ReductionKind::AstToExp => Ok(reduce_ast_to_exp(q)),
        ReductionKind::UhToAst => reduce_uh_to_ast(q),
        ReductionKind::UhToUexp => reduce_uh_to_uexp(q),
    }
    .map_err(|e: ReductionError| Failure::new(EXIT_PRECONDITION, e.to_string()))?;
    let sidecar_path = sidecar_path(path);
    let sidecar = reduction_json(&out);
    let io_err = |p: &Path, e: io::Error| Failure::new(EXIT_IO, format!("{}: {e}", p.display()));
    fs::write(path, format!("{}\n", pretty_print(&out.program))).map_err(|e| io_err(path, e))?;
    fs::write(&sidecar_path, format!("{}\n", serde_json::to_string_pretty(&sidecar).expect("serializable")))
        .map_err(|e| io_err(&sidecar_path, e))?;

    let mut r = Report::new("reduce");
    for (key, value) in sidecar.as_object().expect("object") {
        if key != "program" {
            r.put(key, value.clone());
        }
    }
    r.put("out", json!(path.display().to_string()));
    r.put("sidecar", json!(sidecar_path.display().to_string()));
    r.line(format!("wrote {} ({kind})", path.display()));
    r.line(format!("wrote {}", sidecar_path.display()));
    Ok(r)
}

/// `<out>.json`.
pub fn sidecar_path(out: &Path) -> PathBuf {
    let mut s = out.as_os_str().to_owned();
    s.push(".json");
    PathBuf::from(s)
}
