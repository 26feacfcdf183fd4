use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::Context;
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use snp_core::dot::to_dot;
use snp_core::equiv::Expectation;
use snp_core::rewrite::{transform_with, RewriterRegistry};
use snp_core::{
    build_transition_matrix, classify_constructs, compare, fixtures, matrix_run, parse_system_with, run,
    serialize_system, validate_restricted, EquivError, SimError, SystemDescription, TransformError,
};

/// Simulate spiking neural P systems and remove rule delays.
#[derive(Parser)]
#[command(name = "snpdelay", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the simulator and report sink arrivals.
    Simulate {
        path: String,
        #[command(flatten)]
        common: Common,
    },
    /// Rewrite into a delay-free system.
    Transform {
        path: String,
        #[command(flatten)]
        common: Common,
        /// Restrict to these rewriters (comma separated).
        #[arg(long, value_delimiter = ',')]
        only: Vec<String>,
    },
    /// Decide whether CANDIDATE simulates ORIGINAL.
    Check {
        original: String,
        candidate: String,
        #[command(flatten)]
        common: Common,
        /// Sidecar written by `transform` with the expected offsets and factors.
        #[arg(long)]
        expect: Option<PathBuf>,
    },
    /// Print the transition matrix and the matrix-engine trace.
    Matrix {
        path: String,
        #[command(flatten)]
        common: Common,
    },
    /// List the routing constructs.
    Classify {
        path: String,
        #[command(flatten)]
        common: Common,
    },
    /// Emit a Graphviz description of the topology.
    ExportDot {
        path: String,
        #[command(flatten)]
        common: Common,
    },
    /// Transform and check for each value of one parameter.
    Sweep {
        path: String,
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value = "d")]
        param: String,
        #[arg(long, default_value_t = 1)]
        from: i64,
        #[arg(long, default_value_t = 5)]
        to: i64,
    },
}

#[derive(Args, Clone)]
struct Common {
    #[arg(long)]
    horizon: Option<u64>,
    #[arg(long, short)]
    verbose: bool,
    /// Override a document parameter, e.g. `--set d=3`.
    #[arg(long = "set", value_parser = parse_set)]
    set: Vec<(String, i64)>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Text)]
    format: Format,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Text,
    Records,
}

fn parse_set(s: &str) -> Result<(String, i64), String> {
    let (k, v) = s.split_once('=').ok_or_else(|| format!("expected name=value, got {s}"))?;
    let v = v.trim().parse().map_err(|_| format!("not an integer: {v}"))?;
    Ok((k.trim().to_string(), v))
}

const EXIT_PARSE: u8 = 1;
const EXIT_INVALID: u8 = 2;
const EXIT_SCOPE: u8 = 3;
const EXIT_REJECT: u8 = 4;

struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn new(code: u8, message: impl Into<String>) -> Self {
        Self { code, message: message.into() }
    }
}

impl From<anyhow::Error> for Failure {
    fn from(e: anyhow::Error) -> Self {
        Failure::new(EXIT_PARSE, format!("{e:#}"))
    }
}

impl From<SimError> for Failure {
    fn from(e: SimError) -> Self {
        Failure::new(EXIT_INVALID, e.to_string())
    }
}

impl From<TransformError> for Failure {
    fn from(e: TransformError) -> Self {
        let code = match e {
            TransformError::Validation(_) => EXIT_INVALID,
            _ => EXIT_SCOPE,
        };
        Failure::new(code, e.to_string())
    }
}

impl From<EquivError> for Failure {
    fn from(e: EquivError) -> Self {
        Failure::new(EXIT_INVALID, e.to_string())
    }
}

type CmdResult = Result<u8, Failure>;

/// Reads a document from disk, or a bundled one given as `fixture:<name>`.
fn load(path: &str, common: &Common) -> Result<SystemDescription, Failure> {
    let text = match path.strip_prefix("fixture:") {
        Some(name) => fixtures::document(name)
            .ok_or_else(|| Failure::new(EXIT_PARSE, format!("no bundled fixture {name}")))?
            .to_string(),
        None => fs::read_to_string(path).with_context(|| format!("reading {path}"))?,
    };
    let overrides: BTreeMap<String, i64> = common.set.iter().cloned().collect();
    parse_system_with(&text, &overrides).map_err(|e| Failure::new(EXIT_PARSE, format!("{path}: {e}")))
}

fn emit(common: &Common, text: &str) -> Result<(), Failure> {
    match &common.out {
        Some(p) => fs::write(p, text).with_context(|| format!("writing {}", p.display()))?,
        None => print!("{text}"),
    }
    Ok(())
}

fn records<T: Serialize>(value: &T) -> String {
    serde_json::to_string(value).expect("plain data serializes")
}

fn simulate(path: &str, common: &Common) -> CmdResult {
    let system = load(path, common)?;
    let horizon = common.horizon.unwrap_or_else(|| system.default_horizon());
    let outcome = run(&system, horizon)?;
    let mut out = String::new();
    if common.format == Format::Records {
        for e in &outcome.trace.events {
            out.push_str(&records(&e.record()));
            out.push('\n');
        }
        out.push_str(&records(&outcome.sinks));
        out.push('\n');
        emit(common, &out)?;
        return Ok(0);
    }
    if common.verbose {
        for (t, c) in outcome.trace.configurations.iter().enumerate() {
            out.push_str(&format!("config t={t} {c}\n"));
        }
        for e in &outcome.trace.events {
            out.push_str(&format!("{e}\n"));
        }
    }
    for (sink, arrivals) in &outcome.sinks.arrivals {
        let list: Vec<String> = arrivals.iter().map(|(t, n)| format!("{t}:{n}")).collect();
        out.push_str(&format!(
            "sink {sink} arrivals=[{}] total={}\n",
            list.join(" "),
            arrivals.iter().map(|a| a.1).sum::<u64>()
        ));
    }
    let lost = snp_core::lost_spike_count(&outcome.trace);
    out.push_str(&format!("steps={} halted={} lost={lost}\n", outcome.trace.configurations.len() - 1, outcome.halted));
    emit(common, &out)?;
    Ok(0)
}

#[derive(Serialize)]
struct Sidecar<'a> {
    expectation: Expectation,
    stream_len: u64,
    results: &'a [snp_core::RewriteResult],
    log: &'a [String],
}

fn sidecar_path(out: &Path) -> PathBuf {
    let mut name = out.as_os_str().to_owned();
    name.push(".report.json");
    PathBuf::from(name)
}

fn transform_cmd(path: &str, common: &Common, only: &[String]) -> CmdResult {
    let system = load(path, common)?;
    let mut registry = RewriterRegistry::builtin();
    if !only.is_empty() {
        registry = registry.restricted_to(only)?;
    }
    let output = transform_with(&system, &registry)?;
    emit(common, &serialize_system(&output.system))?;
    let sidecar = Sidecar {
        expectation: Expectation::from_transform(&output),
        stream_len: output.stream_len,
        results: &output.results,
        log: &output.log,
    };
    if let Some(out) = &common.out {
        let p = sidecar_path(out);
        let json = serde_json::to_string_pretty(&sidecar).expect("plain data serializes");
        fs::write(&p, json).with_context(|| format!("writing {}", p.display()))?;
    }
    match common.format {
        Format::Records => eprintln!("{}", records(&sidecar)),
        Format::Text => eprint!("{}", output.report()),
    }
    Ok(0)
}

fn check_cmd(original: &str, candidate: &str, common: &Common, expect: Option<&Path>) -> CmdResult {
    let a = load(original, common)?;
    let b = load(candidate, common)?;
    let expectation: Option<Expectation> = match expect {
        Some(p) => {
            let text = fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?;
            let v: serde_json::Value =
                serde_json::from_str(&text).with_context(|| format!("parsing {}", p.display()))?;
            let e = v.get("expectation").cloned().unwrap_or(v);
            Some(serde_json::from_value(e).with_context(|| format!("reading expectation from {}", p.display()))?)
        }
        None => None,
    };
    let horizon = common.horizon.unwrap_or_else(|| a.default_horizon().max(b.default_horizon()));
    let verdict = compare(&a, &b, horizon, expectation.as_ref())?;
    match common.format {
        Format::Records => emit(common, &format!("{}\n", records(&verdict)))?,
        Format::Text => emit(common, &verdict.to_string())?,
    }
    Ok(if verdict.accepted { 0 } else { EXIT_REJECT })
}

fn matrix_cmd(path: &str, common: &Common) -> CmdResult {
    let system = load(path, common)?;
    let m = build_transition_matrix(&system).map_err(|e| Failure::new(EXIT_INVALID, e.to_string()))?;
    let horizon = common.horizon.unwrap_or_else(|| system.default_horizon());
    let trace = matrix_run(&system, horizon).map_err(|e| Failure::new(EXIT_INVALID, e.to_string()))?;
    let mut out = m.to_string();
    for (t, c) in trace.iter().enumerate() {
        let cells: Vec<String> = c.iter().map(u64::to_string).collect();
        out.push_str(&format!("t={t} [{}]\n", cells.join(" ")));
    }
    emit(common, &out)?;
    Ok(0)
}

fn classify_cmd(path: &str, common: &Common) -> CmdResult {
    let system = load(path, common)?;
    let routing = classify_constructs(&system).map_err(|e| Failure::new(EXIT_SCOPE, e.to_string()))?;
    let mut out = String::new();
    for c in &routing.constructs {
        out.push_str(&format!("{c}\n"));
    }
    let report = validate_restricted(&system);
    if !report.is_empty() {
        out.push_str(&report.to_string());
        if !out.ends_with('\n') {
            out.push('\n');
        }
    }
    emit(common, &out)?;
    Ok(0)
}

fn export_dot(path: &str, common: &Common) -> CmdResult {
    let system = load(path, common)?;
    emit(common, &to_dot(&system))?;
    Ok(0)
}

fn sweep(path: &str, common: &Common, param: &str, from: i64, to: i64) -> CmdResult {
    let values: Vec<i64> = (from..=to).collect();
    let lines: Vec<(u8, String)> = std::thread::scope(|scope| {
        let handles: Vec<_> = values
            .iter()
            .map(|&v| {
                let mut c = common.clone();
                c.set.retain(|(k, _)| k != param);
                c.set.push((param.to_string(), v));
                scope.spawn(move || sweep_one(path, &c, param, v))
            })
            .collect();
        handles.into_iter().map(|h| h.join().expect("sweep worker panicked")).collect()
    });
    let mut out = String::new();
    let mut code = 0;
    for (c, line) in lines {
        code = code.max(c);
        out.push_str(&line);
        out.push('\n');
    }
    emit(common, &out)?;
    Ok(code)
}

fn sweep_one(path: &str, common: &Common, param: &str, v: i64) -> (u8, String) {
    let step = || -> Result<(u8, String), Failure> {
        let system = load(path, common)?;
        let output = transform_with(&system, &RewriterRegistry::builtin())?;
        let horizon = common.horizon.unwrap_or_else(|| system.default_horizon());
        let verdict = compare(&system, &output.system, horizon, Some(&Expectation::from_transform(&output)))?;
        let status = if verdict.accepted { "ACCEPT" } else { "REJECT" };
        let k = verdict.offset.map_or("per-sink".to_string(), |k| k.to_string());
        let factors: Vec<String> = verdict.count_factors.iter().map(|(s, f)| format!("{s}={f}")).collect();
        let code = if verdict.accepted { 0 } else { EXIT_REJECT };
        Ok((code, format!("{param}={v} {status} k={k} factors=[{}]", factors.join(" "))))
    };
    step().unwrap_or_else(|f| (f.code, format!("{param}={v} ERROR {}", f.message)))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Simulate { path, common } => simulate(path, common),
        Command::Transform { path, common, only } => transform_cmd(path, common, only),
        Command::Check { original, candidate, common, expect } => {
            check_cmd(original, candidate, common, expect.as_deref())
        }
        Command::Matrix { path, common } => matrix_cmd(path, common),
        Command::Classify { path, common } => classify_cmd(path, common),
        Command::ExportDot { path, common } => export_dot(path, common),
        Command::Sweep { path, common, param, from, to } => sweep(path, common, param, *from, *to),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
