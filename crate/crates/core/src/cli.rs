//! Command-line front end. `main.rs` only forwards to [`run`].
//!
//! Exit codes: 0 on success, 1 on usage or validation errors (including an
//! ordering that fails `validate`), 2 on runtime failures.

use std::ffi::OsString;
use std::io::Write;
use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use clap::{Args, Parser, Subcommand};

use crate::analysis::{
    emit_csv, emit_plot_data, feasibility, partial_replay_report, sweep, Axis, Metric, PlotSpec,
    SweepSpec,
};
use crate::clock::ClockConfig;
use crate::replay::{
    enumerate_replays, format_order, parse_order, replay_random, validate_order,
    MAX_ENUMERATE_EVENTS,
};
use crate::service::{self, AppState};
use crate::sim::{self, SimConfig, Trace, DEFAULT_STALL_PROB};

#[derive(Debug, Parser)]
#[command(name = "repcl", version, about = "Replay clock simulator, replayer and analysis toolkit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Simulate a system and write a stamped trace.
    Simulate(SimulateArgs),
    /// Print one replay order chosen at random among the admissible ones.
    Replay(ReplayArgs),
    /// Print every admissible replay order of a small trace.
    Enumerate(EnumerateArgs),
    /// Check an ordering file against a trace.
    Validate(ValidateArgs),
    /// Run a parameter sweep described by a JSON file.
    Sweep(SweepArgs),
    /// Classify (alpha, delta) cells of a sweep by mean offset count.
    Feasibility(FeasibilityArgs),
    /// Restamp a trace under a smaller skew bound and audit the result.
    PartialReplay(PartialArgs),
    /// Serve traces and replay sessions over HTTP.
    Serve(ServeArgs),
}

#[derive(Debug, Args)]
struct SimulateArgs {
    /// Number of processes.
    #[arg(long)]
    n: usize,
    /// Clock skew bound E, in milliseconds (fractions allowed down to 1 µs).
    #[arg(long)]
    epsilon_ms: f64,
    /// Epoch length I, in microseconds; must divide E.
    #[arg(long)]
    interval_us: u64,
    /// Send rate per process, in messages per second.
    #[arg(long)]
    alpha: f64,
    /// Minimum message delay, in microseconds.
    #[arg(long)]
    delta_us: u64,
    /// Extra uniform delay on top of delta, in microseconds.
    #[arg(long, default_value_t = 0)]
    jitter_us: u64,
    /// Simulated real time, in milliseconds.
    #[arg(long)]
    duration_ms: f64,
    /// Per-round probability that a process clock skips a tick.
    #[arg(long, default_value_t = DEFAULT_STALL_PROB)]
    stall_prob: f64,
    /// RNG seed.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Trace output path (JSON lines). Without it only metrics are printed.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct ReplayArgs {
    /// Trace file (JSON lines).
    #[arg(long)]
    trace: PathBuf,
    /// RNG seed for frontline picks.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Also write the order to this file, one event id per line.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct EnumerateArgs {
    /// Trace file (JSON lines).
    #[arg(long)]
    trace: PathBuf,
    /// Refuse traces with more events than this (at most 64).
    #[arg(long, default_value_t = MAX_ENUMERATE_EVENTS)]
    max_events: usize,
}

#[derive(Debug, Args)]
struct ValidateArgs {
    /// Trace file (JSON lines).
    #[arg(long)]
    trace: PathBuf,
    /// Ordering file: event ids or labels, whitespace separated.
    #[arg(long)]
    order: PathBuf,
}

#[derive(Debug, Args)]
struct SweepArgs {
    /// Sweep description (JSON).
    #[arg(long)]
    spec: PathBuf,
    /// Write one CSV row per run here.
    #[arg(long)]
    csv: Option<PathBuf>,
    /// Write plot points (JSON lines) here; needs the other --plot-* flags.
    #[arg(long, requires_all = ["plot_x", "plot_series", "plot_y"])]
    plot_out: Option<PathBuf>,
    /// Plot x axis: n, epsilon, interval, alpha or delta.
    #[arg(long)]
    plot_x: Option<Axis>,
    /// Plot series key: n, epsilon, interval, alpha or delta.
    #[arg(long)]
    plot_series: Option<Axis>,
    /// Plotted metric, e.g. tau_mean or mean_clock_words.
    #[arg(long)]
    plot_y: Option<Metric>,
}

#[derive(Debug, Args)]
struct FeasibilityArgs {
    /// Sweep description (JSON); should sweep alpha and delta.
    #[arg(long)]
    spec: PathBuf,
    /// Largest acceptable mean number of stored offsets per event.
    #[arg(long)]
    tau_budget: f64,
    /// Write the regions as JSON here.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
#[command(group = clap::ArgGroup::new("declared").required(true))]
struct PartialArgs {
    /// Trace file (JSON lines).
    #[arg(long)]
    trace: PathBuf,
    /// Declared skew bound, in milliseconds.
    #[arg(long, group = "declared")]
    declared_epsilon_ms: Option<f64>,
    /// Declared skew bound, in microseconds.
    #[arg(long, group = "declared")]
    declared_epsilon_us: Option<u64>,
}

#[derive(Debug, Args)]
struct ServeArgs {
    /// TCP port to listen on.
    #[arg(long, default_value_t = 8080)]
    port: u16,
    /// Address to bind.
    #[arg(long, default_value = "127.0.0.1")]
    bind: std::net::IpAddr,
    /// Directory of *.jsonl traces; each is served under its file stem.
    #[arg(long)]
    trace_dir: PathBuf,
    /// Origin allowed by CORS. Without it any origin is allowed.
    #[arg(long)]
    cors_origin: Option<String>,
}

#[derive(Debug)]
enum Failure {
    Usage(String),
    Runtime(String),
}

impl Failure {
    fn code(&self) -> i32 {
        match self {
            Failure::Usage(_) => 1,
            Failure::Runtime(_) => 2,
        }
    }
}

fn usage(e: impl ToString) -> Failure {
    Failure::Usage(e.to_string())
}

fn runtime(e: impl ToString) -> Failure {
    Failure::Runtime(e.to_string())
}

/// Parses `args` (including the program name) and runs the subcommand,
/// returning the process exit code.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let rendered = e.render().to_string();
            let _ = if code == 0 {
                out.write_all(rendered.as_bytes())
            } else {
                err.write_all(rendered.as_bytes())
            };
            return code;
        }
    };
    let result = match cli.command {
        Command::Simulate(a) => simulate(a, out),
        Command::Replay(a) => replay(a, out),
        Command::Enumerate(a) => enumerate(a, out),
        Command::Validate(a) => validate(a, out),
        Command::Sweep(a) => run_sweep(a, out, err),
        Command::Feasibility(a) => run_feasibility(a, out),
        Command::PartialReplay(a) => partial(a, out),
        Command::Serve(a) => serve(a, err),
    };
    match result {
        Ok(code) => code,
        Err(f) => {
            let msg = match &f {
                Failure::Usage(m) => format!("error: {m}"),
                Failure::Runtime(m) => format!("runtime error: {m}"),
            };
            let _ = writeln!(err, "{msg}");
            f.code()
        }
    }
}

/// Converts a millisecond flag to whole microseconds.
fn ms_to_us(flag: &str, ms: f64) -> Result<u64, Failure> {
    let us = ms * 1000.0;
    if !(us.is_finite() && us >= 1.0) || (us - us.round()).abs() > 1e-6 {
        return Err(usage(format!("--{flag} must be a positive whole number of microseconds, got {ms} ms")));
    }
    Ok(us.round() as u64)
}

fn load(path: &Path) -> Result<Trace, Failure> {
    sim::read_trace(path).map_err(|e| runtime(format!("{}: {e}", path.display())))
}

fn names(trace: &Trace, order: &[u64]) -> String {
    order
        .iter()
        .map(|&id| {
            trace
                .position(id)
                .map_or_else(|| id.to_string(), |i| trace.events[i].display_name())
        })
        .collect::<Vec<_>>()
        .join(" ")
}

fn json_line(out: &mut dyn Write, v: &impl serde::Serialize) -> Result<(), Failure> {
    let s = serde_json::to_string(v).map_err(runtime)?;
    writeln!(out, "{s}").map_err(runtime)
}

fn simulate(a: SimulateArgs, out: &mut dyn Write) -> Result<i32, Failure> {
    let clock = ClockConfig::new(a.n, ms_to_us("epsilon-ms", a.epsilon_ms)?, a.interval_us)
        .map_err(usage)?;
    let mut cfg = SimConfig::new(
        clock,
        a.alpha,
        a.delta_us,
        ms_to_us("duration-ms", a.duration_ms)?,
        a.seed,
    );
    cfg.jitter = a.jitter_us;
    cfg.stall_prob = a.stall_prob;
    cfg.validate().map_err(usage)?;

    let metrics = match &a.out {
        Some(path) => {
            let trace = sim::run(&cfg).map_err(runtime)?;
            sim::write_trace(&trace, path).map_err(runtime)?;
            trace.metrics
        }
        None => sim::run_metrics(&cfg).map_err(runtime)?,
    };
    json_line(out, &metrics)?;
    Ok(0)
}

fn replay(a: ReplayArgs, out: &mut dyn Write) -> Result<i32, Failure> {
    let trace = Arc::new(load(&a.trace)?);
    let order = replay_random(trace.clone(), a.seed);
    if let Some(path) = &a.out {
        let name = a.trace.file_name().map_or_else(String::new, |s| s.to_string_lossy().into_owned());
        std::fs::write(path, format_order(&name, a.seed, &order)).map_err(runtime)?;
    }
    writeln!(out, "{}", names(&trace, &order)).map_err(runtime)?;
    Ok(0)
}

fn enumerate(a: EnumerateArgs, out: &mut dyn Write) -> Result<i32, Failure> {
    let trace = load(&a.trace)?;
    let orders = enumerate_replays(&trace, a.max_events).map_err(usage)?;
    for o in &orders {
        writeln!(out, "{}", names(&trace, o)).map_err(runtime)?;
    }
    Ok(0)
}

fn validate(a: ValidateArgs, out: &mut dyn Write) -> Result<i32, Failure> {
    let trace = load(&a.trace)?;
    let text = std::fs::read_to_string(&a.order)
        .map_err(|e| runtime(format!("{}: {e}", a.order.display())))?;
    let order = parse_order(&text, &trace).map_err(usage)?;
    let v = validate_order(&order, &trace).map_err(usage)?;
    match v.violation {
        None => {
            writeln!(out, "valid").map_err(runtime)?;
            Ok(0)
        }
        Some((first, second)) => {
            writeln!(
                out,
                "invalid: {} must be replayed before {}",
                names(&trace, &[first]),
                names(&trace, &[second])
            )
            .map_err(runtime)?;
            Ok(1)
        }
    }
}

fn read_spec(path: &Path) -> Result<SweepSpec, Failure> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| runtime(format!("{}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| usage(format!("{}: {e}", path.display())))
}

fn run_sweep(a: SweepArgs, out: &mut dyn Write, err: &mut dyn Write) -> Result<i32, Failure> {
    let spec = read_spec(&a.spec)?;
    let table = sweep(&spec).map_err(usage)?;
    for e in &table.errors {
        let _ = writeln!(
            err,
            "skipped n={} E={}us I={}us alpha={} delta={}us: {}",
            e.n, e.epsilon_us, e.interval_us, e.alpha, e.delta_us, e.message
        );
    }
    if let Some(path) = &a.csv {
        emit_csv(&table.rows, path).map_err(runtime)?;
    }
    if let (Some(path), Some(x), Some(series), Some(y)) = (&a.plot_out, a.plot_x, a.plot_series, a.plot_y) {
        emit_plot_data(&table.rows, &PlotSpec { x, series, y, filter: vec![] }, path)
            .map_err(runtime)?;
    }
    if a.csv.is_none() {
        for r in &table.rows {
            json_line(out, r)?;
        }
    } else {
        writeln!(out, "{} runs, {} skipped cells", table.rows.len(), table.errors.len())
            .map_err(runtime)?;
    }
    Ok(0)
}

fn run_feasibility(a: FeasibilityArgs, out: &mut dyn Write) -> Result<i32, Failure> {
    if !(a.tau_budget.is_finite() && a.tau_budget >= 0.0) {
        return Err(usage("--tau-budget must be a non-negative number"));
    }
    let spec = read_spec(&a.spec)?;
    let regions = feasibility(&spec, a.tau_budget).map_err(usage)?;
    if let Some(path) = &a.out {
        let s = serde_json::to_string_pretty(&regions).map_err(runtime)?;
        std::fs::write(path, s).map_err(runtime)?;
    }
    for r in &regions {
        writeln!(
            out,
            "n={} E={}us I={}us budget={}: {} of {} cells feasible",
            r.n,
            r.epsilon_us,
            r.interval_us,
            r.tau_budget,
            r.feasible_cells().len(),
            r.cells.len()
        )
        .map_err(runtime)?;
        for c in &r.cells {
            writeln!(
                out,
                "  alpha={:<8} delta={:<6}us tau={:.3} {}{}",
                c.alpha,
                c.delta_us,
                c.tau_mean,
                if c.feasible { "feasible" } else { "infeasible" },
                if c.stable { "" } else { " (unstable)" }
            )
            .map_err(runtime)?;
        }
    }
    Ok(0)
}

fn partial(a: PartialArgs, out: &mut dyn Write) -> Result<i32, Failure> {
    let declared = match (a.declared_epsilon_ms, a.declared_epsilon_us) {
        (Some(ms), _) => ms_to_us("declared-epsilon-ms", ms)?,
        (None, Some(us)) => us,
        (None, None) => unreachable!("clap requires one of the declared bounds"),
    };
    let trace = load(&a.trace)?;
    let report = partial_replay_report(&trace, declared).map_err(usage)?;
    json_line(out, &report)?;
    Ok(0)
}

fn serve(a: ServeArgs, err: &mut dyn Write) -> Result<i32, Failure> {
    let state = AppState::from_dir(&a.trace_dir)
        .map_err(|e| runtime(format!("{}: {e}", a.trace_dir.display())))?;
    let ids: Vec<&str> = state.trace_ids().collect();
    let addr = SocketAddr::new(a.bind, a.port);
    let _ = writeln!(err, "serving {} trace(s) on http://{addr}: {}", ids.len(), ids.join(", "));
    let rt = tokio::runtime::Builder::new_multi_thread()
        .enable_all()
        .build()
        .map_err(runtime)?;
    rt.block_on(service::serve(addr, Arc::new(state), a.cors_origin.as_deref()))
        .map_err(runtime)?;
    Ok(0)
}
