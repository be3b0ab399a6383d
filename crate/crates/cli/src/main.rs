use std::fmt::Display;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use cesc::gen::{self, GenConfig, GenError, Schedule};
use cesc::oracle::{self, EquivReport, OracleError, DEFAULT_ENUMERATION_CAP};
use cesc::runtime::{self, RuntimeError};
use cesc::synth::{self, net_to_dot, read_net, write_net};
use cesc::{parse_spec, read_trace, validate, write_trace, Mode, MonitorNet, SpecFile, Trace};

const OK: u8 = 0;
const NEGATIVE: u8 = 1;
const USAGE: u8 = 2;
const PARSE: u8 = 3;
const SYNTH: u8 = 4;

#[derive(Parser)]
#[command(name = "cesc", version, about = "Monitor synthesis and trace checking for clocked event sequence charts")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Synthesize the monitor net of a spec's top chart.
    Synth {
        spec: PathBuf,
        /// Where to write the `.monitor` file (stdout if omitted).
        #[arg(short, long)]
        out: Option<PathBuf>,
        /// Also write Graphviz output here.
        #[arg(long)]
        dot: Option<PathBuf>,
    },
    /// Run the monitors over a trace and print the verdict report.
    Check {
        spec: PathBuf,
        trace: PathBuf,
        #[arg(long, value_enum)]
        mode: Option<ModeArg>,
        /// Use this monitor file instead of synthesizing one.
        #[arg(long)]
        monitor: Option<PathBuf>,
        /// Also write the report here.
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Compare the monitors with the reference matcher.
    Oracle(OracleArgs),
    /// Generate conforming or mutated traces.
    Gen(GenArgs),
    /// Render an existing `.monitor` file as Graphviz.
    Viz {
        monitor: PathBuf,
        #[arg(short, long)]
        out: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    Detect,
    Assert,
}

impl From<ModeArg> for Mode {
    fn from(m: ModeArg) -> Mode {
        match m {
            ModeArg::Detect => Mode::Detect,
            ModeArg::Assert => Mode::Assert,
        }
    }
}

#[derive(Args)]
struct OracleArgs {
    spec: PathBuf,
    /// A trace to match; prints every matching window.
    trace: Option<PathBuf>,
    /// Enumerate every trace up to this length.
    #[arg(long, value_name = "MAXLEN", conflicts_with = "trace")]
    exhaustive: Option<usize>,
    /// Check this many random traces.
    #[arg(long, value_name = "COUNT", conflicts_with_all = ["trace", "exhaustive"])]
    random: Option<usize>,
    /// Length of each random trace.
    #[arg(long, default_value_t = 32)]
    len: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Upper bound on the traces an exhaustive run may enumerate.
    #[arg(long, default_value_t = DEFAULT_ENUMERATION_CAP)]
    cap: u64,
    #[arg(long, value_enum)]
    mode: Option<ModeArg>,
    /// Check this monitor file instead of a freshly synthesized one.
    #[arg(long)]
    monitor: Option<PathBuf>,
    /// Where a counterexample trace is written.
    #[arg(long, default_value = "counterexample.trace")]
    counterexample: PathBuf,
}

#[derive(Args)]
struct GenArgs {
    spec: PathBuf,
    #[arg(long, value_name = "K", conflicts_with = "mutated", required_unless_present = "mutated")]
    conforming: Option<usize>,
    #[arg(long, value_name = "K")]
    mutated: Option<usize>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// `random`, or `periodic:P1,P2,...` with one period per clock in order of use.
    #[arg(long, default_value = "random", value_parser = parse_schedule)]
    schedule: Schedule,
    /// Probability of each symbol being true in noise ticks.
    #[arg(long, default_value_t = 0.2)]
    noise: f64,
    /// Write `conforming_<i>.trace` / `mutated_<i>.trace` here; required for more than one trace.
    #[arg(long)]
    out_dir: Option<PathBuf>,
}

fn parse_schedule(s: &str) -> Result<Schedule, String> {
    if s == "random" {
        return Ok(Schedule::Random);
    }
    let periods = s
        .strip_prefix("periodic:")
        .ok_or_else(|| format!("expected `random` or `periodic:P1,P2,...`, got `{s}`"))?;
    periods
        .split(',')
        .map(|p| match p.trim().parse::<u32>() {
            Ok(n) if n > 0 => Ok(n),
            _ => Err(format!("bad period `{p}`")),
        })
        .collect::<Result<Vec<_>, _>>()
        .map(Schedule::Periodic)
}

/// A failed command: message for stderr and the exit code.
struct Fail(u8, String);

fn fail(code: u8, e: impl Display) -> Fail {
    Fail(code, e.to_string())
}

fn read(path: &Path) -> Result<String, Fail> {
    fs::read_to_string(path).map_err(|e| fail(USAGE, format!("{}: {e}", path.display())))
}

fn write(path: &Path, text: &str) -> Result<(), Fail> {
    fs::write(path, text).map_err(|e| fail(USAGE, format!("{}: {e}", path.display())))
}

fn load_spec(path: &Path) -> Result<SpecFile, Fail> {
    let spec = parse_spec(&read(path)?).map_err(|e| fail(PARSE, format!("{}: {e}", path.display())))?;
    let diags = validate(&spec);
    if let Some(first) = diags.first() {
        for d in &diags[1..] {
            eprintln!("error: {d}");
        }
        return Err(fail(PARSE, first));
    }
    Ok(spec)
}

fn load_net(spec: &SpecFile, monitor: Option<&Path>) -> Result<MonitorNet, Fail> {
    match monitor {
        Some(p) => read_net(&read(p)?).map_err(|e| fail(PARSE, format!("{}: {e}", p.display()))),
        None => synth::synthesize(spec).map_err(|e| fail(SYNTH, e)),
    }
}

fn load_trace(path: &Path, spec: &SpecFile) -> Result<Trace, Fail> {
    read_trace(&read(path)?, &spec.symbols).map_err(|e| fail(PARSE, format!("{}: {e}", path.display())))
}

fn runtime_fail(e: RuntimeError) -> Fail {
    let code = match e {
        RuntimeError::AssertNotImpl(_) => USAGE,
        RuntimeError::UnknownClock(_) => PARSE,
        _ => SYNTH,
    };
    fail(code, e)
}

fn oracle_fail(e: OracleError) -> Fail {
    let code = match &e {
        OracleError::EnumerationTooLarge { .. } => USAGE,
        OracleError::Trace(_) => PARSE,
        OracleError::Runtime(r) => return runtime_fail(r.clone()),
        _ => SYNTH,
    };
    fail(code, e)
}

fn synth_cmd(spec: &Path, out: Option<&Path>, dot: Option<&Path>) -> Result<u8, Fail> {
    let spec = load_spec(spec)?;
    let net = load_net(&spec, None)?;
    let text = write_net(&net);
    match out {
        Some(p) => write(p, &text)?,
        None => print!("{text}"),
    }
    if let Some(p) = dot {
        write(p, &net_to_dot(&net))?;
    }
    Ok(OK)
}

fn check_cmd(spec: &Path, trace: &Path, mode: Option<ModeArg>, monitor: Option<&Path>, report: Option<&Path>) -> Result<u8, Fail> {
    let spec = load_spec(spec)?;
    let net = load_net(&spec, monitor)?;
    let trace = load_trace(trace, &spec)?;
    let mode = mode.map_or(spec.mode, Mode::from);
    let r = runtime::run(&net, &trace, mode).map_err(runtime_fail)?;
    let text = r.to_text();
    print!("{text}");
    if let Some(p) = report {
        write(p, &text)?;
    }
    Ok(r.exit_code() as u8)
}

fn print_equiv(r: &EquivReport, spec: &SpecFile, path: &Path) -> Result<u8, Fail> {
    match &r.counterexample {
        None => {
            println!("equivalent: {} traces, {} ticks", r.traces, r.ticks);
            Ok(OK)
        }
        Some(m) => {
            println!("counterexample of length {}: {}", m.trace.len(), m.note);
            for v in &m.expected {
                println!("expected {v}");
            }
            for v in &m.actual {
                println!("actual   {v}");
            }
            write(path, &write_trace(&m.trace, &spec.symbols))?;
            println!("written to {}", path.display());
            Ok(NEGATIVE)
        }
    }
}

fn oracle_cmd(a: &OracleArgs) -> Result<u8, Fail> {
    let spec = load_spec(&a.spec)?;
    let net = load_net(&spec, a.monitor.as_deref())?;
    let mode = a.mode.map_or(spec.mode, Mode::from);
    let chart = spec.top_chart();
    if let Some(maxlen) = a.exhaustive {
        let r = oracle::exhaustive_equiv(chart, &net, mode, maxlen, a.cap).map_err(oracle_fail)?;
        return print_equiv(&r, &spec, &a.counterexample);
    }
    if let Some(count) = a.random {
        let mut rng = ChaCha8Rng::seed_from_u64(a.seed);
        let r = oracle::random_equiv(chart, &net, mode, count, a.len, &mut rng).map_err(oracle_fail)?;
        return print_equiv(&r, &spec, &a.counterexample);
    }
    let Some(path) = &a.trace else {
        return Err(fail(USAGE, "give a trace, --exhaustive MAXLEN or --random COUNT"));
    };
    let trace = load_trace(path, &spec)?;
    for m in oracle::window_match(chart, &trace).map_err(oracle_fail)? {
        println!("match {} {}..{} arrows=[{}]", m.chart, m.start, m.end, m.arrows.join(", "));
    }
    let exp = oracle::expected(&net.name, chart, &trace, mode).map_err(oracle_fail)?;
    for v in &exp.verdicts {
        println!("expect {v}");
    }
    match oracle::compare(chart, &net, &trace, mode).map_err(oracle_fail)? {
        None => {
            println!("agreement");
            Ok(OK)
        }
        Some(m) => print_equiv(
            &EquivReport {
                traces: 1,
                ticks: trace.len() as u64,
                counterexample: Some(m),
            },
            &spec,
            &a.counterexample,
        ),
    }
}

fn gen_cmd(a: &GenArgs) -> Result<u8, Fail> {
    let spec = load_spec(&a.spec)?;
    // the generator embeds windows of the same charts the monitors detect
    load_net(&spec, None)?;
    let cfg = GenConfig {
        seed: a.seed,
        noise: a.noise,
        schedule: a.schedule.clone(),
        ..Default::default()
    };
    let (kind, k) = match (a.conforming, a.mutated) {
        (Some(k), _) => ("conforming", k),
        (None, Some(k)) => ("mutated", k),
        (None, None) => return Err(fail(USAGE, "give --conforming K or --mutated K")),
    };
    if k > 1 && a.out_dir.is_none() {
        return Err(fail(USAGE, "--out-dir is required for more than one trace"));
    }
    let traces = if kind == "conforming" {
        gen::conforming(&spec, k, &cfg)
    } else {
        gen::mutated(&spec, k, &cfg)
    }
    .map_err(|e| match e {
        GenError::Unsatisfiable(_) => fail(SYNTH, e),
        GenError::Oracle(o) => oracle_fail(o),
    })?;
    match &a.out_dir {
        None => {
            for t in &traces {
                print!("{}", t.to_text(&spec));
            }
        }
        Some(dir) => {
            fs::create_dir_all(dir).map_err(|e| fail(USAGE, format!("{}: {e}", dir.display())))?;
            for (i, t) in traces.iter().enumerate() {
                write(&dir.join(format!("{kind}_{i}.trace")), &t.to_text(&spec))?;
            }
        }
    }
    Ok(OK)
}

fn viz_cmd(monitor: &Path, out: Option<&Path>) -> Result<u8, Fail> {
    let net = read_net(&read(monitor)?).map_err(|e| fail(PARSE, format!("{}: {e}", monitor.display())))?;
    let dot = net_to_dot(&net);
    match out {
        Some(p) => write(p, &dot)?,
        None => print!("{dot}"),
    }
    Ok(OK)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.cmd {
        Cmd::Synth { spec, out, dot } => synth_cmd(spec, out.as_deref(), dot.as_deref()),
        Cmd::Check {
            spec,
            trace,
            mode,
            monitor,
            report,
        } => check_cmd(spec, trace, *mode, monitor.as_deref(), report.as_deref()),
        Cmd::Oracle(a) => oracle_cmd(a),
        Cmd::Gen(a) => gen_cmd(a),
        Cmd::Viz { monitor, out } => viz_cmd(monitor, out.as_deref()),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(Fail(code, msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(code)
        }
    }
}
