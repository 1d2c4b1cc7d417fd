//! `stripes` command line: toy, verify, bench, metrics and mi.
//!
//! Exit codes: 0 success, 1 a verification suite failed, 2 usage or input error.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::context::{mi_report, ContextOptions, ContextType, RepOrder};
use crate::error::{Error, Result};
use crate::linear::{benchmark_scaling, BENCH_HEADER};
use crate::metrics::evaluate;
use crate::params::Method;
use crate::pianoroll::load_annotated;
use crate::toy::{discriminability, generate_toy, heatmap, mirror_asymmetry};
use crate::verify::{run_all, VerifyConfig, SUITES};

pub const THREADS_ENV: &str = "STRIPES_THREADS";

#[derive(Debug, Parser)]
#[command(name = "stripes", version, about = "Positional encodings for linearized attention")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Toy heatmap CSV plus discriminability and mirror-asymmetry JSON.
    Toy(ToyArgs),
    /// Run equivalence and invariant suites.
    Verify(VerifyArgs),
    /// Linear vs quadratic attention timing.
    Bench(BenchArgs),
    /// SSMD, CS, GS and NDD between two pianoroll files.
    Metrics(MetricsArgs),
    /// Mutual information between pitch and a context labelling.
    Mi(MiArgs),
}

#[derive(Debug, Args, Serialize)]
pub struct ToyArgs {
    #[arg(long)]
    pub method: Method,
    #[arg(long, default_value_t = 5)]
    pub n: usize,
    #[arg(long, default_value_t = 100)]
    pub p: usize,
    #[arg(long, default_value_t = 0.08)]
    pub sigma: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// `start:end:count`, evenly spaced and inclusive.
    #[arg(long, default_value = "0:1:11")]
    pub fgrid: String,
    #[arg(long, default_value_t = 0)]
    pub query: usize,
    /// Output prefix; writes `<out>.csv`, `<out>.json` and `<out>.manifest.json`.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
pub struct VerifyArgs {
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 50)]
    pub trials: usize,
    /// Restrict to these suites (repeatable).
    #[arg(long)]
    pub suite: Vec<String>,
    /// Method whose Gram matrices the PD suite searches.
    #[arg(long, default_value = "rope")]
    pub method: Method,
    #[arg(long, default_value_t = 2000)]
    pub budget: usize,
    /// Report path; the JSON also goes to stdout.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
pub struct BenchArgs {
    #[arg(long)]
    pub method: Method,
    #[arg(long, value_delimiter = ',', default_value = "256,512,1024,2048")]
    pub lengths: Vec<usize>,
    #[arg(long, default_value_t = 64)]
    pub d: usize,
    #[arg(long, default_value_t = 9)]
    pub repeats: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
pub struct MetricsArgs {
    #[arg(long)]
    pub target: PathBuf,
    #[arg(long)]
    pub pred: PathBuf,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, ValueEnum, Serialize)]
pub enum RepOrderArg {
    Id,
    Appearance,
}

#[derive(Debug, Args, Serialize)]
pub struct MiArgs {
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long)]
    pub context: ContextType,
    #[arg(long, value_enum, default_value = "id")]
    pub rep_order: RepOrderArg,
    /// Count one event per note onset instead of per active cell.
    #[arg(long)]
    pub onset_only: bool,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Serialize)]
pub struct RunManifest<'a, P: Serialize> {
    pub command: &'a str,
    pub parameters: &'a P,
    pub seed: u64,
    pub version: &'a str,
    /// Seconds since the Unix epoch.
    pub timestamp: u64,
}

/// Parses `start:end:count` into `count` evenly spaced values.
pub fn parse_grid(spec: &str) -> Result<Vec<f64>> {
    let parts: Vec<&str> = spec.split(':').collect();
    let bad = || Error::InvalidArgument(format!("grid '{spec}' must look like start:end:count"));
    if parts.len() != 3 {
        return Err(bad());
    }
    let start: f64 = parts[0].trim().parse().map_err(|_| bad())?;
    let end: f64 = parts[1].trim().parse().map_err(|_| bad())?;
    let count: usize = parts[2].trim().parse().map_err(|_| bad())?;
    Ok(match count {
        0 => return Err(bad()),
        1 => vec![start],
        n => (0..n).map(|i| start + (end - start) * i as f64 / (n - 1) as f64).collect(),
    })
}

fn write_file(path: &Path, contents: &str) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir)?;
    }
    std::fs::write(path, contents)?;
    Ok(())
}

fn with_suffix(prefix: &Path, suffix: &str) -> PathBuf {
    let mut s = prefix.as_os_str().to_owned();
    s.push(suffix);
    PathBuf::from(s)
}

fn write_manifest<P: Serialize>(out: &Path, command: &str, parameters: &P, seed: u64) -> Result<()> {
    let timestamp = std::time::SystemTime::now().duration_since(std::time::UNIX_EPOCH).map_or(0, |d| d.as_secs());
    let manifest = RunManifest { command, parameters, seed, version: env!("CARGO_PKG_VERSION"), timestamp };
    write_file(&with_suffix(out, ".manifest.json"), &serde_json::to_string_pretty(&manifest)?)
}

#[derive(Debug, Serialize)]
struct ToySummary {
    method: Method,
    query: usize,
    discriminability: Vec<(f64, f64)>,
    mirror_witness: MirrorSummary,
}

#[derive(Debug, Serialize)]
struct MirrorSummary {
    psi: f64,
    xi: f64,
    dpsi: f64,
    dxi: f64,
    f: f64,
    score_plus: f64,
    score_minus: f64,
}

fn cmd_toy(args: &ToyArgs, stdout: &mut dyn Write) -> Result<i32> {
    let grid = parse_grid(&args.fgrid)?;
    let ds = generate_toy(args.n, args.p, args.sigma, args.seed)?;
    let map = heatmap(args.method, &ds, args.query, &grid)?;
    let csv = map.to_csv();
    let discrim = if args.n >= 2 {
        grid.iter().map(|&f| Ok((f, discriminability(args.method, &ds, args.query, f)?))).collect::<Result<Vec<_>>>()?
    } else {
        Vec::new()
    };
    let (psi, xi, d, f) = (std::f64::consts::FRAC_PI_4, std::f64::consts::FRAC_PI_2, 0.3, 0.7);
    let (score_plus, score_minus) = mirror_asymmetry(args.method, psi, xi, d, d, f);
    let summary = ToySummary {
        method: args.method,
        query: args.query,
        discriminability: discrim,
        mirror_witness: MirrorSummary { psi, xi, dpsi: d, dxi: d, f, score_plus, score_minus },
    };
    let json = serde_json::to_string_pretty(&summary)?;
    match &args.out {
        Some(out) => {
            write_file(&with_suffix(out, ".csv"), &csv)?;
            write_file(&with_suffix(out, ".json"), &json)?;
            write_manifest(out, "toy", args, args.seed)?;
        }
        None => stdout.write_all(csv.as_bytes())?,
    }
    Ok(0)
}

fn cmd_verify(args: &VerifyArgs, stdout: &mut dyn Write) -> Result<i32> {
    let names: Vec<&str> = if args.suite.is_empty() { SUITES.to_vec() } else { args.suite.iter().map(String::as_str).collect() };
    let cfg = VerifyConfig { seed: args.seed, trials: args.trials, pd_method: args.method, pd_budget: args.budget };
    let report = run_all(&names, &cfg)?;
    let json = serde_json::to_string_pretty(&report)?;
    writeln!(stdout, "{json}")?;
    if let Some(out) = &args.out {
        write_file(out, &json)?;
        write_manifest(out, "verify", args, args.seed)?;
    }
    Ok(if report.passed { 0 } else { 1 })
}

fn cmd_bench(args: &BenchArgs, stdout: &mut dyn Write) -> Result<i32> {
    let rows = benchmark_scaling(args.method, &args.lengths, args.d, args.repeats, args.seed)?;
    let mut csv = String::from(BENCH_HEADER);
    csv.push('\n');
    for r in &rows {
        csv.push_str(&r.csv());
        csv.push('\n');
    }
    stdout.write_all(csv.as_bytes())?;
    if let Some(out) = &args.out {
        write_file(out, &csv)?;
        write_manifest(out, "bench", args, args.seed)?;
    }
    Ok(0)
}

fn cmd_metrics(args: &MetricsArgs, stdout: &mut dyn Write) -> Result<i32> {
    let (target, _) = load_annotated(&std::fs::read(&args.target)?)?;
    let (pred, _) = load_annotated(&std::fs::read(&args.pred)?)?;
    let json = serde_json::to_string(&evaluate(&target, &pred)?)?;
    writeln!(stdout, "{json}")?;
    if let Some(out) = &args.out {
        write_file(out, &json)?;
        write_manifest(out, "metrics", args, 0)?;
    }
    Ok(0)
}

fn cmd_mi(args: &MiArgs, stdout: &mut dyn Write) -> Result<i32> {
    let (roll, ann) = load_annotated(&std::fs::read(&args.input)?)?;
    let opts = ContextOptions {
        rep_order: match args.rep_order {
            RepOrderArg::Id => RepOrder::Id,
            RepOrderArg::Appearance => RepOrder::Appearance,
        },
        onset_only: args.onset_only,
    };
    let json = serde_json::to_string(&mi_report(&roll, ann.as_ref(), args.context, opts)?)?;
    writeln!(stdout, "{json}")?;
    if let Some(out) = &args.out {
        write_file(out, &json)?;
        write_manifest(out, "mi", args, 0)?;
    }
    Ok(0)
}

/// Sizes the global rayon pool from `STRIPES_THREADS` (0 or unset = automatic).
pub fn configure_threads() -> Result<()> {
    let threads = match std::env::var(THREADS_ENV) {
        Ok(v) => v.trim().parse::<usize>().map_err(|_| Error::InvalidArgument(format!("{THREADS_ENV}='{v}' is not a count")))?,
        Err(_) => 0,
    };
    // a second call in the same process keeps the first pool
    let _ = rayon::ThreadPoolBuilder::new().num_threads(threads).build_global();
    Ok(())
}

/// Runs one command line and returns the process exit code.
pub fn run<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = write!(stderr, "{}", e.render());
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    let result = configure_threads().and_then(|()| match &cli.command {
        Command::Toy(a) => cmd_toy(a, stdout),
        Command::Verify(a) => cmd_verify(a, stdout),
        Command::Bench(a) => cmd_bench(a, stdout),
        Command::Metrics(a) => cmd_metrics(a, stdout),
        Command::Mi(a) => cmd_mi(a, stdout),
    });
    match result {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            2
        }
    }
}
