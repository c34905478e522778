use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::json;

use pairflip::census::cone::Cone;
use pairflip::census::{cone_stats, principal_branch, SectorCensus};
use pairflip::chains::{build_full_local, build_full_nonlocal, build_lumped, ChainOptions, GateKind, LayerOrder};
use pairflip::experiment::{
    bound_curve, bounds_csv, census_csv, run_suite, sweep, sweep_csv, write_artifact, BoundCurve, CurveRequest,
    Metadata, Suite, VerifyOptions,
};
use pairflip::montecarlo::{run_ensemble, InitialState, Observable, SimConfig};
use pairflip::spectra::{cheeger_check, mask_of, subset_expansion, GapOptions, DEFAULT_DENSE_CAP};
use pairflip::Error;

#[derive(Parser, Debug)]
#[command(name = "pairflip", version, about = "Sector census, spectral gaps, Monte Carlo and bounds for pair-flip chains")]
struct Cli {
    /// key=value file supplying defaults for the subcommand's flags.
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,
    /// Worker threads (1 gives a fully sequential run).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand, Debug)]
enum Cmd {
    /// Sector dimensions and cone statistics.
    Census(CensusArgs),
    /// Spectral gap with Cheeger bounds (JSON).
    Gap(GapArgs),
    /// Expansion of every cone on a chain.
    Expansion(ExpansionArgs),
    /// Monte Carlo time series (CSV) with a first-passage summary (JSON).
    Simulate(SimulateArgs),
    /// First-passage time t_Q over several lengths.
    Sweep(SweepArgs),
    /// Closed-form bound curves.
    Bounds(BoundsArgs),
    /// Oracle suites; exits 0 iff every check passes.
    Verify(VerifyArgs),
}

#[derive(Args, Debug, Serialize)]
struct Output {
    /// Output file (stdout when absent); a `.meta.json` sidecar is written next to it.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    format: Format,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
enum Format {
    Csv,
    Json,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
enum ChainArg {
    Local,
    Nonlocal,
    Lumped,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
enum GateArg {
    Pf,
    Tl,
}

impl From<GateArg> for GateKind {
    fn from(g: GateArg) -> Self {
        match g {
            GateArg::Pf => GateKind::PairFlip,
            GateArg::Tl => GateKind::TemperleyLieb,
        }
    }
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
enum OrderArg {
    EvenOdd,
    OddEven,
}

impl From<OrderArg> for LayerOrder {
    fn from(o: OrderArg) -> Self {
        match o {
            OrderArg::EvenOdd => LayerOrder::EvenThenOdd,
            OrderArg::OddEven => LayerOrder::OddThenEven,
        }
    }
}

#[derive(Args, Debug, Serialize)]
#[command(args_override_self = true)]
struct CensusArgs {
    #[arg(long)]
    n: u32,
    #[arg(long)]
    len: usize,
    #[command(flatten)]
    output: Output,
}

#[derive(Args, Debug, Serialize)]
#[command(args_override_self = true)]
struct ChainSpec {
    #[arg(long)]
    n: u32,
    #[arg(long)]
    len: usize,
    #[arg(long, value_enum, default_value_t = ChainArg::Lumped)]
    chain: ChainArg,
    #[arg(long, value_enum, default_value_t = GateArg::Pf)]
    gate: GateArg,
    #[arg(long, value_enum, default_value_t = OrderArg::EvenOdd)]
    order: OrderArg,
}

#[derive(Args, Debug, Serialize)]
#[command(args_override_self = true)]
struct GapArgs {
    #[command(flatten)]
    chain: ChainSpec,
    #[arg(long, default_value_t = 1e-10)]
    tol: f64,
    /// Largest dimension solved densely.
    #[arg(long, default_value_t = DEFAULT_DENSE_CAP)]
    dense_cap: usize,
    #[arg(long, default_value_t = 1_000_000)]
    max_iter: usize,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug, Serialize)]
#[command(args_override_self = true)]
struct ExpansionArgs {
    #[command(flatten)]
    chain: ChainSpec,
    #[command(flatten)]
    output: Output,
}

#[derive(Args, Debug, Serialize)]
#[command(args_override_self = true)]
struct McArgs {
    #[arg(long)]
    n: u32,
    #[arg(long, value_enum, default_value_t = GateArg::Pf)]
    gate: GateArg,
    #[arg(long, value_enum, default_value_t = OrderArg::EvenOdd)]
    order: OrderArg,
    #[arg(long, default_value_t = 10_000)]
    traj: usize,
    #[arg(long, default_value_t = 100_000)]
    t_max: u64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Threshold on the normalized charge.
    #[arg(long, default_value_t = 0.1)]
    gamma: f64,
    /// Also wait for every trajectory to cross (per-trajectory mean).
    #[arg(long)]
    per_trajectory: bool,
}

#[derive(Args, Debug, Serialize)]
#[command(args_override_self = true)]
struct SimulateArgs {
    #[command(flatten)]
    mc: McArgs,
    #[arg(long)]
    len: usize,
    /// Comma-separated: charge:a, depth, escape:d, match:i.
    #[arg(long, value_delimiter = ',', default_value = "charge:1")]
    obs: Vec<String>,
    /// max-charge[:a], uniform, cone:d or fixed:STRING.
    #[arg(long, default_value = "max-charge")]
    init: String,
    /// CSV time series (stdout when absent).
    #[arg(long)]
    out: Option<PathBuf>,
    /// JSON summary (stdout when --out is given, stderr otherwise).
    #[arg(long)]
    summary: Option<PathBuf>,
}

#[derive(Args, Debug, Serialize)]
#[command(args_override_self = true)]
struct SweepArgs {
    #[command(flatten)]
    mc: McArgs,
    #[arg(long, value_delimiter = ',', required = true)]
    lens: Vec<usize>,
    #[command(flatten)]
    output: Output,
}

#[derive(Args, Debug, Serialize)]
#[command(args_override_self = true)]
struct BoundsArgs {
    /// gap, entropy-time, charge (x = L) or entropy (x = t).
    #[arg(long, default_value = "charge")]
    curve: String,
    #[arg(long)]
    n: u32,
    #[arg(long, value_delimiter = ',', required = true)]
    lens: Vec<usize>,
    #[arg(long, default_value_t = 0.1)]
    gamma: f64,
    /// Starting cone depth for the entropy curve.
    #[arg(long, default_value_t = 0.0)]
    d: f64,
    /// Times for the entropy curve (default: 101 points up to --t-max).
    #[arg(long, value_delimiter = ',')]
    times: Vec<f64>,
    #[arg(long, default_value_t = 1e6)]
    t_max: f64,
    /// Half-chain variant of the entropy curve.
    #[arg(long)]
    bipartite: bool,
    #[command(flatten)]
    output: Output,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
enum ReportFormat {
    Text,
    Json,
}

#[derive(Args, Debug, Serialize)]
#[command(args_override_self = true)]
struct VerifyArgs {
    /// census, closed-form, lumping, cheeger, escape, tl, one-step, bounds or all.
    #[arg(long, default_value = "all")]
    suite: String,
    #[arg(long)]
    n: Option<u32>,
    #[arg(long)]
    max_len: Option<usize>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// One-step samples per start state.
    #[arg(long)]
    samples: Option<u64>,
    #[arg(long)]
    traj: Option<usize>,
    #[arg(long, value_enum, default_value_t = ReportFormat::Text)]
    format: ReportFormat,
    #[arg(long)]
    out: Option<PathBuf>,
}

const SUBCOMMANDS: [&str; 7] = ["census", "gap", "expansion", "simulate", "sweep", "bounds", "verify"];

/// Splices `key=value` lines from `--config FILE` in as flags right after the
/// subcommand, so flags given on the command line (which come later) win.
fn expand_config(args: Vec<String>) -> Result<Vec<String>, String> {
    let mut path = None;
    let mut rest = Vec::with_capacity(args.len());
    let mut it = args.into_iter();
    while let Some(a) = it.next() {
        if a == "--config" {
            path = Some(it.next().ok_or("--config needs a file")?);
        } else if let Some(p) = a.strip_prefix("--config=") {
            path = Some(p.to_string());
        } else {
            rest.push(a);
        }
    }
    let Some(path) = path else {
        return Ok(rest);
    };
    let text = std::fs::read_to_string(&path).map_err(|e| format!("cannot read config {path}: {e}"))?;
    let mut global = Vec::new();
    let mut local = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| format!("{path}:{}: expected key=value", i + 1))?;
        let (k, v) = (k.trim().replace('_', "-"), v.trim());
        let target = if k == "threads" { &mut global } else { &mut local };
        match v {
            "true" => target.push(format!("--{k}")),
            "false" => {}
            _ => {
                target.push(format!("--{k}"));
                target.push(v.to_string());
            }
        }
    }
    let Some(at) = rest.iter().position(|a| SUBCOMMANDS.contains(&a.as_str())) else {
        return Ok(rest);
    };
    let mut out: Vec<String> = rest[..at].to_vec();
    out.extend(global);
    out.push(rest[at].clone());
    out.extend(local);
    out.extend_from_slice(&rest[at + 1..]);
    Ok(out)
}

#[derive(Debug)]
enum Failure {
    Usage(String),
    Lib(Error),
    Checks,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Self::Lib(e)
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Self::Lib(e.into())
    }
}

impl From<serde_json::Error> for Failure {
    fn from(e: serde_json::Error) -> Self {
        Self::Lib(e.into())
    }
}

type Run<T = ()> = Result<T, Failure>;

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::InvalidParameter(_) | Error::Parse(_) | Error::SymbolOutOfRange { .. } => 1,
        Error::CapExceeded { .. } => 3,
        Error::NoConvergence { .. } | Error::Io(_) | Error::Json(_) => 2,
    }
}

fn main() -> ExitCode {
    let args = match expand_config(std::env::args().collect()) {
        Ok(a) => a,
        Err(msg) => {
            eprintln!("error: {msg}");
            return ExitCode::from(1);
        }
    };
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    if let Some(t) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(t).build_global() {
            eprintln!("error: {e}");
            return ExitCode::from(1);
        }
    }
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Lib(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
        Err(Failure::Checks) => ExitCode::from(2),
    }
}

fn run(cli: &Cli) -> Run {
    match &cli.cmd {
        Cmd::Census(a) => census(a, cli),
        Cmd::Gap(a) => gap(a, cli),
        Cmd::Expansion(a) => expansion(a, cli),
        Cmd::Simulate(a) => simulate(a, cli),
        Cmd::Sweep(a) => run_sweep(a, cli),
        Cmd::Bounds(a) => bounds(a, cli),
        Cmd::Verify(a) => verify(a, cli),
    }
}

fn emit<C: Serialize>(path: Option<&Path>, bytes: &[u8], command: &str, config: &C, cli: &Cli) -> Run {
    match path {
        Some(p) => {
            let meta = Metadata::new(command, serde_json::to_value(config)?, cli.threads);
            write_artifact(p, bytes, &meta)?;
        }
        None => std::io::stdout().write_all(bytes)?,
    }
    Ok(())
}

fn json_bytes<T: Serialize>(v: &T) -> Run<Vec<u8>> {
    let mut b = serde_json::to_vec_pretty(v)?;
    b.push(b'\n');
    Ok(b)
}

fn census(a: &CensusArgs, cli: &Cli) -> Run {
    let c = SectorCensus::new(a.n, a.len)?;
    let bytes = match a.output.format {
        Format::Csv => census_csv(&c).into_bytes(),
        Format::Json => json_bytes(&json!({
            "n": a.n,
            "len": a.len,
            "total": c.total().to_string(),
            "sector_count": c.sector_count().to_string(),
            "rows": c.rows(),
        }))?,
    };
    emit(a.output.out.as_deref(), &bytes, "census", a, cli)
}

fn chain_of(spec: &ChainSpec) -> Run<pairflip::chains::StochasticChain<f64>> {
    let opts = ChainOptions {
        order: spec.order.into(),
        ..ChainOptions::default()
    };
    Ok(match spec.chain {
        ChainArg::Local => build_full_local(spec.n, spec.len, spec.gate.into(), &opts)?,
        ChainArg::Nonlocal => build_full_nonlocal(spec.n, spec.len, &opts)?,
        ChainArg::Lumped => build_lumped(spec.n, spec.len, &opts)?,
    })
}

fn gap(a: &GapArgs, cli: &Cli) -> Run {
    let chain = chain_of(&a.chain)?;
    let opts = GapOptions {
        tol: a.tol,
        max_iterations: a.max_iter,
        dense_cap: a.dense_cap,
        ..GapOptions::default()
    };
    let r = cheeger_check(&chain, &opts)?;
    let out = json!({
        "n": a.chain.n,
        "len": a.chain.len,
        "chain": a.chain.chain,
        "gate": a.chain.gate,
        "dim": r.gap.dim,
        "gap": r.gap.gap,
        "lambda2": r.gap.lambda2,
        "method": r.gap.method,
        "residual": r.gap.residual,
        "iterations": r.gap.iterations,
        "relaxation_time": r.gap.relaxation_time(),
        "min_expansion": r.min_expansion,
        "cheeger_upper": r.cheeger_upper,
        "cheeger_lower_witness": r.cheeger_lower_witness,
        "upper_holds": r.upper_holds,
        "n2_window_holds": r.n2_window_holds,
    });
    emit(a.out.as_deref(), &json_bytes(&out)?, "gap", a, cli)
}

#[derive(Serialize)]
struct ExpansionRow {
    set: String,
    d: usize,
    volume: String,
    expansion_chain: f64,
    expansion_exact: String,
    expansion_asymptotic: Option<f64>,
}

fn expansion(a: &ExpansionArgs, cli: &Cli) -> Run {
    let (n, len) = (a.chain.n, a.chain.len);
    let chain = chain_of(&a.chain)?;
    let census = SectorCensus::new(n, len)?;
    let mut rows = Vec::new();
    let mut sets: Vec<(String, Cone, pairflip::census::ConeStats)> = Vec::new();
    for d in (2..=len).filter(|d| (len - d) % 2 == 0) {
        sets.push((format!("C_{d}"), Cone::canonical(n, d)?, cone_stats(&census, d)?));
    }
    if len % 2 == 1 {
        sets.push(("branch".into(), Cone::principal(n)?, principal_branch(&census)?));
    }
    for (name, cone, stats) in sets {
        let mask = mask_of(&chain, |k| cone.contains(k))?;
        rows.push(ExpansionRow {
            set: name,
            d: stats.d,
            volume: stats.volume.to_string(),
            expansion_chain: subset_expansion(&chain, &mask)?,
            expansion_exact: pairflip::numeric::format_rational(&stats.boundary_flow),
            expansion_asymptotic: stats.asymptotic_expansion,
        });
    }
    let bytes = match a.output.format {
        Format::Json => json_bytes(&rows)?,
        Format::Csv => {
            let mut s = String::from("set,d,volume,expansion_chain,expansion_exact,expansion_asymptotic\n");
            for r in &rows {
                s += &format!(
                    "{},{},{},{},{},{}\n",
                    r.set,
                    r.d,
                    r.volume,
                    r.expansion_chain,
                    r.expansion_exact,
                    r.expansion_asymptotic.map(|x| x.to_string()).unwrap_or_default()
                );
            }
            s.into_bytes()
        }
    };
    emit(a.output.out.as_deref(), &bytes, "expansion", a, cli)
}

fn parse_init(s: &str) -> Run<InitialState> {
    let (head, arg) = s.split_once(':').unwrap_or((s, ""));
    let num = |what: &str| -> Run<usize> {
        arg.parse()
            .map_err(|_| Failure::Usage(format!("--init {s:?}: {what} needs a number")))
    };
    Ok(match head {
        "max-charge" if arg.is_empty() => InitialState::MaxCharge { symbol: 1 },
        "max-charge" => InitialState::MaxCharge {
            symbol: num("max-charge")? as u32,
        },
        "uniform" => InitialState::Uniform,
        "cone" => InitialState::Cone { d: num("cone")? },
        "fixed" => InitialState::Fixed { state: arg.to_string() },
        _ => {
            return Err(Failure::Usage(format!(
                "--init {s:?}: expected max-charge[:a], uniform, cone:d or fixed:STRING"
            )))
        }
    })
}

fn sim_config(mc: &McArgs, len: usize) -> SimConfig {
    SimConfig {
        gate: mc.gate.into(),
        order: mc.order.into(),
        trajectories: mc.traj,
        t_max: mc.t_max,
        seed: mc.seed,
        gamma: mc.gamma,
        per_trajectory: mc.per_trajectory,
        ..SimConfig::new(mc.n, len)
    }
}

fn simulate(a: &SimulateArgs, cli: &Cli) -> Run {
    let observables = a
        .obs
        .iter()
        .map(|o| o.parse::<Observable>())
        .collect::<Result<Vec<_>, _>>()?;
    let cfg = SimConfig {
        observables,
        initial: parse_init(&a.init)?,
        ..sim_config(&a.mc, a.len)
    };
    cfg.validate()?;
    let e = run_ensemble(&cfg)?;
    let mut csv = Vec::new();
    e.write_csv(&mut csv)?;
    emit(a.out.as_deref(), &csv, "simulate", a, cli)?;
    let summary = json_bytes(&json!({
        "n": e.n,
        "len": e.len,
        "trajectories": e.trajectories,
        "seed": cfg.seed,
        "t_max": cfg.t_max,
        "observables": e.series.iter().map(|s| s.name.clone()).collect::<Vec<_>>(),
        "first_passage": e.first_passage,
    }))?;
    match (&a.summary, &a.out) {
        (Some(p), _) => emit(Some(p), &summary, "simulate", a, cli)?,
        (None, Some(_)) => std::io::stdout().write_all(&summary)?,
        (None, None) => std::io::stderr().write_all(&summary)?,
    }
    Ok(())
}

fn run_sweep(a: &SweepArgs, cli: &Cli) -> Run {
    let base = sim_config(&a.mc, a.lens[0]);
    let rows = sweep(&base, &a.lens)?;
    let bytes = match a.output.format {
        Format::Csv => sweep_csv(&rows).into_bytes(),
        Format::Json => json_bytes(&rows)?,
    };
    emit(a.output.out.as_deref(), &bytes, "sweep", a, cli)
}

fn bounds(a: &BoundsArgs, cli: &Cli) -> Run {
    let curve: BoundCurve = a.curve.parse()?;
    let times = if a.times.is_empty() {
        (0..=100).map(|i| a.t_max * f64::from(i) / 100.0).collect()
    } else {
        a.times.clone()
    };
    let req = CurveRequest {
        curve,
        n: a.n,
        lens: a.lens.clone(),
        gamma: a.gamma,
        d: a.d,
        times,
        bipartite: a.bipartite,
    };
    let rows = bound_curve(&req)?;
    let bytes = match a.output.format {
        Format::Csv => bounds_csv(curve, &rows).into_bytes(),
        Format::Json => json_bytes(&rows)?,
    };
    emit(a.output.out.as_deref(), &bytes, "bounds", a, cli)
}

fn verify(a: &VerifyArgs, cli: &Cli) -> Run {
    let suite: Suite = a.suite.parse()?;
    let opts = VerifyOptions {
        n: a.n,
        max_len: a.max_len,
        seed: a.seed,
        samples: a.samples,
        trajectories: a.traj,
    };
    let report = run_suite(suite, &opts)?;
    let bytes = match a.format {
        ReportFormat::Text => {
            let verdict = if report.passed { "PASS" } else { "FAIL" };
            format!("{}{verdict} overall\n", report.lines()).into_bytes()
        }
        ReportFormat::Json => json_bytes(&report)?,
    };
    emit(a.out.as_deref(), &bytes, "verify", a, cli)?;
    if report.passed {
        Ok(())
    } else {
        Err(Failure::Checks)
    }
}
