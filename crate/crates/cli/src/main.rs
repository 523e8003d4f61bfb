//! `rbg` — batch experiments on random bipartite geometric graphs.
//!
//! Agents and hubs are two independent Poisson processes; an agent at `x`
//! and a hub at `y` are joined with probability `f(|x - y|)`. The
//! subcommands cover the four standard workflows:
//!
//! * `degrees`    Monte Carlo degree observables at one parameter point
//! * `theory`     closed-form / quadrature reference values (no simulation)
//! * `percolate`  percolation sweep over one intensity with a finite-size
//!   threshold estimate
//! * `zeta`       critical intensity of the unipartite reference model
//! * `figs`       plot-ready data dumps for the two reference figures
//!
//! Conventions shared by all subcommands:
//!
//! * `--seed` is mandatory for anything random; there is no wall-clock
//!   default. Identical configs give identical results regardless of the
//!   worker count, which only affects scheduling.
//! * `--config FILE` reads a flat `key=value` file whose keys mirror the
//!   long flag names; explicit flags win over file values.
//! * `--workers N` sizes the worker pool (default: the `RBG_WORKERS`
//!   environment variable, else all cores).
//! * Results go to stdout, or atomically (temp file + rename) to `--out`.
//! * Exit codes: 0 success, 1 experiment failure (overflow cap, censored
//!   threshold under `--strict`, I/O), 2 invalid configuration. Failures
//!   print a single JSON line `{"error":{"kind":...,"message":...}}` to
//!   stderr.

mod commands;
mod config;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use rbg_core::connection::ConnectionSpec;

use config::{config_err, optional, or_default, CliError, CriterionSpec, FileConfig, FixSpec, GridSpec, OutFormat, SideList};

/// Name of the environment variable supplying the default worker count.
const WORKERS_ENV: &str = "RBG_WORKERS";

#[derive(Parser)]
#[command(
    name = "rbg",
    version,
    about = "Batch experiments on random bipartite geometric graphs",
    after_help = "Exit codes: 0 ok, 1 experiment error, 2 config error. \
                  Failures print one JSON line to stderr. Worker pool defaults \
                  to the RBG_WORKERS environment variable."
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Monte Carlo degree observables (hub_degree, M, N, conn_distance)
    Degrees(DegreesArgs),
    /// Closed-form and quadrature reference values (no simulation)
    Theory(TheoryArgs),
    /// Percolation sweep over lambda or mu with threshold estimate
    Percolate(PercolateArgs),
    /// Critical intensity of the unipartite reference model
    Zeta(ZetaArgs),
    /// Plot-ready data for the reference figures (fig1, fig2)
    Figs(FigsArgs),
}

impl Command {
    fn common(&self) -> &CommonArgs {
        match self {
            Command::Degrees(a) => &a.common,
            Command::Theory(a) => &a.common,
            Command::Percolate(a) => &a.common,
            Command::Zeta(a) => &a.common,
            Command::Figs(a) => &a.common,
        }
    }
}

#[derive(Args)]
struct CommonArgs {
    /// Flat key=value config file; explicit flags take precedence
    #[arg(long, value_name = "FILE", global = false)]
    config: Option<PathBuf>,
    /// Output file (default: stdout); `figs` treats this as a directory
    #[arg(long, value_name = "PATH")]
    out: Option<PathBuf>,
    /// Output encoding: csv or json
    #[arg(long)]
    format: Option<OutFormat>,
    /// Worker threads (default: RBG_WORKERS, else all cores); never
    /// changes results, only scheduling
    #[arg(long)]
    workers: Option<usize>,
}

#[derive(Args)]
struct DegreesArgs {
    /// Agent intensity
    #[arg(long)]
    lambda: Option<f64>,
    /// Hub intensity
    #[arg(long)]
    mu: Option<f64>,
    /// Connection function: boolean:<theta>, pboolean:<amp>:<theta> or
    /// exp:<theta>, optionally dispersed with @p=<p>
    #[arg(long)]
    conn: Option<ConnectionSpec>,
    /// Dimension (default 2)
    #[arg(long)]
    d: Option<usize>,
    /// Replications (default 10000)
    #[arg(long)]
    reps: Option<usize>,
    /// Top-level RNG seed (mandatory; no clock default)
    #[arg(long)]
    seed: Option<u64>,
    /// Observation window side (default: 4x the connection truncation
    /// radius, the smallest unbiased side)
    #[arg(long)]
    window: Option<f64>,
    #[command(flatten)]
    common: CommonArgs,
}

#[derive(Args)]
struct TheoryArgs {
    /// Agent intensity
    #[arg(long)]
    lambda: Option<f64>,
    /// Hub intensity
    #[arg(long)]
    mu: Option<f64>,
    /// Connection function (see `degrees --help`)
    #[arg(long)]
    conn: Option<ConnectionSpec>,
    /// Dimension (default 2; the M/V N/distance rows need d = 2)
    #[arg(long)]
    d: Option<usize>,
    #[command(flatten)]
    common: CommonArgs,
}

#[derive(Args)]
struct PercolateArgs {
    /// Fixed intensity, e.g. mu=3 (the other intensity is swept)
    #[arg(long)]
    fix: Option<FixSpec>,
    /// Connection function (see `degrees --help`)
    #[arg(long)]
    conn: Option<ConnectionSpec>,
    /// Swept grid lo:hi:n — n log-spaced values from lo to hi
    #[arg(long)]
    grid: Option<GridSpec>,
    /// Window sides, comma separated, e.g. 16,32
    #[arg(long = "L", value_name = "L1,L2,...")]
    l: Option<SideList>,
    /// Replications per grid point and side (default 200)
    #[arg(long)]
    reps: Option<usize>,
    /// Top-level RNG seed (mandatory; no clock default)
    #[arg(long)]
    seed: Option<u64>,
    /// Dimension (default 2)
    #[arg(long)]
    d: Option<usize>,
    /// Percolation criterion: wrap, span or frac:<share> (default wrap)
    #[arg(long)]
    criterion: Option<CriterionSpec>,
    /// Edge truncation mass epsilon (default 1e-9; soft kernels sweep
    /// much faster at 1e-4 with negligible bias)
    #[arg(long = "eps-edge")]
    eps_edge: Option<f64>,
    /// Fail (exit 1) when the threshold is censored
    #[arg(long)]
    strict: bool,
    #[command(flatten)]
    common: CommonArgs,
}

#[derive(Args)]
struct ZetaArgs {
    /// Connection function of the unipartite model
    #[arg(long)]
    conn: Option<ConnectionSpec>,
    /// Dimension (default 2)
    #[arg(long)]
    d: Option<usize>,
    /// Intensity grid lo:hi:n (default: auto grid bracketing the threshold)
    #[arg(long)]
    grid: Option<GridSpec>,
    /// Window sides, comma separated (default 16,32)
    #[arg(long = "L", value_name = "L1,L2,...")]
    l: Option<SideList>,
    /// Replications per grid point and side (default 200)
    #[arg(long)]
    reps: Option<usize>,
    /// Top-level RNG seed (mandatory; no clock default)
    #[arg(long)]
    seed: Option<u64>,
    /// Fail (exit 1) when the threshold is censored
    #[arg(long)]
    strict: bool,
    #[command(flatten)]
    common: CommonArgs,
}

#[derive(Args)]
struct FigsArgs {
    /// Which figure to generate
    #[arg(value_enum)]
    target: FigTarget,
    /// Top-level RNG seed (mandatory; no clock default)
    #[arg(long)]
    seed: Option<u64>,
    /// Replications per simulation point for fig2 (default 2000)
    #[arg(long)]
    reps: Option<usize>,
    #[command(flatten)]
    common: CommonArgs,
}

#[derive(Clone, Copy, ValueEnum)]
enum FigTarget {
    /// One realization at lambda=100, mu=10 on the unit square: point and
    /// edge dumps for a flat disk and a half-amplitude exponential
    Fig1,
    /// Dispersion study at boolean theta=0.2122: theory curves plus
    /// simulation points for E N, sqrt(V N), E M, sqrt(V M)
    Fig2,
}

/// Common values after merging flags, config file and environment.
pub struct ResolvedCommon {
    pub out: Option<PathBuf>,
    pub format: OutFormat,
    pub workers: Option<usize>,
}

fn resolve_workers(cli: Option<usize>, file: &FileConfig) -> Result<Option<usize>, CliError> {
    if let Some(w) = optional(cli, file.get("workers"))? {
        if w == 0 {
            return Err(config_err("--workers must be at least 1"));
        }
        return Ok(Some(w));
    }
    match std::env::var(WORKERS_ENV) {
        Ok(raw) => {
            let w: usize = raw
                .parse()
                .map_err(|_| config_err(format!("{WORKERS_ENV}: cannot parse {raw:?}")))?;
            if w == 0 {
                return Err(config_err(format!("{WORKERS_ENV} must be at least 1")));
            }
            Ok(Some(w))
        }
        Err(_) => Ok(None),
    }
}

fn dispatch(cli: Cli) -> Result<(), CliError> {
    let common = cli.command.common();
    let file = match &common.config {
        Some(path) => FileConfig::load(path)?,
        None => FileConfig::default(),
    };
    let workers = resolve_workers(common.workers, &file)?;
    // The pool is sized once per process; work items are pure and results
    // are aggregated in index order, so this cannot affect outputs.
    let _ = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.unwrap_or(0))
        .build_global();
    let resolved = ResolvedCommon {
        out: optional(common.out.clone(), file.get("out"))?,
        format: or_default(common.format, file.get("format"), OutFormat::Csv)?,
        workers,
    };
    match &cli.command {
        Command::Degrees(a) => commands::run_degrees(a, &file, &resolved),
        Command::Theory(a) => commands::run_theory(a, &file, &resolved),
        Command::Percolate(a) => commands::run_percolate(a, &file, &resolved),
        Command::Zeta(a) => commands::run_zeta(a, &file, &resolved),
        Command::Figs(a) => commands::run_figs(a, &file, &resolved),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                let _ = e.print();
                return ExitCode::SUCCESS;
            }
            let err = config_err(e.to_string());
            err.emit_json();
            return ExitCode::from(2);
        }
    };
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            e.emit_json();
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
