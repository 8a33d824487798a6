use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use mcrx::cli::{self, RunKnobs, SweepSpec, Table};
use mcrx::queue::{ChainOptions, DEFAULT_MAX_STATES};
use mcrx::sim::{self, SimConfig, ValidationConfig};
use mcrx::{load_params, Error, SystemParams};

const EXIT_USAGE: u8 = 1;
const EXIT_DOMAIN: u8 = 2;
const EXIT_VALIDATION: u8 = 3;

/// Reception-process queueing model: rate sweeps, dosage bounds, and
/// simulation-backed validation.
#[derive(Parser, Debug)]
#[command(name = "mcrx", version, about)]
struct Cli {
    #[command(flatten)]
    common: Common,

    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug)]
struct Common {
    /// JSON config file; the reference operating point when omitted
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,

    /// Output CSV path (default stdout)
    #[arg(long, global = true, value_name = "PATH")]
    out: Option<PathBuf>,

    /// Sweep as var=start:stop:steps[:log]
    #[arg(long, global = true)]
    sweep: Option<String>,

    /// Random seed
    #[arg(long, global = true, env = "MCRX_SEED", default_value_t = 42)]
    seed: u64,

    /// Events per replication
    #[arg(long, global = true, default_value_t = 1_000_000)]
    events: u64,

    /// Warmup events per replication (default 10% of --events)
    #[arg(long, global = true)]
    warmup: Option<u64>,

    /// Independent replications
    #[arg(long, global = true)]
    reps: Option<usize>,

    /// Occupancy factors, comma separated
    #[arg(long = "f", global = true, value_delimiter = ',')]
    occupancy: Vec<f64>,

    /// Receptor counts, comma separated
    #[arg(long, global = true, value_delimiter = ',')]
    nr: Vec<u64>,

    /// Share of rejections caused by active receptors
    #[arg(long, global = true)]
    alpha: Option<f64>,

    /// Chain capacity N_m (default from the radii)
    #[arg(long, global = true)]
    nm: Option<u64>,

    /// Enter rate override (1/s)
    #[arg(long, global = true)]
    lambda: Option<f64>,

    /// Largest chain accepted
    #[arg(long, global = true, default_value_t = DEFAULT_MAX_STATES)]
    max_states: u64,

    /// Trajectory CSV of the first replication (simulate only)
    #[arg(long, global = true, value_name = "PATH")]
    trajectory: Option<PathBuf>,

    /// Multiply the simulated death rates (validate only; 1 leaves them unchanged)
    #[arg(long, global = true, default_value_t = 1.0)]
    death_scale: f64,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// lambda, gamma, gamma' and the gamma split against R, Q, mu or alpha
    Rates,
    /// mu_i and gamma_i against the state index for each --nr
    StateRates,
    /// Q_min/dt and Q_max/dt against R (per --f) or against f
    Bounds,
    /// Dosage interval and verdict for the configured Q
    Dose,
    /// Analytic steady-state distribution
    Steady,
    /// Stochastic simulation of the chain
    Simulate,
    /// Simulation against the analytic steady state (M/M/1/1 unless --nr/--nm)
    Validate,
}

enum Failure {
    Usage(String),
    Domain(String),
    Validation,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Domain { op: "sweep", .. } => Failure::Usage(e.to_string()),
            _ => Failure::Domain(e.to_string()),
        }
    }
}

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Self {
        Failure::Domain(format!("I/O error: {e}"))
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(EXIT_USAGE) } else { ExitCode::SUCCESS };
        }
    };
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(EXIT_USAGE)
        }
        Err(Failure::Domain(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(EXIT_DOMAIN)
        }
        Err(Failure::Validation) => ExitCode::from(EXIT_VALIDATION),
    }
}

fn load(common: &Common) -> Result<SystemParams, Failure> {
    let mut params = match &common.config {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| Failure::Domain(format!("cannot read {}: {e}", path.display())))?;
            load_params(&text)?
        }
        None => SystemParams::reference(),
    };
    if let Some(alpha) = common.alpha {
        params.alpha = alpha;
    }
    Ok(params.validated()?)
}

fn sweep(common: &Common, default: &str) -> Result<SweepSpec, Failure> {
    let text = common.sweep.as_deref().unwrap_or(default);
    text.parse().map_err(|e: Error| Failure::Usage(e.to_string()))
}

fn chain_options(common: &Common, receptors: Option<u64>, capacity: Option<u64>) -> Result<ChainOptions, Failure> {
    if common.nr.len() > 1 {
        return Err(Failure::Usage("--nr takes a single value for this command".into()));
    }
    Ok(ChainOptions {
        capacity: common.nm.or(capacity),
        receptors: common.nr.first().copied().or(receptors),
        lambda: common.lambda,
        max_states: common.max_states,
    })
}

fn emit(common: &Common, table: &Table) -> Result<(), Failure> {
    match &common.out {
        Some(path) => {
            let mut w = BufWriter::new(File::create(path)?);
            table.write_csv(&mut w)?;
            w.flush()?;
        }
        None => {
            let stdout = io::stdout();
            let mut w = BufWriter::new(stdout.lock());
            table.write_csv(&mut w)?;
            w.flush()?;
        }
    }
    Ok(())
}

fn run(cli: &Cli) -> Result<(), Failure> {
    let common = &cli.common;
    let params = load(common)?;
    match cli.command {
        Command::Rates => {
            let table = cli::cmd_rates(&params, &sweep(common, "R=10:20:11")?)?;
            emit(common, &table)
        }
        Command::StateRates => {
            let table = cli::cmd_state_rates(&params, &sweep(common, "i=1:2000:2000")?, &common.nr, common.nm)?;
            emit(common, &table)
        }
        Command::Bounds => {
            let table = cli::cmd_bounds(&params, &sweep(common, "R=10:20:11")?, &common.occupancy)?;
            emit(common, &table)
        }
        Command::Dose => emit(common, &cli::cmd_dose(&params, &common.occupancy)?),
        Command::Steady => {
            let (table, ss) = cli::cmd_steady(&params, &chain_options(common, None, None)?)?;
            eprintln!(
                "blocking={:.6e} unbind_throughput={:.6e} reject_throughput={:.6e} rejection_fraction={:.6e}",
                ss.blocking,
                ss.unbind_throughput,
                ss.reject_throughput,
                ss.rejection_fraction()
            );
            emit(common, &table)
        }
        Command::Simulate => {
            let opts = chain_options(common, None, None)?;
            let knobs = RunKnobs {
                events: common.events,
                warmup: common.warmup,
                replications: common.reps.unwrap_or(1),
                seed: common.seed,
            };
            let (table, result) = cli::cmd_simulate(&params, &opts, &knobs)?;
            let c = result.counts;
            eprintln!(
                "seed={} arrivals={} blocked={} unbinds={} rejects={} rejection_share={:.6e}",
                result.seed,
                c.arrivals,
                c.blocked,
                c.unbinds,
                c.rejects,
                result.rejection_share_of_departures()
            );
            if let Some(path) = &common.trajectory {
                let chain = mcrx::queue::build_chain_with(&params, &opts)?;
                let mut config = SimConfig::new(chain, common.events, common.seed);
                if let Some(w) = common.warmup {
                    config.warmup_events = w;
                }
                let (_, events) = sim::simulate_trajectory(&config)?;
                let mut w = BufWriter::new(File::create(path)?);
                sim::write_trajectory_csv(&mut w, &events)?;
                w.flush()?;
            }
            emit(common, &table)
        }
        Command::Validate => {
            let knobs = ValidationConfig {
                chain: chain_options(common, Some(1), Some(1))?,
                events: common.events,
                warmup_events: common.warmup,
                replications: common.reps.unwrap_or(8),
                seed: common.seed,
                death_scale: common.death_scale,
                ..ValidationConfig::default()
            };
            let report = sim::validate(&params, &knobs)?;
            eprintln!("{report}");
            let mut buf = Vec::new();
            report.write_csv(&mut buf)?;
            match &common.out {
                Some(path) => std::fs::write(path, &buf)?,
                None => io::stdout().write_all(&buf)?,
            }
            if report.passed() {
                Ok(())
            } else {
                Err(Failure::Validation)
            }
        }
    }
}
