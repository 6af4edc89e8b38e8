use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::Context;
use clap::{Args, Parser, Subcommand};
use udn_core::access::EpsilonMode;
use udn_core::oracles::SimConfig;
use udn_core::pipeline::{
    compare_deployment, parse_range, run_pipeline, simulate, sweep, write_comparison_csv,
    write_deployment_csv, write_run_csv, write_sweep_csv, OracleKind, SweepPoint,
};
use udn_core::scenario::{load_scenario_seeded, DeploymentSpec, Scenario};
use udn_core::{ErrorClass, UdnError};

const EXIT_INPUT: u8 = 2;
const EXIT_NUMERIC: u8 = 3;
const EXIT_ORACLE: u8 = 4;

#[derive(Parser)]
#[command(name = "udn", version, about = "Stationary performance of ultra-dense small-cell networks")]
struct Cli {
    /// Worker threads (defaults to all cores).
    #[arg(long, global = true)]
    jobs: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    #[arg(long)]
    scenario: PathBuf,
    /// Overrides the scenario seed, including the hot-spot generator.
    #[arg(long)]
    seed: Option<u64>,
    /// CSV destination; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Use the interferer-conditioned unavailability.
    #[arg(long)]
    conditional_epsilon: bool,
    /// Fix the number of interferers instead of solving for it.
    #[arg(long)]
    force_n_int: Option<f64>,
}

#[derive(Subcommand)]
enum Command {
    /// Evaluate the scenario once: one row per hot spot plus a system row.
    Run {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        gamma0: Option<f64>,
        /// Users per SBS, one value or one per hot spot.
        #[arg(long, value_delimiter = ',', conflicts_with = "total_sbs")]
        theta: Option<Vec<f64>>,
        #[arg(long)]
        total_sbs: Option<usize>,
    },
    /// Evaluate over a gamma0 grid, optionally per theta or total-SBS series.
    Sweep {
        #[command(flatten)]
        common: Common,
        /// start:stop:step
        #[arg(long)]
        gamma0: String,
        #[arg(long, value_delimiter = ',', conflicts_with = "total_sbs")]
        theta: Option<Vec<f64>>,
        #[arg(long, value_delimiter = ',')]
        total_sbs: Option<Vec<usize>>,
    },
    /// Compare an analytic stage against its Monte Carlo oracle.
    Simulate {
        #[command(flatten)]
        common: Common,
        /// mobility, sinr, ctmc or distance
        #[arg(long)]
        oracle: String,
        #[arg(long)]
        samples: Option<u64>,
    },
    /// EE of uniform vs population-proportional deployment over a gamma0 grid.
    CompareDeployment {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        total_sbs: usize,
        #[arg(long, default_value = "1:4:0.25")]
        gamma0: String,
    },
    /// Load and validate a scenario without evaluating it.
    Validate {
        #[arg(long)]
        scenario: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
    },
}

enum Failure {
    Model(UdnError),
    Oracle(usize),
    Other(anyhow::Error),
}

impl From<UdnError> for Failure {
    fn from(e: UdnError) -> Self {
        Failure::Model(e)
    }
}

impl From<anyhow::Error> for Failure {
    fn from(e: anyhow::Error) -> Self {
        Failure::Other(e)
    }
}

fn load(common: &Common) -> Result<Scenario, Failure> {
    let mut sc = load_scenario_seeded(&common.scenario, common.seed)?;
    if common.conditional_epsilon {
        sc.access.epsilon_mode = EpsilonMode::Conditional;
    }
    if common.force_n_int.is_some() {
        sc.access.force_n_int = common.force_n_int;
    }
    sc.validate()?;
    Ok(sc)
}

fn output(path: Option<&Path>) -> anyhow::Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(
            File::create(p).with_context(|| format!("cannot create {}", p.display()))?,
        )),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn theta_spec(sc: &Scenario, theta: &[f64]) -> Result<DeploymentSpec, UdnError> {
    match theta.len() {
        1 => Ok(DeploymentSpec::Theta(vec![theta[0]; sc.n_p()])),
        n if n == sc.n_p() => Ok(DeploymentSpec::Theta(theta.to_vec())),
        n => Err(UdnError::input(format!(
            "--theta needs 1 or {} values, got {n}",
            sc.n_p()
        ))),
    }
}

fn default_samples(kind: OracleKind) -> u64 {
    match kind {
        OracleKind::Mobility => 20_000,
        OracleKind::Sinr => 1_000_000,
        OracleKind::Ctmc => 2_000_000,
        OracleKind::Distance => 1_000_000,
    }
}

fn execute(cli: Cli) -> Result<(), Failure> {
    if let Some(jobs) = cli.jobs {
        if jobs == 0 {
            return Err(UdnError::input("--jobs must be at least 1").into());
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build_global()
            .context("cannot configure the worker pool")?;
    }
    match cli.command {
        Command::Run { common, gamma0, theta, total_sbs } => {
            let mut sc = load(&common)?;
            if let Some(g) = gamma0 {
                sc.radio.gamma0 = g;
            }
            if let Some(t) = theta {
                sc.deployment = theta_spec(&sc, &t)?;
            }
            if let Some(total_sbs) = total_sbs {
                sc.deployment = match sc.deployment {
                    DeploymentSpec::Rds { .. } => DeploymentSpec::Rds { total_sbs },
                    _ => DeploymentSpec::Uds { total_sbs },
                };
            }
            sc.validate()?;
            let ev = run_pipeline(&sc)?;
            write_run_csv(output(common.out.as_deref())?, &ev)?;
        }
        Command::Sweep { common, gamma0, theta, total_sbs } => {
            let sc = load(&common)?;
            let grid = parse_range(&gamma0)?;
            let mut points = Vec::new();
            for &g in &grid {
                match (&theta, &total_sbs) {
                    (Some(ts), _) => points.extend(ts.iter().map(|&t| SweepPoint {
                        gamma0: g,
                        theta: Some(t),
                        total_sbs: None,
                    })),
                    (None, Some(ns)) => points.extend(ns.iter().map(|&n| SweepPoint {
                        gamma0: g,
                        theta: None,
                        total_sbs: Some(n),
                    })),
                    (None, None) => points.push(SweepPoint { gamma0: g, theta: None, total_sbs: None }),
                }
            }
            let rows = sweep(&sc, &points)?;
            write_sweep_csv(output(common.out.as_deref())?, &rows)?;
        }
        Command::Simulate { common, oracle, samples } => {
            let sc = load(&common)?;
            let kind: OracleKind = oracle.parse()?;
            let cfg = SimConfig::new(sc.seed, samples.unwrap_or_else(|| default_samples(kind)));
            cfg.validate()?;
            let rows = simulate(&sc, kind, &cfg)?;
            write_comparison_csv(output(common.out.as_deref())?, &rows)?;
            let failed = rows.iter().filter(|r| r.pass == Some(false)).count();
            if failed > 0 {
                return Err(Failure::Oracle(failed));
            }
        }
        Command::CompareDeployment { common, total_sbs, gamma0 } => {
            let sc = load(&common)?;
            if total_sbs < sc.n_p() {
                return Err(UdnError::input(format!(
                    "--total-sbs ({total_sbs}) is smaller than the number of hot spots ({})",
                    sc.n_p()
                ))
                .into());
            }
            let grid = parse_range(&gamma0)?;
            let cmp = compare_deployment(&sc, total_sbs, &grid)?;
            match cmp.crossovers.as_slice() {
                [] => log::info!("no crossover on the grid"),
                cs => log::info!("crossover at gamma0 = {cs:?}"),
            }
            write_deployment_csv(output(common.out.as_deref())?, &cmp)?;
        }
        Command::Validate { scenario, seed } => {
            let sc = load_scenario_seeded(&scenario, seed)?;
            println!("ok: {} hot spots, seed {}", sc.n_p(), sc.seed);
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("UDN_LOG", "warn")).init();
    let cli = Cli::parse();
    match execute(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Model(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(match e.class() {
                ErrorClass::Input => EXIT_INPUT,
                ErrorClass::Numeric => EXIT_NUMERIC,
            })
        }
        Err(Failure::Oracle(n)) => {
            eprintln!("error: {n} oracle comparison(s) outside tolerance");
            ExitCode::from(EXIT_ORACLE)
        }
        Err(Failure::Other(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(EXIT_INPUT)
        }
    }
}
