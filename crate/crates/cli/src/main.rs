use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use affectrl::experiments::{run_scenario, ExperimentError, RunOptions, BUILTIN_CONFIGS};
use affectrl::io::{annotate, load_config, plot_data, write_outputs, IoError};

/// Tabular TD learning agents with emotions derived from TD errors.
#[derive(Debug, Parser)]
#[command(name = "affectrl", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run a scenario config across its seeds and write traces and a summary.
    Run {
        /// Scenario config (JSON).
        #[arg(long)]
        config: PathBuf,
        /// Replace the config's seeds; repeat for several.
        #[arg(long = "seed")]
        seeds: Vec<u64>,
        /// Worker threads for seeds (default: logical cores).
        #[arg(long)]
        jobs: Option<usize>,
        /// Output directory (default: the config's output_dir, else runs/<name>).
        #[arg(long)]
        out: Option<PathBuf>,
        /// Also dump every imagined rollout as JSON.
        #[arg(long)]
        audit_rollouts: bool,
    },
    /// List the built-in scenarios.
    ListScenarios,
    /// Recompute emotion columns for a trace against a frozen snapshot.
    Annotate {
        #[arg(long)]
        trace: PathBuf,
        #[arg(long)]
        snapshot: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Extract one series of a run summary as x,mean,stdev CSV.
    PlotData {
        #[arg(long)]
        summary: PathBuf,
        #[arg(long)]
        series: String,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Debug, thiserror::Error)]
enum CliError {
    #[error(transparent)]
    Io(#[from] IoError),
    #[error(transparent)]
    Experiment(#[from] ExperimentError),
    #[error("cannot build worker pool: {0}")]
    Pool(#[from] rayon::ThreadPoolBuildError),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            Self::Io(e) if e.is_input_error() => 2,
            Self::Experiment(ExperimentError::InvalidConfig(_) | ExperimentError::WrongEnvironment { .. }) => 2,
            _ => 1,
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("AFFECTRL_LOG", "warn")).init();
    let cli = Cli::parse();
    match dispatch(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

fn dispatch(command: Command) -> Result<(), CliError> {
    match command {
        Command::Run {
            config,
            seeds,
            jobs,
            out,
            audit_rollouts,
        } => run(&config, seeds, jobs, out, audit_rollouts),
        Command::ListScenarios => {
            for (scenario, _) in BUILTIN_CONFIGS {
                println!(
                    "{:<12} {:<20} configs/{}.json  {}",
                    scenario.name(),
                    scenario.environment_kind(),
                    scenario.name(),
                    scenario.description()
                );
            }
            Ok(())
        }
        Command::Annotate { trace, snapshot, out } => {
            let n = annotate(&trace, &snapshot, &out)?;
            log::info!("annotated {n} rows into {}", out.display());
            Ok(())
        }
        Command::PlotData { summary, series, out } => {
            let n = plot_data(&summary, &series, &out)?;
            log::info!("wrote {n} points to {}", out.display());
            Ok(())
        }
    }
}

fn run(
    config: &Path,
    seeds: Vec<u64>,
    jobs: Option<usize>,
    out: Option<PathBuf>,
    audit_rollouts: bool,
) -> Result<(), CliError> {
    let mut cfg = load_config(config)?;
    if !seeds.is_empty() {
        cfg.seeds = seeds;
    }
    let out = out
        .or_else(|| cfg.output_dir.as_ref().map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("runs").join(&cfg.name));
    let pool = rayon::ThreadPoolBuilder::new().num_threads(jobs.unwrap_or(0)).build()?;
    let opts = RunOptions { audit_rollouts };
    let output = pool.install(|| run_scenario(&cfg, &opts))?;
    write_outputs(&out, &output, audit_rollouts)?;
    for (name, count) in &output.summary.orderings {
        println!("{name}: {}/{}", count.passed, count.total);
    }
    println!("summary written to {}", out.join("summary.json").display());
    Ok(())
}
