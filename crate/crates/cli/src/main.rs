use std::io::{ErrorKind, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use irs_sim::experiments::default_scenario;
use irs_sim::{parse_scenario, run_experiment, CliError, Experiment, Format};

#[derive(Parser)]
#[command(name = "irs-sim", version, about = "Run IRS deployment experiments")]
struct Cli {
    #[command(subcommand)]
    experiment: Command,
}

#[derive(Subcommand)]
enum Command {
    /// MIMO capacity vs transmit power with K panels sharing the elements
    Fig2(RunArgs),
    /// Centralized vs distributed sum-rate vs element count
    Fig3(RunArgs),
    /// Active/passive double-IRS orders vs element count, and element split
    Fig4(RunArgs),
    /// SNR over candidate IRS positions and the best position
    Placement(RunArgs),
    /// Worst-case area power: BS-side vs user-side panel, and D-MIMO
    Coverage(RunArgs),
    /// Best multi-hop reflection path and its per-hop breakdown
    Routing(RunArgs),
    /// RSRP CDFs and on/off improvement statistics from a measurement log
    Fieldtrial(RunArgs),
}

#[derive(Args)]
struct RunArgs {
    /// Scenario file (TOML); the bundled default is used when absent
    #[arg(long)]
    scenario: Option<PathBuf>,
    /// Output directory; tables go to stdout when absent
    #[arg(long)]
    out: Option<PathBuf>,
    /// Overrides the scenario seed
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads
    #[arg(long, default_value_t = 1)]
    jobs: usize,
    #[arg(long, value_enum, default_value_t = Format::Delimited)]
    format: Format,
    /// Print the normalized scenario and exit
    #[arg(long)]
    dump_scenario: bool,
}

fn run(experiment: Experiment, args: RunArgs) -> Result<(), CliError> {
    let mut scenario = match &args.scenario {
        Some(p) => parse_scenario(p)?,
        None => default_scenario(experiment),
    };
    if let Some(seed) = args.seed {
        scenario.seed = seed;
    }
    if args.dump_scenario {
        return stdout(&scenario.to_toml());
    }
    if args.jobs == 0 {
        return Err(CliError::Mismatch("--jobs must be at least 1".into()));
    }
    let base = args.scenario.as_ref().and_then(|p| p.parent().map(|d| d.to_path_buf()));
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(args.jobs)
        .build()
        .map_err(|e| CliError::Io(e.to_string()))?;
    let tables = pool.install(|| run_experiment(experiment, &scenario, base.as_deref()))?;
    match &args.out {
        Some(dir) => {
            std::fs::create_dir_all(dir).map_err(|e| CliError::Io(format!("{}: {e}", dir.display())))?;
            for t in &tables {
                let path = t.emit(dir, args.format)?;
                eprintln!("wrote {}", path.display());
            }
        }
        None => {
            let text: Vec<String> = tables.iter().map(|t| t.render(args.format)).collect();
            stdout(&(text.join("\n") + "\n"))?;
        }
    }
    Ok(())
}

// A closed pipe (e.g. `| head`) is not an error.
fn stdout(text: &str) -> Result<(), CliError> {
    match std::io::stdout().lock().write_all(text.as_bytes()) {
        Err(e) if e.kind() != ErrorKind::BrokenPipe => Err(CliError::Io(format!("stdout: {e}"))),
        _ => Ok(()),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (experiment, args) = match cli.experiment {
        Command::Fig2(a) => (Experiment::Fig2, a),
        Command::Fig3(a) => (Experiment::Fig3, a),
        Command::Fig4(a) => (Experiment::Fig4, a),
        Command::Placement(a) => (Experiment::Placement, a),
        Command::Coverage(a) => (Experiment::Coverage, a),
        Command::Routing(a) => (Experiment::Routing, a),
        Command::Fieldtrial(a) => (Experiment::Fieldtrial, a),
    };
    match run(experiment, args) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
