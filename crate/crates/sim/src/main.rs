use std::num::NonZeroUsize;
use std::path::PathBuf;
use std::process::ExitCode;

use cascade_sim::{read_scenario, run_scenario, RunOptions, RunnerRegistry, SimError};
use clap::{Parser, Subcommand};

#[derive(Parser)]
#[command(name = "cascade-sim", version, about = "Dressed biexciton cascade simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a scenario and write CSV files plus a manifest.
    Run {
        scenario: PathBuf,
        /// Worker threads (default: available parallelism).
        #[arg(long)]
        jobs: Option<NonZeroUsize>,
        /// Output directory.
        #[arg(long, default_value = ".")]
        out: PathBuf,
    },
    /// Parse and validate a scenario without running it.
    Validate { scenario: PathBuf },
}

fn execute(cli: Cli) -> Result<(), SimError> {
    let registry = RunnerRegistry::standard();
    match cli.command {
        Command::Validate { scenario } => {
            let sc = read_scenario(&scenario, &registry)?;
            println!("{}: valid `{}` scenario", scenario.display(), sc.kind);
            for (k, v) in sc.resolved() {
                println!("  {k} = {v}");
            }
        }
        Command::Run { scenario, jobs, out } => {
            let sc = read_scenario(&scenario, &registry)?;
            let opts = RunOptions { jobs: jobs.map(NonZeroUsize::get), out_dir: out.clone(), source: Some(scenario) };
            let m = run_scenario(&sc, &registry, &opts)?;
            for note in &m.notes {
                eprintln!("note: {note}");
            }
            for f in &m.outputs {
                println!("{}", out.join(f).display());
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match execute(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
