use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use belavkin_lab::runner::{self, Command, RunOptions, THREADS_ENV};
use clap::{Parser, Subcommand};

/// Discrete quantum trajectories, their diffusive limits and convergence
/// experiments, driven by JSON scenario files.
#[derive(Parser)]
#[command(name = "belavkin-lab", version)]
struct Cli {
    #[command(subcommand)]
    command: Cmd,

    /// Override the scenario seed.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Directory for result files (default: output.dir, else ./belavkin-out).
    #[arg(long, global = true)]
    out_dir: Option<PathBuf>,

    /// Omit timestamps and wall-clock fields so reruns are byte-identical.
    #[arg(long, global = true)]
    deterministic: bool,

    /// Worker threads for replications.
    #[arg(long, global = true, env = THREADS_ENV)]
    threads: Option<usize>,

    /// Print nothing on success.
    #[arg(long, short, global = true)]
    quiet: bool,
}

#[derive(Subcommand)]
enum Cmd {
    /// Sample discrete trajectories.
    Simulate { config: PathBuf },
    /// Integrate the limiting SDE with Euler–Maruyama.
    Integrate { config: PathBuf },
    /// Run the experiment block and write a report.
    Experiment { config: PathBuf },
    /// Dump the measurement constants of the model.
    Constants { config: PathBuf },
    /// Check the scenario and model assumptions only.
    Validate { config: PathBuf },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (command, config) = match cli.command {
        Cmd::Simulate { config } => (Command::Simulate, config),
        Cmd::Integrate { config } => (Command::Integrate, config),
        Cmd::Experiment { config } => (Command::Experiment, config),
        Cmd::Constants { config } => (Command::Constants, config),
        Cmd::Validate { config } => (Command::Validate, config),
    };
    let options = RunOptions {
        seed: cli.seed,
        out_dir: cli.out_dir,
        deterministic: cli.deterministic,
        threads: cli.threads,
        quiet: cli.quiet,
    };
    let outcome = runner::run(command, &config, &options);
    if !outcome.stdout.is_empty() {
        print!("{}", outcome.stdout);
        let _ = std::io::stdout().flush();
    }
    if let Some(err) = &outcome.error_json {
        eprintln!("{err}");
    }
    ExitCode::from(outcome.exit_code as u8)
}
