use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use ramsey_qa_cli::commands::{self, TraceOptions};
use ramsey_qa_cli::CliError;
use ramsey_qa_core::TraceStart;

#[derive(Parser)]
#[command(
    name = "ramsey-qa",
    version,
    about = "Ramsey interferometry on a quantum annealing schedule"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Sweep, transform and analyze every anneal time in the configuration.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Output directory; overrides the configuration and the environment.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Worker threads.
        #[arg(long, value_parser = clap::value_parser!(u16).range(1..))]
        jobs: Option<u16>,
    },
    /// Print eigenvalues and pairwise gaps of the problem Hamiltonian.
    Oracle {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Record instantaneous eigen-populations along one protocol run.
    Trace {
        #[arg(long)]
        config: PathBuf,
        /// Hold time in ns.
        #[arg(long, allow_negative_numbers = true)]
        tau: f64,
        /// Anneal time in ns; defaults to every value in the configuration.
        #[arg(long)]
        anneal: Option<f64>,
        /// Sampling stride in ns.
        #[arg(long)]
        stride: Option<f64>,
        #[arg(long, value_enum, default_value_t = Start::Superposition)]
        start: Start,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Start {
    /// Equal superposition of the two lowest driver levels.
    Superposition,
    /// Driver ground state.
    Ground,
}

fn execute(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Run { config, out, jobs } => {
            let loaded = commands::load_config(&config, out.as_deref())?;
            let report = commands::run(&loaded, jobs.map(usize::from))?;
            print!("{}", commands::format_run(&report));
            println!(
                "wrote {}",
                loaded
                    .config
                    .output
                    .dir
                    .join(commands::REPORT_FILE)
                    .display()
            );
        }
        Command::Oracle { config, out } => {
            let loaded = commands::load_config(&config, out.as_deref())?;
            let (report, path) = commands::oracle(&loaded)?;
            print!("{}", commands::format_oracle(&report));
            println!("wrote {}", path.display());
        }
        Command::Trace {
            config,
            tau,
            anneal,
            stride,
            start,
            out,
        } => {
            let loaded = commands::load_config(&config, out.as_deref())?;
            let opts = TraceOptions {
                tau_ns: tau,
                anneal_ns: anneal,
                stride,
                start: match start {
                    Start::Superposition => TraceStart::Superposition,
                    Start::Ground => TraceStart::DriverGround,
                },
            };
            for result in commands::trace_run(&loaded, &opts)? {
                if let Some(p) = result.at_anneal_end() {
                    let pops: Vec<String> = p
                        .populations
                        .values
                        .iter()
                        .map(|v| format!("{v:.4}"))
                        .collect();
                    println!(
                        "T = {} ns: populations at t = T: [{}]",
                        result.anneal_ns,
                        pops.join(", ")
                    );
                }
                println!("wrote {}", result.path.display());
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
