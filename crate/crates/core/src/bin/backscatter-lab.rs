use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use backscatter_lab::lab::{load_scenario, run_scenario};

#[derive(Parser)]
#[command(name = "backscatter-lab", version, about = "Time-domain plane-wave scattering and backscatter experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a scenario and write its artifacts.
    Run {
        #[arg(long)]
        scenario: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Worker threads (default: all cores).
        #[arg(long)]
        threads: Option<usize>,
        /// Seed for the randomized property checks.
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Parse and validate a scenario without running it.
    Validate {
        #[arg(long)]
        scenario: PathBuf,
    },
}

fn main() -> ExitCode {
    match Cli::parse().command {
        Command::Validate { scenario } => match load_scenario(&scenario) {
            Ok(s) => {
                println!("{}: valid {:?} scenario (L = {}, h = {}, ε = {})", scenario.display(), s.file.kind, s.half_width, s.h, s.epsilon);
                ExitCode::SUCCESS
            }
            Err(e) => fail(e),
        },
        Command::Run { scenario, out, threads, seed } => {
            if let Some(n) = threads {
                if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n.max(1)).build_global() {
                    eprintln!("error: cannot size the thread pool: {e}");
                    return ExitCode::from(2);
                }
            }
            let summary = match load_scenario(&scenario).and_then(|s| run_scenario(&s, &out, seed)) {
                Ok(s) => s,
                Err(e) => return fail(e),
            };
            for c in &summary.checks {
                println!("{} {:<28} {:.4e} {} {:?}", if c.pass { "PASS" } else { "FAIL" }, c.name, c.value, c.comparison, c.tolerance);
            }
            println!("artifacts in {}", out.display());
            if summary.pass {
                ExitCode::SUCCESS
            } else {
                ExitCode::FAILURE
            }
        }
    }
}

fn fail(e: backscatter_lab::LabError) -> ExitCode {
    eprintln!("error: {e}");
    ExitCode::from(2)
}
