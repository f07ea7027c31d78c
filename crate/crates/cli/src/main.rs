use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use gsw_core::scenario::{run, RunOptions, Scenario};

#[derive(Parser)]
#[command(name = "gsw", version, about = "Run weight-family and seminorm verification scenarios")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Execute the jobs of a scenario file.
    Run {
        file: PathBuf,
        /// Worker threads.
        #[arg(long, default_value_t = 1)]
        jobs: usize,
        /// Seed for random test points (decimal or 0x-prefixed hex).
        #[arg(long, value_parser = parse_seed)]
        seed: Option<u64>,
        /// Output directory; overrides the scenario's `output`.
        #[arg(long)]
        out: Option<PathBuf>,
        /// List jobs without executing them.
        #[arg(long)]
        list: bool,
        /// Multiplies all truncation budgets and grid densities.
        #[arg(long)]
        budget_scale: Option<f64>,
    },
}

fn parse_seed(s: &str) -> Result<u64, String> {
    let r = match s.strip_prefix("0x").or_else(|| s.strip_prefix("0X")) {
        Some(hex) => u64::from_str_radix(hex, 16),
        None => s.parse(),
    };
    r.map_err(|e| format!("invalid seed `{s}`: {e}"))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let Command::Run {
        file,
        jobs,
        seed,
        out,
        list,
        budget_scale,
    } = cli.command;

    let scenario = match Scenario::load(&file) {
        Ok(s) => s,
        Err(e) => {
            eprintln!("error: {}: {e}", file.display());
            return ExitCode::from(2);
        }
    };
    if list {
        for (id, kind) in scenario.list() {
            println!("{id}\t{kind}");
        }
        println!("{} jobs", scenario.jobs.len());
        return ExitCode::SUCCESS;
    }
    let opts = RunOptions {
        jobs,
        seed,
        budget_scale,
        out,
    };
    match run(&scenario, &opts) {
        Ok(summary) => {
            for o in summary.outcomes.iter().filter(|o| !o.pass) {
                eprintln!("FAIL {}", o.message.as_deref().unwrap_or(&o.id));
            }
            let passed = summary.outcomes.iter().filter(|o| o.pass).count();
            println!("{passed}/{} jobs passed; artifacts in {}", summary.outcomes.len(), summary.out_dir.display());
            ExitCode::from(summary.exit_code() as u8)
        }
        // Config problems and unwritable output directories both end here.
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
