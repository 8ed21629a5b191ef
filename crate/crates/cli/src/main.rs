use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use hypertrain::config::Overrides;
use hypertrain::error::EXIT_NUMERIC;
use hypertrain::gradcheck::DEFAULT_POINTS;
use hypertrain::runner;

#[derive(Parser)]
#[command(name = "hypertrain", version, about = "Hyperparameter optimization through hypernetworks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the experiment described by a JSON config.
    Run {
        config: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Use the local sampler with variance 1e-5 (joint runs only).
        #[arg(long = "paper-sigma")]
        narrow_sigma: bool,
    },
    /// Compare GP and hypernet validation-loss surrogates.
    Compare {
        config: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Check every analytic gradient against central differences.
    Gradcheck {
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, default_value_t = DEFAULT_POINTS)]
        points: usize,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run { config, seed, out, narrow_sigma } => {
            runner::run(&config, &Overrides { seed, out, narrow_sigma }).map(|s| {
                println!("{}", serde_json::to_string_pretty(&s.outcome).expect("serializable"));
                true
            })
        }
        Command::Compare { config, seed, out } => {
            runner::compare(&config, &Overrides { seed, out, narrow_sigma: false }).map(|s| {
                println!("{}", serde_json::to_string_pretty(&s.outcome).expect("serializable"));
                true
            })
        }
        Command::Gradcheck { seed, out, points } => runner::gradcheck(seed, points, out).map(|r| {
            for c in &r.cases {
                println!("{:<48} max rel error {:.3e}", c.name, c.max_rel_error);
            }
            println!(
                "{}: max rel error {:.3e} (tolerance {:.0e})",
                if r.passed { "PASS" } else { "FAIL" },
                r.max_rel_error,
                r.tolerance
            );
            r.passed
        }),
    };
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(EXIT_NUMERIC as u8),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
