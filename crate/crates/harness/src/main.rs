use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use lstd_core::verification::{generate_problem, GeneratorSpec};
use lstd_harness::{output, run_experiment, verify, ExperimentConfig, HarnessError, Result};

#[derive(Parser)]
#[command(name = "lstd", version, about = "LSTD experiments, verification suite and problem generator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the estimators of a config over its sample-size grid.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Write results here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run verification checks and print one JSON report per line.
    Verify {
        /// Comma-separated check ids, or `all`.
        #[arg(long, default_value = "all")]
        suite: String,
        #[arg(long, default_value_t = 200)]
        count: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Generate a random problem and write it as JSON.
    Generate {
        #[arg(long)]
        states: usize,
        #[arg(long)]
        features: usize,
        #[arg(long, default_value_t = 0)]
        transient: usize,
        #[arg(long)]
        discount: Option<f64>,
        /// Identity features (requires features == states).
        #[arg(long)]
        tabular: bool,
        #[arg(long)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("lstd: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn sink(out: Option<&Path>) -> Result<Box<dyn Write>> {
    Ok(match out {
        Some(path) => Box::new(BufWriter::new(File::create(path)?)),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn dispatch(command: Command) -> Result<()> {
    match command {
        Command::Run { config, out } => {
            let (cfg, base) = ExperimentConfig::from_file(&config)?;
            let problem = cfg.load_problem(&base)?;
            let outcome = run_experiment(&cfg, &problem)?;
            let mut w = sink(out.as_deref())?;
            output::write_rows(&outcome.rows, cfg.output, &mut w)?;
            w.flush()?;
            for f in &outcome.failures {
                eprintln!("lstd: {f}");
            }
            match outcome.failures.len() {
                0 => Ok(()),
                n => Err(HarnessError::Numeric(format!("{n} runs failed"))),
            }
        }
        Command::Verify { suite, count, seed, out } => {
            let ids = verify::parse_suite(&suite)?;
            let reports = verify::run_suite(&ids, seed, count)?;
            let mut w = sink(out.as_deref())?;
            verify::write_reports(&reports, &mut w)?;
            verify::verdict(&reports)
        }
        Command::Generate { states, features, transient, discount, tabular, seed, out } => {
            let spec = GeneratorSpec { states, features, transient, discount, tabular };
            spec.validate().map_err(HarnessError::from_core)?;
            let inst = generate_problem(&spec, seed).map_err(HarnessError::from_core)?;
            std::fs::write(&out, inst.document().to_json() + "\n")?;
            Ok(())
        }
    }
}
