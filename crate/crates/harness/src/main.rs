use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use intcorr_harness::plots::write_plots;
use intcorr_harness::suites::Suite;
use intcorr_harness::{resolve_threads, run_plan, write_outputs, ExperimentPlan, HarnessError};

/// Interference correlation estimation experiments.
#[derive(Parser)]
#[command(name = "intcorr", version)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Run a Monte-Carlo plan and write the CSV outputs.
    Run {
        #[arg(long)]
        plan: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Worker threads; INTCORR_THREADS is used when absent.
        #[arg(long)]
        threads: Option<usize>,
        /// Overrides the seed of the plan's scenario.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Write plot specifications from a run directory.
    Plots {
        #[arg(long = "in")]
        input: PathBuf,
    },
    /// Run a validation suite.
    Validate {
        #[arg(long, value_parser = ["mse-analysis", "appendix", "recovery"])]
        suite: String,
        #[arg(long, default_value_t = 1)]
        seed: u64,
    },
}

fn run(cli: Cli) -> Result<u8, HarnessError> {
    match cli.cmd {
        Cmd::Run { plan, out, threads, seed } => {
            let plan = ExperimentPlan::from_file(&plan)?;
            let result = run_plan(&plan, seed, resolve_threads(threads))?;
            write_outputs(&result, &out)?;
            let failed = result.failures();
            if failed > 0 {
                eprintln!("{failed} of {} estimator runs failed; see trials.csv", result.records.len());
                return Ok(3);
            }
            Ok(0)
        }
        Cmd::Plots { input } => {
            for p in write_plots(&input)? {
                println!("{}", p.display());
            }
            Ok(0)
        }
        Cmd::Validate { suite, seed } => {
            let suite = Suite::parse(&suite).ok_or_else(|| HarnessError::Config(format!("unknown suite {suite}")))?;
            let results = suite.run(seed)?;
            for r in &results {
                println!("{r}");
            }
            Ok(if results.iter().all(|r| r.pass) { 0 } else { 1 })
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
