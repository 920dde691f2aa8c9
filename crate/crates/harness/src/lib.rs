//! Monte-Carlo harness: experiment plans, trial execution, CSV output,
//! plot specifications and the validation suites.

pub mod calibrate;
pub mod plan;
pub mod plots;
pub mod runner;
pub mod stats;
pub mod suites;

pub use plan::{ExperimentPlan, GridlessPlan};
pub use runner::{run_plan, write_outputs, AggregateRow, RunOutput, TrialRecord};

/// Environment variable that overrides the worker count.
pub const THREADS_ENV: &str = "INTCORR_THREADS";

#[derive(Debug, thiserror::Error)]
pub enum HarnessError {
    #[error("config error: {0}")]
    Config(String),
    #[error("schema error: {0}")]
    Schema(String),
    #[error("nothing to plot: the aggregate has no estimator rows")]
    Empty,
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Core(#[from] intcorr::Error),
}

impl HarnessError {
    pub fn exit_code(&self) -> i32 {
        match self {
            HarnessError::Config(_) | HarnessError::Schema(_) => 2,
            HarnessError::Empty => 4,
            HarnessError::Io(_) | HarnessError::Csv(_) | HarnessError::Core(_) => 1,
        }
    }
}

/// Worker count: the explicit value, else the environment override, else
/// what rayon picks.
pub fn resolve_threads(explicit: Option<usize>) -> Option<usize> {
    explicit.or_else(|| std::env::var(THREADS_ENV).ok().and_then(|v| v.trim().parse().ok()).filter(|&k| k > 0))
}
