//! Configuration-driven Monte-Carlo experiment runner with CSV
//! persistence, aggregation and SVG plot emission.
//!
//! Experiments are described by a TOML file (unknown keys are hard
//! errors), run deterministically from a seed with one RNG stream per
//! (grid point, trial, purpose), and append rows to the output CSV as each
//! grid point completes so partial files are valid prefixes.

pub mod config;
pub mod plot;
pub mod runner;
pub mod summary;

pub use config::{
    resolve, EstimatorSpec, ExperimentConfig, ExperimentKind, GridPoint, MetricKind, ResolvedPlan,
};
pub use plot::{emit_plot, PlotSpec};
pub use runner::{run, run_plan};
pub use summary::{read_rows, summarize, write_rows, write_summary, SummaryRow};

use std::fmt;

#[derive(Debug)]
pub enum HarnessError {
    /// Configuration problem; the message names the offending field.
    Config(String),
    /// No rows to aggregate or plot.
    Empty,
    Io(std::io::Error),
    Csv(csv::Error),
    Run(String),
}

impl fmt::Display for HarnessError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            HarnessError::Config(msg) => write!(f, "config error: {msg}"),
            HarnessError::Empty => write!(f, "no data"),
            HarnessError::Io(e) => write!(f, "io error: {e}"),
            HarnessError::Csv(e) => write!(f, "csv error: {e}"),
            HarnessError::Run(msg) => write!(f, "run error: {msg}"),
        }
    }
}

impl std::error::Error for HarnessError {}

impl From<std::io::Error> for HarnessError {
    fn from(e: std::io::Error) -> Self {
        HarnessError::Io(e)
    }
}

impl From<csv::Error> for HarnessError {
    fn from(e: csv::Error) -> Self {
        HarnessError::Csv(e)
    }
}

/// One measurement: a (grid point, trial, estimator, metric) cell plus the
/// resolved tuning constants that produced it.
#[derive(Debug, Clone, PartialEq)]
pub struct ResultRow {
    pub experiment: String,
    pub trial: u64,
    pub grid: String,
    pub estimator: String,
    pub metric: String,
    pub value: f64,
    pub wall_ms: f64,
    /// `key=value` pairs joined by `;` — every resolved constant shows up
    /// here, never a silent default.
    pub metadata: String,
}

/// Builds the metadata field; values are sanitized so the CSV stays
/// comma-free.
pub fn metadata_string(pairs: &[(&str, String)]) -> String {
    pairs
        .iter()
        .map(|(k, v)| format!("{k}={}", v.replace([',', '\n', ';'], " ")))
        .collect::<Vec<_>>()
        .join(";")
}

/// Worker count for trial-level parallelism: the COVEST_WORKERS
/// environment variable, else the machine's available parallelism.
pub fn worker_count() -> usize {
    if let Ok(v) = std::env::var("COVEST_WORKERS") {
        if let Ok(n) = v.trim().parse::<usize>() {
            return n.max(1);
        }
    }
    std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1)
}
