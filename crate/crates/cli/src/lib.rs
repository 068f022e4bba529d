//! Scenario-driven experiment runner: parses scenario files, runs the named
//! experiments on top of `irs-core` and emits result tables.

pub mod experiments;
pub mod scenario;
pub mod table;

pub use experiments::{default_scenario, run_experiment, Experiment};
pub use scenario::{parse_scenario, parse_scenario_str, Scenario};
pub use table::{Format, ResultTable};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("scenario field `{field}`{}: {message}", line.map(|l| format!(" (line {l})")).unwrap_or_default())]
    Scenario {
        field: String,
        line: Option<usize>,
        message: String,
    },
    #[error("{0}")]
    Mismatch(String),
    #[error("unknown experiment `{0}`")]
    UnknownExperiment(String),
    #[error("{0}")]
    Io(String),
    #[error("table: {0}")]
    Table(String),
    #[error(transparent)]
    Core(#[from] irs_core::Error),
}

pub type Result<T> = std::result::Result<T, CliError>;

/// Least-squares slope of `ln y` against `ln x`.
pub fn loglog_slope(x: &[f64], y: &[f64]) -> f64 {
    let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    let n = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxy: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = lx.iter().map(|a| (a - mx).powi(2)).sum();
    sxy / sxx
}
