//! Experiment runner: configuration, orchestration, and CSV output.

mod config;
mod run;
mod summarize;

pub use config::{Algorithm, AneSearchConfig, ExperimentConfig, ExperimentKind, OUTPUT_DIR_VAR};
pub use run::{
    cartpole_sim_policy, run_experiment, write_csv, write_outputs, DiagnosticRow, ExperimentOutput,
    ResultRow,
};
pub use summarize::{summarize, summarize_reader, Summary, SummaryRow};

/// The canonical cliff-walking sweep over slip probabilities.
pub fn fig5_config() -> ExperimentConfig {
    ExperimentConfig::preset(ExperimentKind::CliffSweep)
}
