//! Experiment harness: sweep noise levels and trials over the benchmark
//! systems, run every configured identification method on identical noisy
//! data, score eigenvalue and reconstruction errors, and emit deterministic
//! CSV/JSON artifacts.

pub mod config;
pub mod output;
pub mod report;
pub mod runner;

pub use config::{default_configs, ConfigError, ExperimentConfig, Method};
pub use report::{summarize, SummaryRow};
pub use runner::{run_experiment, TrialRecord};
