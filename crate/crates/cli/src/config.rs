//! Experiment configuration and the benchmark defaults.

use std::path::PathBuf;

use kbk_core::kbk::EmConfig;
use kbk_core::sim::{BenchmarkSystem, Observable};
use thiserror::Error;

/// RK4 substeps per sample period used throughout the benchmarks.
pub const DEFAULT_SUBSTEPS: usize = 10;

/// Noise variances swept in the benchmark protocol.
pub const DEFAULT_NOISE_VARIANCES: [f64; 4] = [1e-4, 1e-3, 1e-2, 1e-1];

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("invalid configuration: {0}")]
    Invalid(String),
    #[error("unknown system '{0}' (expected real, imaginary, or complex)")]
    UnknownSystem(String),
    #[error("unknown observable '{0}' (expected x1 or x2)")]
    UnknownObservable(String),
    #[error("unknown method '{0}' (expected dmd, tdmd, fbdmd, or kbk)")]
    UnknownMethod(String),
    #[error("ground-truth simulation failed: {0}")]
    Simulation(String),
}

/// Identification methods the harness can run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Method {
    Dmd,
    Tdmd,
    Fbdmd,
    Kbk,
}

impl Method {
    pub const ALL: [Method; 4] = [Method::Dmd, Method::Tdmd, Method::Fbdmd, Method::Kbk];

    pub fn as_str(self) -> &'static str {
        match self {
            Method::Dmd => "dmd",
            Method::Tdmd => "tdmd",
            Method::Fbdmd => "fbdmd",
            Method::Kbk => "kbk",
        }
    }

    pub fn parse(s: &str) -> Result<Self, ConfigError> {
        match s.trim().to_ascii_lowercase().as_str() {
            "dmd" => Ok(Method::Dmd),
            "tdmd" => Ok(Method::Tdmd),
            "fbdmd" => Ok(Method::Fbdmd),
            "kbk" => Ok(Method::Kbk),
            other => Err(ConfigError::UnknownMethod(other.to_string())),
        }
    }

    /// Canonical ordering used when sorting records.
    pub fn order(self) -> usize {
        Method::ALL.iter().position(|&m| m == self).unwrap()
    }
}

pub fn parse_system(s: &str) -> Result<BenchmarkSystem, ConfigError> {
    match s.trim().to_ascii_lowercase().as_str() {
        "real" | "real-spectrum" => Ok(BenchmarkSystem::RealSpectrum),
        "imaginary" | "imaginary-spectrum" => Ok(BenchmarkSystem::ImaginarySpectrum),
        "complex" | "complex-spectrum" => Ok(BenchmarkSystem::ComplexSpectrum),
        other => Err(ConfigError::UnknownSystem(other.to_string())),
    }
}

pub fn parse_observable(s: &str) -> Result<Observable, ConfigError> {
    match s.trim().to_ascii_lowercase().as_str() {
        "x1" => Ok(Observable::X1),
        "x2" => Ok(Observable::X2),
        other => Err(ConfigError::UnknownObservable(other.to_string())),
    }
}

/// Fully resolved experiment description. Everything an output file depends
/// on lives here; two runs with equal configs produce identical artifacts.
#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    pub system: BenchmarkSystem,
    pub n_samples: usize,
    pub sample_period: f64,
    pub block_len: usize,
    pub observable: Observable,
    pub initial_condition: [f64; 2],
    pub noise_variances: Vec<f64>,
    pub trials: usize,
    pub methods: Vec<Method>,
    pub seed: u64,
    pub em: EmConfig,
    pub substeps: usize,
    pub output_dir: PathBuf,
}

impl ExperimentConfig {
    /// Benchmark configuration for one system: sample counts, periods, and
    /// block length from the reference protocol, the full noise sweep, 50
    /// trials, and all four methods.
    pub fn paper_default(system: BenchmarkSystem) -> Self {
        let (n_samples, sample_period) = match system {
            BenchmarkSystem::RealSpectrum => (30, 0.2),
            BenchmarkSystem::ImaginarySpectrum => (60, 0.1),
            BenchmarkSystem::ComplexSpectrum => (200, 0.1),
        };
        Self {
            system,
            n_samples,
            sample_period,
            block_len: 4,
            observable: system.default_observable(),
            initial_condition: system.default_initial_condition(),
            noise_variances: DEFAULT_NOISE_VARIANCES.to_vec(),
            trials: 50,
            methods: Method::ALL.to_vec(),
            seed: 1,
            em: EmConfig::default(),
            substeps: DEFAULT_SUBSTEPS,
            output_dir: PathBuf::from("kbk-results"),
        }
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let invalid = |msg: String| Err(ConfigError::Invalid(msg));
        if self.block_len < 2 {
            return invalid(format!("block length must be at least 2, got {}", self.block_len));
        }
        if self.n_samples < 2 * self.block_len {
            return invalid(format!(
                "need at least 2*block_len = {} samples, got {}",
                2 * self.block_len,
                self.n_samples
            ));
        }
        if !(self.sample_period > 0.0 && self.sample_period.is_finite()) {
            return invalid(format!("sample period must be positive, got {}", self.sample_period));
        }
        if self.trials < 1 {
            return invalid("at least one trial required".into());
        }
        if self.methods.is_empty() {
            return invalid("at least one method required".into());
        }
        let mut seen = std::collections::HashSet::new();
        if !self.methods.iter().all(|m| seen.insert(*m)) {
            return invalid("duplicate methods in configuration".into());
        }
        if self.noise_variances.is_empty() {
            return invalid("at least one noise variance required".into());
        }
        if self
            .noise_variances
            .iter()
            .any(|v| !(v.is_finite() && *v >= 0.0))
        {
            return invalid("noise variances must be finite and non-negative".into());
        }
        if self.initial_condition.iter().any(|x| !x.is_finite()) {
            return invalid("initial condition must be finite".into());
        }
        if self.substeps < 1 {
            return invalid("substeps must be at least 1".into());
        }
        if self.em.max_iterations < 1 {
            return invalid("EM iteration budget must be at least 1".into());
        }
        if !(self.em.likelihood_rel_tol > 0.0) {
            return invalid("EM tolerance must be positive".into());
        }
        if !(self.em.cov_floor > 0.0) {
            return invalid("covariance floor must be positive".into());
        }
        Ok(())
    }
}

/// The three benchmark configurations.
pub fn default_configs() -> [ExperimentConfig; 3] {
    [
        ExperimentConfig::paper_default(BenchmarkSystem::RealSpectrum),
        ExperimentConfig::paper_default(BenchmarkSystem::ImaginarySpectrum),
        ExperimentConfig::paper_default(BenchmarkSystem::ComplexSpectrum),
    ]
}
