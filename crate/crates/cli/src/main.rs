//! `kbk` — benchmark Koopman spectrum identification under measurement noise.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;

use kbk_cli::config::{parse_observable, parse_system, ConfigError, ExperimentConfig, Method};
use kbk_cli::output::write_outputs;
use kbk_cli::report::{format_table, summarize};
use kbk_cli::runner::run_experiment;

/// Generate noisy benchmark trajectories, identify the lifted linear model
/// with DMD variants and the EM-smoothed estimator, and write eigenvalue and
/// reconstruction errors as CSV.
#[derive(Debug, Parser)]
#[command(name = "kbk", version, about)]
struct Cli {
    /// Load the full benchmark configuration for a system
    /// (real | imaginary | complex); other flags override individual fields.
    #[arg(long, value_name = "SYSTEM")]
    paper_defaults: Option<String>,

    /// Benchmark system (real | imaginary | complex).
    #[arg(long, value_name = "SYSTEM")]
    system: Option<String>,

    /// Number of trajectory samples.
    #[arg(long, value_name = "N")]
    n: Option<usize>,

    /// Sample period.
    #[arg(long, value_name = "SECONDS")]
    ts: Option<f64>,

    /// Delay-block length.
    #[arg(long, value_name = "M")]
    m: Option<usize>,

    /// Scalar observable (x1 | x2).
    #[arg(long, value_name = "COORD")]
    observable: Option<String>,

    /// Comma-separated noise variances, e.g. "1e-4,1e-3,1e-2,1e-1".
    #[arg(long, value_name = "LIST")]
    noise_vars: Option<String>,

    /// Trials per noise level.
    #[arg(long, value_name = "COUNT")]
    trials: Option<usize>,

    /// Comma-separated subset of dmd,tdmd,fbdmd,kbk.
    #[arg(long, value_name = "LIST")]
    methods: Option<String>,

    /// Base seed for the deterministic noise streams.
    #[arg(long, value_name = "SEED")]
    seed: Option<u64>,

    /// Output directory for results.csv, eigs.csv, metadata.json.
    #[arg(long, value_name = "DIR", default_value = "kbk-results")]
    out: PathBuf,

    /// EM iteration budget.
    #[arg(long, value_name = "COUNT")]
    em_max_iters: Option<usize>,

    /// EM relative log-likelihood tolerance.
    #[arg(long, value_name = "TOL")]
    em_tol: Option<f64>,

    /// Use dense noise-covariance updates instead of the diagonal projection.
    #[arg(long)]
    dense_covariances: bool,

    /// Initial condition override as "x1,x2".
    #[arg(long, value_name = "X1,X2")]
    x0: Option<String>,
}

fn parse_f64_list(raw: &str, what: &str) -> Result<Vec<f64>, ConfigError> {
    raw.split(',')
        .map(|piece| {
            piece
                .trim()
                .parse::<f64>()
                .map_err(|_| ConfigError::Invalid(format!("bad {what} entry '{piece}'")))
        })
        .collect()
}

fn build_config(cli: &Cli) -> Result<ExperimentConfig, ConfigError> {
    let system = match (&cli.paper_defaults, &cli.system) {
        (Some(p), Some(s)) => {
            let (a, b) = (parse_system(p)?, parse_system(s)?);
            if a != b {
                return Err(ConfigError::Invalid(format!(
                    "--paper-defaults {p} conflicts with --system {s}"
                )));
            }
            a
        }
        (Some(p), None) => parse_system(p)?,
        (None, Some(s)) => parse_system(s)?,
        (None, None) => {
            return Err(ConfigError::Invalid(
                "specify --system or --paper-defaults".into(),
            ))
        }
    };

    let mut config = ExperimentConfig::paper_default(system);
    if let Some(n) = cli.n {
        config.n_samples = n;
    }
    if let Some(ts) = cli.ts {
        config.sample_period = ts;
    }
    if let Some(m) = cli.m {
        config.block_len = m;
    }
    if let Some(obs) = &cli.observable {
        config.observable = parse_observable(obs)?;
    }
    if let Some(raw) = &cli.noise_vars {
        config.noise_variances = parse_f64_list(raw, "noise variance")?;
    }
    if let Some(trials) = cli.trials {
        config.trials = trials;
    }
    if let Some(raw) = &cli.methods {
        config.methods = raw
            .split(',')
            .map(Method::parse)
            .collect::<Result<Vec<_>, _>>()?;
    }
    if let Some(seed) = cli.seed {
        config.seed = seed;
    }
    if let Some(iters) = cli.em_max_iters {
        config.em.max_iterations = iters;
    }
    if let Some(tol) = cli.em_tol {
        config.em.likelihood_rel_tol = tol;
    }
    if cli.dense_covariances {
        config.em.diagonal_covariances = false;
    }
    if let Some(raw) = &cli.x0 {
        let parts = parse_f64_list(raw, "initial condition")?;
        if parts.len() != 2 {
            return Err(ConfigError::Invalid(
                "--x0 expects exactly two comma-separated values".into(),
            ));
        }
        config.initial_condition = [parts[0], parts[1]];
    }
    config.output_dir = cli.out.clone();
    config.validate()?;
    Ok(config)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();

    let config = match build_config(&cli) {
        Ok(config) => config,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    };

    let started = std::time::Instant::now();
    let records = match run_experiment(&config) {
        Ok(records) => records,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    };

    let paths = match write_outputs(&config, &records) {
        Ok(paths) => paths,
        Err(e) => {
            eprintln!("error: failed to write outputs: {e}");
            return ExitCode::from(2);
        }
    };

    print!("{}", format_table(&summarize(&records)));
    for path in &paths {
        eprintln!("wrote {}", path.display());
    }
    let failures = records.iter().filter(|r| r.failed).count();
    let kbk_ms: f64 = records
        .iter()
        .filter(|r| r.method == Method::Kbk)
        .map(|r| r.runtime_ms)
        .sum();
    eprintln!(
        "ran {} records in {:.1}s (kbk fits: {:.1}s); {} failed",
        records.len(),
        started.elapsed().as_secs_f64(),
        kbk_ms / 1e3,
        failures
    );
    if failures > 0 {
        for record in records.iter().filter(|r| r.failed) {
            eprintln!(
                "failed: {} {} var={:.1e} trial={}: {}",
                record.system.name(),
                record.method.as_str(),
                record.noise_variance,
                record.trial,
                record.failure.as_deref().unwrap_or("unknown")
            );
        }
        return ExitCode::from(1);
    }
    ExitCode::SUCCESS
}
