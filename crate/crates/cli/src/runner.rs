//! The sweep driver: one shared noisy dataset per (variance, trial) cell,
//! every method scored on it, failures recorded without aborting.

use std::time::Instant;

use kbk_core::baselines::{self, SnapshotPairs};
use kbk_core::embed::{build_blocks, BlockData};
use kbk_core::kbk::{default_init, em_fit};
use kbk_core::rng::{derive_trial_seed, splitmix64};
use kbk_core::sim::{add_noise, integrate, NoiseSpec};
use kbk_core::spectrum::{self, eig_error, state_rmse};
use kbk_core::Complex;

use crate::config::{ConfigError, ExperimentConfig, Method};

/// Outcome of one method on one noisy dataset.
#[derive(Debug, Clone)]
pub struct TrialRecord {
    pub system: kbk_core::sim::BenchmarkSystem,
    pub method: Method,
    pub noise_variance: f64,
    pub variance_index: usize,
    pub trial: usize,
    pub seed_used: u64,
    pub e1: f64,
    pub e2: f64,
    /// EM iterations (zero for the one-shot baselines).
    pub iterations: usize,
    /// Measured wall time. Kept out of the deterministic output files.
    pub runtime_ms: f64,
    /// Selected dominant continuous-time eigenvalues.
    pub continuous_eigs: Vec<Complex<f64>>,
    pub failed: bool,
    pub failure: Option<String>,
}

struct MethodOutcome {
    e1: f64,
    e2: f64,
    iterations: usize,
    continuous_eigs: Vec<Complex<f64>>,
}

/// Bit-exact fingerprint of a series, used to assert that every method in a
/// trial consumes identical data.
fn series_fingerprint(series: &[f64]) -> u64 {
    series
        .iter()
        .fold(0xA076_1D64_78BD_642Fu64, |acc, x| {
            splitmix64(acc ^ x.to_bits())
        })
}

fn run_method(
    method: Method,
    data: &BlockData,
    truth_span: &[f64],
    config: &ExperimentConfig,
) -> Result<MethodOutcome, String> {
    let n_dominant = config.system.true_eigenvalues().len();

    let (transition, estimate, iterations) = match method {
        Method::Kbk => {
            let init = default_init(data).map_err(|e| e.to_string())?;
            let (model, posterior, trace) =
                em_fit(data, &config.em, init).map_err(|e| e.to_string())?;
            let mut estimate = Vec::with_capacity(truth_span.len());
            for mean in &posterior.means {
                estimate.extend(mean.iter().copied());
            }
            (model.transition, estimate, trace.iterations.len())
        }
        baseline => {
            let pairs = SnapshotPairs::from_blocks(data).map_err(|e| e.to_string())?;
            let a = match baseline {
                Method::Dmd => baselines::dmd(&pairs),
                Method::Tdmd => baselines::tdmd(&pairs),
                Method::Fbdmd => baselines::fbdmd(&pairs),
                Method::Kbk => unreachable!(),
            }
            .map_err(|e| e.to_string())?;

            // One-step reconstruction: roll the model forward from the
            // first (noisy) block.
            let mut estimate = Vec::with_capacity(truth_span.len());
            let mut z = data.block(0).clone();
            estimate.extend(z.iter().copied());
            for _ in 1..data.q() {
                z = &a * z;
                estimate.extend(z.iter().copied());
            }
            (a, estimate, 0)
        }
    };

    let spectrum_result = spectrum::analyze(
        &transition,
        config.block_len,
        config.sample_period,
        n_dominant,
    )
    .map_err(|e| e.to_string())?;
    let e1 = eig_error(&spectrum_result.continuous, &config.system.true_eigenvalues())
        .map_err(|e| e.to_string())?;
    let e2 = state_rmse(&estimate, truth_span).map_err(|e| e.to_string())?;

    Ok(MethodOutcome {
        e1,
        e2,
        iterations,
        continuous_eigs: spectrum_result.continuous,
    })
}

/// Run the full sweep. Within each (variance, trial) cell all methods see
/// the same noisy series, with the per-trial seed derived deterministically
/// from `(base seed, variance index, trial index)`. Method failures are
/// recorded in the trial's record; they never abort the sweep.
pub fn run_experiment(config: &ExperimentConfig) -> Result<Vec<TrialRecord>, ConfigError> {
    config.validate()?;

    let trajectory = integrate(
        config.system,
        config.initial_condition,
        config.sample_period,
        config.n_samples,
        config.substeps,
    )
    .map_err(|e| ConfigError::Simulation(e.to_string()))?;
    let truth_series = trajectory.observable_series(config.observable);

    let mut records = Vec::with_capacity(
        config.noise_variances.len() * config.trials * config.methods.len(),
    );

    for (variance_index, &variance) in config.noise_variances.iter().enumerate() {
        for trial in 0..config.trials {
            let seed_used = derive_trial_seed(config.seed, variance_index, trial);
            let noisy = add_noise(
                &trajectory,
                &NoiseSpec {
                    variance,
                    seed: seed_used,
                },
            );
            let noisy_series = noisy.observable_series(config.observable);
            let fingerprint = series_fingerprint(&noisy_series);

            let block_result =
                build_blocks(&noisy_series, config.block_len, config.sample_period);

            for &method in &config.methods {
                assert_eq!(
                    series_fingerprint(&noisy_series),
                    fingerprint,
                    "fairness violation: methods must consume identical data"
                );
                let started = Instant::now();
                let outcome = match &block_result {
                    Ok(data) => {
                        let span = data.q() * data.block_len();
                        run_method(method, data, &truth_series[..span], config)
                    }
                    Err(e) => Err(e.to_string()),
                };
                let runtime_ms = started.elapsed().as_secs_f64() * 1e3;

                records.push(match outcome {
                    Ok(out) => TrialRecord {
                        system: config.system,
                        method,
                        noise_variance: variance,
                        variance_index,
                        trial,
                        seed_used,
                        e1: out.e1,
                        e2: out.e2,
                        iterations: out.iterations,
                        runtime_ms,
                        continuous_eigs: out.continuous_eigs,
                        failed: false,
                        failure: None,
                    },
                    Err(message) => TrialRecord {
                        system: config.system,
                        method,
                        noise_variance: variance,
                        variance_index,
                        trial,
                        seed_used,
                        e1: f64::NAN,
                        e2: f64::NAN,
                        iterations: 0,
                        runtime_ms,
                        continuous_eigs: Vec::new(),
                        failed: true,
                        failure: Some(message),
                    },
                });
            }
        }
    }

    records.sort_by_key(|r| (r.variance_index, r.trial, r.method.order()));
    Ok(records)
}
