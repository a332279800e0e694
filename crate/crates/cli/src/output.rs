//! Deterministic output artifacts.
//!
//! A run writes three files into the output directory:
//!
//! - `results.csv` — one row per (variance, trial, method) with both error
//!   metrics;
//! - `eigs.csv` — the selected continuous-time eigenvalues of every
//!   successful record, for complex-plane plots;
//! - `metadata.json` — the fully resolved configuration, RNG identifiers,
//!   and tool version.
//!
//! Every byte is a pure function of the configuration (seed included), so
//! reruns produce identical files. Wall-clock timings are therefore *not*
//! written; the `runtime_ms` column is reserved and holds zero. Measured
//! runtimes stay available on the in-memory records.

use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use serde::Serialize;

use kbk_core::rng::RNG_ALGORITHM;

use crate::config::ExperimentConfig;
use crate::runner::TrialRecord;

pub const RESULTS_FILE: &str = "results.csv";
pub const EIGS_FILE: &str = "eigs.csv";
pub const METADATA_FILE: &str = "metadata.json";

/// Lower-case scientific notation with 17 significant digits; stable across
/// platforms and enough to reconstruct the exact f64.
pub fn format_float(x: f64) -> String {
    format!("{x:.16e}")
}

/// Render `results.csv`.
pub fn results_csv(records: &[TrialRecord]) -> String {
    let mut out =
        String::from("system,method,noise_var,trial,E1,E2,iterations,runtime_ms,failed\n");
    for r in records {
        out.push_str(&format!(
            "{},{},{},{},{},{},{},0,{}\n",
            r.system.name(),
            r.method.as_str(),
            format_float(r.noise_variance),
            r.trial,
            format_float(r.e1),
            format_float(r.e2),
            r.iterations,
            r.failed
        ));
    }
    out
}

/// Render `eigs.csv` (successful records only).
pub fn eigs_csv(records: &[TrialRecord]) -> String {
    let mut out = String::from("system,method,noise_var,trial,eig_index,re,im\n");
    for r in records.iter().filter(|r| !r.failed) {
        for (index, eig) in r.continuous_eigs.iter().enumerate() {
            out.push_str(&format!(
                "{},{},{},{},{},{},{}\n",
                r.system.name(),
                r.method.as_str(),
                format_float(r.noise_variance),
                r.trial,
                index,
                format_float(eig.re),
                format_float(eig.im)
            ));
        }
    }
    out
}

#[derive(Serialize)]
struct EmDoc {
    max_iterations: usize,
    likelihood_rel_tol: f64,
    diagonal_covariances: bool,
    cov_floor: f64,
}

#[derive(Serialize)]
struct ConfigDoc {
    system: String,
    n_samples: usize,
    sample_period: f64,
    block_len: usize,
    observable: String,
    initial_condition: [f64; 2],
    noise_variances: Vec<f64>,
    trials: usize,
    methods: Vec<String>,
    seed: u64,
    substeps: usize,
    em: EmDoc,
}

#[derive(Serialize)]
struct MetadataDoc {
    tool: &'static str,
    version: &'static str,
    rng_algorithm: &'static str,
    seed_derivation: &'static str,
    runtime_ms_column: &'static str,
    config: ConfigDoc,
}

/// Render `metadata.json`.
pub fn metadata_json(config: &ExperimentConfig) -> String {
    let doc = MetadataDoc {
        tool: "kbk",
        version: env!("CARGO_PKG_VERSION"),
        rng_algorithm: RNG_ALGORITHM,
        seed_derivation:
            "seed_used = splitmix64(splitmix64(splitmix64(base_seed) ^ variance_index) ^ trial_index)",
        runtime_ms_column:
            "reserved (always 0) so output files are byte-reproducible; timings print to stderr",
        config: ConfigDoc {
            system: config.system.name().to_string(),
            n_samples: config.n_samples,
            sample_period: config.sample_period,
            block_len: config.block_len,
            observable: config.observable.as_str().to_string(),
            initial_condition: config.initial_condition,
            noise_variances: config.noise_variances.clone(),
            trials: config.trials,
            methods: config.methods.iter().map(|m| m.as_str().to_string()).collect(),
            seed: config.seed,
            substeps: config.substeps,
            em: EmDoc {
                max_iterations: config.em.max_iterations,
                likelihood_rel_tol: config.em.likelihood_rel_tol,
                diagonal_covariances: config.em.diagonal_covariances,
                cov_floor: config.em.cov_floor,
            },
        },
    };
    let mut json = serde_json::to_string_pretty(&doc).expect("metadata serializes");
    json.push('\n');
    json
}

/// Write all three artifacts into `config.output_dir`, creating it first.
/// Returns the paths written.
pub fn write_outputs(
    config: &ExperimentConfig,
    records: &[TrialRecord],
) -> io::Result<Vec<PathBuf>> {
    fs::create_dir_all(&config.output_dir)?;
    let write = |name: &str, contents: String| -> io::Result<PathBuf> {
        let path: PathBuf = Path::new(&config.output_dir).join(name);
        fs::write(&path, contents)?;
        Ok(path)
    };
    Ok(vec![
        write(RESULTS_FILE, results_csv(records))?,
        write(EIGS_FILE, eigs_csv(records))?,
        write(METADATA_FILE, metadata_json(config))?,
    ])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn float_formatting_has_17_significant_digits() {
        assert_eq!(format_float(1.0), "1.0000000000000000e0");
        assert_eq!(format_float(1e-4), "1.0000000000000000e-4");
        assert_eq!(format_float(0.1 + 0.2), "3.0000000000000004e-1");
        // Exact f64 round trip through the printed form.
        for &x in &[std::f64::consts::PI, -1.2345678901234567e-8, 6.02214076e23] {
            let parsed: f64 = format_float(x).parse().unwrap();
            assert_eq!(parsed.to_bits(), x.to_bits());
        }
    }

    #[test]
    fn results_header_is_pinned() {
        let csv = results_csv(&[]);
        assert_eq!(
            csv,
            "system,method,noise_var,trial,E1,E2,iterations,runtime_ms,failed\n"
        );
    }

    #[test]
    fn eigs_header_is_pinned() {
        let csv = eigs_csv(&[]);
        assert_eq!(csv, "system,method,noise_var,trial,eig_index,re,im\n");
    }
}
