//! Aggregation of trial records into per-(method, variance) summaries.

use std::collections::BTreeMap;

use crate::config::Method;
use crate::runner::TrialRecord;

/// Mean/spread of both error metrics for one (system, method, variance)
/// cell. Standard deviations are population standard deviations over the
/// successful trials.
#[derive(Debug, Clone)]
pub struct SummaryRow {
    pub system: kbk_core::sim::BenchmarkSystem,
    pub method: Method,
    pub noise_variance: f64,
    pub successes: usize,
    pub failures: usize,
    pub e1_mean: f64,
    pub e1_std: f64,
    pub e2_mean: f64,
    pub e2_std: f64,
}

fn mean_and_population_std(values: &[f64]) -> (f64, f64) {
    if values.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / n;
    (mean, var.sqrt())
}

/// Group records by (system, variance, method) and aggregate the error
/// metrics over successful trials; failures are counted and excluded.
pub fn summarize(records: &[TrialRecord]) -> Vec<SummaryRow> {
    let mut groups: BTreeMap<(&'static str, usize, usize), Vec<&TrialRecord>> = BTreeMap::new();
    for record in records {
        groups
            .entry((record.system.name(), record.variance_index, record.method.order()))
            .or_default()
            .push(record);
    }

    groups
        .into_values()
        .map(|group| {
            let sample = group[0];
            let ok: Vec<&&TrialRecord> = group.iter().filter(|r| !r.failed).collect();
            let e1: Vec<f64> = ok.iter().map(|r| r.e1).collect();
            let e2: Vec<f64> = ok.iter().map(|r| r.e2).collect();
            let (e1_mean, e1_std) = mean_and_population_std(&e1);
            let (e2_mean, e2_std) = mean_and_population_std(&e2);
            SummaryRow {
                system: sample.system,
                method: sample.method,
                noise_variance: sample.noise_variance,
                successes: ok.len(),
                failures: group.len() - ok.len(),
                e1_mean,
                e1_std,
                e2_mean,
                e2_std,
            }
        })
        .collect()
}

/// Human-readable table of the summary rows.
pub fn format_table(rows: &[SummaryRow]) -> String {
    let mut out = String::new();
    out.push_str(&format!(
        "{:<10} {:<7} {:>9} {:>12} {:>12} {:>12} {:>12} {:>5}\n",
        "system", "method", "noise_var", "E1_mean", "E1_std", "E2_mean", "E2_std", "fail"
    ));
    for row in rows {
        out.push_str(&format!(
            "{:<10} {:<7} {:>9.1e} {:>12.4e} {:>12.4e} {:>12.4e} {:>12.4e} {:>5}\n",
            row.system.name(),
            row.method.as_str(),
            row.noise_variance,
            row.e1_mean,
            row.e1_std,
            row.e2_mean,
            row.e2_std,
            row.failures
        ));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use kbk_core::sim::BenchmarkSystem;

    fn record(e1: f64, e2: f64, failed: bool) -> TrialRecord {
        TrialRecord {
            system: BenchmarkSystem::RealSpectrum,
            method: Method::Dmd,
            noise_variance: 1e-2,
            variance_index: 0,
            trial: 0,
            seed_used: 0,
            e1,
            e2,
            iterations: 0,
            runtime_ms: 1.0,
            continuous_eigs: Vec::new(),
            failed,
            failure: failed.then(|| "boom".to_string()),
        }
    }

    #[test]
    fn single_record_summary() {
        let rows = summarize(&[record(0.25, 0.5, false)]);
        assert_eq!(rows.len(), 1);
        assert_eq!(rows[0].e1_mean, 0.25);
        assert_eq!(rows[0].e1_std, 0.0);
        assert_eq!(rows[0].e2_mean, 0.5);
        assert_eq!(rows[0].failures, 0);
    }

    #[test]
    fn two_records_population_statistics() {
        let rows = summarize(&[record(0.1, 1.0, false), record(0.3, 3.0, false)]);
        assert_eq!(rows.len(), 1);
        assert!((rows[0].e1_mean - 0.2).abs() < 1e-15);
        assert!((rows[0].e1_std - 0.1).abs() < 1e-15);
        assert!((rows[0].e2_mean - 2.0).abs() < 1e-15);
        assert!((rows[0].e2_std - 1.0).abs() < 1e-15);
    }

    #[test]
    fn failures_are_counted_and_excluded() {
        let rows = summarize(&[
            record(0.1, 1.0, false),
            record(f64::NAN, f64::NAN, true),
            record(0.3, 3.0, false),
        ]);
        assert_eq!(rows.len(), 1);
        assert_eq!(rows[0].successes, 2);
        assert_eq!(rows[0].failures, 1);
        assert!((rows[0].e1_mean - 0.2).abs() < 1e-15);
    }
}
