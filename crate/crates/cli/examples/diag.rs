//! Scratch diagnostics for one (variance, trial) cell. Not part of the
//! shipped surface; run with `cargo run -p kbk-cli --example diag`.

use kbk_core::embed::build_blocks;
use kbk_core::kbk::{default_init, em_fit, EmConfig};
use kbk_core::rng::derive_trial_seed;
use kbk_core::sim::{add_noise, integrate, BenchmarkSystem, NoiseSpec};
use kbk_core::spectrum::{analyze, discrete_eigs, eig_error, state_rmse};

fn main() {
    let system = BenchmarkSystem::ComplexSpectrum;
    let (n, ts, m) = (200usize, 0.1f64, 4usize);
    let observable = system.default_observable();
    let truth_eigs = system.true_eigenvalues();

    let traj = integrate(system, system.default_initial_condition(), ts, n, 10).unwrap();
    let truth_series = traj.observable_series(observable);

    for (vi, variance) in [1e-4, 1e-3, 1e-2].iter().enumerate() {
        println!("=== variance {variance:.0e} ===");
        for trial in 0..5 {
            let seed = derive_trial_seed(1, vi, trial);
            let noisy = add_noise(&traj, &NoiseSpec { variance: *variance, seed });
            let series = noisy.observable_series(observable);
            let data = build_blocks(&series, m, ts).unwrap();
            let span = data.q() * m;

            let init = default_init(&data).unwrap();
            let config = EmConfig {
                max_iterations: std::env::var("DIAG_ITERS")
                    .ok()
                    .and_then(|s| s.parse().ok())
                    .unwrap_or(500),
                ..EmConfig::default()
            };
            let started = std::time::Instant::now();
            let (model, posterior, trace) = em_fit(&data, &config, init).unwrap();
            let elapsed_ms = started.elapsed().as_secs_f64() * 1e3;
            print!("[{elapsed_ms:.0}ms] ");

            let all_eigs = discrete_eigs(&model.transition).unwrap();
            let spec = analyze(&model.transition, m, ts, 2).unwrap();
            let e1 = eig_error(&spec.continuous, &truth_eigs).unwrap();
            let est: Vec<f64> = posterior.means.iter().flat_map(|v| v.iter().copied()).collect();
            let e2 = state_rmse(&est, &truth_series[..span]).unwrap();

            println!(
                "trial {trial}: iters={} term={:?} E1={e1:.4e} E2={e2:.4e}",
                trace.iterations.len(),
                trace.termination,
            );
            println!(
                "  discrete |eig| = {:?}",
                all_eigs.iter().map(|e| e.norm()).collect::<Vec<_>>()
            );
            println!(
                "  continuous = {:?}",
                spec.continuous
                    .iter()
                    .map(|c| format!("{:.3}{:+.3}i", c.re, c.im))
                    .collect::<Vec<_>>()
            );
            println!(
                "  R_w diag = {:?}",
                model.measurement_noise.diagonal().iter().copied().collect::<Vec<_>>()
            );
            println!(
                "  R_v diag = {:?}",
                model.process_noise.diagonal().iter().copied().collect::<Vec<_>>()
            );
            let lls: Vec<f64> = trace.iterations.iter().map(|i| i.log_likelihood).collect();
            let k = lls.len();
            println!(
                "  LL first/mid/last = {:.4} / {:.4} / {:.4}",
                lls[0],
                lls[k / 2],
                lls[k - 1]
            );
        }
    }
}
