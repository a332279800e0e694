//! Measure the spectrum of the summed second-moment matrix (the A-solve
//! Gram matrix) relative to the noise-energy scale Q*mean(R_w diag), across
//! systems and noise levels, in healthy mid-run fits. This calibrates the
//! truncation threshold that separates noise-only directions from signal.

use kbk_core::embed::build_blocks;
use kbk_core::kbk::{default_init, kalman_filter, m_step, rts_smoother, EmConfig};
use kbk_core::rng::derive_trial_seed;
use kbk_core::sim::{add_noise, integrate, BenchmarkSystem, NoiseSpec};
use nalgebra::DMatrix;

fn main() {
    let cases = [
        (BenchmarkSystem::RealSpectrum, 30usize, 0.2f64, [1.0, 0.5]),
        (BenchmarkSystem::ImaginarySpectrum, 60, 0.1, [1.0, 0.0]),
        (BenchmarkSystem::ComplexSpectrum, 200, 0.025, [0.5, 0.0]),
    ];
    let m = 4;

    for (system, n, ts, x0) in cases {
        let traj = integrate(system, x0, ts, n, 10).unwrap();
        println!("=== {} ===", system.name());
        for (vi, variance) in [1e-4f64, 1e-3, 1e-2, 1e-1].iter().enumerate() {
            for trial in 0..3 {
                let seed = derive_trial_seed(3, vi, trial);
                let noisy = add_noise(&traj, &NoiseSpec { variance: *variance, seed });
                let series = noisy.observable_series(system.default_observable());
                let data = build_blocks(&series, m, ts).unwrap();
                let q = data.q();

                let mut model = default_init(&data).unwrap();
                let config = EmConfig::default();
                for iters in [10usize, 40, 150] {
                    for _ in 0..iters {
                        let filter = kalman_filter(&model, &data).unwrap();
                        let posterior = rts_smoother(&filter, &model).unwrap();
                        model = m_step(&posterior, &data, &model, &config).unwrap();
                    }
                    let filter = kalman_filter(&model, &data).unwrap();
                    let posterior = rts_smoother(&filter, &model).unwrap();
                    let mut sum_h = DMatrix::<f64>::zeros(m, m);
                    for k in 0..q - 1 {
                        sum_h += &posterior.covs[k]
                            + &posterior.means[k] * posterior.means[k].transpose();
                    }
                    let mut eigs: Vec<f64> =
                        sum_h.symmetric_eigenvalues().iter().copied().collect();
                    eigs.sort_by(|a, b| b.total_cmp(a));
                    let rw_mean = model.measurement_noise.trace() / m as f64;
                    let noise_scale = (q - 1) as f64 * rw_mean;
                    let rel: Vec<String> =
                        eigs.iter().map(|e| format!("{:.1e}", e / noise_scale)).collect();
                    let total: usize = 10 + 40 + 150;
                    let _ = total;
                    println!(
                        "  var {variance:.0e} trial {trial} after+{iters}: eig/Q*Rw = {rel:?}"
                    );
                }
            }
        }
    }
}
