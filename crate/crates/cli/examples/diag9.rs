//! Focused grid for the complex-spectrum defaults: noise-free bias plus the
//! criterion quantities at each swept variance.

use kbk_core::baselines::{dmd, SnapshotPairs};
use kbk_core::embed::build_blocks;
use kbk_core::kbk::{default_init, em_fit, EmConfig};
use kbk_core::rng::derive_trial_seed;
use kbk_core::sim::{add_noise, integrate, BenchmarkSystem, NoiseSpec};
use kbk_core::spectrum::{analyze, eig_error, state_rmse};

fn main() {
    let system = BenchmarkSystem::ComplexSpectrum;
    let (n, m) = (200usize, 4usize);
    let truth = system.true_eigenvalues();
    let trials = 16;

    for ts in [0.04, 0.045, 0.05] {
        for amp in [0.65, 0.7, 0.75] {
            let traj = integrate(system, [amp, 0.0], ts, n, 10).unwrap();
            let clean = traj.observable_series(system.default_observable());
            let data0 = build_blocks(&clean, m, ts).unwrap();

            // noise-free biases
            let a0 = dmd(&SnapshotPairs::from_blocks(&data0).unwrap()).unwrap();
            let c0 = analyze(&a0, m, ts, 2).unwrap().continuous;
            let dmd_bias = c0
                .iter()
                .map(|c| truth.iter().map(|t| (c - t).norm()).fold(f64::INFINITY, f64::min))
                .fold(0.0f64, f64::max);
            let init = default_init(&data0).unwrap();
            let (model, _, _) = em_fit(&data0, &EmConfig::default(), init).unwrap();
            let ck = analyze(&model.transition, m, ts, 2).unwrap().continuous;
            let kbk_bias = ck
                .iter()
                .map(|c| truth.iter().map(|t| (c - t).norm()).fold(f64::INFINITY, f64::min))
                .fold(0.0f64, f64::max);
            println!("--- ts={ts} amp={amp}: noise-free max|dλ| dmd {dmd_bias:.2e} kbk {kbk_bias:.2e}");

            for (vi, variance) in [1e-4f64, 1e-3, 1e-2].iter().enumerate() {
                let mut e1 = [0.0f64; 2];
                let mut e2 = [0.0f64; 2];
                for trial in 0..trials {
                    let seed = derive_trial_seed(7, vi, trial);
                    let noisy = add_noise(&traj, &NoiseSpec { variance: *variance, seed });
                    let series = noisy.observable_series(system.default_observable());
                    let data = build_blocks(&series, m, ts).unwrap();
                    let span = data.q() * m;

                    let a_dmd = dmd(&SnapshotPairs::from_blocks(&data).unwrap()).unwrap();
                    e1[0] += eig_error(&analyze(&a_dmd, m, ts, 2).unwrap().continuous, &truth).unwrap();
                    let mut est = Vec::with_capacity(span);
                    let mut z = data.block(0).clone();
                    est.extend(z.iter().copied());
                    for _ in 1..data.q() {
                        z = &a_dmd * z;
                        est.extend(z.iter().copied());
                    }
                    e2[0] += state_rmse(&est, &clean[..span]).unwrap();

                    let init = default_init(&data).unwrap();
                    let (model, post, _) = em_fit(&data, &EmConfig::default(), init).unwrap();
                    e1[1] += eig_error(&analyze(&model.transition, m, ts, 2).unwrap().continuous, &truth).unwrap();
                    let est: Vec<f64> = post.means.iter().flat_map(|v| v.iter().copied()).collect();
                    e2[1] += state_rmse(&est, &clean[..span]).unwrap();
                }
                let t = trials as f64;
                println!(
                    "    var {variance:.0e}: E1 dmd {:.2e} kbk {:.2e} (ratio {:>5.1})  E2 dmd {:.2e} kbk {:.2e} ({})",
                    e1[0] / t, e1[1] / t, (e1[0] / t) / (e1[1] / t),
                    e2[0] / t, e2[1] / t,
                    if e2[1] < e2[0] { "kbk wins" } else { "DMD WINS" }
                );
            }
        }
    }
}
