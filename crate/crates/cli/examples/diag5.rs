//! Grid probe for the complex-spectrum benchmark: mean E1/E2 of KBK vs DMD
//! over (sample period, initial amplitude) at the swept noise levels.

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
    let trials = 8;

    for ts in [0.1, 0.05, 0.02] {
        for amp in [1.0, 0.5] {
            println!("=== ts={ts} amp={amp} ===");
            let traj = integrate(system, [amp, 0.0], ts, n, 10).unwrap();
            let clean = traj.observable_series(system.default_observable());

            for (vi, variance) in [1e-4f64, 1e-3, 1e-2].iter().enumerate() {
                let mut e1 = [0.0f64; 2]; // dmd, kbk
                let mut e2 = [0.0f64; 2];
                let mut worst_kbk_e1 = 0.0f64;
                for trial in 0..trials {
                    let seed = derive_trial_seed(7, vi, trial);
                    let noisy = add_noise(&traj, &NoiseSpec { variance: *variance, seed });
                    let series = noisy.observable_series(system.default_observable());
                    let data = build_blocks(&series, m, ts).unwrap();
                    let span = data.q() * m;

                    let a_dmd = dmd(&SnapshotPairs::from_blocks(&data).unwrap()).unwrap();
                    let c_dmd = analyze(&a_dmd, m, ts, 2).unwrap().continuous;
                    e1[0] += eig_error(&c_dmd, &truth).unwrap();
                    let mut est = Vec::with_capacity(span);
                    let mut z = data.block(0).clone();
                    est.extend(z.iter().copied());
                    for _ in 1..data.q() {
                        z = &a_dmd * z;
                        est.extend(z.iter().copied());
                    }
                    e2[0] += state_rmse(&est, &clean[..span]).unwrap();

                    let init = default_init(&data).unwrap();
                    let (model, post, _) =
                        em_fit(&data, &EmConfig::default(), init).unwrap();
                    let c_kbk = analyze(&model.transition, m, ts, 2).unwrap().continuous;
                    let t1 = eig_error(&c_kbk, &truth).unwrap();
                    worst_kbk_e1 = worst_kbk_e1.max(t1);
                    e1[1] += t1;
                    let est: Vec<f64> =
                        post.means.iter().flat_map(|v| v.iter().copied()).collect();
                    e2[1] += state_rmse(&est, &clean[..span]).unwrap();
                }
                let t = trials as f64;
                println!(
                    "  var {variance:.0e}: E1 dmd {:.3e} kbk {:.3e} (worst {worst_kbk_e1:.2e}, ratio {:.2})   E2 dmd {:.3e} kbk {:.3e}",
                    e1[0] / t,
                    e1[1] / t,
                    (e1[0] / t) / (e1[1] / t),
                    e2[0] / t,
                    e2[1] / t
                );
            }
        }
    }
}
