//! Fine grid over (ts, amplitude) for the complex benchmark, scoring the
//! acceptance-relevant quantities: per-variance mean E1/E2 for DMD and KBK,
//! the worst KBK E1, and the DMD/KBK ratio at 1e-4.

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

    for ts in [0.03, 0.025, 0.02, 0.017] {
        for amp in [0.5, 0.4, 0.3] {
            let traj = integrate(system, [amp, 0.0], ts, n, 10).unwrap();
            let clean = traj.observable_series(system.default_observable());
            println!("--- ts={ts} amp={amp} ---");

            for (vi, variance) in [1e-4f64, 1e-3, 1e-2].iter().enumerate() {
                let mut e1 = [0.0f64; 2];
                let mut e2 = [0.0f64; 2];
                let mut worst = 0.0f64;
                for trial in 0..trials {
                    let seed = derive_trial_seed(7, vi, trial);
                    let noisy = add_noise(&traj, &NoiseSpec { variance: *variance, seed });
                    let series = noisy.observable_series(system.default_observable());
                    let data = build_blocks(&series, m, ts).unwrap();
                    let span = data.q() * m;

                    let a_dmd = dmd(&SnapshotPairs::from_blocks(&data).unwrap()).unwrap();
                    e1[0] += eig_error(
                        &analyze(&a_dmd, m, ts, 2).unwrap().continuous,
                        &truth,
                    )
                    .unwrap();
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
                    let t1 = eig_error(
                        &analyze(&model.transition, m, ts, 2).unwrap().continuous,
                        &truth,
                    )
                    .unwrap();
                    worst = worst.max(t1);
                    e1[1] += t1;
                    let est: Vec<f64> =
                        post.means.iter().flat_map(|v| v.iter().copied()).collect();
                    e2[1] += state_rmse(&est, &clean[..span]).unwrap();
                }
                let t = trials as f64;
                println!(
                    "  var {variance:.0e}: E1 dmd {:.2e} kbk {:.2e} (worst {worst:.1e}, ratio {:>5.1})  E2 dmd {:.2e} kbk {:.2e}",
                    e1[0] / t,
                    e1[1] / t,
                    (e1[0] / t) / (e1[1] / t).max(1e-300),
                    e2[0] / t,
                    e2[1] / t
                );
            }
        }
    }
}
