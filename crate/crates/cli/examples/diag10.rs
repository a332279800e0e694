//! E2 anatomy at sigma^2 = 1e-2: alive-region vs tail error, and
//! sensitivity to the EM iteration budget.

use kbk_core::baselines::{dmd, SnapshotPairs};
use kbk_core::embed::build_blocks;
use kbk_core::kbk::{default_init, em_fit, EmConfig};
use kbk_core::rng::derive_trial_seed;
use kbk_core::sim::{add_noise, integrate, BenchmarkSystem, NoiseSpec};
use kbk_core::spectrum::{analyze, eig_error, state_rmse};

fn main() {
    let system = BenchmarkSystem::ComplexSpectrum;
    let (n, m, ts, amp) = (200usize, 4usize, 0.05f64, 0.7f64);
    let truth = system.true_eigenvalues();
    let trials = 12;
    let traj = integrate(system, [amp, 0.0], ts, n, 10).unwrap();
    let clean = traj.observable_series(system.default_observable());
    let alive = (4.2 / ts) as usize; // samples with signal above 0.01-ish

    for (vi, variance) in [(2usize, 1e-2f64), (0, 1e-4)] {
        println!("=== variance {variance:.0e} ===");
        for max_iters in [60usize, 150, 500, 1500] {
            let mut e1_sum = 0.0;
            let mut e2_sum = 0.0;
            let mut e2_alive = 0.0;
            let mut e2_tail = 0.0;
            let mut dmd_e2 = 0.0;
            let mut dmd_alive = 0.0;
            let mut dmd_tail = 0.0;
            for trial in 0..trials {
                let seed = derive_trial_seed(7, vi, trial);
                let noisy = add_noise(&traj, &NoiseSpec { variance, seed });
                let series = noisy.observable_series(system.default_observable());
                let data = build_blocks(&series, m, ts).unwrap();
                let span = data.q() * m;

                let config = EmConfig { max_iterations: max_iters, ..EmConfig::default() };
                let init = default_init(&data).unwrap();
                let (model, post, _) = em_fit(&data, &config, init).unwrap();
                e1_sum += eig_error(&analyze(&model.transition, m, ts, 2).unwrap().continuous, &truth).unwrap();
                let est: Vec<f64> = post.means.iter().flat_map(|v| v.iter().copied()).collect();
                e2_sum += state_rmse(&est, &clean[..span]).unwrap();
                e2_alive += state_rmse(&est[..alive], &clean[..alive]).unwrap();
                e2_tail += state_rmse(&est[alive..], &clean[alive..span]).unwrap();

                let a_dmd = dmd(&SnapshotPairs::from_blocks(&data).unwrap()).unwrap();
                let mut est = Vec::with_capacity(span);
                let mut z = data.block(0).clone();
                est.extend(z.iter().copied());
                for _ in 1..data.q() {
                    z = &a_dmd * z;
                    est.extend(z.iter().copied());
                }
                dmd_e2 += state_rmse(&est, &clean[..span]).unwrap();
                dmd_alive += state_rmse(&est[..alive], &clean[..alive]).unwrap();
                dmd_tail += state_rmse(&est[alive..], &clean[alive..span]).unwrap();
            }
            let t = trials as f64;
            println!(
                "iters {max_iters:>5}: kbk E1 {:.3e} E2 {:.3e} (alive {:.3e} tail {:.3e}) | dmd E2 {:.3e} (alive {:.3e} tail {:.3e})",
                e1_sum / t, e2_sum / t, e2_alive / t, e2_tail / t,
                dmd_e2 / t, dmd_alive / t, dmd_tail / t
            );
        }
    }
}
