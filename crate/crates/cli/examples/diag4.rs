//! Track eigenvalue error along the EM path and test covariance-oracle
//! initializations, to see when/why spurious slow modes develop.

use kbk_core::embed::build_blocks;
use kbk_core::kbk::{
    default_init, kalman_filter, m_step, rts_smoother, EmConfig, StateSpaceModel,
};
use kbk_core::rng::derive_trial_seed;
use kbk_core::sim::{add_noise, integrate, BenchmarkSystem, NoiseSpec};
use kbk_core::spectrum::analyze;
use kbk_core::Complex;
use nalgebra::DMatrix;

fn max_matched_distance(approx: &[Complex<f64>], truth: &[Complex<f64>]) -> f64 {
    let d = |a: Complex<f64>, b: Complex<f64>| (a - b).norm();
    let direct = d(approx[0], truth[0]).max(d(approx[1], truth[1]));
    let swapped = d(approx[0], truth[1]).max(d(approx[1], truth[0]));
    direct.min(swapped)
}

fn main() {
    let system = BenchmarkSystem::ComplexSpectrum;
    let (n, ts, m) = (200usize, 0.1f64, 4usize);
    let x0 = [0.5, 0.0];
    let truth = system.true_eigenvalues();
    let traj = integrate(system, x0, ts, n, 10).unwrap();

    let variance = 1e-4;
    for trial in 0..5 {
        let seed = derive_trial_seed(1, 0, trial);
        let noisy = add_noise(&traj, &NoiseSpec { variance, seed });
        let series = noisy.observable_series(system.default_observable());
        let data = build_blocks(&series, m, ts).unwrap();

        for init_kind in ["default", "cov-oracle"] {
            let mut model = default_init(&data).unwrap();
            if init_kind == "cov-oracle" {
                model.measurement_noise = DMatrix::from_diagonal_element(m, m, variance);
                model.process_noise = DMatrix::from_diagonal_element(m, m, 1e-8);
                model.init_cov = DMatrix::from_diagonal_element(m, m, variance);
            }
            let config = EmConfig::default();
            print!("trial {trial} {init_kind:>10}: maxΔλ by iter ");
            let mut ll = f64::NEG_INFINITY;
            for iter in 1..=2000 {
                let filter = kalman_filter(&model, &data).unwrap();
                let posterior = rts_smoother(&filter, &model).unwrap();
                if [1, 10, 30, 100, 300, 1000, 2000].contains(&iter) {
                    let cont = analyze(&model.transition, m, ts, 2).unwrap().continuous;
                    print!("[{iter}]={:.2e} ", max_matched_distance(&cont, &truth));
                }
                if (filter.log_likelihood - ll).abs() / (ll.abs() + 1.0) < 1e-10 {
                    break;
                }
                ll = filter.log_likelihood;
                model = m_step(&posterior, &data, &model, &config).unwrap();
            }
            println!();
        }
    }
}
