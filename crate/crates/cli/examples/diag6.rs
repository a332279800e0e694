//! Full autopsy of one catastrophic EM fit: spurious eigenstructure, noise
//! split, and the latent trajectory in the spurious direction.

use kbk_core::embed::build_blocks;
use kbk_core::kbk::{default_init, em_fit, EmConfig};
use kbk_core::rng::derive_trial_seed;
use kbk_core::sim::{add_noise, integrate, BenchmarkSystem, NoiseSpec};
use kbk_core::spectrum::discrete_eigs;

fn main() {
    let system = BenchmarkSystem::ComplexSpectrum;
    let (n, ts, m) = (200usize, 0.1f64, 4usize);
    let x0 = [0.5, 0.0];
    let traj = integrate(system, x0, ts, n, 10).unwrap();

    // trial 1 at 1e-4 was catastrophic in earlier runs
    let variance = 1e-4;
    let seed = derive_trial_seed(1, 0, 1);
    let noisy = add_noise(&traj, &NoiseSpec { variance, seed });
    let series = noisy.observable_series(system.default_observable());
    let data = build_blocks(&series, m, ts).unwrap();

    let init = default_init(&data).unwrap();
    let (model, post, trace) =
        em_fit(&data, &EmConfig { max_iterations: 2000, ..EmConfig::default() }, init).unwrap();

    println!("iters: {}", trace.iterations.len());
    println!("eigs:");
    for e in discrete_eigs(&model.transition).unwrap() {
        println!("  |{:.4}| {:.4}{:+.4}i  arg {:.3}", e.norm(), e.re, e.im, e.arg());
    }
    println!("R_w diag: {:?}", model.measurement_noise.diagonal().as_slice());
    println!("R_v diag: {:?}", model.process_noise.diagonal().as_slice());
    println!("A =\n{:.4}", model.transition);

    // Left/right eigen structure via the transition on the dominant mode:
    // project smoothed means onto the dominant right eigenvector direction.
    let a = model.transition.clone();
    // power iteration for dominant eigenpair (real shift ok for diagnosis)
    let mut v = nalgebra::DVector::from_element(m, 1.0);
    for _ in 0..500 {
        v = &a * &v;
        let norm = v.norm();
        if norm > 0.0 {
            v /= norm;
        }
    }
    println!("dominant direction (power iter): {:?}", v.as_slice());

    println!("\nlatent projections on dominant direction vs block index:");
    for (k, mean) in post.means.iter().enumerate() {
        if k % 5 == 0 {
            println!("  k={k:>3}: proj {:+.5}  |mean| {:.5}", v.dot(mean), mean.norm());
        }
    }
    println!("\nblock means magnitude of data:");
    for k in (0..data.q()).step_by(5) {
        println!("  k={k:>3}: |y| {:.5}", data.block(k).norm());
    }
}
