//! The recursive filter/smoother must agree with direct batch joint-Gaussian
//! conditioning on small instances: smoothed means, covariances, lag-one
//! cross-covariances, and the data log-likelihood.

use kbk_core::embed::BlockData;
use kbk_core::kbk::{kalman_filter, rts_smoother, StateSpaceModel};
use kbk_testutil::{batch_condition, OracleRng};
use nalgebra::DVector;

fn random_case(seed: u64, dim: usize, q: usize) -> (StateSpaceModel, BlockData) {
    let mut rng = OracleRng::new(seed);
    let model = StateSpaceModel {
        transition: rng.contraction(dim, 0.95),
        process_noise: rng.spd(dim, 0.05),
        measurement_noise: rng.spd(dim, 0.05),
        init_mean: rng.vector(dim),
        init_cov: rng.spd(dim, 0.1),
    };
    let blocks: Vec<DVector<f64>> = (0..q).map(|_| rng.vector(dim)).collect();
    let data = BlockData::from_blocks(blocks, 0.5).unwrap();
    (model, data)
}

#[test]
fn smoother_matches_batch_conditioning() {
    let cases = [
        (1u64, 1usize, 2usize),
        (2, 1, 5),
        (3, 2, 2),
        (4, 2, 4),
        (5, 2, 6),
        (6, 3, 3),
        (7, 3, 4),
        (8, 3, 5),
        (9, 3, 6),
        (10, 2, 5),
    ];
    for (seed, dim, q) in cases {
        let (model, data) = random_case(seed, dim, q);
        let filter = kalman_filter(&model, &data).unwrap();
        let posterior = rts_smoother(&filter, &model).unwrap();
        let oracle = batch_condition(
            &model.transition,
            &model.process_noise,
            &model.measurement_noise,
            &model.init_mean,
            &model.init_cov,
            data.blocks(),
        );

        for k in 0..q {
            let mean_err = (&posterior.means[k] - &oracle.means[k]).amax();
            assert!(mean_err < 1e-8, "case {seed}: mean {k} off by {mean_err}");
            let cov_err = (&posterior.covs[k] - &oracle.covs[k]).amax();
            assert!(cov_err < 1e-8, "case {seed}: cov {k} off by {cov_err}");
        }
        for k in 0..q - 1 {
            let lag_err = (&posterior.lag_one_covs[k] - &oracle.lag_one_covs[k]).amax();
            assert!(lag_err < 1e-8, "case {seed}: lag-one {k} off by {lag_err}");
        }
        let ll_err = (filter.log_likelihood - oracle.log_likelihood).abs();
        assert!(ll_err < 1e-8, "case {seed}: log-likelihood off by {ll_err}");
    }
}

#[test]
fn log_likelihood_matches_batch_density_without_process_noise() {
    // Degenerate dynamics (r_v = 0, a = identity-like) exercise the same
    // agreement on the boundary of positive definiteness.
    let mut rng = OracleRng::new(42);
    let dim = 2;
    let model = StateSpaceModel {
        transition: nalgebra::DMatrix::identity(dim, dim),
        process_noise: nalgebra::DMatrix::zeros(dim, dim),
        measurement_noise: rng.spd(dim, 0.2),
        init_mean: rng.vector(dim),
        init_cov: rng.spd(dim, 0.2),
    };
    let blocks: Vec<DVector<f64>> = (0..4).map(|_| rng.vector(dim)).collect();
    let data = BlockData::from_blocks(blocks, 1.0).unwrap();

    let filter = kalman_filter(&model, &data).unwrap();
    let posterior = rts_smoother(&filter, &model).unwrap();
    let oracle = batch_condition(
        &model.transition,
        &model.process_noise,
        &model.measurement_noise,
        &model.init_mean,
        &model.init_cov,
        data.blocks(),
    );
    assert!((filter.log_likelihood - oracle.log_likelihood).abs() < 1e-8);
    for k in 0..4 {
        assert!((&posterior.means[k] - &oracle.means[k]).amax() < 1e-8);
    }
    // With states tied together all smoothed means coincide.
    for k in 1..4 {
        assert!((&posterior.means[k] - &posterior.means[0]).amax() < 1e-10);
    }
}
