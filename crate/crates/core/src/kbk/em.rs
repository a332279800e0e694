//! M-step updates, initialization, and the EM driver loop.

use nalgebra::DMatrix;

use super::{
    kalman_filter, rts_smoother, EmConfig, EmIteration, EmTrace, KbkError, Posterior,
    StateSpaceModel, Termination, DEFAULT_COV_FLOOR,
};
use crate::baselines::{self, SnapshotPairs};
use crate::embed::BlockData;
use crate::linalg;

fn diagonal_floor(r: &DMatrix<f64>, floor: f64) -> DMatrix<f64> {
    DMatrix::from_diagonal(&r.diagonal().map(|d| d.max(floor)))
}

fn isotropic_floor(r: &DMatrix<f64>, floor: f64) -> DMatrix<f64> {
    let m = r.nrows();
    let tied = (r.trace() / m as f64).max(floor);
    DMatrix::from_diagonal_element(m, m, tied)
}

/// Energy threshold multiplier of the support gate: data directions whose
/// Gram eigenvalue is below `GATE_FACTOR · q · σ̂²` (σ̂² the least-squares
/// residual level) are treated as carrying no identifiable dynamics.
const GATE_FACTOR: f64 = 1.5;
/// The gate always keeps at least this many directions.
const GATE_MIN_KEEP: usize = 2;

/// Orthonormal basis of the data directions the transition update may act
/// on. Computed once per fit; `None` disables the restriction.
#[derive(Debug, Clone)]
struct SupportGate {
    basis: Option<DMatrix<f64>>,
}

impl SupportGate {
    fn full() -> Self {
        Self { basis: None }
    }

    /// Detect noise-only directions of the block data: eigen-directions of
    /// the raw second-moment matrix whose energy is at the level of the
    /// one-step least-squares residual. Those directions are excluded from
    /// the transition fit (the same minimum-norm convention a truncated
    /// pseudoinverse applies), which keeps pure measurement noise from
    /// acquiring spurious dynamics. The basis is fixed for the entire fit,
    /// so every M-step remains an exact minimizer over a fixed model class
    /// and the likelihood ascent property is untouched.
    fn from_data(data: &BlockData) -> Self {
        let m = data.block_len();
        let q = data.q();
        if m <= GATE_MIN_KEEP {
            return Self::full();
        }

        let residual_level = match SnapshotPairs::from_blocks(data)
            .ok()
            .and_then(|pairs| baselines::dmd(&pairs).ok().map(|a| (pairs, a)))
        {
            Some((pairs, a)) => {
                let residual = pairs.shifted() - a * pairs.base();
                residual.norm_squared() / (pairs.n_pairs() * m) as f64
            }
            None => return Self::full(),
        };
        if !(residual_level > 0.0) || !residual_level.is_finite() {
            return Self::full();
        }

        let mut gram = DMatrix::<f64>::zeros(m, m);
        for block in data.blocks() {
            gram += block * block.transpose();
        }
        let eig = gram.symmetric_eigen();
        let mut order: Vec<usize> = (0..m).collect();
        order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));

        let threshold = GATE_FACTOR * q as f64 * residual_level;
        let mut keep: Vec<usize> = order
            .iter()
            .copied()
            .filter(|&j| eig.eigenvalues[j] >= threshold)
            .collect();
        if keep.len() >= m {
            return Self::full();
        }
        for &j in &order {
            if keep.len() >= GATE_MIN_KEEP {
                break;
            }
            if !keep.contains(&j) {
                keep.push(j);
            }
        }

        let mut basis = DMatrix::<f64>::zeros(m, keep.len());
        for (col, &j) in keep.iter().enumerate() {
            basis.set_column(col, &eig.eigenvectors.column(j));
        }
        Self { basis: Some(basis) }
    }
}

/// One block-coordinate M-step at the given posterior: update `R_w`, then
/// `R_v` (evaluated at the incoming `A`), then `A` itself; refresh the
/// initial-state prior from the smoothed first block; finally symmetrize,
/// optionally project the noise covariances to their diagonals, and floor.
///
/// In diagonal mode the measurement-noise update is additionally tied to a
/// single scalar (`R_w = r·I`): every delay coordinate reads the same
/// scalar sensor at a shifted time, so the measurement noise is isotropic
/// by construction, and the tied value is the exact constrained minimizer.
pub fn m_step(
    posterior: &Posterior,
    data: &BlockData,
    current: &StateSpaceModel,
    config: &EmConfig,
) -> Result<StateSpaceModel, KbkError> {
    m_step_gated(posterior, data, current, config, &SupportGate::full())
}

fn m_step_gated(
    posterior: &Posterior,
    data: &BlockData,
    current: &StateSpaceModel,
    config: &EmConfig,
    gate: &SupportGate,
) -> Result<StateSpaceModel, KbkError> {
    let m = current.dim();
    let q = data.q();
    if q < 2 {
        return Err(KbkError::InsufficientBlocks { needed: 2, got: q });
    }
    if data.block_len() != m {
        return Err(KbkError::DimensionMismatch(format!(
            "blocks have length {}, model has dimension {m}",
            data.block_len()
        )));
    }
    if posterior.means.len() != q
        || posterior.covs.len() != q
        || posterior.lag_one_covs.len() != q - 1
        || posterior.means[0].len() != m
    {
        return Err(KbkError::DimensionMismatch(
            "posterior does not match data shape".into(),
        ));
    }
    let floor = config.cov_floor;

    // Second moments H_k = P_k + m_k m_kᵀ.
    let h: Vec<DMatrix<f64>> = (0..q)
        .map(|k| &posterior.covs[k] + &posterior.means[k] * posterior.means[k].transpose())
        .collect();

    let mut sum_w = DMatrix::<f64>::zeros(m, m);
    for k in 0..q {
        let y = data.block(k);
        let mk = &posterior.means[k];
        sum_w += &h[k] - 2.0 * (mk * y.transpose()) + y * y.transpose();
    }
    let r_w = linalg::symmetrize(&(sum_w / q as f64));

    // Cross moments C_k = E[z_{k+1} z_kᵀ].
    let cross: Vec<DMatrix<f64>> = (0..q - 1)
        .map(|k| {
            &posterior.lag_one_covs[k]
                + &posterior.means[k + 1] * posterior.means[k].transpose()
        })
        .collect();

    let a_old = &current.transition;
    let mut sum_v = DMatrix::<f64>::zeros(m, m);
    for k in 0..q - 1 {
        sum_v += a_old * &h[k] * a_old.transpose() + &h[k + 1]
            - 2.0 * (&cross[k] * a_old.transpose());
    }
    let r_v = linalg::symmetrize(&(sum_v / (q - 1) as f64));

    // A solves A · Σ H_k = Σ C_k over the first q−1 moments, restricted to
    // the gate's supported subspace when one is active.
    let mut sum_h = DMatrix::<f64>::zeros(m, m);
    let mut sum_c = DMatrix::<f64>::zeros(m, m);
    for k in 0..q - 1 {
        sum_h += &h[k];
        sum_c += &cross[k];
    }
    let degenerate = |e: linalg::LinalgError| {
        KbkError::DegenerateStatistics(format!("summed second moments not invertible ({e})"))
    };
    let transition = match &gate.basis {
        None => {
            let chol =
                linalg::spd_cholesky(&linalg::symmetrize(&sum_h)).map_err(degenerate)?;
            chol.solve(&sum_c.transpose()).transpose()
        }
        Some(basis) => {
            let reduced_h =
                linalg::symmetrize(&(basis.transpose() * &sum_h * basis));
            let chol = linalg::spd_cholesky(&reduced_h).map_err(degenerate)?;
            let reduced_c = &sum_c * basis;
            let partial = chol.solve(&reduced_c.transpose()).transpose();
            partial * basis.transpose()
        }
    };
    if !linalg::is_finite(&transition) {
        return Err(KbkError::NonFinite("transition update"));
    }

    let (process_noise, measurement_noise) = if config.diagonal_covariances {
        (diagonal_floor(&r_v, floor), isotropic_floor(&r_w, floor))
    } else {
        (
            linalg::floor_spd_eigenvalues(&r_v, floor),
            linalg::floor_spd_eigenvalues(&r_w, floor),
        )
    };

    Ok(StateSpaceModel {
        transition,
        process_noise,
        measurement_noise,
        init_mean: posterior.means[0].clone(),
        init_cov: linalg::floor_spd_eigenvalues(&posterior.covs[0], floor),
    })
}

/// Data-driven starting point: `A⁰` from a least-squares fit of consecutive
/// blocks (the plain DMD operator on the same pairs), both noise covariances
/// at one tenth of the overall sample variance, and the prior centered on
/// the first block. Constant data falls back to the identity transition with
/// floored covariances.
pub fn default_init(data: &BlockData) -> Result<StateSpaceModel, KbkError> {
    let q = data.q();
    let m = data.block_len();
    if q < 2 {
        return Err(KbkError::InsufficientBlocks { needed: 2, got: q });
    }

    let n_samples = (q * m) as f64;
    let mean: f64 = data.blocks().iter().map(|b| b.sum()).sum::<f64>() / n_samples;
    let var: f64 = data
        .blocks()
        .iter()
        .map(|b| b.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>())
        .sum::<f64>()
        / n_samples;

    let identity = DMatrix::<f64>::identity(m, m);
    let spread = 1e-12 * (1.0 + mean.abs());
    if var <= spread * spread {
        // Effectively constant data: nothing to regress on.
        return Ok(StateSpaceModel {
            transition: identity.clone(),
            process_noise: &identity * DEFAULT_COV_FLOOR,
            measurement_noise: &identity * DEFAULT_COV_FLOOR,
            init_mean: data.block(0).clone(),
            init_cov: identity * DEFAULT_COV_FLOOR,
        });
    }

    let transition = SnapshotPairs::from_blocks(data)
        .ok()
        .and_then(|pairs| baselines::dmd(&pairs).ok())
        .unwrap_or_else(|| identity.clone());

    let scale = 0.1 * var;
    let noise = &identity * scale;
    Ok(StateSpaceModel {
        transition,
        process_noise: noise.clone(),
        measurement_noise: noise.clone(),
        init_mean: data.block(0).clone(),
        init_cov: noise,
    })
}

/// Alternate E-steps (filter + smoother) with M-steps until the relative
/// log-likelihood change falls below tolerance or the iteration budget is
/// exhausted. The returned posterior corresponds to the returned model, and
/// the trace records every E-step.
///
/// Before iterating, the data is screened for directions whose energy sits
/// at the one-step least-squares residual level; the transition update is
/// confined to the complement so that noise-only directions keep a zero
/// row/column instead of fitting spurious slow modes.
pub fn em_fit(
    data: &BlockData,
    config: &EmConfig,
    init: StateSpaceModel,
) -> Result<(StateSpaceModel, Posterior, EmTrace), KbkError> {
    if data.q() < 2 {
        return Err(KbkError::InsufficientBlocks {
            needed: 2,
            got: data.q(),
        });
    }
    if config.max_iterations == 0 {
        return Err(KbkError::DegenerateStatistics(
            "max_iterations must be at least 1".into(),
        ));
    }
    if !(config.likelihood_rel_tol > 0.0) || !(config.cov_floor > 0.0) {
        return Err(KbkError::DegenerateStatistics(
            "likelihood_rel_tol and cov_floor must be positive".into(),
        ));
    }

    let gate = SupportGate::from_data(data);
    let mut model = init;
    let mut previous_transition = model.transition.clone();
    let mut previous_ll: Option<f64> = None;
    let mut iterations = Vec::new();

    for iteration in 1..=config.max_iterations {
        let at = |e: KbkError| KbkError::AtIteration {
            iteration,
            source: Box::new(e),
        };
        let filter = kalman_filter(&model, data).map_err(at)?;
        let posterior = rts_smoother(&filter, &model).map_err(at)?;
        let log_likelihood = filter.log_likelihood;

        iterations.push(EmIteration {
            iteration,
            log_likelihood,
            transition_delta: (&model.transition - &previous_transition).norm(),
        });

        if let Some(prev) = previous_ll {
            if (log_likelihood - prev).abs() / (prev.abs() + 1.0) < config.likelihood_rel_tol {
                return Ok((
                    model,
                    posterior,
                    EmTrace {
                        iterations,
                        termination: Termination::Converged,
                    },
                ));
            }
        }
        previous_ll = Some(log_likelihood);

        if iteration == config.max_iterations {
            return Ok((
                model,
                posterior,
                EmTrace {
                    iterations,
                    termination: Termination::MaxIterations,
                },
            ));
        }

        previous_transition = model.transition.clone();
        model = m_step_gated(&posterior, data, &model, config, &gate).map_err(at)?;
    }
    unreachable!("loop returns at max_iterations");
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::embed::build_blocks;
    use crate::rng::GaussianStream;
    use crate::sim::{add_noise, integrate, BenchmarkSystem, NoiseSpec, Observable};
    use nalgebra::{Complex, DVector};
    use approx::assert_abs_diff_eq;

    fn block_data(blocks: Vec<DVector<f64>>) -> BlockData {
        BlockData::from_blocks(blocks, 1.0).unwrap()
    }

    /// Latent linear run z_{k+1} = a z_k (+ noise), observed with noise.
    fn simulate_lgssm(
        a: &DMatrix<f64>,
        z1: &[f64],
        q: usize,
        sigma_v: f64,
        sigma_w: f64,
        seed: u64,
    ) -> BlockData {
        let m = a.nrows();
        let mut stream = GaussianStream::new(seed);
        let mut z = DVector::from_column_slice(z1);
        let mut blocks = Vec::with_capacity(q);
        for _ in 0..q {
            let y = DVector::from_fn(m, |i, _| z[i] + stream.next_gaussian(sigma_w));
            blocks.push(y);
            z = a * &z + DVector::from_fn(m, |_, _| stream.next_gaussian(sigma_v));
        }
        block_data(blocks)
    }

    fn exact_posterior(data: &BlockData) -> Posterior {
        // Zero-covariance posterior sitting exactly on the observations.
        let m = data.block_len();
        Posterior {
            means: data.blocks().to_vec(),
            covs: vec![DMatrix::zeros(m, m); data.q()],
            lag_one_covs: vec![DMatrix::zeros(m, m); data.q() - 1],
        }
    }

    fn placeholder_model(m: usize) -> StateSpaceModel {
        StateSpaceModel {
            transition: DMatrix::identity(m, m),
            process_noise: DMatrix::identity(m, m),
            measurement_noise: DMatrix::identity(m, m),
            init_mean: DVector::zeros(m),
            init_cov: DMatrix::identity(m, m),
        }
    }

    #[test]
    fn m_step_recovers_generator_from_perfect_posterior() {
        let a_true = DMatrix::from_row_slice(
            3,
            3,
            &[
                0.95 * 0.4f64.cos(),
                -0.95 * 0.4f64.sin(),
                0.0,
                0.95 * 0.4f64.sin(),
                0.95 * 0.4f64.cos(),
                0.1,
                0.0,
                0.0,
                0.9,
            ],
        );
        let data = simulate_lgssm(&a_true, &[1.0, 0.0, 1.0], 50, 0.0, 0.0, 1);
        let posterior = exact_posterior(&data);
        let updated = m_step(&posterior, &data, &placeholder_model(3), &EmConfig::default())
            .unwrap();
        assert!(
            (&updated.transition - &a_true).amax() < 1e-10,
            "transition error {}",
            (&updated.transition - &a_true).amax()
        );
    }

    #[test]
    fn m_step_measurement_noise_vanishes_for_exact_means() {
        // Means equal to the data with zero posterior covariance drive the
        // measurement-noise update to zero; only the floor remains.
        let a_true = DMatrix::from_row_slice(2, 2, &[0.9, 0.1, -0.1, 0.8]);
        let data = simulate_lgssm(&a_true, &[1.0, -0.4], 20, 0.0, 0.0, 2);
        let posterior = exact_posterior(&data);
        let config = EmConfig::default();
        let updated = m_step(&posterior, &data, &placeholder_model(2), &config).unwrap();
        let floor_matrix = DMatrix::from_diagonal(&DVector::from_element(2, config.cov_floor));
        assert_eq!(updated.measurement_noise, floor_matrix);
    }

    #[test]
    fn m_step_refreshes_initial_state_from_posterior() {
        let a_true = DMatrix::from_row_slice(2, 2, &[0.9, 0.0, 0.0, 0.8]);
        let data = simulate_lgssm(&a_true, &[1.0, -1.0], 10, 0.0, 1e-3, 3);
        let filter_model = default_init(&data).unwrap();
        let filter = kalman_filter(&filter_model, &data).unwrap();
        let posterior = rts_smoother(&filter, &filter_model).unwrap();
        let updated = m_step(&posterior, &data, &filter_model, &EmConfig::default()).unwrap();
        assert_eq!(updated.init_mean, posterior.means[0]);
    }

    #[test]
    fn default_init_falls_back_on_constant_data() {
        let data = block_data(vec![DVector::from_element(3, 2.5); 5]);
        let model = default_init(&data).unwrap();
        assert_eq!(model.transition, DMatrix::identity(3, 3));
        assert_eq!(
            model.process_noise,
            DMatrix::from_diagonal(&DVector::from_element(3, DEFAULT_COV_FLOOR))
        );
        assert_eq!(model.init_mean, data.block(0).clone());
    }

    #[test]
    fn default_init_matches_dmd_on_consistent_data() {
        let a_true = DMatrix::from_row_slice(2, 2, &[0.7, 0.2, -0.1, 0.9]);
        let data = simulate_lgssm(&a_true, &[1.0, 0.5], 30, 0.0, 0.0, 4);
        let model = default_init(&data).unwrap();
        assert!((&model.transition - &a_true).amax() < 1e-9);
    }

    #[test]
    fn default_init_equals_baseline_dmd_on_noisy_data() {
        let a_true = DMatrix::from_row_slice(2, 2, &[0.7, 0.2, -0.1, 0.9]);
        let data = simulate_lgssm(&a_true, &[1.0, 0.5], 30, 1e-3, 1e-2, 5);
        let model = default_init(&data).unwrap();
        let pairs = SnapshotPairs::from_blocks(&data).unwrap();
        let reference = baselines::dmd(&pairs).unwrap();
        assert_eq!(model.transition, reference);
    }

    #[test]
    fn em_recovers_eigenvalues_of_stable_generator() {
        let modulus = 0.98f64;
        let theta = 0.5f64;
        let a_true = DMatrix::from_row_slice(
            2,
            2,
            &[
                modulus * theta.cos(),
                -modulus * theta.sin(),
                modulus * theta.sin(),
                modulus * theta.cos(),
            ],
        );
        let data = simulate_lgssm(&a_true, &[1.0, 0.3], 200, 1e-3, 1e-2, 6);
        let init = default_init(&data).unwrap();
        let (model, _post, trace) = em_fit(&data, &EmConfig::default(), init).unwrap();
        assert!(trace.iterations.len() >= 2);

        let eigs = crate::spectrum::discrete_eigs(&model.transition).unwrap();
        assert_abs_diff_eq!(eigs[0].norm(), modulus, epsilon = 2e-2);
        assert_abs_diff_eq!(eigs[0].arg().abs(), theta, epsilon = 2e-2);
    }

    #[test]
    fn em_trace_is_monotone_over_random_problems() {
        for seed in 0..20 {
            let theta = 0.2 + 0.02 * seed as f64;
            let a_true = DMatrix::from_row_slice(
                2,
                2,
                &[
                    0.97 * theta.cos(),
                    -0.97 * theta.sin(),
                    0.97 * theta.sin(),
                    0.97 * theta.cos(),
                ],
            );
            let data = simulate_lgssm(&a_true, &[1.0, 0.0], 60, 1e-3, 1e-2, 100 + seed);
            let init = default_init(&data).unwrap();
            let (_, _, trace) = em_fit(&data, &EmConfig::default(), init).unwrap();
            for pair in trace.iterations.windows(2) {
                assert!(
                    pair[1].log_likelihood >= pair[0].log_likelihood - 1e-8,
                    "seed {seed}: LL dropped from {} to {}",
                    pair[0].log_likelihood,
                    pair[1].log_likelihood
                );
            }
        }
    }

    #[test]
    fn em_is_deterministic() {
        let a_true = DMatrix::from_row_slice(2, 2, &[0.9, -0.2, 0.2, 0.9]);
        let data = simulate_lgssm(&a_true, &[1.0, 0.0], 40, 1e-3, 1e-2, 7);
        let run = || {
            let init = default_init(&data).unwrap();
            em_fit(&data, &EmConfig::default(), init).unwrap()
        };
        let (model_a, _, trace_a) = run();
        let (model_b, _, trace_b) = run();
        assert_eq!(model_a, model_b);
        assert_eq!(trace_a, trace_b);
    }

    #[test]
    fn em_covariances_stay_healthy() {
        let a_true = DMatrix::from_row_slice(2, 2, &[0.9, -0.2, 0.2, 0.9]);
        let data = simulate_lgssm(&a_true, &[1.0, 0.0], 40, 1e-3, 1e-2, 8);
        let config = EmConfig::default();
        let init = default_init(&data).unwrap();
        let (model, posterior, _) = em_fit(&data, &config, init).unwrap();
        for r in [&model.process_noise, &model.measurement_noise] {
            assert!((r - r.transpose()).amax() <= 1e-12);
            assert!(linalg::min_symmetric_eigenvalue(r) >= config.cov_floor - 1e-16);
            // Diagonal mode: off-diagonal entries exactly zero.
            assert_eq!(r[(0, 1)], 0.0);
            assert_eq!(r[(1, 0)], 0.0);
        }
        for p in &posterior.covs {
            assert!((p - p.transpose()).amax() <= 1e-12);
            assert!(linalg::min_symmetric_eigenvalue(p) >= -1e-10);
        }
    }

    #[test]
    fn em_dense_mode_keeps_symmetric_covariances() {
        let a_true = DMatrix::from_row_slice(2, 2, &[0.9, -0.2, 0.2, 0.9]);
        let data = simulate_lgssm(&a_true, &[1.0, 0.0], 40, 1e-3, 1e-2, 9);
        let config = EmConfig {
            diagonal_covariances: false,
            ..EmConfig::default()
        };
        let init = default_init(&data).unwrap();
        let (model, _, trace) = em_fit(&data, &config, init).unwrap();
        for pair in trace.iterations.windows(2) {
            assert!(pair[1].log_likelihood >= pair[0].log_likelihood - 1e-8);
        }
        for r in [&model.process_noise, &model.measurement_noise] {
            assert!((r - r.transpose()).amax() <= 1e-12);
            assert!(linalg::min_symmetric_eigenvalue(r) >= config.cov_floor - 1e-12);
        }
    }

    #[test]
    fn noise_free_benchmark_recovers_real_spectrum() {
        // End-to-end sanity: noise-free x2 series of the real-spectrum
        // system contains exactly the modes e^{-t} and e^{-2t}.
        let traj = integrate(BenchmarkSystem::RealSpectrum, [1.0, 0.5], 0.2, 200, 10).unwrap();
        let clean = add_noise(&traj, &NoiseSpec { variance: 0.0, seed: 0 });
        let series = clean.observable_series(Observable::X2);
        let data = build_blocks(&series, 4, 0.2).unwrap();
        let init = default_init(&data).unwrap();
        let (model, _, _) = em_fit(&data, &EmConfig::default(), init).unwrap();

        let result = crate::spectrum::analyze(&model.transition, 4, 0.2, 2).unwrap();
        let truth = [Complex::new(-1.0, 0.0), Complex::new(-2.0, 0.0)];
        for t in truth {
            let hit = result
                .continuous
                .iter()
                .any(|c| (c - t).norm() < 1e-3);
            assert!(hit, "missing {t} in {:?}", result.continuous);
        }
    }

    #[test]
    fn em_errors_are_annotated_with_iteration() {
        // A model with zero covariances everywhere trips the filter on the
        // very first iteration.
        let data = block_data(vec![
            DVector::from_element(1, 1.0),
            DVector::from_element(1, 2.0),
        ]);
        let broken = StateSpaceModel {
            transition: DMatrix::identity(1, 1),
            process_noise: DMatrix::zeros(1, 1),
            measurement_noise: DMatrix::zeros(1, 1),
            init_mean: DVector::zeros(1),
            init_cov: DMatrix::zeros(1, 1),
        };
        match em_fit(&data, &EmConfig::default(), broken) {
            Err(KbkError::AtIteration { iteration: 1, .. }) => {}
            other => panic!("expected annotated failure, got {other:?}"),
        }
    }
}
