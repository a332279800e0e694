//! Reference oracles for test suites.
//!
//! Everything here is deliberately implemented by direct dense linear
//! algebra on the joint Gaussian of `(z_1..z_Q, y_1..y_Q)`, with no shared
//! code with the recursive filter/smoother/EM implementations it is used to
//! check. Dimensions are expected to be tiny (the oracle cost is cubic in
//! `Q·M`).

use nalgebra::{DMatrix, DVector};
use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Exact posterior moments and data log-density from batch conditioning.
#[derive(Debug, Clone)]
pub struct BatchPosterior {
    pub means: Vec<DVector<f64>>,
    pub covs: Vec<DMatrix<f64>>,
    /// `Cov(z_{k+1}, z_k | y_{1:Q})` for `k = 0..Q-2`.
    pub lag_one_covs: Vec<DMatrix<f64>>,
    pub log_likelihood: f64,
}

/// Condition the stacked state vector on the stacked observations.
///
/// The latent prior follows `z_1 ~ N(init_mean, init_cov)`,
/// `z_{k+1} = A z_k + v_k` with `v_k ~ N(0, process_noise)`; observations
/// add `w_k ~ N(0, measurement_noise)` to each block. All blocks of the
/// stacked prior covariance are assembled explicitly and the conditioning
/// is one dense solve.
pub fn batch_condition(
    transition: &DMatrix<f64>,
    process_noise: &DMatrix<f64>,
    measurement_noise: &DMatrix<f64>,
    init_mean: &DVector<f64>,
    init_cov: &DMatrix<f64>,
    observations: &[DVector<f64>],
) -> BatchPosterior {
    let m = transition.nrows();
    let q = observations.len();
    assert!(q >= 1, "need at least one observation");
    let n = q * m;

    // Prior mean of the stacked state.
    let mut state_means = Vec::with_capacity(q);
    state_means.push(init_mean.clone());
    for k in 1..q {
        state_means.push(transition * &state_means[k - 1]);
    }
    let mut mean_z = DVector::<f64>::zeros(n);
    for (k, mu) in state_means.iter().enumerate() {
        mean_z.rows_mut(k * m, m).copy_from(mu);
    }

    // Prior covariance of the stacked state: diagonal blocks by the state
    // recursion, cross blocks via Cov(z_j, z_k) = Var(z_j) (A^{k-j})ᵀ.
    let mut cov_z = DMatrix::<f64>::zeros(n, n);
    let mut diag_blocks = Vec::with_capacity(q);
    diag_blocks.push(init_cov.clone());
    for k in 1..q {
        let prev: &DMatrix<f64> = &diag_blocks[k - 1];
        diag_blocks.push(transition * prev * transition.transpose() + process_noise);
    }
    let a_t = transition.transpose();
    for j in 0..q {
        cov_z
            .view_mut((j * m, j * m), (m, m))
            .copy_from(&diag_blocks[j]);
        let mut cross = diag_blocks[j].clone();
        for k in j + 1..q {
            cross *= &a_t;
            cov_z.view_mut((j * m, k * m), (m, m)).copy_from(&cross);
            cov_z
                .view_mut((k * m, j * m), (m, m))
                .copy_from(&cross.transpose());
        }
    }

    // Observation covariance adds the measurement noise blockwise; the
    // cross-covariance Cov(z, y) equals the state covariance (y = z + w).
    let mut cov_y = cov_z.clone();
    for k in 0..q {
        let mut block = cov_y.view_mut((k * m, k * m), (m, m));
        block += measurement_noise;
    }

    let mut y = DVector::<f64>::zeros(n);
    for (k, obs) in observations.iter().enumerate() {
        assert_eq!(obs.len(), m);
        y.rows_mut(k * m, m).copy_from(obs);
    }

    let chol = cov_y
        .clone()
        .cholesky()
        .expect("oracle observation covariance must be positive definite");
    let residual = &y - &mean_z;
    let solved = chol.solve(&residual);
    let mean_post = &mean_z + &cov_z * &solved;
    let cov_post = &cov_z - &cov_z * chol.solve(&cov_z);

    let log_det: f64 = chol
        .l()
        .diagonal()
        .iter()
        .map(|d| 2.0 * d.ln())
        .sum();
    let log_likelihood = -0.5
        * (n as f64 * (2.0 * std::f64::consts::PI).ln() + log_det + residual.dot(&solved));

    let means = (0..q).map(|k| mean_post.rows(k * m, m).into()).collect();
    let covs = (0..q)
        .map(|k| cov_post.view((k * m, k * m), (m, m)).into())
        .collect();
    let lag_one_covs = (0..q.saturating_sub(1))
        .map(|k| cov_post.view(((k + 1) * m, k * m), (m, m)).into())
        .collect();

    BatchPosterior {
        means,
        covs,
        lag_one_covs,
        log_likelihood,
    }
}

/// The EM minimization objective evaluated directly from posterior moments:
///
/// ```text
/// Σ_k [ log|R_w| + Tr(R_w⁻¹ (y_k y_kᵀ − y_k m_kᵀ − m_k y_kᵀ + H_k)) ]
/// + Σ_k [ log|R_v| + Tr(R_v⁻¹ (H_{k+1} − C_k Aᵀ − A C_kᵀ + A H_k Aᵀ)) ]
/// ```
///
/// with `H_k = P_k + m_k m_kᵀ` and `C_k = P_{k+1,k} + m_{k+1} m_kᵀ`.
#[allow(clippy::too_many_arguments)]
pub fn em_objective(
    transition: &DMatrix<f64>,
    process_noise: &DMatrix<f64>,
    measurement_noise: &DMatrix<f64>,
    means: &[DVector<f64>],
    covs: &[DMatrix<f64>],
    lag_one_covs: &[DMatrix<f64>],
    observations: &[DVector<f64>],
) -> f64 {
    let q = observations.len();
    assert_eq!(means.len(), q);
    assert_eq!(covs.len(), q);
    assert_eq!(lag_one_covs.len(), q - 1);

    let rw_inv = measurement_noise
        .clone()
        .try_inverse()
        .expect("measurement noise invertible");
    let rv_inv = process_noise
        .clone()
        .try_inverse()
        .expect("process noise invertible");
    let log_det_rw = measurement_noise.determinant().ln();
    let log_det_rv = process_noise.determinant().ln();

    let second_moment =
        |k: usize| -> DMatrix<f64> { &covs[k] + &means[k] * means[k].transpose() };

    let mut total = 0.0;
    for k in 0..q {
        let y = &observations[k];
        let m_k = &means[k];
        let s = y * y.transpose() - y * m_k.transpose() - m_k * y.transpose() + second_moment(k);
        total += log_det_rw + (&rw_inv * s).trace();
    }
    for k in 0..q - 1 {
        let h_k = second_moment(k);
        let h_next = second_moment(k + 1);
        let c_k = &lag_one_covs[k] + &means[k + 1] * means[k].transpose();
        let s = h_next - &c_k * transition.transpose() - transition * c_k.transpose()
            + transition * h_k * transition.transpose();
        total += log_det_rv + (&rv_inv * s).trace();
    }
    total
}

/// Central finite-difference gradient of `f` with respect to each entry of
/// `at`.
pub fn finite_difference_gradient<F: Fn(&DMatrix<f64>) -> f64>(
    f: F,
    at: &DMatrix<f64>,
    step: f64,
) -> DMatrix<f64> {
    let mut grad = DMatrix::<f64>::zeros(at.nrows(), at.ncols());
    for i in 0..at.nrows() {
        for j in 0..at.ncols() {
            let mut plus = at.clone();
            let mut minus = at.clone();
            plus[(i, j)] += step;
            minus[(i, j)] -= step;
            grad[(i, j)] = (f(&plus) - f(&minus)) / (2.0 * step);
        }
    }
    grad
}

/// Small deterministic RNG for building random test fixtures.
pub struct OracleRng {
    rng: ChaCha8Rng,
    spare: Option<f64>,
}

impl OracleRng {
    pub fn new(seed: u64) -> Self {
        Self {
            rng: ChaCha8Rng::seed_from_u64(seed ^ 0xD1B5_4A32_D192_ED03),
            spare: None,
        }
    }

    pub fn uniform(&mut self) -> f64 {
        (self.rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    pub fn normal(&mut self) -> f64 {
        if let Some(z) = self.spare.take() {
            return z;
        }
        let u1 = (self.uniform()).max(1e-16);
        let u2 = self.uniform();
        let r = (-2.0 * u1.ln()).sqrt();
        let t = 2.0 * std::f64::consts::PI * u2;
        self.spare = Some(r * t.sin());
        r * t.cos()
    }

    pub fn vector(&mut self, len: usize) -> DVector<f64> {
        DVector::from_fn(len, |_, _| self.normal())
    }

    /// Random symmetric positive definite matrix `L Lᵀ + base·I`.
    pub fn spd(&mut self, dim: usize, base: f64) -> DMatrix<f64> {
        let l = DMatrix::from_fn(dim, dim, |_, _| 0.3 * self.normal());
        &l * l.transpose() + DMatrix::identity(dim, dim) * base
    }

    /// Random matrix rescaled so its spectral radius is at most `radius`
    /// (Frobenius bound).
    pub fn contraction(&mut self, dim: usize, radius: f64) -> DMatrix<f64> {
        let a = DMatrix::from_fn(dim, dim, |_, _| self.normal());
        let norm = a.norm().max(1e-12);
        a * (radius / norm)
    }
}
