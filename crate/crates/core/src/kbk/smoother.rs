//! Backward Rauch-Tung-Striebel pass and lag-one covariance recursion.

use nalgebra::DMatrix;

use super::{singularity, FilterResult, KbkError, Posterior, StateSpaceModel};
use crate::linalg;

/// Smooth a completed filter pass.
///
/// Backward recursion with gain `G_k = Σ_k Aᵀ (Ŝ_{k+1})⁻¹`, seeded at the
/// terminal filtered state. Lag-one covariances follow the standard
/// recursion seeded with `Cov(z_{Q}, z_{Q−1}) = (I − K_Q) A Σ_{Q−1}`.
pub fn rts_smoother(
    filter: &FilterResult,
    model: &StateSpaceModel,
) -> Result<Posterior, KbkError> {
    let q = filter.filtered_means.len();
    if q == 0 {
        return Err(KbkError::InsufficientBlocks { needed: 1, got: 0 });
    }
    if filter.predicted_means.len() != q
        || filter.predicted_covs.len() != q
        || filter.filtered_covs.len() != q
        || filter.gains.len() != q
    {
        return Err(KbkError::DimensionMismatch(
            "filter result sequences have inconsistent lengths".into(),
        ));
    }
    let m = model.dim();
    if filter.filtered_means[0].len() != m {
        return Err(KbkError::DimensionMismatch(
            "filter result does not match model dimension".into(),
        ));
    }

    let a = &model.transition;
    let mut means = filter.filtered_means.clone();
    let mut covs = filter.filtered_covs.clone();
    let mut gains = vec![DMatrix::<f64>::zeros(0, 0); q.saturating_sub(1)];

    for k in (0..q.saturating_sub(1)).rev() {
        let pred_cov_next = &filter.predicted_covs[k + 1];
        let chol = linalg::spd_cholesky(pred_cov_next)
            .map_err(|e| singularity("predicted covariance", e))?;
        // G_k = Σ_k Aᵀ (Ŝ_{k+1})⁻¹, via the symmetric solve.
        let gain = chol.solve(&(a * &filter.filtered_covs[k])).transpose();

        means[k] = &filter.filtered_means[k]
            + &gain * (&means[k + 1] - &filter.predicted_means[k + 1]);
        covs[k] = linalg::symmetrize(
            &(&filter.filtered_covs[k]
                + &gain * (&covs[k + 1] - pred_cov_next) * gain.transpose()),
        );
        gains[k] = gain;
    }

    let mut lag_one_covs = vec![DMatrix::<f64>::zeros(m, m); q.saturating_sub(1)];
    if q >= 2 {
        let identity = DMatrix::<f64>::identity(m, m);
        lag_one_covs[q - 2] =
            (&identity - &filter.gains[q - 1]) * a * &filter.filtered_covs[q - 2];
        for k in (0..q.saturating_sub(2)).rev() {
            lag_one_covs[k] = &filter.filtered_covs[k + 1] * gains[k].transpose()
                + &gains[k + 1]
                    * (&lag_one_covs[k + 1] - a * &filter.filtered_covs[k + 1])
                    * gains[k].transpose();
        }
    }

    Ok(Posterior {
        means,
        covs,
        lag_one_covs,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::embed::BlockData;
    use crate::kbk::kalman_filter;
    use nalgebra::DVector;
    use approx::assert_abs_diff_eq;

    fn scalar_model(a: f64, r_v: f64, r_w: f64, mu1: f64, sigma1: f64) -> StateSpaceModel {
        StateSpaceModel {
            transition: DMatrix::from_element(1, 1, a),
            process_noise: DMatrix::from_element(1, 1, r_v),
            measurement_noise: DMatrix::from_element(1, 1, r_w),
            init_mean: DVector::from_element(1, mu1),
            init_cov: DMatrix::from_element(1, 1, sigma1),
        }
    }

    fn scalar_blocks(ys: &[f64]) -> BlockData {
        BlockData::from_blocks(
            ys.iter().map(|&y| DVector::from_element(1, y)).collect(),
            1.0,
        )
        .unwrap()
    }

    #[test]
    fn terminal_state_equals_filtered() {
        let model = scalar_model(1.0, 0.0, 1.0, 0.0, 1.0);
        let data = scalar_blocks(&[1.0, 1.0]);
        let filter = kalman_filter(&model, &data).unwrap();
        let post = rts_smoother(&filter, &model).unwrap();
        assert_abs_diff_eq!(post.means[1][0], 2.0 / 3.0, epsilon = 1e-15);
        assert_abs_diff_eq!(post.covs[1][(0, 0)], 1.0 / 3.0, epsilon = 1e-15);
    }

    #[test]
    fn static_state_collapses_to_single_weighted_mean() {
        // r_v = 0, a = 1 ties all hidden states together; every smoothed
        // mean must equal the batch posterior mean of the one shared state.
        let (mu1, sigma1, r_w) = (0.4, 3.0, 0.7);
        let ys = [1.0, 0.2, -0.3, 0.9, 0.5];
        let model = scalar_model(1.0, 0.0, r_w, mu1, sigma1);
        let data = scalar_blocks(&ys);
        let filter = kalman_filter(&model, &data).unwrap();
        let post = rts_smoother(&filter, &model).unwrap();

        let n = ys.len() as f64;
        let batch_mean =
            (mu1 / sigma1 + ys.iter().sum::<f64>() / r_w) / (1.0 / sigma1 + n / r_w);
        let batch_var = 1.0 / (1.0 / sigma1 + n / r_w);
        for k in 0..ys.len() {
            assert_abs_diff_eq!(post.means[k][0], batch_mean, epsilon = 1e-10);
            assert_abs_diff_eq!(post.covs[k][(0, 0)], batch_var, epsilon = 1e-10);
        }
        // All pairwise (lag-one) covariances equal the shared variance.
        for lag in &post.lag_one_covs {
            assert_abs_diff_eq!(lag[(0, 0)], batch_var, epsilon = 1e-10);
        }
    }

    #[test]
    fn lag_one_terminal_matches_formula() {
        let model = scalar_model(1.0, 0.0, 1.0, 0.0, 1.0);
        let data = scalar_blocks(&[1.0, 1.0]);
        let filter = kalman_filter(&model, &data).unwrap();
        let post = rts_smoother(&filter, &model).unwrap();
        // (1 - K_2) * a * Sigma_1 = (2/3) * 0.5 = 1/3.
        assert_abs_diff_eq!(post.lag_one_covs[0][(0, 0)], 1.0 / 3.0, epsilon = 1e-15);
    }
}
