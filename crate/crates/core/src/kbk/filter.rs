//! Forward Kalman recursion over the block sequence.

use nalgebra::{DMatrix, DVector};

use super::{singularity, FilterResult, KbkError, StateSpaceModel};
use crate::embed::BlockData;
use crate::linalg;

/// Run the Kalman filter over all blocks.
///
/// Step `k = 0` measures the first block against the initial-state prior
/// with the same gain formula as the interior steps; steps `k ≥ 1` predict
/// through `A` and update. The innovation-form log-likelihood
/// `Σ_k log N(y_k; ŷ_k, Ŝ_k + R_w)` accumulates alongside, and equals the
/// joint Gaussian density of the data under the model.
pub fn kalman_filter(
    model: &StateSpaceModel,
    data: &BlockData,
) -> Result<FilterResult, KbkError> {
    model.validate()?;
    let m = model.dim();
    if data.block_len() != m {
        return Err(KbkError::DimensionMismatch(format!(
            "blocks have length {}, model has dimension {m}",
            data.block_len()
        )));
    }
    let q = data.q();
    if q == 0 {
        return Err(KbkError::InsufficientBlocks { needed: 1, got: 0 });
    }

    let identity = DMatrix::<f64>::identity(m, m);
    let ln_2pi = (2.0 * std::f64::consts::PI).ln();

    let mut predicted_means = Vec::with_capacity(q);
    let mut predicted_covs = Vec::with_capacity(q);
    let mut filtered_means = Vec::with_capacity(q);
    let mut filtered_covs = Vec::with_capacity(q);
    let mut gains = Vec::with_capacity(q);
    let mut log_likelihood = 0.0;

    let mut filt_mean = DVector::<f64>::zeros(m);
    let mut filt_cov = DMatrix::<f64>::zeros(m, m);

    for k in 0..q {
        let (pred_mean, pred_cov) = if k == 0 {
            (model.init_mean.clone(), linalg::symmetrize(&model.init_cov))
        } else {
            let mean = &model.transition * &filt_mean;
            let cov = linalg::symmetrize(
                &(&model.transition * &filt_cov * model.transition.transpose()
                    + &model.process_noise),
            );
            (mean, cov)
        };

        let innovation_cov = linalg::symmetrize(&(&pred_cov + &model.measurement_noise));
        let chol =
            linalg::spd_cholesky(&innovation_cov).map_err(|e| singularity("innovation covariance", e))?;

        let residual = data.block(k) - &pred_mean;
        let whitened = chol.solve(&residual);
        log_likelihood +=
            -0.5 * (m as f64 * ln_2pi + linalg::cholesky_log_det(&chol) + residual.dot(&whitened));

        // K = Ŝ · (Ŝ + R_w)^{-1}; both factors symmetric.
        let gain = chol.solve(&pred_cov).transpose();
        filt_mean = &pred_mean + &gain * &residual;
        filt_cov = linalg::symmetrize(&((&identity - &gain) * &pred_cov));

        predicted_means.push(pred_mean);
        predicted_covs.push(pred_cov);
        filtered_means.push(filt_mean.clone());
        filtered_covs.push(filt_cov.clone());
        gains.push(gain);
    }

    Ok(FilterResult {
        predicted_means,
        predicted_covs,
        filtered_means,
        filtered_covs,
        gains,
        log_likelihood,
    })
}

/// Innovation-form data log-likelihood under the model.
pub fn log_likelihood(model: &StateSpaceModel, data: &BlockData) -> Result<f64, KbkError> {
    kalman_filter(model, data).map(|f| f.log_likelihood)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::embed::BlockData;
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
    fn scalar_hand_recursion() {
        // a = 1, r_v = 0, r_w = 1, prior N(0, 1), y = [1, 1].
        let model = scalar_model(1.0, 0.0, 1.0, 0.0, 1.0);
        let data = scalar_blocks(&[1.0, 1.0]);
        let out = kalman_filter(&model, &data).unwrap();

        // First update: K = 1/2, mean 1/2, cov 1/2.
        assert_abs_diff_eq!(out.gains[0][(0, 0)], 0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(out.filtered_means[0][0], 0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(out.filtered_covs[0][(0, 0)], 0.5, epsilon = 1e-15);

        // Prediction carries straight through (a = 1, r_v = 0).
        assert_abs_diff_eq!(out.predicted_means[1][0], 0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(out.predicted_covs[1][(0, 0)], 0.5, epsilon = 1e-15);

        // Second update: K = 0.5/1.5 = 1/3, mean 2/3.
        assert_abs_diff_eq!(out.gains[1][(0, 0)], 1.0 / 3.0, epsilon = 1e-15);
        assert_abs_diff_eq!(out.filtered_means[1][0], 2.0 / 3.0, epsilon = 1e-15);

        // Innovation log-likelihood matches the two marginal densities.
        let ln_n = |y: f64, mean: f64, var: f64| {
            -0.5 * ((2.0 * std::f64::consts::PI * var).ln() + (y - mean) * (y - mean) / var)
        };
        assert_abs_diff_eq!(
            out.log_likelihood,
            ln_n(1.0, 0.0, 2.0) + ln_n(1.0, 0.5, 1.5),
            epsilon = 1e-12
        );
    }

    #[test]
    fn huge_measurement_noise_disables_updates() {
        // With r_w -> 1e12 the gain vanishes and the filter tracks the pure
        // model prediction a^k * mu1.
        let model = scalar_model(0.9, 1e-8, 1e12, 2.0, 1.0);
        let ys = [5.0, -3.0, 7.0, 1.0, 0.0];
        let data = scalar_blocks(&ys);
        let out = kalman_filter(&model, &data).unwrap();
        for (k, mean) in out.filtered_means.iter().enumerate() {
            let pure = 2.0 * 0.9f64.powi(k as i32);
            assert_abs_diff_eq!(mean[0], pure, epsilon = 1e-6);
        }
    }

    #[test]
    fn static_state_filter_matches_running_mean() {
        // a = 1, r_v = 0: the filter is recursive averaging of the constant
        // observations against a N(mu1, sigma1) prior.
        let (mu1, sigma1, r_w, c) = (0.3, 50.0, 2.0, 1.7);
        let model = scalar_model(1.0, 0.0, r_w, mu1, sigma1);
        let data = scalar_blocks(&[c; 12]);
        let out = kalman_filter(&model, &data).unwrap();
        let mut prev_gap = f64::INFINITY;
        for (k, mean) in out.filtered_means.iter().enumerate() {
            let n = (k + 1) as f64;
            let closed_form = (mu1 / sigma1 + n * c / r_w) / (1.0 / sigma1 + n / r_w);
            assert_abs_diff_eq!(mean[0], closed_form, epsilon = 1e-10);
            let gap = (mean[0] - c).abs();
            assert!(gap <= prev_gap + 1e-12);
            prev_gap = gap;
        }
    }

    #[test]
    fn single_block_likelihood_is_prior_predictive() {
        let model = scalar_model(0.7, 0.1, 0.5, 0.2, 0.9);
        let data = scalar_blocks(&[1.3]);
        let ll = log_likelihood(&model, &data).unwrap();
        let var = 0.9 + 0.5;
        let expected =
            -0.5 * ((2.0 * std::f64::consts::PI * var).ln() + (1.3 - 0.2f64).powi(2) / var);
        assert_abs_diff_eq!(ll, expected, epsilon = 1e-12);
    }

    #[test]
    fn doubling_measurement_noise_shifts_density_by_half_log_two() {
        // Data exactly at the prior mean with zero prior covariance makes
        // the quadratic term vanish; doubling r_w then lowers the density
        // by exactly (m/2) log 2.
        let model_a = scalar_model(1.0, 0.0, 0.4, 1.1, 0.0);
        let model_b = scalar_model(1.0, 0.0, 0.8, 1.1, 0.0);
        let data = scalar_blocks(&[1.1]);
        let ll_a = log_likelihood(&model_a, &data).unwrap();
        let ll_b = log_likelihood(&model_b, &data).unwrap();
        assert_abs_diff_eq!(ll_a - ll_b, 0.5 * 2.0f64.ln(), epsilon = 1e-12);
    }

    #[test]
    fn singular_innovation_covariance_is_reported() {
        let model = scalar_model(1.0, 0.0, 0.0, 0.0, 0.0);
        let data = scalar_blocks(&[1.0, 2.0]);
        match kalman_filter(&model, &data) {
            Err(KbkError::NumericalSingularity { context, .. }) => {
                assert_eq!(context, "innovation covariance")
            }
            other => panic!("expected singularity, got {other:?}"),
        }
    }

    #[test]
    fn rejects_mismatched_block_length() {
        let model = scalar_model(1.0, 0.1, 0.1, 0.0, 1.0);
        let data = BlockData::from_blocks(
            vec![DVector::from_column_slice(&[1.0, 2.0])],
            1.0,
        )
        .unwrap();
        assert!(matches!(
            kalman_filter(&model, &data),
            Err(KbkError::DimensionMismatch(_))
        ));
    }
}
