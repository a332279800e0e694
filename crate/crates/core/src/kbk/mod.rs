//! Joint identification and denoising of the lifted block model
//!
//! ```text
//! z_{k+1} = A z_k + v_k,   v_k ~ N(0, R_v)
//! y_k     = z_k + w_k,     w_k ~ N(0, R_w)
//! ```
//!
//! via expectation-maximization: the E-step runs a Kalman filter and RTS
//! smoother to obtain the exact Gaussian posterior over the hidden blocks,
//! the M-step applies closed-form block-coordinate updates to
//! `R_w`, `R_v`, `A` (in that order) and refreshes the initial-state prior
//! from the smoothed first block. Each full sweep is non-decreasing in the
//! marginal data log-likelihood.

mod em;
mod filter;
mod smoother;

pub use em::{default_init, em_fit, m_step};
pub use filter::{kalman_filter, log_likelihood};
pub use smoother::rts_smoother;

use nalgebra::{DMatrix, DVector};
use thiserror::Error;

/// Default eigenvalue/diagonal floor applied to covariance estimates.
pub const DEFAULT_COV_FLOOR: f64 = 1e-10;

#[derive(Debug, Error)]
pub enum KbkError {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("need at least {needed} blocks, got {got}")]
    InsufficientBlocks { needed: usize, got: usize },
    #[error("{context} is numerically singular (condition number {condition:.3e})")]
    NumericalSingularity {
        context: &'static str,
        condition: f64,
    },
    #[error("degenerate posterior statistics: {0}")]
    DegenerateStatistics(String),
    #[error("non-finite values produced by {0}")]
    NonFinite(&'static str),
    #[error("EM iteration {iteration}: {source}")]
    AtIteration {
        iteration: usize,
        #[source]
        source: Box<KbkError>,
    },
}

/// The lifted linear-Gaussian model. `transition` is the block-to-block
/// matrix `A` (the transpose of the lifted-operator matrix representation);
/// the noise covariances and the initial-state prior complete the model.
#[derive(Debug, Clone, PartialEq)]
pub struct StateSpaceModel {
    pub transition: DMatrix<f64>,
    pub process_noise: DMatrix<f64>,
    pub measurement_noise: DMatrix<f64>,
    pub init_mean: DVector<f64>,
    pub init_cov: DMatrix<f64>,
}

impl StateSpaceModel {
    pub fn dim(&self) -> usize {
        self.transition.nrows()
    }

    /// Structural validity: square matched dimensions, finite entries,
    /// symmetric covariances (within `1e-12` relative).
    pub fn validate(&self) -> Result<(), KbkError> {
        let m = self.dim();
        if self.transition.ncols() != m {
            return Err(KbkError::DimensionMismatch("transition must be square".into()));
        }
        for (name, mat) in [
            ("process_noise", &self.process_noise),
            ("measurement_noise", &self.measurement_noise),
            ("init_cov", &self.init_cov),
        ] {
            if mat.nrows() != m || mat.ncols() != m {
                return Err(KbkError::DimensionMismatch(format!(
                    "{name} must be {m}x{m}, got {}x{}",
                    mat.nrows(),
                    mat.ncols()
                )));
            }
            let scale = mat.amax().max(1.0);
            if (mat - mat.transpose()).amax() > 1e-12 * scale {
                return Err(KbkError::DimensionMismatch(format!("{name} is not symmetric")));
            }
            if !crate::linalg::is_finite(mat) {
                return Err(KbkError::NonFinite("model covariance"));
            }
        }
        if self.init_mean.len() != m {
            return Err(KbkError::DimensionMismatch(format!(
                "init_mean must have length {m}, got {}",
                self.init_mean.len()
            )));
        }
        if !crate::linalg::is_finite(&self.transition)
            || self.init_mean.iter().any(|x| !x.is_finite())
        {
            return Err(KbkError::NonFinite("model parameters"));
        }
        Ok(())
    }
}

/// Forward Kalman pass output. Index `k` holds the one-step prediction
/// (`predicted_*`, which at `k = 0` is the prior), the measurement-updated
/// state (`filtered_*`), and the gain used at that step.
#[derive(Debug, Clone)]
pub struct FilterResult {
    pub predicted_means: Vec<DVector<f64>>,
    pub predicted_covs: Vec<DMatrix<f64>>,
    pub filtered_means: Vec<DVector<f64>>,
    pub filtered_covs: Vec<DMatrix<f64>>,
    pub gains: Vec<DMatrix<f64>>,
    /// Accumulated innovation-form Gaussian log-likelihood of the data.
    pub log_likelihood: f64,
}

/// Smoothed posterior over the hidden blocks given all measurements.
/// `lag_one_covs[k]` is `Cov(z_{k+1}, z_k)`, so it has length `q − 1`.
#[derive(Debug, Clone)]
pub struct Posterior {
    pub means: Vec<DVector<f64>>,
    pub covs: Vec<DMatrix<f64>>,
    pub lag_one_covs: Vec<DMatrix<f64>>,
}

/// EM loop controls.
#[derive(Debug, Clone, PartialEq)]
pub struct EmConfig {
    pub max_iterations: usize,
    /// Stop when `|ΔLL| / (|LL| + 1)` falls below this.
    pub likelihood_rel_tol: f64,
    /// Project the noise covariance updates onto their diagonals.
    pub diagonal_covariances: bool,
    /// Lower bound applied to covariance eigenvalues (dense mode) or
    /// diagonal entries (diagonal mode).
    pub cov_floor: f64,
}

impl Default for EmConfig {
    fn default() -> Self {
        Self {
            max_iterations: 500,
            likelihood_rel_tol: 1e-8,
            diagonal_covariances: true,
            cov_floor: DEFAULT_COV_FLOOR,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Termination {
    Converged,
    MaxIterations,
}

/// One E-step record: the log-likelihood of the model entering the
/// iteration and the Frobenius change of `A` introduced by the previous
/// M-step (zero on the first iteration).
#[derive(Debug, Clone, PartialEq)]
pub struct EmIteration {
    pub iteration: usize,
    pub log_likelihood: f64,
    pub transition_delta: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EmTrace {
    pub iterations: Vec<EmIteration>,
    pub termination: Termination,
}

impl EmTrace {
    pub fn final_log_likelihood(&self) -> f64 {
        self.iterations.last().map_or(f64::NAN, |r| r.log_likelihood)
    }
}

pub(crate) fn singularity(context: &'static str, err: crate::linalg::LinalgError) -> KbkError {
    match err {
        crate::linalg::LinalgError::Singular { condition } => {
            KbkError::NumericalSingularity { context, condition }
        }
        crate::linalg::LinalgError::NonFinite => KbkError::NonFinite(context),
        _ => KbkError::NumericalSingularity {
            context,
            condition: f64::INFINITY,
        },
    }
}
