//! Reference identification methods operating on delay-block snapshot pairs:
//! exact DMD (least squares), total-least-squares DMD (signal subspace of the
//! stacked snapshot matrix), and forward-backward DMD (principal square root
//! of the forward/backward-inverse product).

use nalgebra::DMatrix;
use thiserror::Error;

use crate::embed::BlockData;
use crate::linalg::{self, COND_LIMIT};

/// Relative singular-value cutoff for pseudoinverses.
const PINV_CUTOFF: f64 = 1e-12;

#[derive(Debug, Error)]
pub enum BaselineError {
    #[error("snapshot matrix is all zeros")]
    DegenerateData,
    #[error("need at least {needed} snapshot columns, got {got}")]
    InsufficientColumns { needed: usize, got: usize },
    #[error("snapshot matrices must share dimensions ({0})")]
    ShapeMismatch(String),
    #[error("leading signal subspace is ill-conditioned")]
    IllConditionedSubspace,
    #[error("backward operator is singular or ill-conditioned")]
    IllConditionedBackward,
    #[error("matrix square root failed: {0}")]
    SqrtFailure(#[from] linalg::LinalgError),
}

/// Time-shifted snapshot pair: column `j` of `shifted` is the block that
/// follows column `j` of `base` in time.
#[derive(Debug, Clone)]
pub struct SnapshotPairs {
    base: DMatrix<f64>,
    shifted: DMatrix<f64>,
}

impl SnapshotPairs {
    /// Consecutive-block pairs from delay-block data: columns
    /// `y_0 .. y_{q-2}` against `y_1 .. y_{q-1}`.
    pub fn from_blocks(data: &BlockData) -> Result<Self, BaselineError> {
        if data.q() < 2 {
            return Err(BaselineError::InsufficientColumns { needed: 1, got: 0 });
        }
        let m = data.block_len();
        let cols = data.q() - 1;
        let mut base = DMatrix::zeros(m, cols);
        let mut shifted = DMatrix::zeros(m, cols);
        for j in 0..cols {
            base.set_column(j, data.block(j));
            shifted.set_column(j, data.block(j + 1));
        }
        Ok(Self { base, shifted })
    }

    /// Pairs from explicit matrices (columns are time-aligned snapshots).
    pub fn from_matrices(
        base: DMatrix<f64>,
        shifted: DMatrix<f64>,
    ) -> Result<Self, BaselineError> {
        if base.nrows() != shifted.nrows() || base.ncols() != shifted.ncols() {
            return Err(BaselineError::ShapeMismatch(format!(
                "{}x{} vs {}x{}",
                base.nrows(),
                base.ncols(),
                shifted.nrows(),
                shifted.ncols()
            )));
        }
        if base.ncols() == 0 || base.nrows() == 0 {
            return Err(BaselineError::InsufficientColumns { needed: 1, got: 0 });
        }
        Ok(Self { base, shifted })
    }

    pub fn dim(&self) -> usize {
        self.base.nrows()
    }

    pub fn n_pairs(&self) -> usize {
        self.base.ncols()
    }

    pub fn base(&self) -> &DMatrix<f64> {
        &self.base
    }

    pub fn shifted(&self) -> &DMatrix<f64> {
        &self.shifted
    }
}

/// Exact DMD: minimum-norm least-squares minimizer of
/// `‖shifted − A · base‖_F`, computed as `shifted · pinv(base)`.
pub fn dmd(pairs: &SnapshotPairs) -> Result<DMatrix<f64>, BaselineError> {
    let smax = pairs
        .base
        .clone()
        .svd(false, false)
        .singular_values
        .iter()
        .copied()
        .fold(0.0f64, f64::max);
    if smax == 0.0 {
        return Err(BaselineError::DegenerateData);
    }
    Ok(&pairs.shifted * linalg::truncated_pinv(&pairs.base, PINV_CUTOFF))
}

/// Total-least-squares DMD: stack the pair into a `2m x n` matrix, take the
/// leading `m`-dimensional left singular basis `[Ua; Ub]`, and return
/// `Ub · Ua⁻¹`. Accounts for noise in both snapshot sets.
pub fn tdmd(pairs: &SnapshotPairs) -> Result<DMatrix<f64>, BaselineError> {
    let m = pairs.dim();
    let n = pairs.n_pairs();
    if n < m {
        return Err(BaselineError::InsufficientColumns { needed: m, got: n });
    }

    let mut stacked = DMatrix::zeros(2 * m, n);
    stacked.view_mut((0, 0), (m, n)).copy_from(&pairs.base);
    stacked.view_mut((m, 0), (m, n)).copy_from(&pairs.shifted);

    let svd = stacked.svd(true, false);
    let u = svd.u.as_ref().expect("svd computed with u");
    let u_sig = u.columns(0, m);
    let u_a: DMatrix<f64> = u_sig.rows(0, m).into();
    let u_b: DMatrix<f64> = u_sig.rows(m, m).into();

    let cond = condition_via_svd(&u_a);
    if !(cond <= COND_LIMIT) {
        return Err(BaselineError::IllConditionedSubspace);
    }
    let u_a_inv = u_a
        .lu()
        .try_inverse()
        .ok_or(BaselineError::IllConditionedSubspace)?;
    Ok(u_b * u_a_inv)
}

/// Forward-backward DMD: the principal matrix square root of
/// `A_forward · A_backward⁻¹`, where the backward operator fits the
/// time-reversed pair. A near-branch-cut eigenvalue (negative real axis)
/// logs a warning and falls back to the real part of the principal value.
pub fn fbdmd(pairs: &SnapshotPairs) -> Result<DMatrix<f64>, BaselineError> {
    let forward = dmd(pairs)?;

    let smax = pairs
        .shifted
        .clone()
        .svd(false, false)
        .singular_values
        .iter()
        .copied()
        .fold(0.0f64, f64::max);
    if smax == 0.0 {
        return Err(BaselineError::DegenerateData);
    }
    let backward = &pairs.base * linalg::truncated_pinv(&pairs.shifted, PINV_CUTOFF);

    let cond = condition_via_svd(&backward);
    if !(cond <= COND_LIMIT) {
        return Err(BaselineError::IllConditionedBackward);
    }
    let backward_inv = backward
        .lu()
        .try_inverse()
        .ok_or(BaselineError::IllConditionedBackward)?;

    let product = forward * backward_inv;
    let (root, near_branch_cut) = linalg::real_matrix_sqrt(&product)?;
    if near_branch_cut {
        log::warn!(
            "forward-backward product has an eigenvalue near the negative real axis; \
             returning the real part of the principal square root"
        );
    }
    Ok(root)
}

fn condition_via_svd(a: &DMatrix<f64>) -> f64 {
    let sv = a.clone().svd(false, false).singular_values;
    let max = sv.iter().copied().fold(0.0f64, f64::max);
    let min = sv.iter().copied().fold(f64::INFINITY, f64::min);
    if min <= 0.0 {
        f64::INFINITY
    } else {
        max / min
    }
}
