//! Dense linear-algebra helpers shared by the identification and baseline
//! modules: guarded SPD factorizations, truncated pseudoinverses, eigenvalue
//! flooring, and a Schur-based principal matrix square root.

use nalgebra::{Cholesky, Complex, DMatrix, Dyn};
use thiserror::Error;

/// Condition-number ceiling beyond which a matrix is treated as singular.
pub const COND_LIMIT: f64 = 1e14;

#[derive(Debug, Error)]
pub enum LinalgError {
    #[error("matrix is numerically singular (condition number {condition:.3e})")]
    Singular { condition: f64 },
    #[error("matrix contains non-finite entries")]
    NonFinite,
    #[error("Schur decomposition did not converge")]
    SchurFailure,
    #[error("matrix square root broke down (eigenvalue sum near zero)")]
    SqrtBreakdown,
}

/// `(a + aᵀ) / 2`.
pub fn symmetrize(a: &DMatrix<f64>) -> DMatrix<f64> {
    (a + a.transpose()) * 0.5
}

pub fn is_finite(a: &DMatrix<f64>) -> bool {
    a.iter().all(|x| x.is_finite())
}

/// Smallest eigenvalue of a symmetric matrix.
pub fn min_symmetric_eigenvalue(a: &DMatrix<f64>) -> f64 {
    a.symmetric_eigenvalues()
        .iter()
        .copied()
        .fold(f64::INFINITY, f64::min)
}

/// Condition number of a symmetric positive definite matrix
/// (`∞` when it is not positive definite).
pub fn spd_condition(a: &DMatrix<f64>) -> f64 {
    let eigs = a.symmetric_eigenvalues();
    let max = eigs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let min = eigs.iter().copied().fold(f64::INFINITY, f64::min);
    if min <= 0.0 || !max.is_finite() {
        f64::INFINITY
    } else {
        max / min
    }
}

/// Cholesky-factor a symmetric matrix, rejecting it when the condition
/// number exceeds [`COND_LIMIT`] or the factorization fails outright.
pub fn spd_cholesky(a: &DMatrix<f64>) -> Result<Cholesky<f64, Dyn>, LinalgError> {
    if !is_finite(a) {
        return Err(LinalgError::NonFinite);
    }
    let condition = spd_condition(a);
    if !(condition <= COND_LIMIT) {
        return Err(LinalgError::Singular { condition });
    }
    a.clone()
        .cholesky()
        .ok_or(LinalgError::Singular { condition })
}

/// `log |a|` from a Cholesky factor.
pub fn cholesky_log_det(chol: &Cholesky<f64, Dyn>) -> f64 {
    chol.l_dirty()
        .diagonal()
        .iter()
        .map(|d| 2.0 * d.ln())
        .sum()
}

/// Moore-Penrose pseudoinverse with singular values below
/// `rel_cutoff · σ_max` truncated to zero. The zero matrix maps to the zero
/// matrix.
pub fn truncated_pinv(a: &DMatrix<f64>, rel_cutoff: f64) -> DMatrix<f64> {
    let svd = a.clone().svd(true, true);
    let u = svd.u.as_ref().expect("svd computed with u");
    let v_t = svd.v_t.as_ref().expect("svd computed with v_t");
    let s_max = svd.singular_values.iter().copied().fold(0.0f64, f64::max);
    let cutoff = rel_cutoff * s_max;
    let rank = svd.singular_values.len();
    let mut s_inv = DMatrix::zeros(rank, rank);
    for (i, &s) in svd.singular_values.iter().enumerate() {
        if s > cutoff && s > 0.0 {
            s_inv[(i, i)] = 1.0 / s;
        }
    }
    v_t.transpose() * s_inv * u.transpose()
}

/// Clamp the eigenvalues of a symmetric matrix from below.
pub fn floor_spd_eigenvalues(a: &DMatrix<f64>, floor: f64) -> DMatrix<f64> {
    let eig = symmetrize(a).symmetric_eigen();
    let clamped = eig.eigenvalues.map(|l| l.max(floor));
    let scaled = &eig.eigenvectors * DMatrix::from_diagonal(&clamped);
    symmetrize(&(scaled * eig.eigenvectors.transpose()))
}

/// Principal square root of a real square matrix via its real Schur form.
///
/// The quasi-triangular factor is unitarily reduced to complex triangular
/// form (each 2x2 conjugate-pair block rotated by its eigenvector basis),
/// the triangular square root is built by the usual superdiagonal
/// recurrence, and the result is mapped back. The returned flag is `true`
/// when an eigenvalue sits on or near the negative real axis, in which case
/// the real part of the principal value is returned.
pub fn real_matrix_sqrt(a: &DMatrix<f64>) -> Result<(DMatrix<f64>, bool), LinalgError> {
    let n = a.nrows();
    assert_eq!(n, a.ncols(), "square matrix required");
    if !is_finite(a) {
        return Err(LinalgError::NonFinite);
    }

    let schur = a
        .clone()
        .try_schur(f64::EPSILON, 100_000)
        .ok_or(LinalgError::SchurFailure)?;
    let (q, t) = schur.unpack();

    // Unitary block rotation: complex-triangularize each 2x2 block of t.
    let mut w = DMatrix::<Complex<f64>>::identity(n, n);
    let mut i = 0;
    while i < n {
        if i + 1 < n && t[(i + 1, i)] != 0.0 {
            let (a00, a01) = (t[(i, i)], t[(i, i + 1)]);
            let (a10, a11) = (t[(i + 1, i)], t[(i + 1, i + 1)]);
            let mean = 0.5 * (a00 + a11);
            let disc = 0.25 * (a00 - a11) * (a00 - a11) + a01 * a10;
            if disc >= 0.0 {
                // A Schur block with real eigenvalues should have been split.
                return Err(LinalgError::SchurFailure);
            }
            let lambda = Complex::new(mean, (-disc).sqrt());
            let v = if a01.abs() >= a10.abs() {
                [Complex::new(a01, 0.0), lambda - Complex::new(a00, 0.0)]
            } else {
                [lambda - Complex::new(a11, 0.0), Complex::new(a10, 0.0)]
            };
            let norm = (v[0].norm_sqr() + v[1].norm_sqr()).sqrt();
            let v = [v[0] / norm, v[1] / norm];
            w[(i, i)] = v[0];
            w[(i + 1, i)] = v[1];
            w[(i, i + 1)] = -v[1].conj();
            w[(i + 1, i + 1)] = v[0].conj();
            i += 2;
        } else {
            i += 1;
        }
    }

    let t_c = w.adjoint() * t.map(|x| Complex::new(x, 0.0)) * &w;

    let mut root = DMatrix::<Complex<f64>>::zeros(n, n);
    let mut near_branch_cut = false;
    for i in 0..n {
        let lambda = t_c[(i, i)];
        if lambda.re < 0.0 && lambda.im.abs() <= 1e-9 * lambda.norm() {
            near_branch_cut = true;
        }
        root[(i, i)] = lambda.sqrt();
    }
    for offset in 1..n {
        for i in 0..n - offset {
            let j = i + offset;
            let mut rhs = t_c[(i, j)];
            for k in i + 1..j {
                rhs -= root[(i, k)] * root[(k, j)];
            }
            let denom = root[(i, i)] + root[(j, j)];
            if denom.norm() < 1e-150 {
                return Err(LinalgError::SqrtBreakdown);
            }
            root[(i, j)] = rhs / denom;
        }
    }

    let q_c = q.map(|x| Complex::new(x, 0.0));
    let full = &q_c * &w * root * w.adjoint() * q_c.transpose();
    let real = full.map(|z| z.re);
    if !is_finite(&real) {
        return Err(LinalgError::SqrtBreakdown);
    }
    Ok((real, near_branch_cut))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn mat(rows: usize, cols: usize, data: &[f64]) -> DMatrix<f64> {
        DMatrix::from_row_slice(rows, cols, data)
    }

    #[test]
    fn sqrt_of_identity() {
        let (s, flag) = real_matrix_sqrt(&DMatrix::identity(3, 3)).unwrap();
        assert!(!flag);
        assert_abs_diff_eq!(s, DMatrix::identity(3, 3), epsilon = 1e-12);
    }

    #[test]
    fn sqrt_of_scalar() {
        let (s, flag) = real_matrix_sqrt(&mat(1, 1, &[4.0])).unwrap();
        assert!(!flag);
        assert_abs_diff_eq!(s[(0, 0)], 2.0, epsilon = 1e-14);
    }

    #[test]
    fn sqrt_squares_back_for_rotation_scale() {
        // 0.81 x rotation by 0.6: complex spectrum, well away from the cut.
        let c = 0.6f64.cos();
        let s = 0.6f64.sin();
        let a = mat(2, 2, &[0.81 * c, -0.81 * s, 0.81 * s, 0.81 * c]);
        let (r, flag) = real_matrix_sqrt(&a).unwrap();
        assert!(!flag);
        assert_abs_diff_eq!(&r * &r, a, epsilon = 1e-12);
        // Principal branch: half the rotation angle, sqrt of the modulus.
        let half = mat(2, 2, &[0.9 * 0.3f64.cos(), -0.9 * 0.3f64.sin(),
                               0.9 * 0.3f64.sin(), 0.9 * 0.3f64.cos()]);
        assert_abs_diff_eq!(r, half, epsilon = 1e-12);
    }

    #[test]
    fn sqrt_squares_back_for_random_mix() {
        let a = mat(
            3,
            3,
            &[0.7, 0.3, -0.2, -0.4, 0.9, 0.1, 0.05, -0.3, 0.6],
        );
        let (r, _flag) = real_matrix_sqrt(&a).unwrap();
        assert_abs_diff_eq!(&r * &r, a, epsilon = 1e-10);
    }

    #[test]
    fn sqrt_flags_negative_real_eigenvalue() {
        let a = mat(2, 2, &[-4.0, 0.0, 0.0, 1.0]);
        let (_, flag) = real_matrix_sqrt(&a).unwrap();
        assert!(flag);
    }

    #[test]
    fn pinv_of_invertible_is_inverse() {
        let a = mat(2, 2, &[2.0, 1.0, 0.5, 3.0]);
        let p = truncated_pinv(&a, 1e-12);
        assert_abs_diff_eq!(&a * &p, DMatrix::identity(2, 2), epsilon = 1e-12);
    }

    #[test]
    fn pinv_of_zero_is_zero() {
        let z = DMatrix::<f64>::zeros(3, 2);
        assert_eq!(truncated_pinv(&z, 1e-12), DMatrix::zeros(2, 3));
    }

    #[test]
    fn flooring_lifts_small_eigenvalues() {
        let a = mat(2, 2, &[1e-16, 0.0, 0.0, 2.0]);
        let floored = floor_spd_eigenvalues(&a, 1e-10);
        assert!(min_symmetric_eigenvalue(&floored) >= 1e-10 - 1e-24);
        assert_abs_diff_eq!(floored[(1, 1)], 2.0, epsilon = 1e-12);
    }

    #[test]
    fn cholesky_guard_rejects_ill_conditioned() {
        let a = mat(2, 2, &[1.0, 0.0, 0.0, 1e-16]);
        assert!(matches!(spd_cholesky(&a), Err(LinalgError::Singular { .. })));
        let ok = spd_cholesky(&mat(2, 2, &[2.0, 0.3, 0.3, 1.0]));
        assert!(ok.is_ok());
    }

    #[test]
    fn log_det_matches_direct() {
        let a = mat(2, 2, &[2.0, 0.3, 0.3, 1.0]);
        let chol = spd_cholesky(&a).unwrap();
        assert_abs_diff_eq!(cholesky_log_det(&chol), a.determinant().ln(), epsilon = 1e-12);
    }
}
