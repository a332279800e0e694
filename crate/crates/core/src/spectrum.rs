//! Spectral extraction and error metrics.
//!
//! The identified block-transition matrix advances the lifted state by one
//! block period `block_len · ts`, so its eigenvalues map to continuous-time
//! exponents through the principal logarithm divided by that period. Modes
//! are ranked by modulus and only the dominant few enter the error metrics.

use nalgebra::{Complex, DMatrix};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum SpectrumError {
    #[error("eigenvalue solver failed to converge")]
    EigFailure,
    #[error("matrix contains non-finite entries")]
    NonFinite,
    #[error("logarithm of a zero eigenvalue is undefined")]
    UndefinedLogarithm,
    #[error("contract violation: {0}")]
    ContractViolation(String),
}

/// Eigenvalues of `a` with multiplicity, sorted by descending modulus; ties
/// broken by descending real part, then descending imaginary part.
pub fn discrete_eigs(a: &DMatrix<f64>) -> Result<Vec<Complex<f64>>, SpectrumError> {
    if !crate::linalg::is_finite(a) {
        return Err(SpectrumError::NonFinite);
    }
    let schur = a
        .clone()
        .try_schur(f64::EPSILON, 100_000)
        .ok_or(SpectrumError::EigFailure)?;
    let mut eigs: Vec<Complex<f64>> = schur.complex_eigenvalues().iter().copied().collect();
    eigs.sort_by(|x, y| {
        y.norm_sqr()
            .total_cmp(&x.norm_sqr())
            .then(y.re.total_cmp(&x.re))
            .then(y.im.total_cmp(&x.im))
    });
    Ok(eigs)
}

/// Map a discrete eigenvalue of the block-transition matrix to the
/// continuous-time exponent `log(λ) / (block_len · ts)` on the principal
/// branch (argument in `(−π, π]`).
pub fn to_continuous(
    lambda: Complex<f64>,
    block_len: usize,
    ts: f64,
) -> Result<Complex<f64>, SpectrumError> {
    let modulus = lambda.norm();
    if modulus == 0.0 {
        return Err(SpectrumError::UndefinedLogarithm);
    }
    let mut arg = lambda.arg();
    if arg == -std::f64::consts::PI {
        arg = std::f64::consts::PI;
    }
    let period = block_len as f64 * ts;
    Ok(Complex::new(modulus.ln() / period, arg / period))
}

/// First `n` entries of a modulus-sorted eigenvalue list.
pub fn select_dominant(
    eigs: &[Complex<f64>],
    n: usize,
) -> Result<Vec<Complex<f64>>, SpectrumError> {
    if n > eigs.len() {
        return Err(SpectrumError::ContractViolation(format!(
            "cannot select {n} dominant modes from {} eigenvalues",
            eigs.len()
        )));
    }
    Ok(eigs[..n].to_vec())
}

fn for_each_permutation<F: FnMut(&[usize])>(n: usize, mut f: F) {
    // Heap's algorithm, iterative.
    let mut idx: Vec<usize> = (0..n).collect();
    let mut c = vec![0usize; n];
    f(&idx);
    let mut i = 0;
    while i < n {
        if c[i] < i {
            if i % 2 == 0 {
                idx.swap(0, i);
            } else {
                idx.swap(c[i], i);
            }
            f(&idx);
            c[i] += 1;
            i = 0;
        } else {
            c[i] = 0;
            i += 1;
        }
    }
}

/// Relative eigenvalue error `‖λ_approx − λ_true‖₂ / ‖λ_true‖₂` under the
/// minimum-cost pairing of the two lists (brute force over permutations;
/// the lists are short in every experiment).
pub fn eig_error(
    approx: &[Complex<f64>],
    truth: &[Complex<f64>],
) -> Result<f64, SpectrumError> {
    if approx.len() != truth.len() {
        return Err(SpectrumError::ContractViolation(format!(
            "eigenvalue lists have different lengths: {} vs {}",
            approx.len(),
            truth.len()
        )));
    }
    if approx.is_empty() {
        return Err(SpectrumError::ContractViolation(
            "eigenvalue lists must be nonempty".into(),
        ));
    }
    let truth_norm_sq: f64 = truth.iter().map(|z| z.norm_sqr()).sum();
    if truth_norm_sq == 0.0 {
        return Err(SpectrumError::ContractViolation(
            "true eigenvalues must not all be zero".into(),
        ));
    }
    let mut best = f64::INFINITY;
    for_each_permutation(approx.len(), |perm| {
        let cost: f64 = perm
            .iter()
            .enumerate()
            .map(|(i, &j)| (approx[j] - truth[i]).norm_sqr())
            .sum();
        best = best.min(cost);
    });
    Ok((best / truth_norm_sq).sqrt())
}

/// Root-mean-square error between two equal-length real sequences.
pub fn state_rmse(estimate: &[f64], truth: &[f64]) -> Result<f64, SpectrumError> {
    if estimate.len() != truth.len() {
        return Err(SpectrumError::ContractViolation(format!(
            "sequences have different lengths: {} vs {}",
            estimate.len(),
            truth.len()
        )));
    }
    if estimate.is_empty() {
        return Err(SpectrumError::ContractViolation(
            "sequences must be nonempty".into(),
        ));
    }
    let sum_sq: f64 = estimate
        .iter()
        .zip(truth)
        .map(|(a, b)| (a - b) * (a - b))
        .sum();
    Ok((sum_sq / estimate.len() as f64).sqrt())
}

/// Full spectral readout of an identified block-transition matrix.
#[derive(Debug, Clone)]
pub struct SpectrumResult {
    /// All eigenvalues, modulus-sorted.
    pub discrete: Vec<Complex<f64>>,
    /// Indices (into `discrete`) of the selected dominant modes.
    pub selected: Vec<usize>,
    /// Continuous-time exponents of the selected modes.
    pub continuous: Vec<Complex<f64>>,
}

/// Extract eigenvalues of `a`, keep the `n_dominant` largest by modulus, and
/// map those to continuous time.
pub fn analyze(
    a: &DMatrix<f64>,
    block_len: usize,
    ts: f64,
    n_dominant: usize,
) -> Result<SpectrumResult, SpectrumError> {
    let discrete = discrete_eigs(a)?;
    let dominant = select_dominant(&discrete, n_dominant)?;
    let continuous = dominant
        .iter()
        .map(|&l| to_continuous(l, block_len, ts))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(SpectrumResult {
        discrete,
        selected: (0..n_dominant).collect(),
        continuous,
    })
}
