//! Koopman spectrum identification from noisy measurements.
//!
//! The centerpiece is the `kbk` module: an expectation-maximization loop that
//! alternates Kalman filtering / RTS smoothing of time-delay blocks with
//! closed-form updates of the lifted linear model `z_{k+1} = A z_k + v_k`,
//! `y_k = z_k + w_k`. Around it sit:
//!
//! - [`sim`] — the three benchmark nonlinear systems, RK4 trajectory
//!   generation, and seeded Gaussian measurement noise;
//! - [`embed`] — non-overlapping delay-block construction from a scalar
//!   observable series, and its inverse;
//! - [`spectrum`] — eigenvalue extraction, discrete-to-continuous mapping via
//!   the principal logarithm, and the two error metrics;
//! - [`baselines`] — exact DMD, total-least-squares DMD, and forward-backward
//!   DMD on the same block pairs.
//!
//! All operations are deterministic functions of their inputs (randomness
//! only enters through explicit seeds), so experiment sweeps are exactly
//! reproducible.

pub mod baselines;
pub mod embed;
pub mod kbk;
pub mod linalg;
pub mod rng;
pub mod sim;
pub mod spectrum;

pub use nalgebra::{Complex, DMatrix, DVector};
