//! Benchmark systems, trajectory generation, and measurement noise.
//!
//! Three planar nonlinear systems with known principal Koopman eigenvalues
//! serve as ground truth: one with a purely real spectrum, one with a purely
//! imaginary spectrum (a limit-cycle oscillator), and one with a complex
//! spectrum (a decaying spiral). Trajectories are produced by classical RK4
//! with a configurable number of substeps per sample period; measurements
//! are corrupted by seeded additive i.i.d. Gaussian noise.

use nalgebra::Complex;
use thiserror::Error;

use crate::rng::GaussianStream;

/// State dimension shared by all benchmark systems.
pub const STATE_DIM: usize = 2;

#[derive(Debug, Error)]
pub enum SimError {
    #[error("state has dimension {got}, system expects {expected}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("invalid argument: {0}")]
    InvalidArgument(&'static str),
    #[error("trajectory diverged (non-finite state) at sample index {step}")]
    Divergence { step: usize },
}

/// Which state coordinate serves as the scalar observable.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Observable {
    X1,
    X2,
}

impl Observable {
    pub fn index(self) -> usize {
        match self {
            Observable::X1 => 0,
            Observable::X2 => 1,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Observable::X1 => "x1",
            Observable::X2 => "x2",
        }
    }
}

/// The three benchmark systems, named for the character of their principal
/// Koopman eigenvalues.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BenchmarkSystem {
    /// `ẋ1 = −x1`, `ẋ2 = x1² − x2`; eigenvalues −1 and −2.
    RealSpectrum,
    /// Limit-cycle oscillator on the unit circle; eigenvalues ±i.
    ImaginarySpectrum,
    /// Decaying spiral at frequency 3; eigenvalues −1 ± 3i.
    ComplexSpectrum,
}

impl BenchmarkSystem {
    pub const ALL: [BenchmarkSystem; 3] = [
        BenchmarkSystem::RealSpectrum,
        BenchmarkSystem::ImaginarySpectrum,
        BenchmarkSystem::ComplexSpectrum,
    ];

    pub fn dimension(self) -> usize {
        STATE_DIM
    }

    /// Principal continuous-time Koopman eigenvalues (units 1/time).
    pub fn true_eigenvalues(self) -> Vec<Complex<f64>> {
        match self {
            BenchmarkSystem::RealSpectrum => {
                vec![Complex::new(-1.0, 0.0), Complex::new(-2.0, 0.0)]
            }
            BenchmarkSystem::ImaginarySpectrum => {
                vec![Complex::new(0.0, 1.0), Complex::new(0.0, -1.0)]
            }
            BenchmarkSystem::ComplexSpectrum => {
                vec![Complex::new(-1.0, 3.0), Complex::new(-1.0, -3.0)]
            }
        }
    }

    /// Default initial condition: nonzero energy in every principal mode.
    pub fn default_initial_condition(self) -> [f64; 2] {
        match self {
            BenchmarkSystem::RealSpectrum => [1.0, 0.5],
            BenchmarkSystem::ImaginarySpectrum => [1.0, 0.0],
            BenchmarkSystem::ComplexSpectrum => [1.0, 0.0],
        }
    }

    /// Default scalar observable. For the real-spectrum system only `x2`
    /// mixes both decay modes (`x1` evolves as a single exponential), so the
    /// default is `x2` there and `x1` elsewhere.
    pub fn default_observable(self) -> Observable {
        match self {
            BenchmarkSystem::RealSpectrum => Observable::X2,
            _ => Observable::X1,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            BenchmarkSystem::RealSpectrum => "real",
            BenchmarkSystem::ImaginarySpectrum => "imaginary",
            BenchmarkSystem::ComplexSpectrum => "complex",
        }
    }

    fn field(self, x: [f64; 2]) -> [f64; 2] {
        let [x1, x2] = x;
        match self {
            BenchmarkSystem::RealSpectrum => [-x1, x1 * x1 - x2],
            BenchmarkSystem::ImaginarySpectrum => {
                let shrink = 1.0 - x1 * x1 - x2 * x2;
                [-x2 + x1 * shrink, x1 + x2 * shrink]
            }
            BenchmarkSystem::ComplexSpectrum => {
                let damp = x1 * x1 + x2 * x2 + 1.0;
                [-3.0 * x2 - x1 * damp, 3.0 * x1 - x2 * damp]
            }
        }
    }
}

/// Evaluate the system's vector field at `x`.
pub fn vector_field(system: BenchmarkSystem, x: &[f64]) -> Result<[f64; 2], SimError> {
    if x.len() != system.dimension() {
        return Err(SimError::DimensionMismatch {
            expected: system.dimension(),
            got: x.len(),
        });
    }
    Ok(system.field([x[0], x[1]]))
}

/// A uniformly sampled state sequence.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub sample_period: f64,
    pub states: Vec<[f64; 2]>,
    pub initial_condition: [f64; 2],
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    /// Scalar series of the chosen observable coordinate.
    pub fn observable_series(&self, observable: Observable) -> Vec<f64> {
        let i = observable.index();
        self.states.iter().map(|s| s[i]).collect()
    }
}

/// Additive measurement-noise specification.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseSpec {
    /// Noise variance σ² (≥ 0).
    pub variance: f64,
    pub seed: u64,
}

fn rk4_step(system: BenchmarkSystem, x: [f64; 2], h: f64) -> [f64; 2] {
    let k1 = system.field(x);
    let k2 = system.field([x[0] + 0.5 * h * k1[0], x[1] + 0.5 * h * k1[1]]);
    let k3 = system.field([x[0] + 0.5 * h * k2[0], x[1] + 0.5 * h * k2[1]]);
    let k4 = system.field([x[0] + h * k3[0], x[1] + h * k3[1]]);
    [
        x[0] + h / 6.0 * (k1[0] + 2.0 * k2[0] + 2.0 * k3[0] + k4[0]),
        x[1] + h / 6.0 * (k1[1] + 2.0 * k2[1] + 2.0 * k3[1] + k4[1]),
    ]
}

/// Integrate the system with classical RK4, returning `n` samples at times
/// `0, ts, …, (n−1)·ts`. Each sample period is split into `substeps` internal
/// steps of size `ts / substeps`.
pub fn integrate(
    system: BenchmarkSystem,
    x0: [f64; 2],
    ts: f64,
    n: usize,
    substeps: usize,
) -> Result<Trajectory, SimError> {
    if n < 2 {
        return Err(SimError::InvalidArgument("sample count must be at least 2"));
    }
    if substeps < 1 {
        return Err(SimError::InvalidArgument("substeps must be at least 1"));
    }
    if !(ts > 0.0) {
        return Err(SimError::InvalidArgument("sample period must be positive"));
    }

    let h = ts / substeps as f64;
    let mut states = Vec::with_capacity(n);
    let mut x = x0;
    states.push(x);
    for step in 1..n {
        for _ in 0..substeps {
            x = rk4_step(system, x, h);
        }
        if !(x[0].is_finite() && x[1].is_finite()) {
            return Err(SimError::Divergence { step });
        }
        states.push(x);
    }

    Ok(Trajectory {
        sample_period: ts,
        states,
        initial_condition: x0,
    })
}

/// Perturb every scalar entry by an independent zero-mean Gaussian draw of
/// variance `spec.variance`. Deterministic given the seed; a zero variance
/// returns an identical copy.
pub fn add_noise(traj: &Trajectory, spec: &NoiseSpec) -> Trajectory {
    assert!(
        spec.variance >= 0.0,
        "noise variance must be non-negative, got {}",
        spec.variance
    );
    let mut out = traj.clone();
    if spec.variance == 0.0 {
        return out;
    }
    let std_dev = spec.variance.sqrt();
    let mut stream = GaussianStream::new(spec.seed);
    for state in &mut out.states {
        for coord in state.iter_mut() {
            *coord += stream.next_gaussian(std_dev);
        }
    }
    out
}
