//! Error type shared by all modules.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("matrix is not Hermitian: max |a_ij - conj(a_ji)| = {max_dev:.3e}")]
    NotHermitian { max_dev: f64 },

    #[error("trace must be 1 within {tolerance:.1e}, got {trace:.17}")]
    TraceNotOne { trace: f64, tolerance: f64 },

    #[error("eigenvalue {value:.3e} is below the positivity clamp tolerance")]
    NegativeEigenvalue { value: f64 },

    #[error("probability {value:.3e} at index {index} is invalid")]
    InvalidProbability { index: usize, value: f64 },

    #[error("support mask and probabilities disagree at index {index}")]
    SupportMismatch { index: usize },

    #[error("alpha must be positive and different from 1, got {alpha}")]
    InvalidAlpha { alpha: f64 },

    #[error("energy {energy} lies outside the open spectral interval ({lo}, {hi})")]
    InfeasibleEnergy { energy: f64, lo: f64, hi: f64 },

    #[error("zero temperature is not admissible; use a ground-projector state instead")]
    ZeroTemperature,

    #[error("inverse-temperature bracket exhausted at |beta| = {limit:.1e} for energy {energy}")]
    BetaBracketExhausted { energy: f64, limit: f64 },

    #[error("support projector is trivial")]
    EmptySupport,

    #[error("operator is not a projector: ||P^2 - P|| = {dev:.3e}")]
    NotProjector { dev: f64 },

    #[error("no-signaling check requires a noninteracting composite (V = 0), ||V|| = {norm:.3e}")]
    InteractionPresent { norm: f64 },

    #[error("eigendecomposition failed: {0}")]
    Eigen(String),

    #[error("integration step failure at t = {t:.6} (sample {sample}): {quantity} = {value:.6e}")]
    StepFailure {
        t: f64,
        sample: usize,
        quantity: &'static str,
        value: f64,
    },

    #[error(
        "invariant breach at t = {t:.6} (sample {sample}): {quantity} = {value:.6e} \
         exceeds tolerance {tolerance:.1e}"
    )]
    InvariantBreach {
        t: f64,
        sample: usize,
        quantity: &'static str,
        value: f64,
        tolerance: f64,
    },

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("{0}")]
    Invalid(String),
}
