//! Numerical thresholds used across the crate.
//!
//! These are the crate-wide contract values; per-run tolerances that depend on
//! scales (energy drift, entropy monotonicity) are derived from them at the
//! call sites.

/// Per-entry Hermiticity tolerance for accepting an operator.
pub const HERMITICITY: f64 = 1e-12;

/// Allowed deviation of a density-operator trace from 1 on construction.
pub const TRACE_UNITY: f64 = 1e-12;

/// Eigenvalues in `[-EIGENVALUE_CLAMP, 0)` are repaired to 0 with trace
/// renormalization; anything more negative is an error.
pub const EIGENVALUE_CLAMP: f64 = 1e-10;

/// Relative threshold (w.r.t. the largest eigenvalue) below which an
/// eigenvalue counts as zero for support/kernel detection.
pub const EPS_ZERO: f64 = 1e-12;

/// Observable eigenvalues closer than `DEGENERACY_MERGE * spectral range`
/// are merged into one measurement outcome.
pub const DEGENERACY_MERGE: f64 = 1e-9;

/// Energy-variance floor, relative to the squared Frobenius norm of the
/// Hamiltonian. Below it all state weight lies in a single energy shell and
/// the energy constraint row is dropped from the dissipative projection.
pub const VARIANCE_FLOOR: f64 = 1e-14;

/// Residual below which a state counts as stationary.
pub const STATIONARITY: f64 = 1e-9;

/// Number of consecutive stationary samples required to report convergence.
pub const STATIONARY_SAMPLES: usize = 100;

/// Per-step trace drift allowed before a trajectory aborts.
pub const TRACE_DRIFT: f64 = 1e-9;

/// Relative energy drift allowed along a trajectory.
pub const ENERGY_DRIFT: f64 = 1e-8;

/// Allowed per-step entropy decrease (forward time) along a trajectory.
pub const ENTROPY_STEP: f64 = 1e-9;

/// Supported gas probabilities below this floor trigger step-size reduction.
pub const GAS_PROBABILITY_FLOOR: f64 = 1e-300;

/// Bracket limit for the inverse-temperature solver.
pub const BETA_BRACKET_LIMIT: f64 = 1e6;
