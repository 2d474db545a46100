//! Steepest-entropy-ascent quantum thermodynamics engine.
//!
//! The crate evolves density operators under a nonlinear equation of motion
//! whose dissipative part pulls the state along the entropy gradient projected
//! onto the manifold that conserves trace and mean energy. Three engines are
//! provided: the general single-constituent form ([`dynamics`]), its diagonal
//! specialization for a dilute Boltzmann gas ([`gas`]), and the two-subsystem
//! composite form with locally perceived energy and entropy operators
//! ([`composite`]). Around them sit an operator toolkit ([`operator`],
//! [`density`]), a laboratory of candidate entropy functionals with an
//! executable acceptability battery ([`entropy`], [`criteria`]), and classical
//! energy/entropy balance bookkeeping ([`balance`]).
//!
//! Default units are `hbar = k = 1`; every engine takes both as parameters.

pub mod balance;
pub mod composite;
pub mod criteria;
pub mod density;
pub mod dynamics;
pub mod entropy;
pub mod error;
pub mod gas;
pub mod maxent;
pub mod operator;
pub mod sample;
pub mod serial;
pub mod spectral;
pub mod tol;

pub use density::DensityOperator;
pub use error::{Error, Result};
pub use operator::{partial_trace, tensor_product, HermitianOperator, Keep};

/// Complex scalar used throughout.
pub type C64 = num_complex::Complex<f64>;
