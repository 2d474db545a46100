//! Candidate entropy functionals.
//!
//! All five candidates are functions of the spectrum of the state alone, so
//! each can be evaluated either on a [`DensityOperator`] or directly on a
//! probability vector. `k` is the entropy unit (Boltzmann constant), 1 by
//! default.

use crate::density::DensityOperator;
use crate::error::{Error, Result};
use crate::tol;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FunctionalKind {
    VonNeumann,
    Daroczy,
    Hartley,
    InfiniteNorm,
    Renyi,
}

impl FunctionalKind {
    pub fn label(&self) -> &'static str {
        match self {
            FunctionalKind::VonNeumann => "von-neumann",
            FunctionalKind::Daroczy => "daroczy",
            FunctionalKind::Hartley => "hartley",
            FunctionalKind::InfiniteNorm => "infinite-norm",
            FunctionalKind::Renyi => "renyi",
        }
    }
}

/// A candidate entropy expression. `alpha` is required (positive, not 1) for
/// the Daroczy and Renyi families and absent otherwise.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EntropyFunctional {
    kind: FunctionalKind,
    alpha: Option<f64>,
    k: f64,
}

impl EntropyFunctional {
    pub fn von_neumann(k: f64) -> Self {
        Self {
            kind: FunctionalKind::VonNeumann,
            alpha: None,
            k,
        }
    }

    pub fn hartley(k: f64) -> Self {
        Self {
            kind: FunctionalKind::Hartley,
            alpha: None,
            k,
        }
    }

    pub fn infinite_norm(k: f64) -> Self {
        Self {
            kind: FunctionalKind::InfiniteNorm,
            alpha: None,
            k,
        }
    }

    pub fn daroczy(alpha: f64, k: f64) -> Result<Self> {
        check_alpha(alpha)?;
        Ok(Self {
            kind: FunctionalKind::Daroczy,
            alpha: Some(alpha),
            k,
        })
    }

    pub fn renyi(alpha: f64, k: f64) -> Result<Self> {
        check_alpha(alpha)?;
        Ok(Self {
            kind: FunctionalKind::Renyi,
            alpha: Some(alpha),
            k,
        })
    }

    pub fn kind(&self) -> FunctionalKind {
        self.kind
    }

    pub fn alpha(&self) -> Option<f64> {
        self.alpha
    }

    pub fn k(&self) -> f64 {
        self.k
    }

    pub fn label(&self) -> String {
        match self.alpha {
            Some(a) => format!("{}(alpha={})", self.kind.label(), a),
            None => self.kind.label().to_string(),
        }
    }

    pub fn evaluate(&self, rho: &DensityOperator) -> f64 {
        self.evaluate_spectrum(rho.eigenvalues())
    }

    /// Evaluate on a bare spectrum; entries below the relative zero threshold
    /// count as kernel weight.
    pub fn evaluate_spectrum(&self, probs: &[f64]) -> f64 {
        let k = self.k;
        let lmax = probs.iter().cloned().fold(0.0, f64::max);
        let floor = tol::EPS_ZERO * lmax;
        match self.kind {
            FunctionalKind::VonNeumann => {
                -k * probs
                    .iter()
                    .filter(|&&p| p > floor)
                    .map(|&p| p * p.ln())
                    .sum::<f64>()
            }
            FunctionalKind::Hartley => {
                let n = probs.iter().filter(|&&p| p > floor).count();
                k * (n as f64).ln()
            }
            FunctionalKind::InfiniteNorm => -k * lmax.ln(),
            FunctionalKind::Daroczy => {
                let a = self.alpha.expect("validated at construction");
                let power: f64 = probs
                    .iter()
                    .filter(|&&p| p > floor)
                    .map(|&p| p.powf(a))
                    .sum();
                k * (power - 1.0) / (2f64.powf(1.0 - a) - 1.0)
            }
            FunctionalKind::Renyi => {
                let a = self.alpha.expect("validated at construction");
                let power: f64 = probs
                    .iter()
                    .filter(|&&p| p > floor)
                    .map(|&p| p.powf(a))
                    .sum();
                k / (1.0 - a) * power.ln()
            }
        }
    }

    /// Gradient with respect to the probabilities, where defined. The Hartley
    /// count is flat almost everywhere (zero gradient); the infinite-norm
    /// expression returns a subgradient supported on the largest entry.
    pub(crate) fn spectrum_gradient(&self, probs: &[f64]) -> Vec<f64> {
        let k = self.k;
        match self.kind {
            FunctionalKind::VonNeumann => probs
                .iter()
                .map(|&p| -k * (p.max(1e-300).ln() + 1.0))
                .collect(),
            FunctionalKind::Hartley => vec![0.0; probs.len()],
            FunctionalKind::InfiniteNorm => {
                let (imax, &pmax) = probs
                    .iter()
                    .enumerate()
                    .max_by(|a, b| a.1.partial_cmp(b.1).unwrap())
                    .expect("nonempty");
                let mut g = vec![0.0; probs.len()];
                g[imax] = -k / pmax.max(1e-300);
                g
            }
            FunctionalKind::Daroczy => {
                let a = self.alpha.expect("validated");
                let c = k / (2f64.powf(1.0 - a) - 1.0);
                probs
                    .iter()
                    .map(|&p| c * a * p.max(0.0).powf(a - 1.0))
                    .collect()
            }
            FunctionalKind::Renyi => {
                let a = self.alpha.expect("validated");
                let power: f64 = probs.iter().map(|&p| p.max(0.0).powf(a)).sum();
                let c = k / (1.0 - a) * a / power.max(1e-300);
                probs
                    .iter()
                    .map(|&p| c * p.max(0.0).powf(a - 1.0))
                    .collect()
            }
        }
    }
}

fn check_alpha(alpha: f64) -> Result<()> {
    if alpha <= 0.0 || alpha == 1.0 || !alpha.is_finite() {
        return Err(Error::InvalidAlpha { alpha });
    }
    Ok(())
}

/// All five candidates with the conventional test parameters
/// (`alpha = 2` for the two parametric families).
pub fn standard_candidates(k: f64) -> Vec<EntropyFunctional> {
    vec![
        EntropyFunctional::von_neumann(k),
        EntropyFunctional::daroczy(2.0, k).expect("alpha 2 valid"),
        EntropyFunctional::hartley(k),
        EntropyFunctional::infinite_norm(k),
        EntropyFunctional::renyi(2.0, k).expect("alpha 2 valid"),
    ]
}
