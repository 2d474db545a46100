//! Density operators with cached spectral data, measurement statistics, and
//! the entropy operator.

use ndarray::{Array1, Array2};
use num_complex::Complex64 as C64;

use crate::error::{Error, Result};
use crate::operator::{outer, tensor_product, HermitianOperator};
use crate::spectral::{eigh_ascending, SpectralDecomposition};
use crate::tol;

/// Unit-trace positive-semidefinite Hermitian operator.
///
/// The spectral decomposition is computed once at construction and cached:
/// `eigenvalues` descending, `eigenvectors` the matching orthonormal columns,
/// and `support_dim` the number of eigenvalues above the relative zero
/// threshold. Eigenvalues in `[-1e-10, 0)` are clamped to zero and the
/// spectrum renormalized; more negative values are rejected.
#[derive(Debug, Clone)]
pub struct DensityOperator {
    op: HermitianOperator,
    eigenvalues: Vec<f64>,
    eigenvectors: Array2<C64>,
    support_dim: usize,
}

/// Standard deviations of two observables and the commutator lower bound on
/// their product.
#[derive(Debug, Clone, Copy)]
pub struct UncertaintyProduct {
    pub delta_a: f64,
    pub delta_b: f64,
    pub bound: f64,
}

impl DensityOperator {
    /// Validate a Hermitian matrix as a density operator.
    pub fn from_operator(op: HermitianOperator) -> Result<Self> {
        let trace = op.trace();
        if (trace - 1.0).abs() > tol::TRACE_UNITY {
            return Err(Error::TraceNotOne {
                trace,
                tolerance: tol::TRACE_UNITY,
            });
        }
        let (vals, vecs) = eigh_ascending(op.entries())?;
        Self::from_eigen_ascending(vals, vecs)
    }

    /// Diagonal shorthand: probabilities on the standard basis.
    pub fn from_probabilities(probs: &[f64]) -> Result<Self> {
        for (i, &p) in probs.iter().enumerate() {
            if !(0.0..=1.0 + tol::TRACE_UNITY).contains(&p) {
                return Err(Error::InvalidProbability { index: i, value: p });
            }
        }
        let sum: f64 = probs.iter().sum();
        if (sum - 1.0).abs() > tol::TRACE_UNITY {
            return Err(Error::TraceNotOne {
                trace: sum,
                tolerance: tol::TRACE_UNITY,
            });
        }
        Self::from_operator(HermitianOperator::diagonal(probs))
    }

    /// Pure-state shorthand: the projector onto a state vector. The amplitudes
    /// must be normalized to within 1e-8 and are renormalized exactly.
    pub fn pure(amplitudes: &[C64]) -> Result<Self> {
        let norm_sq: f64 = amplitudes.iter().map(|z| z.norm_sqr()).sum();
        if (norm_sq - 1.0).abs() > 1e-8 {
            return Err(Error::Invalid(format!(
                "pure-state amplitudes have norm {} (must be 1 within 1e-8)",
                norm_sq.sqrt()
            )));
        }
        let scale = norm_sq.sqrt();
        let v: Array1<C64> = amplitudes.iter().map(|z| z / scale).collect();
        Self::from_operator(HermitianOperator::symmetrized(outer(&v)))
    }

    pub fn maximally_mixed(dim: usize) -> Self {
        Self::from_probabilities(&vec![1.0 / dim as f64; dim]).expect("uniform spectrum is valid")
    }

    /// Build from spectral data. `basis` columns must be orthonormal; the
    /// clamp/renormalize repairs and descending sort are applied here.
    pub(crate) fn from_spectral(basis: Array2<C64>, eigenvalues: Vec<f64>) -> Result<Self> {
        let n = basis.nrows();
        debug_assert_eq!(basis.ncols(), eigenvalues.len());
        debug_assert_eq!(n, eigenvalues.len());
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&a, &b| eigenvalues[b].partial_cmp(&eigenvalues[a]).unwrap());
        let vals_desc: Vec<f64> = order.iter().map(|&i| eigenvalues[i]).collect();
        let mut vecs = Array2::zeros((n, n));
        for (k, &i) in order.iter().enumerate() {
            vecs.column_mut(k).assign(&basis.column(i));
        }
        let mut asc = vals_desc.clone();
        asc.reverse();
        let mut vecs_asc = Array2::zeros((n, n));
        for k in 0..n {
            vecs_asc.column_mut(k).assign(&vecs.column(n - 1 - k));
        }
        Self::from_eigen_ascending(asc, vecs_asc)
    }

    fn from_eigen_ascending(vals: Vec<f64>, vecs: Array2<C64>) -> Result<Self> {
        let n = vals.len();
        let mut clamped = Vec::with_capacity(n);
        for &v in &vals {
            if v < -tol::EIGENVALUE_CLAMP {
                return Err(Error::NegativeEigenvalue { value: v });
            }
            clamped.push(v.max(0.0));
        }
        let total: f64 = clamped.iter().sum();
        if total <= 0.0 {
            return Err(Error::Invalid("density operator has zero trace".into()));
        }
        for v in &mut clamped {
            *v /= total;
        }

        // flip to descending
        let mut eigenvalues: Vec<f64> = clamped.iter().rev().copied().collect();
        let mut eigenvectors = Array2::zeros((n, n));
        for k in 0..n {
            eigenvectors
                .column_mut(k)
                .assign(&vecs.column(n - 1 - k));
        }
        // tie-order safety: ensure monotone non-increasing after reversal
        for w in eigenvalues.windows(2) {
            debug_assert!(w[0] >= w[1] - 1e-15);
        }
        let lmax = eigenvalues[0];
        let support_dim = eigenvalues
            .iter()
            .filter(|&&v| v > tol::EPS_ZERO * lmax)
            .count();
        for v in &mut eigenvalues {
            if *v <= tol::EPS_ZERO * lmax {
                *v = 0.0;
            }
        }
        // renormalize once more after zeroing sub-threshold weight
        let total: f64 = eigenvalues.iter().sum();
        for v in &mut eigenvalues {
            *v /= total;
        }

        let mut m: Array2<C64> = Array2::zeros((n, n));
        for k in 0..support_dim {
            let col: Array1<C64> = eigenvectors.column(k).to_owned();
            m = m + outer(&col).mapv(|z| z * eigenvalues[k]);
        }
        Ok(Self {
            op: HermitianOperator::symmetrized(m),
            eigenvalues,
            eigenvectors,
            support_dim,
        })
    }

    pub fn dim(&self) -> usize {
        self.op.dim()
    }

    pub fn matrix(&self) -> &HermitianOperator {
        &self.op
    }

    /// Eigenvalues in descending order; zeros pad the kernel.
    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    /// Orthonormal eigenvector columns aligned with `eigenvalues()`.
    pub fn eigenvectors(&self) -> &Array2<C64> {
        &self.eigenvectors
    }

    pub fn support_dim(&self) -> usize {
        self.support_dim
    }

    pub fn is_projector(&self) -> bool {
        self.support_dim == 1
    }

    /// Idempotent support projector: every nonzero eigenvalue replaced by one.
    pub fn support_projector(&self) -> HermitianOperator {
        let n = self.dim();
        let mut m: Array2<C64> = Array2::zeros((n, n));
        for k in 0..self.support_dim {
            let col: Array1<C64> = self.eigenvectors.column(k).to_owned();
            m = m + outer(&col);
        }
        HermitianOperator::symmetrized(m)
    }

    /// Dimensionless entropy operator: acts as `-ln(lambda)` on each support
    /// eigenvector and as zero on the kernel. The null operator for a
    /// projector.
    pub fn entropy_operator(&self) -> HermitianOperator {
        let n = self.dim();
        let mut m: Array2<C64> = Array2::zeros((n, n));
        for k in 0..self.support_dim {
            let col: Array1<C64> = self.eigenvectors.column(k).to_owned();
            m = m + outer(&col).mapv(|z| z * (-self.eigenvalues[k].ln()));
        }
        HermitianOperator::symmetrized(m)
    }

    /// `-k Tr[rho ln rho]` with the `0 ln 0 = 0` convention.
    pub fn von_neumann_entropy(&self, k: f64) -> f64 {
        -k * self
            .eigenvalues
            .iter()
            .filter(|&&p| p > 0.0)
            .map(|&p| p * p.ln())
            .sum::<f64>()
    }

    pub fn purity(&self) -> f64 {
        self.eigenvalues.iter().map(|p| p * p).sum()
    }

    /// Mean value `Tr[rho a]`; the imaginary residue of the trace is checked
    /// small and discarded.
    pub fn expectation(&self, a: &HermitianOperator) -> Result<f64> {
        self.op.trace_product(a)
    }

    /// Probability of each measurement outcome of an observable, degenerate
    /// eigenvalues merged into a single entry. Outcomes descending.
    pub fn measurement_distribution(&self, a: &HermitianOperator) -> Result<Vec<(f64, f64)>> {
        if a.dim() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: a.dim(),
            });
        }
        let sd = SpectralDecomposition::decompose(a)?;
        let mut out = Vec::with_capacity(sd.eigenvalues.len());
        for (val, proj) in sd.eigenvalues.iter().zip(&sd.eigenprojectors) {
            let w = self.expectation(proj)?.max(0.0);
            out.push((*val, w));
        }
        Ok(out)
    }

    /// Standard deviations of two observables and the bound `|<C>|/2` with
    /// `C = -i[a, b]`.
    pub fn uncertainty_product(
        &self,
        a: &HermitianOperator,
        b: &HermitianOperator,
    ) -> Result<UncertaintyProduct> {
        let variance = |x: &HermitianOperator| -> Result<f64> {
            let x2 = x.sym_product(x)?;
            let mean = self.expectation(x)?;
            Ok((self.expectation(&x2)? - mean * mean).max(0.0))
        };
        let delta_a = variance(a)?.sqrt();
        let delta_b = variance(b)?.sqrt();
        let c = a.commutator_over_i(b)?;
        let bound = 0.5 * self.expectation(&c)?.abs();
        Ok(UncertaintyProduct {
            delta_a,
            delta_b,
            bound,
        })
    }

    /// Product state on the joint space; spectral data is assembled from the
    /// factors without re-decomposition.
    pub fn product(a: &DensityOperator, b: &DensityOperator) -> Result<Self> {
        let op = tensor_product(a.matrix(), b.matrix());
        Self::from_operator(op)
    }

    /// Reduced state of one factor.
    pub fn reduce(&self, dims: (usize, usize), keep: crate::operator::Keep) -> Result<Self> {
        let reduced = crate::operator::partial_trace(&self.op, dims, keep)?;
        Self::from_operator(reduced)
    }
}

/// Half the trace norm of the difference of two states.
pub fn trace_distance(a: &DensityOperator, b: &DensityOperator) -> Result<f64> {
    let diff = a.matrix().sub(b.matrix())?;
    let (vals, _) = eigh_ascending(diff.entries())?;
    Ok(0.5 * vals.iter().map(|v| v.abs()).sum::<f64>())
}
