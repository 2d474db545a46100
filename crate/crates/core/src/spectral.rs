//! Spectral decomposition of observables with degeneracy merging.

use ndarray::{Array1, Array2};
use ndarray_linalg::{Eigh, UPLO};
use num_complex::Complex64 as C64;

use crate::error::{Error, Result};
use crate::operator::HermitianOperator;
use crate::tol;

/// Eigendecomposition of a Hermitian matrix, eigenvalues ascending,
/// eigenvectors as columns.
///
/// The backend hands back the eigenvectors of the transposed (row-major)
/// matrix, which for Hermitian input are the entrywise conjugates of the
/// wanted ones; undo that here so callers can rely on `m v_j = w_j v_j`.
pub(crate) fn eigh_ascending(m: &Array2<C64>) -> Result<(Vec<f64>, Array2<C64>)> {
    let (vals, vecs) = m
        .eigh(UPLO::Lower)
        .map_err(|e| Error::Eigen(e.to_string()))?;
    Ok((vals.to_vec(), vecs.mapv(|z| z.conj())))
}

/// Spectral decomposition of an observable: one entry per distinct eigenvalue,
/// with eigenvalues closer than `DEGENERACY_MERGE * spectral range` merged and
/// represented by the degeneracy-summed eigenprojector.
#[derive(Debug, Clone)]
pub struct SpectralDecomposition {
    /// Distinct eigenvalues, descending.
    pub eigenvalues: Vec<f64>,
    /// Matching eigenprojectors; idempotent, mutually orthogonal, summing to
    /// the identity.
    pub eigenprojectors: Vec<HermitianOperator>,
    /// Degeneracy of each merged eigenvalue.
    pub multiplicities: Vec<usize>,
}

impl SpectralDecomposition {
    pub fn decompose(a: &HermitianOperator) -> Result<Self> {
        let n = a.dim();
        let (vals, vecs) = eigh_ascending(a.entries())?;
        let range = vals[n - 1] - vals[0];
        let merge_gap = tol::DEGENERACY_MERGE * range;

        // group ascending-adjacent eigenvalues, then flip to descending
        let mut groups: Vec<(f64, Vec<usize>)> = Vec::new();
        for (idx, &v) in vals.iter().enumerate() {
            match groups.last_mut() {
                Some((rep, members)) if (v - *rep).abs() <= merge_gap => {
                    members.push(idx);
                    // running mean keeps the representative centered
                    *rep += (v - *rep) / members.len() as f64;
                }
                _ => groups.push((v, vec![idx])),
            }
        }
        groups.reverse();

        let mut eigenvalues = Vec::with_capacity(groups.len());
        let mut eigenprojectors = Vec::with_capacity(groups.len());
        let mut multiplicities = Vec::with_capacity(groups.len());
        for (rep, members) in groups {
            let mut proj: Array2<C64> = Array2::zeros((n, n));
            for &idx in &members {
                let col: Array1<C64> = vecs.column(idx).to_owned();
                proj = proj + crate::operator::outer(&col);
            }
            eigenvalues.push(rep);
            multiplicities.push(members.len());
            eigenprojectors.push(HermitianOperator::symmetrized(proj));
        }
        Ok(Self {
            eigenvalues,
            eigenprojectors,
            multiplicities,
        })
    }
}
