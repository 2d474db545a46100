//! Finite-dimensional Hermitian operators and the tensor-product algebra.

use ndarray::{Array1, Array2};
use num_complex::Complex64 as C64;

use crate::error::{Error, Result};
use crate::tol;

/// Which factor of a bipartite operator survives a partial trace.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Keep {
    A,
    B,
}

/// A complex square matrix with Hermitian symmetry.
///
/// Construction validates `a_ij = conj(a_ji)` entrywise and stores the exactly
/// symmetrized matrix, so downstream algebra can rely on Hermiticity holding
/// to machine precision.
#[derive(Debug, Clone, PartialEq)]
pub struct HermitianOperator {
    dim: usize,
    entries: Array2<C64>,
}

impl HermitianOperator {
    pub fn new(entries: Array2<C64>) -> Result<Self> {
        let (r, c) = entries.dim();
        if r != c {
            return Err(Error::DimensionMismatch { expected: r, got: c });
        }
        let mut max_dev = 0.0f64;
        for i in 0..r {
            for j in 0..=i {
                let dev = (entries[[i, j]] - entries[[j, i]].conj()).norm();
                max_dev = max_dev.max(dev);
            }
        }
        if max_dev > tol::HERMITICITY {
            return Err(Error::NotHermitian { max_dev });
        }
        Ok(Self::symmetrized(entries))
    }

    /// Symmetrize `(a + a^dagger) / 2` without validating; for internal use on
    /// matrices that are Hermitian by construction up to rounding.
    pub(crate) fn symmetrized(entries: Array2<C64>) -> Self {
        let dim = entries.nrows();
        let mut out = entries;
        for i in 0..dim {
            for j in 0..i {
                let avg = 0.5 * (out[[i, j]] + out[[j, i]].conj());
                out[[i, j]] = avg;
                out[[j, i]] = avg.conj();
            }
            out[[i, i]] = C64::new(out[[i, i]].re, 0.0);
        }
        Self { dim, entries: out }
    }

    /// Build from row-major nested entries; validates squareness and
    /// Hermiticity.
    pub fn from_rows(rows: &[Vec<C64>]) -> Result<Self> {
        let n = rows.len();
        if rows.iter().any(|r| r.len() != n) {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: rows.iter().map(|r| r.len()).find(|&l| l != n).unwrap_or(n),
            });
        }
        let mut m = Array2::zeros((n, n));
        for (i, row) in rows.iter().enumerate() {
            for (j, &v) in row.iter().enumerate() {
                m[[i, j]] = v;
            }
        }
        Self::new(m)
    }

    pub fn diagonal(values: &[f64]) -> Self {
        let dim = values.len();
        let mut entries = Array2::zeros((dim, dim));
        for (i, &v) in values.iter().enumerate() {
            entries[[i, i]] = C64::new(v, 0.0);
        }
        Self { dim, entries }
    }

    pub fn identity(dim: usize) -> Self {
        Self::diagonal(&vec![1.0; dim])
    }

    pub fn zeros(dim: usize) -> Self {
        Self {
            dim,
            entries: Array2::zeros((dim, dim)),
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn entries(&self) -> &Array2<C64> {
        &self.entries
    }

    pub fn into_entries(self) -> Array2<C64> {
        self.entries
    }

    pub fn trace(&self) -> f64 {
        (0..self.dim).map(|i| self.entries[[i, i]].re).sum()
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.entries
            .iter()
            .map(|z| z.norm_sqr())
            .sum::<f64>()
            .sqrt()
    }

    /// Largest absolute entry.
    pub fn max_abs(&self) -> f64 {
        self.entries.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    pub fn scale(&self, factor: f64) -> Self {
        Self {
            dim: self.dim,
            entries: self.entries.mapv(|z| z * factor),
        }
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.check_dim(other)?;
        Ok(Self {
            dim: self.dim,
            entries: &self.entries + &other.entries,
        })
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.check_dim(other)?;
        Ok(Self {
            dim: self.dim,
            entries: &self.entries - &other.entries,
        })
    }

    /// Plain matrix product; not Hermitian in general.
    pub fn matmul(&self, other: &Self) -> Result<Array2<C64>> {
        self.check_dim(other)?;
        Ok(self.entries.dot(&other.entries))
    }

    /// Symmetrized product `(ab + ba) / 2`, Hermitian for Hermitian inputs.
    pub fn sym_product(&self, other: &Self) -> Result<Self> {
        self.check_dim(other)?;
        let ab = self.entries.dot(&other.entries);
        let ba = other.entries.dot(&self.entries);
        Ok(Self::symmetrized((ab + ba).mapv(|z| 0.5 * z)))
    }

    /// `-i [a, b]`, Hermitian for Hermitian inputs.
    pub fn commutator_over_i(&self, other: &Self) -> Result<Self> {
        self.check_dim(other)?;
        let ab = self.entries.dot(&other.entries);
        let ba = other.entries.dot(&self.entries);
        Ok(Self::symmetrized(
            (ab - ba).mapv(|z| C64::new(0.0, -1.0) * z),
        ))
    }

    /// `Tr[a b]`; real for Hermitian inputs up to rounding, which is discarded.
    pub fn trace_product(&self, other: &Self) -> Result<f64> {
        self.check_dim(other)?;
        let mut acc = C64::new(0.0, 0.0);
        for i in 0..self.dim {
            for k in 0..self.dim {
                acc += self.entries[[i, k]] * other.entries[[k, i]];
            }
        }
        debug_assert!(
            acc.im.abs() <= 1e-10 * (1.0 + acc.re.abs()),
            "trace of a product of Hermitian operators must be real, imag = {}",
            acc.im
        );
        Ok(acc.re)
    }

    fn check_dim(&self, other: &Self) -> Result<()> {
        if self.dim != other.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                got: other.dim,
            });
        }
        Ok(())
    }
}

/// Kronecker product with the first factor owning the slow index, so that a
/// product-space index reads `i_a * dim_b + i_b`.
pub fn tensor_product(a: &HermitianOperator, b: &HermitianOperator) -> HermitianOperator {
    let (da, db) = (a.dim(), b.dim());
    let dim = da * db;
    let mut entries = Array2::zeros((dim, dim));
    for ia in 0..da {
        for ja in 0..da {
            let aij = a.entries()[[ia, ja]];
            for ib in 0..db {
                for jb in 0..db {
                    entries[[ia * db + ib, ja * db + jb]] = aij * b.entries()[[ib, jb]];
                }
            }
        }
    }
    HermitianOperator::symmetrized(entries)
}

/// Reduce a bipartite operator to one factor by tracing out the other.
pub fn partial_trace(
    x: &HermitianOperator,
    dims: (usize, usize),
    keep: Keep,
) -> Result<HermitianOperator> {
    let (da, db) = dims;
    if da * db != x.dim() {
        return Err(Error::DimensionMismatch {
            expected: da * db,
            got: x.dim(),
        });
    }
    let e = x.entries();
    let out = match keep {
        Keep::A => {
            let mut m = Array2::zeros((da, da));
            for i in 0..da {
                for j in 0..da {
                    let mut acc = C64::new(0.0, 0.0);
                    for k in 0..db {
                        acc += e[[i * db + k, j * db + k]];
                    }
                    m[[i, j]] = acc;
                }
            }
            m
        }
        Keep::B => {
            let mut m = Array2::zeros((db, db));
            for k in 0..db {
                for l in 0..db {
                    let mut acc = C64::new(0.0, 0.0);
                    for i in 0..da {
                        acc += e[[i * db + k, i * db + l]];
                    }
                    m[[k, l]] = acc;
                }
            }
            m
        }
    };
    Ok(HermitianOperator::symmetrized(out))
}

/// Pauli matrices, handy for two-level systems.
pub fn pauli_x() -> HermitianOperator {
    let mut m = Array2::zeros((2, 2));
    m[[0, 1]] = C64::new(1.0, 0.0);
    m[[1, 0]] = C64::new(1.0, 0.0);
    HermitianOperator::symmetrized(m)
}

pub fn pauli_y() -> HermitianOperator {
    let mut m = Array2::zeros((2, 2));
    m[[0, 1]] = C64::new(0.0, -1.0);
    m[[1, 0]] = C64::new(0.0, 1.0);
    HermitianOperator::symmetrized(m)
}

pub fn pauli_z() -> HermitianOperator {
    HermitianOperator::diagonal(&[1.0, -1.0])
}

/// Embed a vector as the rank-one operator `|v><v|`.
pub(crate) fn outer(v: &Array1<C64>) -> Array2<C64> {
    let n = v.len();
    let mut m = Array2::zeros((n, n));
    for i in 0..n {
        for j in 0..n {
            m[[i, j]] = v[i] * v[j].conj();
        }
    }
    m
}
