//! Seeded random operators and states for batteries and tests.

use ndarray::Array2;
use num_complex::Complex64 as C64;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::density::DensityOperator;
use crate::operator::HermitianOperator;

fn gaussian_complex<R: Rng + ?Sized>(rng: &mut R) -> C64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    C64::new(re, im)
}

pub fn random_hermitian<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> HermitianOperator {
    let mut m = Array2::zeros((dim, dim));
    for i in 0..dim {
        for j in 0..dim {
            m[[i, j]] = gaussian_complex(rng);
        }
    }
    let sym = (&m + &m.t().mapv(|z: C64| z.conj())).mapv(|z| 0.5 * z);
    HermitianOperator::symmetrized(sym)
}

/// Haar-distributed unitary via QR of a complex Gaussian matrix with the
/// phase convention fixed on the triangular factor's diagonal.
pub fn random_unitary<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> Array2<C64> {
    let mut m = Array2::zeros((dim, dim));
    for i in 0..dim {
        for j in 0..dim {
            m[[i, j]] = gaussian_complex(rng);
        }
    }
    // modified Gram-Schmidt, fixing phases so the result is Haar
    let mut q = m;
    for j in 0..dim {
        for i in 0..j {
            let mut proj = C64::new(0.0, 0.0);
            for row in 0..dim {
                proj += q[[row, i]].conj() * q[[row, j]];
            }
            for row in 0..dim {
                let qi = q[[row, i]];
                q[[row, j]] -= proj * qi;
            }
        }
        let norm: f64 = (0..dim)
            .map(|row| q[[row, j]].norm_sqr())
            .sum::<f64>()
            .sqrt();
        for row in 0..dim {
            q[[row, j]] /= norm;
        }
    }
    q
}

/// Random mixed state of the given rank: `A A^dagger / Tr` with `A` an
/// `dim x rank` complex Gaussian matrix. `rank = dim` gives full support,
/// `rank = 1` a random projector.
pub fn random_density<R: Rng + ?Sized>(dim: usize, rank: usize, rng: &mut R) -> DensityOperator {
    assert!(rank >= 1 && rank <= dim);
    let mut a = Array2::zeros((dim, rank));
    for i in 0..dim {
        for j in 0..rank {
            a[[i, j]] = gaussian_complex(rng);
        }
    }
    let m = a.dot(&a.t().mapv(|z: C64| z.conj()));
    let trace: f64 = (0..dim).map(|i| m[[i, i]].re).sum();
    let m = m.mapv(|z| z / trace);
    DensityOperator::from_operator(HermitianOperator::symmetrized(m))
        .expect("Gaussian-induced state is valid")
}

/// Random point of the probability simplex (flat Dirichlet).
pub fn random_probabilities<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> Vec<f64> {
    let mut p: Vec<f64> = (0..dim)
        .map(|_| -(rng.random_range(1e-12..1.0f64)).ln())
        .collect();
    let total: f64 = p.iter().sum();
    for v in &mut p {
        *v /= total;
    }
    p
}
