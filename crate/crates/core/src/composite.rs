//! Two-subsystem composite dynamics with locally perceived operators.
//!
//! Each subsystem feels the overall energy and entropy through its own
//! contraction `(X)^J = Tr_Jbar[(I_J (x) rho_Jbar) X]`, and dissipates along
//! its local steepest-entropy-ascent direction built from those perceived
//! operators. The perceived entropy operator and the reduced state need not
//! commute, so the symmetrized products are kept explicit throughout.
//!
//! With no interaction the reduced dynamics of one subsystem is independent
//! of the other subsystem's Hamiltonian (no signaling), yet it does depend on
//! correlations carried by the overall state.

use ndarray::Array2;
use num_complex::Complex64 as C64;

use crate::density::DensityOperator;
use crate::dynamics::{
    ascent_projection, frob, hermitize, integrate_with, retr, RateProvider, RunOptions,
    TrajectoryMeta, TrajectorySample,
};
use crate::error::{Error, Result};
use crate::operator::{partial_trace, tensor_product, HermitianOperator, Keep};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Subsystem {
    A,
    B,
}

/// Two distinguishable subsystems, their Hamiltonians, an optional
/// interaction on the product space, and per-subsystem dissipation times.
#[derive(Debug, Clone)]
pub struct CompositeSystem {
    pub h_a: HermitianOperator,
    pub h_b: HermitianOperator,
    /// Interaction on the product space; zero for noninteracting subsystems.
    pub v: HermitianOperator,
    pub tau_a: f64,
    pub tau_b: f64,
    pub hbar: f64,
    pub k: f64,
}

impl CompositeSystem {
    pub fn noninteracting(h_a: HermitianOperator, h_b: HermitianOperator) -> Self {
        let dim = h_a.dim() * h_b.dim();
        Self {
            h_a,
            h_b,
            v: HermitianOperator::zeros(dim),
            tau_a: 1.0,
            tau_b: 1.0,
            hbar: 1.0,
            k: 1.0,
        }
    }

    pub fn with_interaction(mut self, v: HermitianOperator) -> Result<Self> {
        if v.dim() != self.dims().0 * self.dims().1 {
            return Err(Error::DimensionMismatch {
                expected: self.dims().0 * self.dims().1,
                got: v.dim(),
            });
        }
        self.v = v;
        Ok(self)
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.h_a.dim(), self.h_b.dim())
    }

    pub fn total_dim(&self) -> usize {
        self.h_a.dim() * self.h_b.dim()
    }

    /// `H_A (x) I + I (x) H_B + V`.
    pub fn total_hamiltonian(&self) -> HermitianOperator {
        let ia = HermitianOperator::identity(self.h_a.dim());
        let ib = HermitianOperator::identity(self.h_b.dim());
        tensor_product(&self.h_a, &ib)
            .add(&tensor_product(&ia, &self.h_b))
            .and_then(|s| s.add(&self.v))
            .expect("dimensions agree by construction")
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.tau_a > 0.0 && self.tau_b > 0.0) {
            return Err(Error::Invalid("dissipation times must be positive".into()));
        }
        if !(self.hbar > 0.0 && self.k > 0.0) {
            return Err(Error::Invalid("hbar and k must be positive".into()));
        }
        Ok(())
    }
}

/// Contraction of a product-space operator against the other subsystem's
/// reduced state: `Tr_Jbar[(I_J (x) rho_Jbar) x]`.
pub fn perceived_operator(
    rho: &DensityOperator,
    x: &HermitianOperator,
    dims: (usize, usize),
    j: Subsystem,
) -> Result<HermitianOperator> {
    let (da, db) = dims;
    if da * db != rho.dim() || x.dim() != rho.dim() {
        return Err(Error::DimensionMismatch {
            expected: da * db,
            got: x.dim().max(rho.dim()),
        });
    }
    match j {
        Subsystem::A => {
            let rho_b = partial_trace(rho.matrix(), dims, Keep::B)?;
            let weighted = tensor_product(&HermitianOperator::identity(da), &rho_b)
                .matmul(x)?;
            Ok(HermitianOperator::symmetrized(ptrace_raw(
                &weighted,
                dims,
                Keep::A,
            )))
        }
        Subsystem::B => {
            let rho_a = partial_trace(rho.matrix(), dims, Keep::A)?;
            let weighted = tensor_product(&rho_a, &HermitianOperator::identity(db))
                .matmul(x)?;
            Ok(HermitianOperator::symmetrized(ptrace_raw(
                &weighted,
                dims,
                Keep::B,
            )))
        }
    }
}

fn ptrace_raw(m: &Array2<C64>, dims: (usize, usize), keep: Keep) -> Array2<C64> {
    let (da, db) = dims;
    match keep {
        Keep::A => {
            let mut out = Array2::zeros((da, da));
            for i in 0..da {
                for j in 0..da {
                    let mut acc = C64::new(0.0, 0.0);
                    for k in 0..db {
                        acc += m[[i * db + k, j * db + k]];
                    }
                    out[[i, j]] = acc;
                }
            }
            out
        }
        Keep::B => {
            let mut out = Array2::zeros((db, db));
            for k in 0..db {
                for l in 0..db {
                    let mut acc = C64::new(0.0, 0.0);
                    for i in 0..da {
                        acc += m[[i * db + k, i * db + l]];
                    }
                    out[[k, l]] = acc;
                }
            }
            out
        }
    }
}

/// Perceived energy and entropy operators of both subsystems.
#[derive(Debug, Clone)]
pub struct PerceivedOperators {
    pub h_a: HermitianOperator,
    pub h_b: HermitianOperator,
    pub s_a: HermitianOperator,
    pub s_b: HermitianOperator,
}

pub fn perceived_operators(
    rho: &DensityOperator,
    sys: &CompositeSystem,
) -> Result<PerceivedOperators> {
    let dims = sys.dims();
    let h = sys.total_hamiltonian();
    let s = rho.entropy_operator();
    Ok(PerceivedOperators {
        h_a: perceived_operator(rho, &h, dims, Subsystem::A)?,
        h_b: perceived_operator(rho, &h, dims, Subsystem::B)?,
        s_a: perceived_operator(rho, &s, dims, Subsystem::A)?,
        s_b: perceived_operator(rho, &s, dims, Subsystem::B)?,
    })
}

/// Local steepest-entropy-ascent term of one subsystem, built from its
/// reduced state and perceived operators. Traceless, trace-orthogonal to the
/// perceived energy, nonnegative overlap with the perceived entropy.
pub fn subsystem_dissipative_term(
    rho: &DensityOperator,
    sys: &CompositeSystem,
    j: Subsystem,
) -> Result<HermitianOperator> {
    let (delta, _) = subsystem_delta_raw(
        rho.matrix().entries(),
        rho.entropy_operator().entries(),
        sys,
        j,
    )?;
    Ok(HermitianOperator::symmetrized(delta))
}

fn subsystem_delta_raw(
    rho: &Array2<C64>,
    s_tilde: &Array2<C64>,
    sys: &CompositeSystem,
    j: Subsystem,
) -> Result<(Array2<C64>, f64)> {
    let dims = sys.dims();
    let keep = match j {
        Subsystem::A => Keep::A,
        Subsystem::B => Keep::B,
    };
    let other = match j {
        Subsystem::A => Keep::B,
        Subsystem::B => Keep::A,
    };
    let rho_j = ptrace_raw(rho, dims, keep);
    let rho_jbar = ptrace_raw(rho, dims, other);

    let h_total = sys.total_hamiltonian();
    let h_perc = perceive_raw(&rho_jbar, h_total.entries(), dims, keep);
    let s_perc = perceive_raw(&rho_jbar, s_tilde, dims, keep);
    let h2 = h_perc.dot(&h_perc);
    let (delta, overlap) = ascent_projection(&rho_j, &s_perc, &h_perc, &h2);
    Ok((delta, overlap))
}

/// Index-level perception contraction against a reduced state of the traced
/// factor.
fn perceive_raw(
    rho_other: &Array2<C64>,
    x: &Array2<C64>,
    dims: (usize, usize),
    keep: Keep,
) -> Array2<C64> {
    let (da, db) = dims;
    match keep {
        Keep::A => {
            let mut out = Array2::zeros((da, da));
            for i in 0..da {
                for j in 0..da {
                    let mut acc = C64::new(0.0, 0.0);
                    for k in 0..db {
                        for m in 0..db {
                            acc += rho_other[[k, m]] * x[[i * db + m, j * db + k]];
                        }
                    }
                    out[[i, j]] = acc;
                }
            }
            hermitize(out)
        }
        Keep::B => {
            let mut out = Array2::zeros((db, db));
            for k in 0..db {
                for l in 0..db {
                    let mut acc = C64::new(0.0, 0.0);
                    for i in 0..da {
                        for m in 0..da {
                            acc += rho_other[[i, m]] * x[[m * db + k, i * db + l]];
                        }
                    }
                    out[[k, l]] = acc;
                }
            }
            hermitize(out)
        }
    }
}

fn kron_raw(a: &Array2<C64>, b: &Array2<C64>) -> Array2<C64> {
    let (da, db) = (a.nrows(), b.nrows());
    let dim = da * db;
    let mut out = Array2::zeros((dim, dim));
    for ia in 0..da {
        for ja in 0..da {
            let aij = a[[ia, ja]];
            for ib in 0..db {
                for jb in 0..db {
                    out[[ia * db + ib, ja * db + jb]] = aij * b[[ib, jb]];
                }
            }
        }
    }
    out
}

fn composite_rate_raw(
    rho: &Array2<C64>,
    s_tilde: &Array2<C64>,
    sys: &CompositeSystem,
    h_total: &Array2<C64>,
) -> Result<Array2<C64>> {
    let dims = sys.dims();
    let (delta_a, _) = subsystem_delta_raw(rho, s_tilde, sys, Subsystem::A)?;
    let (delta_b, _) = subsystem_delta_raw(rho, s_tilde, sys, Subsystem::B)?;
    let rho_a = ptrace_raw(rho, dims, Keep::A);
    let rho_b = ptrace_raw(rho, dims, Keep::B);
    let comm = h_total.dot(rho) - rho.dot(h_total);
    let unitary = comm.mapv(|z| C64::new(0.0, -1.0 / sys.hbar) * z);
    let diss = kron_raw(&delta_a, &rho_b).mapv(|z| z / sys.tau_a)
        + kron_raw(&rho_a, &delta_b).mapv(|z| z / sys.tau_b);
    Ok(unitary + diss)
}

/// Full composite rate: commutator plus both local dissipative pulls lifted
/// to the product space. Traceless; conserves the global mean energy and
/// never decreases the global entropy.
pub fn composite_rhs(rho: &DensityOperator, sys: &CompositeSystem) -> Result<HermitianOperator> {
    sys.validate()?;
    if rho.dim() != sys.total_dim() {
        return Err(Error::DimensionMismatch {
            expected: sys.total_dim(),
            got: rho.dim(),
        });
    }
    let h_total = sys.total_hamiltonian();
    let rate = composite_rate_raw(
        rho.matrix().entries(),
        rho.entropy_operator().entries(),
        sys,
        h_total.entries(),
    )?;
    Ok(HermitianOperator::symmetrized(rate))
}

/// Locality audit for a noninteracting composite.
#[derive(Debug, Clone)]
pub struct NoSignalingReport {
    /// Largest entrywise change of `d rho_A / dt` under the swapped `H_B`.
    pub max_rate_difference: f64,
    /// `d Tr[rho_A H_A] / dt` and the B analogue (separate energy
    /// conservation).
    pub energy_rate_a: f64,
    pub energy_rate_b: f64,
    /// Per-subsystem entropy rates, reported for product states where the
    /// subsystem entropies are defined.
    pub entropy_rate_a: Option<f64>,
    pub entropy_rate_b: Option<f64>,
    pub pass: bool,
}

/// Check that swapping the noninteracting partner's Hamiltonian leaves the
/// local reduced dynamics untouched, along with separate energy conservation
/// and, on product states, separate entropy nondecrease. Rejects interacting
/// systems.
pub fn no_signaling_check(
    rho: &DensityOperator,
    sys: &CompositeSystem,
    h_b_alt: &HermitianOperator,
) -> Result<NoSignalingReport> {
    let vnorm = sys.v.frobenius_norm();
    if vnorm > 0.0 {
        return Err(Error::InteractionPresent { norm: vnorm });
    }
    if h_b_alt.dim() != sys.h_b.dim() {
        return Err(Error::DimensionMismatch {
            expected: sys.h_b.dim(),
            got: h_b_alt.dim(),
        });
    }
    let dims = sys.dims();

    let reduced_rate = |system: &CompositeSystem| -> Result<Array2<C64>> {
        let rate = composite_rhs(rho, system)?;
        Ok(ptrace_raw(rate.entries(), dims, Keep::A))
    };
    let base = reduced_rate(sys)?;
    let mut swapped_sys = sys.clone();
    swapped_sys.h_b = h_b_alt.clone();
    let swapped = reduced_rate(&swapped_sys)?;
    let max_rate_difference = (&base - &swapped)
        .iter()
        .map(|z| z.norm())
        .fold(0.0, f64::max);

    // separate energy conservation
    let rate = composite_rhs(rho, sys)?;
    let rate_a = ptrace_raw(rate.entries(), dims, Keep::A);
    let rate_b = ptrace_raw(rate.entries(), dims, Keep::B);
    let energy_rate_a = retr(&rate_a, sys.h_a.entries());
    let energy_rate_b = retr(&rate_b, sys.h_b.entries());

    // separate entropy nondecrease on product states
    let rho_a = rho.reduce(dims, Keep::A)?;
    let rho_b = rho.reduce(dims, Keep::B)?;
    let product = DensityOperator::product(&rho_a, &rho_b)?;
    let is_product =
        crate::density::trace_distance(rho, &product)? < 1e-10;
    let (entropy_rate_a, entropy_rate_b) = if is_product {
        let sa = rho_a.entropy_operator();
        let sb = rho_b.entropy_operator();
        (
            Some(sys.k * retr(&rate_a, sa.entries())),
            Some(sys.k * retr(&rate_b, sb.entries())),
        )
    } else {
        (None, None)
    };

    let pass = max_rate_difference <= 1e-12
        && energy_rate_a.abs() <= 1e-10
        && energy_rate_b.abs() <= 1e-10
        && entropy_rate_a.is_none_or(|r| r >= -1e-10)
        && entropy_rate_b.is_none_or(|r| r >= -1e-10);

    Ok(NoSignalingReport {
        max_rate_difference,
        energy_rate_a,
        energy_rate_b,
        entropy_rate_a,
        entropy_rate_b,
        pass,
    })
}

struct CompositeProvider<'a> {
    sys: &'a CompositeSystem,
    h_total: HermitianOperator,
}

impl RateProvider for CompositeProvider<'_> {
    fn rate(&self, rho: &Array2<C64>, s_tilde: &Array2<C64>) -> Result<Array2<C64>> {
        composite_rate_raw(rho, s_tilde, self.sys, self.h_total.entries())
    }

    fn dissipative(&self, rho: &Array2<C64>, s_tilde: &Array2<C64>) -> Result<Array2<C64>> {
        let dims = self.sys.dims();
        let (delta_a, _) = subsystem_delta_raw(rho, s_tilde, self.sys, Subsystem::A)?;
        let (delta_b, _) = subsystem_delta_raw(rho, s_tilde, self.sys, Subsystem::B)?;
        let rho_a = ptrace_raw(rho, dims, Keep::A);
        let rho_b = ptrace_raw(rho, dims, Keep::B);
        Ok(kron_raw(&delta_a, &rho_b).mapv(|z| z / self.sys.tau_a)
            + kron_raw(&rho_a, &delta_b).mapv(|z| z / self.sys.tau_b))
    }

    fn entropy_rate(&self, rho: &Array2<C64>, s_tilde: &Array2<C64>) -> Result<f64> {
        let (_, overlap_a) = subsystem_delta_raw(rho, s_tilde, self.sys, Subsystem::A)?;
        let (_, overlap_b) = subsystem_delta_raw(rho, s_tilde, self.sys, Subsystem::B)?;
        Ok(self.sys.k * (overlap_a / self.sys.tau_a + overlap_b / self.sys.tau_b))
    }

    fn energy(&self, rho: &Array2<C64>) -> Result<f64> {
        Ok(retr(rho, self.h_total.entries()))
    }
}

/// Per-sample locality observables added on top of the base trajectory.
#[derive(Debug, Clone)]
pub struct CompositeSample {
    pub base: TrajectorySample,
    /// `Tr[rho_A (H)^A]` and the B analogue.
    pub local_energy_a: f64,
    pub local_energy_b: f64,
    /// `k Tr[rho_J (S~)^J]`.
    pub perceived_entropy_a: f64,
    pub perceived_entropy_b: f64,
    /// `S(rho_A) + S(rho_B) - S(rho)`.
    pub mutual_entropy: f64,
}

#[derive(Debug, Clone)]
pub struct CompositeTrajectory {
    pub samples: Vec<CompositeSample>,
    pub meta: TrajectoryMeta,
}

impl CompositeTrajectory {
    pub fn final_state(&self) -> &DensityOperator {
        &self.samples.last().expect("has samples").base.rho
    }
}

#[derive(Debug, Clone)]
pub struct CompositeRunConfig {
    pub dt: f64,
    pub t_final: f64,
    pub monitor_every: usize,
}

impl Default for CompositeRunConfig {
    fn default() -> Self {
        Self {
            dt: 1e-3,
            t_final: 10.0,
            monitor_every: 10,
        }
    }
}

/// Integrate the composite equation of motion on the product space. The
/// factored range representation of the single-constituent integrator is
/// reused, so the support dimension of the overall state is held constant.
pub fn integrate_composite(
    rho0: &DensityOperator,
    sys: &CompositeSystem,
    run: &CompositeRunConfig,
) -> Result<CompositeTrajectory> {
    sys.validate()?;
    if rho0.dim() != sys.total_dim() {
        return Err(Error::DimensionMismatch {
            expected: sys.total_dim(),
            got: rho0.dim(),
        });
    }
    let provider = CompositeProvider {
        sys,
        h_total: sys.total_hamiltonian(),
    };
    let opts = RunOptions {
        dt: run.dt,
        t_final: run.t_final,
        monitor_every: run.monitor_every,
        k: sys.k,
    };
    let raw = integrate_with(rho0, &provider, &opts)?;
    let dims = sys.dims();

    let mut samples = Vec::with_capacity(raw.samples.len());
    for base in raw.samples {
        let perc = perceived_operators(&base.rho, sys)?;
        let rho_a = base.rho.reduce(dims, Keep::A)?;
        let rho_b = base.rho.reduce(dims, Keep::B)?;
        let local_energy_a = rho_a.expectation(&perc.h_a)?;
        let local_energy_b = rho_b.expectation(&perc.h_b)?;
        let perceived_entropy_a = sys.k * rho_a.expectation(&perc.s_a)?;
        let perceived_entropy_b = sys.k * rho_b.expectation(&perc.s_b)?;
        let mutual_entropy = rho_a.von_neumann_entropy(sys.k) + rho_b.von_neumann_entropy(sys.k)
            - base.rho.von_neumann_entropy(sys.k);
        samples.push(CompositeSample {
            base,
            local_energy_a,
            local_energy_b,
            perceived_entropy_a,
            perceived_entropy_b,
            mutual_entropy,
        });
    }
    Ok(CompositeTrajectory {
        samples,
        meta: TrajectoryMeta {
            tau: sys.tau_a,
            hbar: sys.hbar,
            k: sys.k,
            dt: run.dt,
            t_final: run.t_final,
            monitor_every: run.monitor_every,
            steps: raw.steps,
            support_dim: raw.support_dim,
            initial_energy: raw.initial_energy,
            max_trace_drift: raw.max_trace_drift,
            max_energy_drift: raw.max_energy_drift,
            min_entropy_step: raw.min_entropy_step,
            max_kernel_rate: raw.max_kernel_rate,
            clamped_eigenvalues: raw.clamped_eigenvalues,
            converged_at: raw.converged_at,
            final_residual: raw.final_residual,
        },
    })
}

/// With a one-dimensional B factor the composite rate must coincide with the
/// single-constituent rate; used as an internal audit of sign conventions.
pub fn single_constituent_reduction_gap(
    rho: &DensityOperator,
    h_a: &HermitianOperator,
    tau: f64,
) -> Result<f64> {
    let sys = CompositeSystem {
        h_a: h_a.clone(),
        h_b: HermitianOperator::zeros(1),
        v: HermitianOperator::zeros(h_a.dim()),
        tau_a: tau,
        tau_b: 1.0,
        hbar: 1.0,
        k: 1.0,
    };
    let comp = composite_rhs(rho, &sys)?;
    let mut cfg = crate::dynamics::DynamicsConfig::new(h_a.clone());
    cfg.tau = tau;
    let single = crate::dynamics::rhs(rho, &cfg)?;
    Ok(frob(&(comp.entries() - single.entries())))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::density::trace_distance;
    use crate::dynamics::canonical_state;
    use crate::sample::{random_density, random_hermitian};
    use rand::SeedableRng;
    use rand_chacha::ChaCha12Rng;

    fn qubit_system() -> CompositeSystem {
        CompositeSystem::noninteracting(
            HermitianOperator::diagonal(&[0.0, 1.0]),
            HermitianOperator::diagonal(&[0.0, 0.7]),
        )
    }

    #[test]
    fn perceived_identity_is_identity() {
        let mut rng = ChaCha12Rng::seed_from_u64(50);
        let rho = random_density(6, 6, &mut rng);
        let id = HermitianOperator::identity(6);
        let pa = perceived_operator(&rho, &id, (2, 3), Subsystem::A).unwrap();
        assert!(pa.sub(&HermitianOperator::identity(2)).unwrap().max_abs() < 1e-12);
        let pb = perceived_operator(&rho, &id, (2, 3), Subsystem::B).unwrap();
        assert!(pb.sub(&HermitianOperator::identity(3)).unwrap().max_abs() < 1e-12);
    }

    #[test]
    fn perceived_energy_on_product_state() {
        let sys = qubit_system();
        let rho_a = DensityOperator::from_probabilities(&[0.6, 0.4]).unwrap();
        let rho_b = DensityOperator::from_probabilities(&[0.3, 0.7]).unwrap();
        let rho = DensityOperator::product(&rho_a, &rho_b).unwrap();
        let h = sys.total_hamiltonian();
        let pa = perceived_operator(&rho, &h, sys.dims(), Subsystem::A).unwrap();
        let eb = rho_b.expectation(&sys.h_b).unwrap();
        let want = sys
            .h_a
            .add(&HermitianOperator::identity(2).scale(eb))
            .unwrap();
        assert!(pa.sub(&want).unwrap().max_abs() < 1e-12);
    }

    #[test]
    fn perceived_matches_index_oracle_on_correlated_states() {
        let mut rng = ChaCha12Rng::seed_from_u64(51);
        for _ in 0..20 {
            let rho = random_density(4, 4, &mut rng);
            let x = random_hermitian(4, &mut rng);
            let fast = perceived_operator(&rho, &x, (2, 2), Subsystem::A).unwrap();
            // brute-force contraction over the B indices
            let rho_b = partial_trace(rho.matrix(), (2, 2), Keep::B).unwrap();
            let mut oracle = Array2::<C64>::zeros((2, 2));
            for i in 0..2 {
                for j in 0..2 {
                    for k in 0..2 {
                        for m in 0..2 {
                            oracle[[i, j]] +=
                                rho_b.entries()[[k, m]] * x.entries()[[i * 2 + m, j * 2 + k]];
                        }
                    }
                }
            }
            let dev: f64 = (&oracle - fast.entries())
                .iter()
                .map(|z| z.norm())
                .fold(0.0, f64::max);
            assert!(dev < 1e-12, "deviation {dev}");
        }
    }

    #[test]
    fn dissipative_terms_vanish_on_pure_products() {
        let sys = qubit_system();
        let rho = DensityOperator::pure(&[
            C64::new(0.6, 0.0),
            C64::new(0.0, 0.8),
            C64::new(0.0, 0.0),
            C64::new(0.0, 0.0),
        ])
        .unwrap();
        let da = subsystem_dissipative_term(&rho, &sys, Subsystem::A).unwrap();
        let db = subsystem_dissipative_term(&rho, &sys, Subsystem::B).unwrap();
        assert!(da.max_abs() < 1e-12);
        assert!(db.max_abs() < 1e-12);
    }

    #[test]
    fn joint_canonical_product_is_stationary() {
        let sys = qubit_system();
        let t = 0.8;
        let ca = canonical_state(&sys.h_a, t, 1.0).unwrap();
        let cb = canonical_state(&sys.h_b, t, 1.0).unwrap();
        let rho = DensityOperator::product(&ca, &cb).unwrap();
        let da = subsystem_dissipative_term(&rho, &sys, Subsystem::A).unwrap();
        let db = subsystem_dissipative_term(&rho, &sys, Subsystem::B).unwrap();
        assert!(da.max_abs() < 1e-10, "{}", da.max_abs());
        assert!(db.max_abs() < 1e-10, "{}", db.max_abs());
    }

    #[test]
    fn joint_canonical_with_interaction_is_stationary() {
        let mut rng = ChaCha12Rng::seed_from_u64(52);
        let v = random_hermitian(4, &mut rng).scale(0.3);
        let sys = qubit_system().with_interaction(v).unwrap();
        let rho = canonical_state(&sys.total_hamiltonian(), 1.3, 1.0).unwrap();
        let da = subsystem_dissipative_term(&rho, &sys, Subsystem::A).unwrap();
        let db = subsystem_dissipative_term(&rho, &sys, Subsystem::B).unwrap();
        assert!(da.max_abs() < 1e-10, "{}", da.max_abs());
        assert!(db.max_abs() < 1e-10, "{}", db.max_abs());
        let rate = composite_rhs(&rho, &sys).unwrap();
        // dissipative part vanishes; what remains is the commutator term,
        // which vanishes too because rho is a function of the total H
        assert!(rate.max_abs() < 1e-10);
    }

    #[test]
    fn local_trace_identities_on_random_correlated_states() {
        let mut rng = ChaCha12Rng::seed_from_u64(53);
        for _ in 0..50 {
            let rho = random_density(4, 4, &mut rng);
            let mut sys = qubit_system();
            sys.h_a = random_hermitian(2, &mut rng);
            sys.h_b = random_hermitian(2, &mut rng);
            let perc = perceived_operators(&rho, &sys).unwrap();
            for (j, h_perc, s_perc) in [
                (Subsystem::A, &perc.h_a, &perc.s_a),
                (Subsystem::B, &perc.h_b, &perc.s_b),
            ] {
                let d = subsystem_dissipative_term(&rho, &sys, j).unwrap();
                assert!(d.trace().abs() < 1e-10);
                assert!(d.trace_product(h_perc).unwrap().abs() < 1e-10);
                assert!(d.trace_product(s_perc).unwrap() >= -1e-10);
            }
        }
    }

    #[test]
    fn global_conservation_of_composite_rate() {
        let mut rng = ChaCha12Rng::seed_from_u64(54);
        for _ in 0..20 {
            let rho = random_density(4, 4, &mut rng);
            let mut sys = qubit_system();
            sys.h_a = random_hermitian(2, &mut rng);
            sys.h_b = random_hermitian(2, &mut rng);
            sys.tau_a = 0.7;
            sys.tau_b = 1.9;
            let rate = composite_rhs(&rho, &sys).unwrap();
            assert!(rate.trace().abs() < 1e-10);
            let h = sys.total_hamiltonian();
            assert!(rate.trace_product(&h).unwrap().abs() < 1e-10);
            let s = rho.entropy_operator();
            assert!(rate.trace_product(&s).unwrap() >= -1e-10);
        }
    }

    #[test]
    fn one_dimensional_partner_reduces_to_single_constituent() {
        let mut rng = ChaCha12Rng::seed_from_u64(55);
        for _ in 0..10 {
            let rho = random_density(3, 3, &mut rng);
            let h = random_hermitian(3, &mut rng);
            let gap = single_constituent_reduction_gap(&rho, &h, 0.8).unwrap();
            assert!(gap < 1e-12, "gap {gap}");
        }
    }

    #[test]
    fn no_signaling_under_partner_hamiltonian_swap() {
        let mut rng = ChaCha12Rng::seed_from_u64(56);
        let rho = random_density(4, 4, &mut rng); // correlated in general
        let sys = qubit_system();
        let swapped = sys.h_b.scale(3.0);
        let report = no_signaling_check(&rho, &sys, &swapped).unwrap();
        assert!(report.max_rate_difference <= 1e-12, "{}", report.max_rate_difference);
        assert!(report.energy_rate_a.abs() <= 1e-10);
        assert!(report.energy_rate_b.abs() <= 1e-10);
        assert!(report.pass);
    }

    #[test]
    fn no_signaling_on_product_states_reports_entropy_rates() {
        let rho_a = DensityOperator::from_probabilities(&[0.8, 0.2]).unwrap();
        let rho_b = DensityOperator::from_probabilities(&[0.55, 0.45]).unwrap();
        let rho = DensityOperator::product(&rho_a, &rho_b).unwrap();
        let sys = qubit_system();
        let report = no_signaling_check(&rho, &sys, &sys.h_b.scale(2.0)).unwrap();
        assert!(report.entropy_rate_a.unwrap() >= -1e-10);
        assert!(report.entropy_rate_b.unwrap() >= -1e-10);
        assert!(report.pass);
    }

    #[test]
    fn no_signaling_rejects_interacting_systems() {
        let mut rng = ChaCha12Rng::seed_from_u64(57);
        let v = random_hermitian(4, &mut rng);
        let sys = qubit_system().with_interaction(v).unwrap();
        let rho = random_density(4, 4, &mut rng);
        assert!(matches!(
            no_signaling_check(&rho, &sys, &sys.h_b.clone()),
            Err(Error::InteractionPresent { .. })
        ));
    }

    #[test]
    fn correlations_change_local_dynamics() {
        // classically correlated three-by-two state versus the product of its
        // marginals: equal reduced states, different local motion
        let h_a = HermitianOperator::diagonal(&[0.0, 1.0, 2.0]);
        let h_b = HermitianOperator::diagonal(&[0.0, 0.7]);
        let sys = CompositeSystem::noninteracting(h_a, h_b);
        let w = [[0.30, 0.05], [0.10, 0.25], [0.05, 0.25]];
        let joint: Vec<f64> = w.iter().flatten().copied().collect();
        let rho_corr = DensityOperator::from_probabilities(&joint).unwrap();
        let rho_a = rho_corr.reduce((3, 2), Keep::A).unwrap();
        let rho_b = rho_corr.reduce((3, 2), Keep::B).unwrap();
        let rho_prod = DensityOperator::product(&rho_a, &rho_b).unwrap();
        assert!(
            trace_distance(
                &rho_prod.reduce((3, 2), Keep::A).unwrap(),
                &rho_a
            )
            .unwrap()
                < 1e-12
        );

        let rate_corr = composite_rhs(&rho_corr, &sys).unwrap();
        let rate_prod = composite_rhs(&rho_prod, &sys).unwrap();
        let da_corr = ptrace_raw(rate_corr.entries(), (3, 2), Keep::A);
        let da_prod = ptrace_raw(rate_prod.entries(), (3, 2), Keep::A);
        let gap = frob(&(&da_corr - &da_prod));
        assert!(gap > 1e-3, "local dynamics insensitive to correlations: {gap}");
    }

    #[test]
    fn composite_trajectory_conserves_energy_and_grows_entropy() {
        let mut rng = ChaCha12Rng::seed_from_u64(58);
        let v = random_hermitian(4, &mut rng).scale(0.2);
        let mut sys = qubit_system().with_interaction(v).unwrap();
        sys.tau_a = 0.9;
        sys.tau_b = 1.4;
        let rho0 = random_density(4, 4, &mut rng);
        let run = CompositeRunConfig {
            dt: 2e-3,
            t_final: 4.0,
            monitor_every: 100,
        };
        let traj = integrate_composite(&rho0, &sys, &run).unwrap();
        let e0 = traj.meta.initial_energy;
        assert!(traj.meta.max_energy_drift <= 1e-8 * (1.0 + e0.abs()));
        assert!(traj.meta.min_entropy_step >= -1e-9);
        // pure-state fractions stay inside [0, 1]
        for s in &traj.samples {
            for &ev in s.base.rho.eigenvalues() {
                assert!((-1e-12..=1.0 + 1e-12).contains(&ev));
            }
            // mutual entropy is nonnegative
            assert!(s.mutual_entropy >= -1e-10);
        }
    }
}

