//! Single-constituent steepest-entropy-ascent dynamics.
//!
//! The equation of motion combines a unitary commutator term with a
//! dissipative term that is the projection of the entropy gradient onto the
//! subspace trace-orthogonal to the identity and the Hamiltonian. The
//! dissipative term therefore conserves trace and mean energy exactly and
//! never decreases the entropy; its unique full-support stationary family is
//! the canonical one.
//!
//! Integration runs in a factored representation `rho = W sigma W^dagger`
//! where the columns of `W` span the range of the initial state. The kernel of
//! the initial state is never represented, which makes conservation of the
//! effective Hilbert-space dimension structural rather than numerical: zero
//! eigenvalues stay exactly zero, while the range itself is free to rotate.
//! Backward integration is the same flow with a negative step.

use ndarray::{Array1, Array2};
use num_complex::Complex64 as C64;

use crate::density::DensityOperator;
use crate::error::{Error, Result};
use crate::operator::HermitianOperator;
use crate::spectral::eigh_ascending;
use crate::tol;

/// Parameters of a single-constituent run.
#[derive(Debug, Clone)]
pub struct DynamicsConfig {
    pub hamiltonian: HermitianOperator,
    /// Dissipation time constant.
    pub tau: f64,
    pub hbar: f64,
    pub k: f64,
    /// Step size (positive); the sign of `t_final` selects the direction.
    pub dt: f64,
    pub t_final: f64,
    /// Record one sample every this many steps.
    pub monitor_every: usize,
}

impl DynamicsConfig {
    pub fn new(hamiltonian: HermitianOperator) -> Self {
        Self {
            hamiltonian,
            tau: 1.0,
            hbar: 1.0,
            k: 1.0,
            dt: 1e-3,
            t_final: 10.0,
            monitor_every: 10,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.tau > 0.0) {
            return Err(Error::Invalid(format!("tau must be positive, got {}", self.tau)));
        }
        if !(self.dt > 0.0) {
            return Err(Error::Invalid(format!("dt must be positive, got {}", self.dt)));
        }
        if !(self.hbar > 0.0) || !(self.k > 0.0) {
            return Err(Error::Invalid("hbar and k must be positive".into()));
        }
        if self.monitor_every == 0 {
            return Err(Error::Invalid("monitor_every must be at least 1".into()));
        }
        Ok(())
    }
}

/// One recorded point of a trajectory.
#[derive(Debug, Clone)]
pub struct TrajectorySample {
    pub t: f64,
    pub rho: DensityOperator,
    pub energy: f64,
    pub entropy: f64,
    pub trace_drift: f64,
    pub min_eigenvalue: f64,
    pub support_dim: usize,
    pub ds_dt: f64,
    pub dissipator_norm: f64,
}

/// Config echo plus integrator statistics.
#[derive(Debug, Clone)]
pub struct TrajectoryMeta {
    pub tau: f64,
    pub hbar: f64,
    pub k: f64,
    pub dt: f64,
    pub t_final: f64,
    pub monitor_every: usize,
    pub steps: usize,
    pub support_dim: usize,
    pub initial_energy: f64,
    pub max_trace_drift: f64,
    pub max_energy_drift: f64,
    /// Most negative signed entropy increment seen between consecutive steps.
    pub min_entropy_step: f64,
    /// Largest discarded kernel-block rate norm (zero for the single
    /// constituent up to rounding).
    pub max_kernel_rate: f64,
    pub clamped_eigenvalues: usize,
    /// Time at which a full stationarity streak completed, if any.
    pub converged_at: Option<f64>,
    pub final_residual: f64,
}

#[derive(Debug, Clone)]
pub struct Trajectory {
    pub samples: Vec<TrajectorySample>,
    pub meta: TrajectoryMeta,
}

impl Trajectory {
    pub fn final_state(&self) -> &DensityOperator {
        &self.samples.last().expect("trajectory has samples").rho
    }
}

// ---------------------------------------------------------------------------
// dissipative term
// ---------------------------------------------------------------------------

pub(crate) fn adjoint(a: &Array2<C64>) -> Array2<C64> {
    a.t().mapv(|z| z.conj())
}

pub(crate) fn hermitize(mut a: Array2<C64>) -> Array2<C64> {
    let n = a.nrows();
    for i in 0..n {
        for j in 0..i {
            let avg = 0.5 * (a[[i, j]] + a[[j, i]].conj());
            a[[i, j]] = avg;
            a[[j, i]] = avg.conj();
        }
        a[[i, i]] = C64::new(a[[i, i]].re, 0.0);
    }
    a
}

/// Real part of `Tr[a b]`.
pub(crate) fn retr(a: &Array2<C64>, b: &Array2<C64>) -> f64 {
    let n = a.nrows();
    let mut acc = 0.0;
    for i in 0..n {
        for k in 0..n {
            acc += (a[[i, k]] * b[[k, i]]).re;
        }
    }
    acc
}

pub(crate) fn frob(a: &Array2<C64>) -> f64 {
    a.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

fn anticomm_half(a: &Array2<C64>, b: &Array2<C64>) -> Array2<C64> {
    (a.dot(b) + b.dot(a)).mapv(|z| 0.5 * z)
}

/// Entropy gradient projected off the span of the trace and energy
/// constraints in the state-weighted sense: the result is trace-free,
/// trace-orthogonal to `h_op`, and has a nonnegative overlap with `s_op`.
///
/// `h2_op` supplies the second moment (the true squared Hamiltonian for the
/// single constituent, the squared perceived operator for a subsystem). When
/// the energy variance vanishes relative to the scale of `h_op`, all state
/// weight sits in one energy shell and the energy row is dropped.
///
/// Returns the projected gradient and its overlap `Tr[delta s_op]`.
pub(crate) fn ascent_projection(
    rho: &Array2<C64>,
    s_op: &Array2<C64>,
    h_op: &Array2<C64>,
    h2_op: &Array2<C64>,
) -> (Array2<C64>, f64) {
    let m_s = retr(rho, s_op);
    let m_h = retr(rho, h_op);
    let m_hh = retr(rho, h2_op);
    let sh = anticomm_half(s_op, h_op);
    let m_sh = retr(rho, &sh);
    let var = m_hh - m_h * m_h;
    let scale = {
        let f = frob(h_op);
        f * f
    };

    let grad = anticomm_half(s_op, rho);
    let delta = if var <= tol::VARIANCE_FLOOR * scale {
        &grad - &rho.mapv(|z| z * m_s)
    } else {
        let beta = (m_sh - m_s * m_h) / var;
        let alpha = m_s - beta * m_h;
        let hr = anticomm_half(h_op, rho);
        &grad - &rho.mapv(|z| z * alpha) - hr.mapv(|z| z * beta)
    };
    let delta = hermitize(delta);
    let overlap = retr(&delta, s_op);
    (delta, overlap)
}

/// Steepest-entropy-ascent dissipative term for a single constituent.
///
/// The returned operator satisfies `Tr[D] = 0`, `Tr[D H] = 0`, and
/// `Tr[D S~] >= 0`; the flow it generates enters the equation of motion with
/// a `+1/tau` coefficient. It vanishes exactly on projectors and on canonical
/// states.
pub fn dissipative_term(
    rho: &DensityOperator,
    h: &HermitianOperator,
) -> Result<HermitianOperator> {
    if h.dim() != rho.dim() {
        return Err(Error::DimensionMismatch {
            expected: rho.dim(),
            got: h.dim(),
        });
    }
    let s_tilde = rho.entropy_operator();
    let h2 = h.entries().dot(h.entries());
    let (delta, _) = ascent_projection(
        rho.matrix().entries(),
        s_tilde.entries(),
        h.entries(),
        &h2,
    );
    Ok(HermitianOperator::symmetrized(delta))
}

fn commutator_term(h: &Array2<C64>, rho: &Array2<C64>, hbar: f64) -> Array2<C64> {
    let c = h.dot(rho) - rho.dot(h);
    c.mapv(|z| C64::new(0.0, -1.0 / hbar) * z)
}

/// Full time derivative: commutator term plus the dissipative pull, scaled by
/// `1/tau`. Traceless and Hermitian; reduces to the bare commutator term
/// whenever the dissipative term vanishes.
pub fn rhs(rho: &DensityOperator, cfg: &DynamicsConfig) -> Result<HermitianOperator> {
    cfg.validate()?;
    let delta = dissipative_term(rho, &cfg.hamiltonian)?;
    let comm = commutator_term(
        cfg.hamiltonian.entries(),
        rho.matrix().entries(),
        cfg.hbar,
    );
    Ok(HermitianOperator::symmetrized(
        comm + delta.entries().mapv(|z| z / cfg.tau),
    ))
}

/// Frobenius norm of the full rate; zero exactly at stationary states.
pub fn equilibrium_residual(rho: &DensityOperator, cfg: &DynamicsConfig) -> Result<f64> {
    Ok(rhs(rho, cfg)?.frobenius_norm())
}

// ---------------------------------------------------------------------------
// canonical constructors
// ---------------------------------------------------------------------------

/// Canonical state `exp(-H/kT) / Z`. Negative temperatures are admissible on
/// a bounded spectrum; `T = 0` is rejected, infinite `T` yields the uniform
/// state.
pub fn canonical_state(
    h: &HermitianOperator,
    temperature: f64,
    k: f64,
) -> Result<DensityOperator> {
    if temperature == 0.0 {
        return Err(Error::ZeroTemperature);
    }
    let (vals, vecs) = eigh_ascending(h.entries())?;
    let n = vals.len();
    let probs = if temperature.is_infinite() {
        vec![1.0 / n as f64; n]
    } else {
        let beta = 1.0 / (k * temperature);
        gibbs_weights(&vals, beta)
    };
    DensityOperator::from_spectral(vecs, probs)
}

/// Grand-canonical constructor: canonical state of `H - sum_i mu_i N_i`.
pub fn grand_canonical_state(
    h: &HermitianOperator,
    numbers: &[HermitianOperator],
    mus: &[f64],
    temperature: f64,
    k: f64,
) -> Result<DensityOperator> {
    if numbers.len() != mus.len() {
        return Err(Error::DimensionMismatch {
            expected: numbers.len(),
            got: mus.len(),
        });
    }
    let mut effective = h.clone();
    for (n_op, &mu) in numbers.iter().zip(mus) {
        effective = effective.sub(&n_op.scale(mu))?;
    }
    canonical_state(&effective, temperature, k)
}

/// Gibbs weights `exp(-beta e_i) / Z`, overflow-safe under energy shifts.
pub(crate) fn gibbs_weights(levels: &[f64], beta: f64) -> Vec<f64> {
    let shift = levels
        .iter()
        .map(|&e| -beta * e)
        .fold(f64::NEG_INFINITY, f64::max);
    let weights: Vec<f64> = levels.iter().map(|&e| (-beta * e - shift).exp()).collect();
    let z: f64 = weights.iter().sum();
    weights.into_iter().map(|w| w / z).collect()
}

/// Mean energy of the Gibbs distribution at inverse temperature `beta`.
pub(crate) fn gibbs_energy(levels: &[f64], beta: f64) -> f64 {
    let p = gibbs_weights(levels, beta);
    levels.iter().zip(&p).map(|(&e, &w)| e * w).sum()
}

/// Solve for the inverse temperature whose Gibbs distribution over `levels`
/// has the given mean energy. The mean is strictly decreasing in beta, so a
/// geometrically grown bracket plus bisection with a Newton polish converges
/// to machine precision. The bracket aborts at `|beta| = 1e6`.
pub(crate) fn beta_for_levels(levels: &[f64], energy: f64) -> Result<f64> {
    let lo = levels.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = levels.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if !(energy > lo && energy < hi) {
        return Err(Error::InfeasibleEnergy { energy, lo, hi });
    }

    let f = |beta: f64| gibbs_energy(levels, beta) - energy;

    // f(beta) decreases from hi (beta -> -inf) to lo (beta -> +inf)
    let (mut a, mut b) = (-1.0, 1.0);
    while f(a) < 0.0 {
        a *= 2.0;
        if a.abs() > tol::BETA_BRACKET_LIMIT {
            return Err(Error::BetaBracketExhausted {
                energy,
                limit: tol::BETA_BRACKET_LIMIT,
            });
        }
    }
    while f(b) > 0.0 {
        b *= 2.0;
        if b.abs() > tol::BETA_BRACKET_LIMIT {
            return Err(Error::BetaBracketExhausted {
                energy,
                limit: tol::BETA_BRACKET_LIMIT,
            });
        }
    }
    for _ in 0..200 {
        let mid = 0.5 * (a + b);
        if mid == a || mid == b {
            break;
        }
        if f(mid) > 0.0 {
            a = mid;
        } else {
            b = mid;
        }
    }
    let mut beta = 0.5 * (a + b);
    // Newton polish: d<E>/dbeta = -Var(E)
    for _ in 0..4 {
        let p = gibbs_weights(levels, beta);
        let mean: f64 = levels.iter().zip(&p).map(|(&e, &w)| e * w).sum();
        let second: f64 = levels.iter().zip(&p).map(|(&e, &w)| e * e * w).sum();
        let var = second - mean * mean;
        if var <= 0.0 {
            break;
        }
        let step = (mean - energy) / var;
        let next = beta + step;
        if !next.is_finite() {
            break;
        }
        beta = next;
    }
    Ok(beta)
}

/// Inverse temperature of the (partially) canonical state with the given mean
/// energy on the range of `support`. The energy must lie strictly inside the
/// supported spectral interval.
pub fn beta_for_energy(
    h: &HermitianOperator,
    energy: f64,
    support: &HermitianOperator,
) -> Result<f64> {
    let levels = supported_levels(h, support)?;
    beta_for_levels(&levels, energy)
}

/// Eigenvalues of `h` restricted to the range of a projector.
fn supported_levels(h: &HermitianOperator, support: &HermitianOperator) -> Result<Vec<f64>> {
    if support.dim() != h.dim() {
        return Err(Error::DimensionMismatch {
            expected: h.dim(),
            got: support.dim(),
        });
    }
    let p2 = support.matmul(support)?;
    let dev: f64 = (&p2 - support.entries())
        .iter()
        .map(|z| z.norm())
        .fold(0.0, f64::max);
    if dev > 1e-10 {
        return Err(Error::NotProjector { dev });
    }
    let (vals, vecs) = eigh_ascending(support.entries())?;
    let cols: Vec<usize> = (0..vals.len()).filter(|&i| vals[i] > 0.5).collect();
    if cols.is_empty() {
        return Err(Error::EmptySupport);
    }
    let n = h.dim();
    let r = cols.len();
    let mut w = Array2::zeros((n, r));
    for (k, &i) in cols.iter().enumerate() {
        w.column_mut(k).assign(&vecs.column(i));
    }
    let hr = adjoint(&w).dot(h.entries()).dot(&w);
    let (levels, _) = eigh_ascending(&hermitize(hr))?;
    Ok(levels)
}

/// Exact unitary propagation `U rho U^dagger` with `U = exp(-i H t / hbar)`,
/// for time-independent `H`.
pub fn evolve_unitary(
    rho0: &DensityOperator,
    h: &HermitianOperator,
    t: f64,
    hbar: f64,
) -> Result<DensityOperator> {
    if h.dim() != rho0.dim() {
        return Err(Error::DimensionMismatch {
            expected: rho0.dim(),
            got: h.dim(),
        });
    }
    let (vals, vecs) = eigh_ascending(h.entries())?;
    let n = vals.len();
    let mut u = Array2::zeros((n, n));
    for (j, &e) in vals.iter().enumerate() {
        let phase = C64::from_polar(1.0, -e * t / hbar);
        for i in 0..n {
            u[[i, j]] = vecs[[i, j]] * phase;
        }
    }
    let u = u.dot(&adjoint(&vecs));
    let rotated = u.dot(rho0.matrix().entries()).dot(&adjoint(&u));
    DensityOperator::from_operator(HermitianOperator::symmetrized(rotated))
}

// ---------------------------------------------------------------------------
// factored integrator
// ---------------------------------------------------------------------------

/// Full-space rate evaluation used by the integrator. Implementations receive
/// the reconstructed state and its entropy operator and return the Hermitian
/// time derivative of the state.
pub(crate) trait RateProvider {
    fn rate(&self, rho: &Array2<C64>, s_tilde: &Array2<C64>) -> Result<Array2<C64>>;
    /// Dissipative part alone (for the sample-time norm monitor).
    fn dissipative(&self, rho: &Array2<C64>, s_tilde: &Array2<C64>) -> Result<Array2<C64>>;
    /// Analytic entropy production rate, in entropy units per time.
    fn entropy_rate(&self, rho: &Array2<C64>, s_tilde: &Array2<C64>) -> Result<f64>;
    fn energy(&self, rho: &Array2<C64>) -> Result<f64>;
}

pub(crate) struct SingleProvider<'a> {
    h: &'a Array2<C64>,
    h2: Array2<C64>,
    hbar: f64,
    tau: f64,
    k: f64,
}

impl<'a> SingleProvider<'a> {
    pub(crate) fn new(h: &'a HermitianOperator, hbar: f64, tau: f64, k: f64) -> Self {
        Self {
            h: h.entries(),
            h2: h.entries().dot(h.entries()),
            hbar,
            tau,
            k,
        }
    }
}

impl RateProvider for SingleProvider<'_> {
    fn rate(&self, rho: &Array2<C64>, s_tilde: &Array2<C64>) -> Result<Array2<C64>> {
        let (delta, _) = ascent_projection(rho, s_tilde, self.h, &self.h2);
        Ok(commutator_term(self.h, rho, self.hbar) + delta.mapv(|z| z / self.tau))
    }

    fn dissipative(&self, rho: &Array2<C64>, s_tilde: &Array2<C64>) -> Result<Array2<C64>> {
        Ok(ascent_projection(rho, s_tilde, self.h, &self.h2).0)
    }

    fn entropy_rate(&self, rho: &Array2<C64>, s_tilde: &Array2<C64>) -> Result<f64> {
        let (_, overlap) = ascent_projection(rho, s_tilde, self.h, &self.h2);
        Ok(self.k / self.tau * overlap)
    }

    fn energy(&self, rho: &Array2<C64>) -> Result<f64> {
        Ok(retr(rho, self.h))
    }
}

pub(crate) struct RunOptions {
    pub dt: f64,
    pub t_final: f64,
    pub monitor_every: usize,
    pub k: f64,
}

pub(crate) struct RawRun {
    pub samples: Vec<TrajectorySample>,
    pub steps: usize,
    pub support_dim: usize,
    pub initial_energy: f64,
    pub max_trace_drift: f64,
    pub max_energy_drift: f64,
    pub min_entropy_step: f64,
    pub max_kernel_rate: f64,
    pub clamped_eigenvalues: usize,
    pub converged_at: Option<f64>,
    pub final_residual: f64,
}

struct Factored {
    /// Orthonormal columns spanning the current range.
    w: Array2<C64>,
    /// Full-rank state on the range.
    sigma: Array2<C64>,
    /// Cached spectrum of `sigma`, ascending.
    lam: Vec<f64>,
    vecs: Array2<C64>,
}

impl Factored {
    fn from_density(rho0: &DensityOperator) -> Self {
        let n = rho0.dim();
        let r = rho0.support_dim();
        let mut w = Array2::zeros((n, r));
        for k in 0..r {
            w.column_mut(k).assign(&rho0.eigenvectors().column(k));
        }
        let mut lam: Vec<f64> = rho0.eigenvalues()[..r].to_vec();
        let total: f64 = lam.iter().sum();
        for v in &mut lam {
            *v /= total;
        }
        let mut sigma = Array2::zeros((r, r));
        for k in 0..r {
            sigma[[k, k]] = C64::new(lam[k], 0.0);
        }
        let mut asc = lam.clone();
        asc.reverse();
        // eigenvectors of the diagonal sigma: reversed identity to be ascending
        let mut vecs = Array2::zeros((r, r));
        for k in 0..r {
            vecs[[r - 1 - k, k]] = C64::new(1.0, 0.0);
        }
        Self {
            w,
            sigma,
            lam: asc,
            vecs,
        }
    }

    fn entropy(&self, k: f64) -> f64 {
        -k * self
            .lam
            .iter()
            .filter(|&&p| p > 0.0)
            .map(|&p| p * p.ln())
            .sum::<f64>()
    }
}

/// Reconstruct `rho` and the entropy operator from a (possibly non-orthonormal
/// at an internal stage) factor pair.
fn reconstruct(
    w: &Array2<C64>,
    lam: &[f64],
    vecs: &Array2<C64>,
) -> (Array2<C64>, Array2<C64>) {
    let n = w.nrows();
    let basis = w.dot(vecs); // n x r support eigenvectors
    let r = lam.len();
    let mut rho = Array2::zeros((n, n));
    let mut st = Array2::zeros((n, n));
    for kdx in 0..r {
        let lam_k = lam[kdx].max(1e-300);
        let lnl = -lam_k.ln();
        for i in 0..n {
            let bi = basis[[i, kdx]];
            for j in 0..n {
                let o = bi * basis[[j, kdx]].conj();
                rho[[i, j]] += o * lam_k;
                st[[i, j]] += o * lnl;
            }
        }
    }
    (hermitize(rho), hermitize(st))
}

fn stage_derivative<P: RateProvider>(
    w: &Array2<C64>,
    sigma: &Array2<C64>,
    provider: &P,
) -> Result<(Array2<C64>, Array2<C64>)> {
    let n = w.nrows();
    let r = sigma.nrows();
    let (lam, vecs) = eigh_ascending(sigma)?;
    let (rho, st) = reconstruct(w, &lam, &vecs);
    let rate = provider.rate(&rho, &st)?;
    let wt_rate_w = adjoint(w).dot(&rate).dot(w);
    let dsigma = wt_rate_w.clone();
    let dw = if r == n {
        Array2::zeros((n, r))
    } else {
        let rw = rate.dot(w);
        let perp = &rw - &w.dot(&wt_rate_w);
        // sigma^{-1} from the cached spectrum, guarded far below the support scale
        let mut inv = Array2::zeros((r, r));
        for a in 0..r {
            for b in 0..r {
                let mut acc = C64::new(0.0, 0.0);
                for kdx in 0..r {
                    acc += vecs[[a, kdx]] * vecs[[b, kdx]].conj() / lam[kdx].max(1e-14);
                }
                inv[[a, b]] = acc;
            }
        }
        perp.dot(&inv)
    };
    Ok((dw, dsigma))
}

/// Thin QR by modified Gram-Schmidt with reorthogonalization; returns `(q, t)`
/// with `input = q t`, `q` orthonormal columns, `t` upper triangular.
fn thin_qr(m: &Array2<C64>) -> (Array2<C64>, Array2<C64>) {
    let (n, r) = m.dim();
    let mut q = m.clone();
    let mut t: Array2<C64> = Array2::zeros((r, r));
    for j in 0..r {
        for _pass in 0..2 {
            for i in 0..j {
                let mut proj = C64::new(0.0, 0.0);
                for row in 0..n {
                    proj += q[[row, i]].conj() * q[[row, j]];
                }
                for row in 0..n {
                    let qi = q[[row, i]];
                    q[[row, j]] -= proj * qi;
                }
                t[[i, j]] += proj;
            }
        }
        let norm: f64 = (0..n).map(|row| q[[row, j]].norm_sqr()).sum::<f64>().sqrt();
        t[[j, j]] = C64::new(norm, 0.0);
        if norm > 0.0 {
            for row in 0..n {
                q[[row, j]] /= norm;
            }
        }
    }
    (q, t)
}

/// Deterministically extend orthonormal columns to a full unitary.
pub(crate) fn complete_basis(w: &Array2<C64>) -> Array2<C64> {
    let (n, r) = w.dim();
    let mut full = Array2::zeros((n, n));
    for k in 0..r {
        full.column_mut(k).assign(&w.column(k));
    }
    let mut have = r;
    for e in 0..n {
        if have == n {
            break;
        }
        // candidate standard basis vector, orthogonalized against accepted columns
        let mut v: Array1<C64> = Array1::zeros(n);
        v[e] = C64::new(1.0, 0.0);
        for _pass in 0..2 {
            for k in 0..have {
                let mut proj = C64::new(0.0, 0.0);
                for row in 0..n {
                    proj += full[[row, k]].conj() * v[row];
                }
                for row in 0..n {
                    let f = full[[row, k]];
                    v[row] -= proj * f;
                }
            }
        }
        let norm: f64 = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if norm > 1e-6 {
            for row in 0..n {
                full[[row, have]] = v[row] / norm;
            }
            have += 1;
        }
    }
    debug_assert_eq!(have, n, "basis completion fell short");
    full
}

fn sample_density(state: &Factored) -> Result<DensityOperator> {
    let n = state.w.nrows();
    let r = state.lam.len();
    let basis = state.w.dot(&state.vecs);
    let full = complete_basis(&basis);
    let mut vals = vec![0.0; n];
    for k in 0..r {
        vals[k] = state.lam[r - 1 - k]; // descending over support columns
    }
    // reorder: support eigenvectors were ascending in `basis`; match values
    let mut ordered = Array2::zeros((n, n));
    for k in 0..r {
        ordered.column_mut(k).assign(&basis.column(r - 1 - k));
    }
    for k in r..n {
        ordered.column_mut(k).assign(&full.column(k));
    }
    DensityOperator::from_spectral(ordered, vals)
}

pub(crate) fn integrate_with<P: RateProvider>(
    rho0: &DensityOperator,
    provider: &P,
    opts: &RunOptions,
) -> Result<RawRun> {
    if !(opts.dt > 0.0) {
        return Err(Error::Invalid(format!("dt must be positive, got {}", opts.dt)));
    }
    let n = rho0.dim();
    let r = rho0.support_dim();
    let direction = if opts.t_final < 0.0 { -1.0 } else { 1.0 };
    let total = opts.t_final.abs();
    let steps = (total / opts.dt).ceil() as usize;

    let mut state = Factored::from_density(rho0);
    let mut run = RawRun {
        samples: Vec::new(),
        steps,
        support_dim: r,
        initial_energy: 0.0,
        max_trace_drift: 0.0,
        max_energy_drift: 0.0,
        min_entropy_step: 0.0,
        max_kernel_rate: 0.0,
        clamped_eigenvalues: 0,
        converged_at: None,
        final_residual: f64::NAN,
    };

    let (rho_m, _) = reconstruct(&state.w, &state.lam, &state.vecs);
    run.initial_energy = provider.energy(&rho_m)?;
    let e_tol = tol::ENERGY_DRIFT * (1.0 + run.initial_energy.abs());

    let mut stationary_streak = 0usize;
    let mut prev_entropy = state.entropy(opts.k);
    let mut t = 0.0;

    let record =
        |state: &Factored, t: f64, run: &mut RawRun, streak: &mut usize, drift: f64| -> Result<()> {
            let (rho_m, st_m) = reconstruct(&state.w, &state.lam, &state.vecs);
            let energy = provider.energy(&rho_m)?;
            let e_drift = (energy - run.initial_energy).abs();
            run.max_energy_drift = run.max_energy_drift.max(e_drift);
            if e_drift > e_tol {
                return Err(Error::InvariantBreach {
                    t,
                    sample: run.samples.len(),
                    quantity: "energy drift",
                    value: e_drift,
                    tolerance: e_tol,
                });
            }
            let rate = provider.rate(&rho_m, &st_m)?;
            let residual = frob(&rate);
            run.final_residual = residual;
            if residual < tol::STATIONARITY {
                *streak += 1;
                if *streak == tol::STATIONARY_SAMPLES && run.converged_at.is_none() {
                    run.converged_at = Some(t);
                }
            } else {
                *streak = 0;
            }
            if state.lam.len() < n {
                // discarded kernel-block rate, diagnostic only
                let pw = state.w.dot(&adjoint(&state.w).dot(&rate));
                let side = &rate - &pw;
                let block = &side - &side.dot(&state.w).dot(&adjoint(&state.w));
                run.max_kernel_rate = run.max_kernel_rate.max(frob(&block));
            }
            let delta = provider.dissipative(&rho_m, &st_m)?;
            let ds_dt = provider.entropy_rate(&rho_m, &st_m)?;
            let rho = sample_density(state)?;
            run.samples.push(TrajectorySample {
                t,
                energy,
                entropy: state.entropy(opts.k),
                trace_drift: drift,
                min_eigenvalue: state.lam.iter().cloned().fold(f64::INFINITY, f64::min),
                support_dim: state.lam.len(),
                ds_dt,
                dissipator_norm: frob(&delta),
                rho,
            });
            Ok(())
        };

    record(&state, 0.0, &mut run, &mut stationary_streak, 0.0)?;

    for step in 0..steps {
        let dt_step = {
            let remaining = total - step as f64 * opts.dt;
            direction * opts.dt.min(remaining)
        };
        let k1 = stage_derivative(&state.w, &state.sigma, provider)?;
        let w2 = &state.w + &k1.0.mapv(|z| z * (dt_step / 2.0));
        let s2 = &state.sigma + &k1.1.mapv(|z| z * (dt_step / 2.0));
        let k2 = stage_derivative(&w2, &s2, provider)?;
        let w3 = &state.w + &k2.0.mapv(|z| z * (dt_step / 2.0));
        let s3 = &state.sigma + &k2.1.mapv(|z| z * (dt_step / 2.0));
        let k3 = stage_derivative(&w3, &s3, provider)?;
        let w4 = &state.w + &k3.0.mapv(|z| z * dt_step);
        let s4 = &state.sigma + &k3.1.mapv(|z| z * dt_step);
        let k4 = stage_derivative(&w4, &s4, provider)?;

        let sixth = dt_step / 6.0;
        let w_next = &state.w
            + &(&k1.0 + &k4.0 + &(&k2.0 + &k3.0).mapv(|z| z * 2.0)).mapv(|z| z * sixth);
        let s_next = &state.sigma
            + &(&k1.1 + &k4.1 + &(&k2.1 + &k3.1).mapv(|z| z * 2.0)).mapv(|z| z * sixth);

        // restore the factored invariants: orthonormal w, Hermitian positive
        // unit-trace sigma
        let (q, tmat) = thin_qr(&w_next);
        let sigma = hermitize(tmat.dot(&s_next).dot(&adjoint(&tmat)));
        let (mut lam, vecs) = eigh_ascending(&sigma)?;
        let t_next = t + dt_step;
        if lam[0] < -tol::EIGENVALUE_CLAMP {
            return Err(Error::StepFailure {
                t: t_next,
                sample: run.samples.len(),
                quantity: "negative eigenvalue",
                value: lam[0],
            });
        }
        for v in lam.iter_mut() {
            if *v < 0.0 {
                *v = 0.0;
                run.clamped_eigenvalues += 1;
            }
        }
        let lmax = lam.iter().cloned().fold(0.0, f64::max);
        let live = lam.iter().filter(|&&v| v > tol::EPS_ZERO * lmax).count();
        if live < lam.len() {
            return Err(Error::StepFailure {
                t: t_next,
                sample: run.samples.len(),
                quantity: "support collapse",
                value: lam[0],
            });
        }
        let trace: f64 = lam.iter().sum();
        let drift = (trace - 1.0).abs();
        run.max_trace_drift = run.max_trace_drift.max(drift);
        if drift > tol::TRACE_DRIFT {
            return Err(Error::InvariantBreach {
                t: t_next,
                sample: run.samples.len(),
                quantity: "trace drift",
                value: drift,
                tolerance: tol::TRACE_DRIFT,
            });
        }
        for v in lam.iter_mut() {
            *v /= trace;
        }
        // rebuild sigma from the repaired spectrum
        let mut sig = Array2::zeros((r, r));
        for a in 0..r {
            for b in 0..r {
                let mut acc = C64::new(0.0, 0.0);
                for kdx in 0..r {
                    acc += vecs[[a, kdx]] * vecs[[b, kdx]].conj() * lam[kdx];
                }
                sig[[a, b]] = acc;
            }
        }
        state = Factored {
            w: q,
            sigma: hermitize(sig),
            lam,
            vecs,
        };
        // exact accumulated time, immune to stepwise rounding
        t = direction * (((step + 1) as f64) * opts.dt).min(total);

        let entropy = state.entropy(opts.k);
        let signed_step = direction * (entropy - prev_entropy);
        run.min_entropy_step = run.min_entropy_step.min(signed_step);
        if signed_step < -tol::ENTROPY_STEP {
            return Err(Error::InvariantBreach {
                t,
                sample: run.samples.len(),
                quantity: "entropy decrease",
                value: signed_step,
                tolerance: tol::ENTROPY_STEP,
            });
        }
        prev_entropy = entropy;

        let is_last = step + 1 == steps;
        if (step + 1) % opts.monitor_every == 0 || is_last {
            record(&state, t, &mut run, &mut stationary_streak, drift)?;
        }
    }
    Ok(run)
}

/// Integrate the single-constituent equation of motion.
///
/// Runs from `t = 0` to `cfg.t_final` (which may be negative). The state is
/// evolved on the range of `rho0`; the support dimension is constant along
/// the trajectory by construction.
pub fn integrate(rho0: &DensityOperator, cfg: &DynamicsConfig) -> Result<Trajectory> {
    cfg.validate()?;
    if cfg.hamiltonian.dim() != rho0.dim() {
        return Err(Error::DimensionMismatch {
            expected: rho0.dim(),
            got: cfg.hamiltonian.dim(),
        });
    }
    let provider = SingleProvider::new(&cfg.hamiltonian, cfg.hbar, cfg.tau, cfg.k);
    let opts = RunOptions {
        dt: cfg.dt,
        t_final: cfg.t_final,
        monitor_every: cfg.monitor_every,
        k: cfg.k,
    };
    let raw = integrate_with(rho0, &provider, &opts)?;
    Ok(Trajectory {
        meta: TrajectoryMeta {
            tau: cfg.tau,
            hbar: cfg.hbar,
            k: cfg.k,
            dt: cfg.dt,
            t_final: cfg.t_final,
            monitor_every: cfg.monitor_every,
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
        samples: raw.samples,
    })
}
