//! Dilute-Boltzmann-gas specialization: occupation probabilities diagonal in
//! the energy representation.
//!
//! Everything reduces to a probability vector over single-particle levels.
//! The rate of each supported probability is the diagonal restriction of the
//! general dissipative term; unsupported levels stay at exactly zero, so the
//! support mask is a constant of the motion. The entropy generation rate is
//! evaluated as a ratio of Gram determinants, nonnegative by construction.

use crate::dynamics::{beta_for_levels, gibbs_weights};
use crate::error::{Error, Result};
use crate::tol;

/// Occupation probabilities with an immutable support mask over fixed
/// single-particle levels.
#[derive(Debug, Clone)]
pub struct ProbabilityVector {
    p: Vec<f64>,
    delta: Vec<bool>,
    e: Vec<f64>,
}

impl ProbabilityVector {
    /// Build from probabilities and levels; the support mask is inferred
    /// (`delta_i = (p_i != 0)`).
    pub fn new(p: Vec<f64>, e: Vec<f64>) -> Result<Self> {
        if p.len() != e.len() {
            return Err(Error::DimensionMismatch {
                expected: e.len(),
                got: p.len(),
            });
        }
        if p.is_empty() {
            return Err(Error::EmptySupport);
        }
        for (i, &v) in p.iter().enumerate() {
            if !(v >= 0.0) || !v.is_finite() {
                return Err(Error::InvalidProbability { index: i, value: v });
            }
        }
        let sum: f64 = p.iter().sum();
        if (sum - 1.0).abs() > tol::TRACE_UNITY {
            return Err(Error::TraceNotOne {
                trace: sum,
                tolerance: tol::TRACE_UNITY,
            });
        }
        let delta = p.iter().map(|&v| v > 0.0).collect();
        Ok(Self { p, delta, e })
    }

    pub fn len(&self) -> usize {
        self.p.len()
    }

    pub fn is_empty(&self) -> bool {
        self.p.is_empty()
    }

    pub fn probabilities(&self) -> &[f64] {
        &self.p
    }

    pub fn levels(&self) -> &[f64] {
        &self.e
    }

    pub fn support(&self) -> &[bool] {
        &self.delta
    }

    pub fn energy(&self) -> f64 {
        self.p.iter().zip(&self.e).map(|(&p, &e)| p * e).sum()
    }

    pub fn entropy(&self, k: f64) -> f64 {
        -k * self
            .p
            .iter()
            .filter(|&&p| p > 0.0)
            .map(|&p| p * p.ln())
            .sum::<f64>()
    }
}

/// Energy and entropy bookkeeping of a gas state.
#[derive(Debug, Clone)]
pub struct GasState {
    pub pv: ProbabilityVector,
    pub energy: f64,
    pub entropy: f64,
}

impl GasState {
    pub fn new(pv: ProbabilityVector, k: f64) -> Self {
        let energy = pv.energy();
        let entropy = pv.entropy(k);
        Self {
            pv,
            energy,
            entropy,
        }
    }
}

/// Weighted regression data of `x = ln p` on the constant and the level
/// energies: the projection coefficients of the entropy gradient onto the
/// conserved directions, evaluated through centered sums.
struct Regression {
    x_mean: f64,
    e_mean: f64,
    /// `Cov(e, x) / Var(e)`; zero when the energy row is dropped
    /// (all supported weight in one energy shell).
    slope: f64,
}

fn regression(p: &[f64], e: &[f64]) -> Regression {
    let mut x_mean = 0.0;
    let mut e_mean = 0.0;
    for (&pi, &ei) in p.iter().zip(e) {
        if pi > 0.0 {
            x_mean += pi * pi.ln();
            e_mean += pi * ei;
        }
    }
    let mut var_e = 0.0;
    let mut cov = 0.0;
    for (&pi, &ei) in p.iter().zip(e) {
        if pi > 0.0 {
            let de = ei - e_mean;
            var_e += pi * de * de;
            cov += pi * de * (pi.ln() - x_mean);
        }
    }
    let scale: f64 = e.iter().map(|&ei| ei * ei).sum();
    let single_shell = var_e <= tol::VARIANCE_FLOOR * scale;
    Regression {
        x_mean,
        e_mean,
        slope: if single_shell { 0.0 } else { cov / var_e },
    }
}

impl Regression {
    /// Component of `ln p_i` orthogonal to the conserved directions.
    fn residual(&self, p_i: f64, e_i: f64) -> f64 {
        (p_i.ln() - self.x_mean) - self.slope * (e_i - self.e_mean)
    }
}

/// Rates of change of the occupation probabilities; exactly zero off the
/// support. The rates sum to zero and are orthogonal to the level energies.
pub fn prob_rates(pv: &ProbabilityVector, tau: f64) -> Vec<f64> {
    let p = pv.probabilities();
    let e = pv.levels();
    let reg = regression(p, e);
    let mut rates = vec![0.0; p.len()];
    for i in 0..p.len() {
        if pv.delta[i] {
            rates[i] = -p[i] * reg.residual(p[i], e[i]) / tau;
        }
    }
    rates
}

/// Entropy generation rate: the ratio of Gram determinants of
/// `(ln p, 1, e)` over `(1, e)`, evaluated as the weighted residual sum of
/// squares of `ln p` against the conserved directions so that the
/// nonnegativity of the Gram form survives floating point. Equals the
/// chain-rule value `-k sum_j (dp_j/dt) ln p_j`.
pub fn entropy_generation_rate(pv: &ProbabilityVector, tau: f64, k: f64) -> f64 {
    let p = pv.probabilities();
    let e = pv.levels();
    let reg = regression(p, e);
    let mut residual_sq = 0.0;
    for i in 0..p.len() {
        if p[i] > 0.0 {
            let r = reg.residual(p[i], e[i]);
            residual_sq += p[i] * r * r;
        }
    }
    k / tau * residual_sq
}

/// Partially canonical distribution on the masked support with the given mean
/// energy. With a full mask this is the canonical distribution. A support
/// whose levels all coincide admits only that energy and yields the uniform
/// distribution on the mask.
pub fn partial_equilibrium(energy: f64, delta: &[bool], e: &[f64]) -> Result<ProbabilityVector> {
    if delta.len() != e.len() {
        return Err(Error::DimensionMismatch {
            expected: e.len(),
            got: delta.len(),
        });
    }
    let supported: Vec<f64> = e
        .iter()
        .zip(delta)
        .filter(|(_, &d)| d)
        .map(|(&ei, _)| ei)
        .collect();
    if supported.is_empty() {
        return Err(Error::EmptySupport);
    }
    let lo = supported.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = supported.iter().cloned().fold(f64::NEG_INFINITY, f64::max);

    let span = hi - lo;
    let probs_on_support = if span <= 1e-12 * lo.abs().max(hi.abs()).max(1.0) {
        // single energy shell
        if (energy - lo).abs() > 1e-9 * (1.0 + lo.abs()) {
            return Err(Error::InfeasibleEnergy { energy, lo, hi });
        }
        vec![1.0 / supported.len() as f64; supported.len()]
    } else {
        let beta = beta_for_levels(&supported, energy)?;
        gibbs_weights(&supported, beta)
    };

    let mut p = vec![0.0; e.len()];
    let mut idx = 0;
    for i in 0..e.len() {
        if delta[i] {
            p[i] = probs_on_support[idx];
            idx += 1;
        }
    }
    let total: f64 = p.iter().sum();
    for v in &mut p {
        *v /= total;
    }
    ProbabilityVector::new(p, e.to_vec())
}

/// Canonical distribution and temperature at the given mean energy.
#[derive(Debug, Clone)]
pub struct Equilibrium {
    pub pv: ProbabilityVector,
    pub beta: f64,
    /// `1 / (k beta)`; infinite at the midpoint where beta vanishes.
    pub temperature: f64,
}

pub fn stable_equilibrium(energy: f64, e: &[f64], k: f64) -> Result<Equilibrium> {
    let mut beta = beta_for_levels(e, energy)?;
    let span = e.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
        - e.iter().cloned().fold(f64::INFINITY, f64::min);
    if (beta * span).abs() < 1e-12 {
        beta = 0.0;
    }
    let p = gibbs_weights(e, beta);
    let temperature = if beta == 0.0 {
        f64::INFINITY
    } else {
        1.0 / (k * beta)
    };
    Ok(Equilibrium {
        pv: ProbabilityVector::new(p, e.to_vec())?,
        beta,
        temperature,
    })
}

/// Canonical entropy at a given mean energy, evaluated through the partition
/// function so that the solver residual enters only at second order.
pub fn canonical_entropy(levels: &[f64], energy: f64, k: f64) -> Result<f64> {
    let beta = beta_for_levels(levels, energy)?;
    let shift = levels.iter().cloned().fold(f64::INFINITY, f64::min);
    let z: f64 = levels.iter().map(|&e| (-beta * (e - shift)).exp()).sum();
    Ok(k * (z.ln() + beta * (energy - shift)))
}

#[derive(Debug, Clone)]
pub struct GasSample {
    pub t: f64,
    pub p: Vec<f64>,
    pub energy: f64,
    pub entropy: f64,
    pub ds_dt: f64,
}

#[derive(Debug, Clone)]
pub struct GasMeta {
    pub tau: f64,
    pub k: f64,
    pub dt: f64,
    pub t_final: f64,
    pub steps: usize,
    pub max_energy_drift: f64,
    pub max_norm_drift: f64,
    pub min_entropy_step: f64,
    pub converged_at: Option<f64>,
    pub final_rate_norm: f64,
}

#[derive(Debug, Clone)]
pub struct GasTrajectory {
    pub samples: Vec<GasSample>,
    pub meta: GasMeta,
}

impl GasTrajectory {
    pub fn final_probabilities(&self) -> &[f64] {
        &self.samples.last().expect("has samples").p
    }
}

#[derive(Debug, Clone)]
pub struct GasRunConfig {
    pub tau: f64,
    pub dt: f64,
    pub t_final: f64,
    pub k: f64,
    pub monitor_every: usize,
}

impl Default for GasRunConfig {
    fn default() -> Self {
        Self {
            tau: 1.0,
            dt: 1e-3,
            t_final: 10.0,
            k: 1.0,
            monitor_every: 10,
        }
    }
}

/// Integrate the occupation-probability rate equations.
///
/// Classical fourth-order stepping with per-step renormalization. Supported
/// probabilities that would underflow trigger step-size halving rather than a
/// silent floor; unsupported probabilities are never touched, so the mask is
/// invariant bit for bit. Negative `t_final` runs backward in time.
pub fn integrate_gas(p0: &ProbabilityVector, cfg: &GasRunConfig) -> Result<GasTrajectory> {
    if !(cfg.tau > 0.0 && cfg.dt > 0.0) {
        return Err(Error::Invalid("tau and dt must be positive".into()));
    }
    if cfg.monitor_every == 0 {
        return Err(Error::Invalid("monitor_every must be at least 1".into()));
    }
    let direction = if cfg.t_final < 0.0 { -1.0 } else { 1.0 };
    let total = cfg.t_final.abs();
    let steps = (total / cfg.dt).ceil() as usize;

    let mut pv = p0.clone();
    let e0 = pv.energy();
    let e_tol = tol::ENERGY_DRIFT * (1.0 + e0.abs());

    let mut meta = GasMeta {
        tau: cfg.tau,
        k: cfg.k,
        dt: cfg.dt,
        t_final: cfg.t_final,
        steps,
        max_energy_drift: 0.0,
        max_norm_drift: 0.0,
        min_entropy_step: 0.0,
        converged_at: None,
        final_rate_norm: f64::NAN,
    };
    let mut samples = Vec::new();
    let mut streak = 0usize;

    let record = |pv: &ProbabilityVector,
                  t: f64,
                  samples: &mut Vec<GasSample>,
                  meta: &mut GasMeta,
                  streak: &mut usize|
     -> Result<()> {
        let energy = pv.energy();
        let drift = (energy - e0).abs();
        meta.max_energy_drift = meta.max_energy_drift.max(drift);
        if drift > e_tol {
            return Err(Error::InvariantBreach {
                t,
                sample: samples.len(),
                quantity: "energy drift",
                value: drift,
                tolerance: e_tol,
            });
        }
        let rates = prob_rates(pv, cfg.tau);
        let rate_norm = rates.iter().map(|r| r * r).sum::<f64>().sqrt();
        meta.final_rate_norm = rate_norm;
        if rate_norm < tol::STATIONARITY {
            *streak += 1;
            if *streak == tol::STATIONARY_SAMPLES && meta.converged_at.is_none() {
                meta.converged_at = Some(t);
            }
        } else {
            *streak = 0;
        }
        samples.push(GasSample {
            t,
            p: pv.probabilities().to_vec(),
            energy,
            entropy: pv.entropy(cfg.k),
            ds_dt: entropy_generation_rate(pv, cfg.tau, cfg.k),
        });
        Ok(())
    };

    record(&pv, 0.0, &mut samples, &mut meta, &mut streak)?;
    let mut prev_entropy = pv.entropy(cfg.k);
    let mut t = 0.0;

    for step in 0..steps {
        let remaining = total - step as f64 * cfg.dt;
        let nominal = direction * cfg.dt.min(remaining);

        // consume the nominal step in pieces, halving a piece whenever a
        // supported probability would cross the floor
        let mut p_next = pv.probabilities().to_vec();
        let mut consumed = 0.0f64;
        let mut piece = nominal;
        let mut halvings = 0usize;
        while (nominal - consumed).abs() > 1e-16 * nominal.abs() {
            let rem = nominal - consumed;
            if piece.abs() > rem.abs() {
                piece = rem;
            }
            let tmp = ProbabilityVector {
                p: p_next.clone(),
                delta: pv.delta.clone(),
                e: pv.e.clone(),
            };
            match try_step(&tmp, piece, cfg.tau) {
                Some(p2) => {
                    p_next = p2;
                    consumed += piece;
                }
                None => {
                    halvings += 1;
                    if halvings > 60 {
                        return Err(Error::StepFailure {
                            t,
                            sample: samples.len(),
                            quantity: "supported probability underflow",
                            value: piece,
                        });
                    }
                    piece *= 0.5;
                }
            }
        }

        // renormalize, recording the drift
        let sum: f64 = p_next.iter().sum();
        let drift = (sum - 1.0).abs();
        meta.max_norm_drift = meta.max_norm_drift.max(drift);
        if drift > tol::TRACE_DRIFT {
            return Err(Error::InvariantBreach {
                t,
                sample: samples.len(),
                quantity: "normalization drift",
                value: drift,
                tolerance: tol::TRACE_DRIFT,
            });
        }
        for v in &mut p_next {
            *v /= sum;
        }
        pv = ProbabilityVector {
            p: p_next,
            delta: pv.delta,
            e: pv.e,
        };
        t = direction * (((step + 1) as f64) * cfg.dt).min(total);

        let entropy = pv.entropy(cfg.k);
        let signed = direction * (entropy - prev_entropy);
        meta.min_entropy_step = meta.min_entropy_step.min(signed);
        if signed < -tol::ENTROPY_STEP {
            return Err(Error::InvariantBreach {
                t,
                sample: samples.len(),
                quantity: "entropy decrease",
                value: signed,
                tolerance: tol::ENTROPY_STEP,
            });
        }
        prev_entropy = entropy;

        if (step + 1) % cfg.monitor_every == 0 || step + 1 == steps {
            record(&pv, t, &mut samples, &mut meta, &mut streak)?;
        }
    }
    Ok(GasTrajectory { samples, meta })
}

/// One fourth-order step; `None` when any supported probability leaves the
/// admissible range.
fn try_step(pv: &ProbabilityVector, dt: f64, tau: f64) -> Option<Vec<f64>> {
    let eval = |p: &[f64]| -> Vec<f64> {
        let tmp = ProbabilityVector {
            p: p.to_vec(),
            delta: pv.delta.clone(),
            e: pv.e.clone(),
        };
        prob_rates(&tmp, tau)
    };
    let add = |p: &[f64], k: &[f64], f: f64| -> Option<Vec<f64>> {
        let mut out = Vec::with_capacity(p.len());
        for i in 0..p.len() {
            let v = p[i] + f * k[i];
            if pv.delta[i] && (v < tol::GAS_PROBABILITY_FLOOR || !v.is_finite()) {
                return None;
            }
            out.push(v);
        }
        Some(out)
    };
    let p = pv.probabilities();
    let k1 = eval(p);
    let p2 = add(p, &k1, dt / 2.0)?;
    let k2 = eval(&p2);
    let p3 = add(p, &k2, dt / 2.0)?;
    let k3 = eval(&p3);
    let p4 = add(p, &k3, dt)?;
    let k4 = eval(&p4);
    let mut combo = vec![0.0; p.len()];
    for i in 0..p.len() {
        combo[i] = (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]) / 6.0;
    }
    add(p, &combo, dt)
}

/// Canonical `S(E)` and `T(E)` over an energy grid, with the concavity of the
/// curve checked by second differences.
pub fn fundamental_relation_scan(
    e: &[f64],
    grid: &[f64],
    k: f64,
) -> Result<Vec<(f64, f64, f64)>> {
    let mut out = Vec::with_capacity(grid.len());
    for &energy in grid {
        let eq = stable_equilibrium(energy, e, k)?;
        let s = canonical_entropy(e, energy, k)?;
        out.push((energy, s, eq.temperature));
    }
    // concavity audit on uniform grids
    if grid.len() >= 3 {
        let h = grid[1] - grid[0];
        let uniform = grid
            .windows(2)
            .all(|w| ((w[1] - w[0]) - h).abs() < 1e-9 * h.abs().max(1e-300));
        if uniform {
            for i in 1..grid.len() - 1 {
                let second = (out[i - 1].1 - 2.0 * out[i].1 + out[i + 1].1) / (h * h);
                if second > 1e-8 {
                    return Err(Error::Invalid(format!(
                        "canonical entropy curve convex at E = {}: d2S/dE2 = {second:.3e}",
                        grid[i]
                    )));
                }
            }
        }
    }
    Ok(out)
}
