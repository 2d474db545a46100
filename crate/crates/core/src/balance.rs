//! Classical energy and entropy balance bookkeeping.
//!
//! Work carries only energy; heat carries energy plus the entropy `Q/T_R` of
//! the reservoir it crosses. Balances close a process against its interaction
//! ledger, adiabatic processes are classified through the availability
//! differences, and entropy values follow from energies and available
//! energies against a reservoir constant. Availability values are inputs
//! here, supplied by models or by the quantum modules.

use crate::error::{Error, Result};

/// End-state bookkeeping: energy, entropy, and (optionally) adiabatic
/// availability and reservoir-referenced available energy.
#[derive(Debug, Clone, Copy)]
pub struct StateRecord {
    pub energy: f64,
    pub entropy: f64,
    pub adiabatic_availability: Option<f64>,
    pub available_energy: Option<f64>,
}

impl StateRecord {
    pub fn new(energy: f64, entropy: f64) -> Result<Self> {
        if entropy < 0.0 {
            return Err(Error::Invalid(format!(
                "entropy must be nonnegative, got {entropy}"
            )));
        }
        Ok(Self {
            energy,
            entropy,
            adiabatic_availability: None,
            available_energy: None,
        })
    }

    pub fn with_availability(mut self, psi: f64, omega: f64) -> Self {
        self.adiabatic_availability = Some(psi);
        self.available_energy = Some(omega);
        self
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InteractionKind {
    /// Energy-only exchange; `amount` is positive when energy flows out.
    Work,
    /// Energy plus entropy exchange with a reservoir; `amount` is positive
    /// when energy flows in.
    Heat,
}

#[derive(Debug, Clone, Copy)]
pub struct InteractionEntry {
    pub kind: InteractionKind,
    pub amount: f64,
    /// Fixed reservoir temperature; required (nonzero) for heat.
    pub reservoir_temperature: Option<f64>,
}

impl InteractionEntry {
    pub fn work(amount_out: f64) -> Self {
        Self {
            kind: InteractionKind::Work,
            amount: amount_out,
            reservoir_temperature: None,
        }
    }

    pub fn heat(amount_in: f64, reservoir_temperature: f64) -> Self {
        Self {
            kind: InteractionKind::Heat,
            amount: amount_in,
            reservoir_temperature: Some(reservoir_temperature),
        }
    }
}

#[derive(Debug, Clone, Default)]
pub struct InteractionLedger {
    pub entries: Vec<InteractionEntry>,
}

impl InteractionLedger {
    pub fn new(entries: Vec<InteractionEntry>) -> Result<Self> {
        for (i, e) in entries.iter().enumerate() {
            if e.kind == InteractionKind::Heat {
                match e.reservoir_temperature {
                    Some(t) if t != 0.0 => {}
                    _ => {
                        return Err(Error::Invalid(format!(
                            "heat entry {i} lacks a nonzero reservoir temperature"
                        )))
                    }
                }
            }
        }
        Ok(Self { entries })
    }

    /// Net energy transferred into the system.
    pub fn net_energy_in(&self) -> f64 {
        self.entries
            .iter()
            .map(|e| match e.kind {
                InteractionKind::Work => -e.amount,
                InteractionKind::Heat => e.amount,
            })
            .sum()
    }

    /// Net entropy transferred into the system (heat only).
    pub fn net_entropy_in(&self) -> f64 {
        self.entries
            .iter()
            .filter(|e| e.kind == InteractionKind::Heat)
            .map(|e| e.amount / e.reservoir_temperature.expect("validated"))
            .sum()
    }

    pub fn concat(&self, other: &Self) -> Self {
        let mut entries = self.entries.clone();
        entries.extend(other.entries.iter().copied());
        Self { entries }
    }
}

/// Closure of the energy and entropy balances for one process.
#[derive(Debug, Clone, Copy)]
pub struct BalanceClosure {
    /// `(E2 - E1) - net energy in`; zero for a consistent ledger.
    pub energy_residual: f64,
    /// `(S2 - S1) - net entropy in`; the entropy generated inside the system.
    pub entropy_generated: f64,
    pub tolerance: f64,
    pub energy_balanced: bool,
    /// False when the extracted generation is negative beyond tolerance.
    pub second_law_ok: bool,
}

fn closure_tolerance(scale: f64) -> f64 {
    (1e-9f64).max(1e-9 * scale.abs())
}

/// Close the balances of a process against its ledger. Violations are
/// reported in the result, never thrown.
pub fn close_balance(
    initial: &StateRecord,
    final_: &StateRecord,
    ledger: &InteractionLedger,
) -> BalanceClosure {
    let energy_residual = (final_.energy - initial.energy) - ledger.net_energy_in();
    let entropy_generated = (final_.entropy - initial.entropy) - ledger.net_entropy_in();
    let scale = [
        initial.energy.abs(),
        final_.energy.abs(),
        initial.entropy.abs(),
        final_.entropy.abs(),
        ledger.net_energy_in().abs(),
    ]
    .into_iter()
    .fold(0.0, f64::max);
    let tolerance = closure_tolerance(scale);
    BalanceClosure {
        energy_residual,
        entropy_generated,
        tolerance,
        energy_balanced: energy_residual.abs() <= tolerance,
        second_law_ok: entropy_generated >= -tolerance,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AdiabaticClass {
    Reversible,
    Irreversible,
    Infeasible,
}

/// Classify an adiabatic process through the energy and availability
/// differences: equality of all three marks a reversible process, a strict
/// energy excess over both availability drops marks an irreversible one, and
/// anything else is not realizable adiabatically.
pub fn classify_adiabatic(initial: &StateRecord, final_: &StateRecord) -> Result<AdiabaticClass> {
    let (psi1, omega1) = availability(initial)?;
    let (psi2, omega2) = availability(final_)?;
    let de = final_.energy - initial.energy;
    let dpsi = psi2 - psi1;
    let domega = omega2 - omega1;
    let scale = [de.abs(), dpsi.abs(), domega.abs()]
        .into_iter()
        .fold(0.0, f64::max);
    let tolerance = closure_tolerance(scale);
    if (de - dpsi).abs() <= tolerance && (de - domega).abs() <= tolerance {
        return Ok(AdiabaticClass::Reversible);
    }
    if de > dpsi + tolerance && de > domega + tolerance {
        return Ok(AdiabaticClass::Irreversible);
    }
    Ok(AdiabaticClass::Infeasible)
}

fn availability(record: &StateRecord) -> Result<(f64, f64)> {
    match (record.adiabatic_availability, record.available_energy) {
        (Some(p), Some(o)) => Ok((p, o)),
        _ => Err(Error::Invalid(
            "adiabatic classification needs both availability fields".into(),
        )),
    }
}

/// Positive reservoir constant; the triple-point reference by default.
#[derive(Debug, Clone, Copy)]
pub struct ReservoirConstant {
    pub c_r: f64,
}

impl ReservoirConstant {
    pub fn new(c_r: f64) -> Result<Self> {
        if !(c_r > 0.0) {
            return Err(Error::Invalid(format!(
                "reservoir constant must be positive, got {c_r}"
            )));
        }
        Ok(Self { c_r })
    }

    pub fn triple_point() -> Self {
        Self { c_r: 273.16 }
    }
}

/// Entropy of a target state from its energy and available energy relative to
/// a reference record:
/// `S1 = S0 + [(E1 - E0) - (Omega1 - Omega0)] / c_R`.
pub fn entropy_from_available_energy(
    reference: &StateRecord,
    target_energy: f64,
    target_available_energy: f64,
    c: &ReservoirConstant,
) -> f64 {
    let omega0 = reference.available_energy.unwrap_or(0.0);
    reference.entropy
        + ((target_energy - reference.energy) - (target_available_energy - omega0)) / c.c_r
}

/// Kind of system a ledger draws on.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SourceKind {
    /// Always in stable equilibrium at a fixed temperature.
    Reservoir,
    StableEquilibrium,
    /// Any source not in stable equilibrium; work extraction is admissible.
    NonEquilibrium,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReservoirVerdict {
    Consistent,
    /// Work-only energy extraction from a reservoir: the perpetual-motion
    /// pattern of the second kind. Carries the offending entry index.
    PerpetualMotionSecondKind { entry: usize },
}

/// Flag ledgers that book energy out of a reservoir without the mandatory
/// entropy transfer. Heat entries are always consistent (they carry `Q/T_R`);
/// work-only extraction is flagged only when the source is a reservoir.
pub fn work_from_reservoir_check(
    ledger: &InteractionLedger,
    source: SourceKind,
) -> ReservoirVerdict {
    if source != SourceKind::Reservoir {
        return ReservoirVerdict::Consistent;
    }
    for (i, e) in ledger.entries.iter().enumerate() {
        if e.kind == InteractionKind::Work && e.amount < 0.0 {
            return ReservoirVerdict::PerpetualMotionSecondKind { entry: i };
        }
    }
    ReservoirVerdict::Consistent
}
