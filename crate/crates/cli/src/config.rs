//! Scenario configuration: a single JSON document with a `mode`
//! discriminator. All physical quantities are in `hbar = k = 1` units unless
//! the `units` block overrides them.

use std::path::PathBuf;

use serde::Deserialize;

use seaqt::balance::{InteractionEntry, InteractionLedger, SourceKind, StateRecord};
use seaqt::criteria::BatteryConfig;
use seaqt::density::DensityOperator;
use seaqt::entropy::EntropyFunctional;
use seaqt::maxent::OptimizerConfig;
use seaqt::operator::HermitianOperator;
use seaqt::serial;
use seaqt::C64;

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawScenario {
    pub mode: Mode,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub units: Units,
    pub system: serde_json::Value,
    #[serde(default)]
    pub dynamics: DynamicsSection,
    #[serde(default)]
    pub output: OutputSection,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    Single,
    Gas,
    Composite,
    Criteria,
    Balance,
}

impl Mode {
    pub fn label(&self) -> &'static str {
        match self {
            Mode::Single => "single",
            Mode::Gas => "gas",
            Mode::Composite => "composite",
            Mode::Criteria => "criteria",
            Mode::Balance => "balance",
        }
    }
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Units {
    #[serde(default = "one")]
    pub hbar: f64,
    #[serde(default = "one")]
    pub k: f64,
}

fn one() -> f64 {
    1.0
}

impl Default for Units {
    fn default() -> Self {
        Self { hbar: 1.0, k: 1.0 }
    }
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DynamicsSection {
    #[serde(default = "one")]
    pub tau: f64,
    /// Defaults to `1e-3 * tau`.
    pub dt: Option<f64>,
    #[serde(default = "default_t_final")]
    pub t_final: f64,
    #[serde(default = "default_monitor")]
    pub monitor_every: usize,
}

fn default_t_final() -> f64 {
    10.0
}

fn default_monitor() -> usize {
    10
}

impl Default for DynamicsSection {
    fn default() -> Self {
        Self {
            tau: 1.0,
            dt: None,
            t_final: 10.0,
            monitor_every: 10,
        }
    }
}

impl DynamicsSection {
    pub fn step(&self) -> f64 {
        self.dt.unwrap_or(1e-3 * self.tau)
    }
}

#[derive(Debug, Clone, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    pub directory: Option<PathBuf>,
    #[serde(default)]
    pub format: Format,
    /// Emit a full-state snapshot every this many samples; 0 disables.
    #[serde(default)]
    pub snapshot_every: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Format {
    #[default]
    Csv,
    Json,
}

/// Operator input: a diagonal probability list, pure-state amplitudes, a full
/// complex matrix, or the embedded text serialization.
#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
pub enum OpSpec {
    Diagonal { diagonal: Vec<f64> },
    Pure { pure: Vec<NumPair> },
    Matrix { matrix: Vec<Vec<NumPair>> },
    Text { text: String },
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(untagged)]
pub enum NumPair {
    Real(f64),
    Pair([f64; 2]),
}

impl From<NumPair> for C64 {
    fn from(v: NumPair) -> Self {
        match v {
            NumPair::Real(re) => C64::new(re, 0.0),
            NumPair::Pair([re, im]) => C64::new(re, im),
        }
    }
}

impl OpSpec {
    pub fn to_hermitian(&self) -> Result<HermitianOperator, String> {
        match self {
            OpSpec::Diagonal { diagonal } => Ok(HermitianOperator::diagonal(diagonal)),
            OpSpec::Matrix { matrix } => {
                let rows: Vec<Vec<C64>> = matrix
                    .iter()
                    .map(|row| row.iter().map(|&v| C64::from(v)).collect())
                    .collect();
                HermitianOperator::from_rows(&rows).map_err(|e| e.to_string())
            }
            OpSpec::Text { text } => Ok(serial::parse_operator(text)
                .map_err(|e| e.to_string())?
                .into_hermitian()),
            OpSpec::Pure { .. } => Err("pure-state shorthand is only valid for states".into()),
        }
    }

    pub fn to_density(&self) -> Result<DensityOperator, String> {
        match self {
            OpSpec::Diagonal { diagonal } => {
                DensityOperator::from_probabilities(diagonal).map_err(|e| e.to_string())
            }
            OpSpec::Pure { pure } => {
                let amps: Vec<C64> = pure.iter().map(|&v| C64::from(v)).collect();
                DensityOperator::pure(&amps).map_err(|e| e.to_string())
            }
            OpSpec::Matrix { .. } | OpSpec::Text { .. } => {
                let op = self.to_hermitian()?;
                DensityOperator::from_operator(op).map_err(|e| e.to_string())
            }
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SingleSystem {
    pub hamiltonian: OpSpec,
    pub rho0: OpSpec,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GasSystem {
    pub levels: Vec<f64>,
    pub p0: Vec<f64>,
    /// Optional canonical-curve scan alongside the trajectory.
    pub fundamental_relation: Option<ScanSection>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScanSection {
    #[serde(default = "default_points")]
    pub points: usize,
    pub e_min: Option<f64>,
    pub e_max: Option<f64>,
}

fn default_points() -> usize {
    200
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CompositeSystem {
    pub h_a: OpSpec,
    pub h_b: OpSpec,
    pub v: Option<OpSpec>,
    pub rho0: OpSpec,
    #[serde(default = "one")]
    pub tau_a: f64,
    #[serde(default = "one")]
    pub tau_b: f64,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CriteriaSystem {
    pub functional: FunctionalSpec,
    #[serde(default)]
    pub battery: BatterySection,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FunctionalSpec {
    pub kind: String,
    pub alpha: Option<f64>,
}

impl FunctionalSpec {
    pub fn build(&self, k: f64) -> Result<EntropyFunctional, String> {
        match self.kind.as_str() {
            "von-neumann" => Ok(EntropyFunctional::von_neumann(k)),
            "hartley" => Ok(EntropyFunctional::hartley(k)),
            "infinite-norm" => Ok(EntropyFunctional::infinite_norm(k)),
            "daroczy" => {
                let alpha = self.alpha.ok_or("daroczy requires alpha")?;
                EntropyFunctional::daroczy(alpha, k).map_err(|e| e.to_string())
            }
            "renyi" => {
                let alpha = self.alpha.ok_or("renyi requires alpha")?;
                EntropyFunctional::renyi(alpha, k).map_err(|e| e.to_string())
            }
            other => Err(format!(
                "unknown functional '{other}' (expected von-neumann, daroczy, hartley, \
                 infinite-norm, or renyi)"
            )),
        }
    }
}

#[derive(Debug, Clone, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct BatterySection {
    pub dims: Option<Vec<usize>>,
    pub samples: Option<usize>,
    pub starts: Option<usize>,
    pub max_iters: Option<usize>,
    pub grid_points: Option<usize>,
}

impl BatterySection {
    pub fn build(&self, seed: u64, k: f64) -> BatteryConfig {
        let defaults = BatteryConfig::default();
        BatteryConfig {
            dims: self.dims.clone().unwrap_or(defaults.dims),
            seed,
            samples: self.samples.unwrap_or(defaults.samples),
            optimizer: OptimizerConfig {
                starts: self.starts.unwrap_or(defaults.optimizer.starts),
                max_iters: self.max_iters.unwrap_or(defaults.optimizer.max_iters),
                gradient_tol: defaults.optimizer.gradient_tol,
            },
            grid_points: self.grid_points.unwrap_or(defaults.grid_points),
            energy_fractions: defaults.energy_fractions,
            k,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BalanceSystem {
    pub processes: Vec<ProcessSpec>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProcessSpec {
    pub id: String,
    pub initial: RecordSpec,
    #[serde(rename = "final")]
    pub final_: RecordSpec,
    #[serde(default)]
    pub ledger: Vec<EntrySpec>,
    /// Sourcing system kind for the reservoir-extraction audit.
    pub source: Option<String>,
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RecordSpec {
    pub energy: f64,
    pub entropy: f64,
    pub psi: Option<f64>,
    pub omega: Option<f64>,
}

impl RecordSpec {
    pub fn build(&self) -> Result<StateRecord, String> {
        let mut r = StateRecord::new(self.energy, self.entropy).map_err(|e| e.to_string())?;
        if let (Some(psi), Some(omega)) = (self.psi, self.omega) {
            r = r.with_availability(psi, omega);
        }
        Ok(r)
    }
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EntrySpec {
    pub kind: EntryKind,
    pub amount: f64,
    pub reservoir_temperature: Option<f64>,
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EntryKind {
    Work,
    Heat,
}

impl ProcessSpec {
    pub fn build_ledger(&self) -> Result<InteractionLedger, String> {
        let entries: Vec<InteractionEntry> = self
            .ledger
            .iter()
            .map(|e| match e.kind {
                EntryKind::Work => InteractionEntry::work(e.amount),
                EntryKind::Heat => InteractionEntry {
                    kind: seaqt::balance::InteractionKind::Heat,
                    amount: e.amount,
                    reservoir_temperature: e.reservoir_temperature,
                },
            })
            .collect();
        InteractionLedger::new(entries).map_err(|e| e.to_string())
    }

    pub fn source_kind(&self) -> Result<Option<SourceKind>, String> {
        match self.source.as_deref() {
            None => Ok(None),
            Some("reservoir") => Ok(Some(SourceKind::Reservoir)),
            Some("stable-equilibrium") => Ok(Some(SourceKind::StableEquilibrium)),
            Some("non-equilibrium") => Ok(Some(SourceKind::NonEquilibrium)),
            Some(other) => Err(format!("unknown source kind '{other}'")),
        }
    }
}
