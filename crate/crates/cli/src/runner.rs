//! Scenario execution: validation, dispatch to the engines, and artifact
//! output.

use std::fs;
use std::path::{Path, PathBuf};

use serde_json::json;

use seaqt::balance::{close_balance, work_from_reservoir_check, ReservoirVerdict};
use seaqt::composite::{
    integrate_composite, perceived_operators, subsystem_dissipative_term, CompositeRunConfig,
    Subsystem,
};
use seaqt::criteria::{criteria_report, CriteriaReport, Verdict};
use seaqt::density::DensityOperator;
use seaqt::dynamics::{dissipative_term, integrate, DynamicsConfig, Trajectory, TrajectoryMeta};
use seaqt::gas::{fundamental_relation_scan, integrate_gas, GasRunConfig, ProbabilityVector};
use seaqt::operator::HermitianOperator;
use seaqt::serial::{self, fmt_f64};

use crate::config::{Format, GasSystem, Mode, RawScenario, SingleSystem};

/// Configuration problems exit with 1, run-time invariant or numerical
/// failures with 2.
#[derive(Debug)]
pub enum CliError {
    Config(String),
    Breach(String),
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Config(m) => write!(f, "configuration error: {m}"),
            CliError::Breach(m) => write!(f, "invariant breach: {m}"),
        }
    }
}

pub type CliResult<T> = Result<T, CliError>;

fn config_err<E: std::fmt::Display>(e: E) -> CliError {
    CliError::Config(e.to_string())
}

fn io_err(context: &str, e: std::io::Error) -> CliError {
    CliError::Config(format!("{context}: {e}"))
}

/// Structural plus physical validation; the report lists every violation
/// found rather than stopping at the first.
pub fn validate_file(path: &Path) -> CliResult<Vec<String>> {
    let text = fs::read_to_string(path)
        .map_err(|e| io_err(&format!("cannot read {}", path.display()), e))?;
    let raw: RawScenario = match serde_json::from_str(&text) {
        Ok(raw) => raw,
        Err(e) => return Ok(vec![format!("structural: {e}")]),
    };
    Ok(validate_scenario(&raw))
}

fn validate_scenario(raw: &RawScenario) -> Vec<String> {
    let mut violations = Vec::new();
    if !(raw.units.hbar > 0.0) || !(raw.units.k > 0.0) {
        violations.push("units: hbar and k must be positive".into());
    }
    if !(raw.dynamics.tau > 0.0) {
        violations.push(format!("dynamics: tau must be positive, got {}", raw.dynamics.tau));
    }
    if !(raw.dynamics.step() > 0.0) {
        violations.push(format!("dynamics: dt must be positive, got {}", raw.dynamics.step()));
    }
    if raw.dynamics.monitor_every == 0 {
        violations.push("dynamics: monitor_every must be at least 1".into());
    }

    match raw.mode {
        Mode::Single => match serde_json::from_value::<SingleSystem>(raw.system.clone()) {
            Err(e) => violations.push(format!("system: {e}")),
            Ok(sys) => {
                let h = match sys.hamiltonian.to_hermitian() {
                    Ok(h) => Some(h),
                    Err(e) => {
                        violations.push(format!("hamiltonian: {e}"));
                        None
                    }
                };
                match sys.rho0.to_density() {
                    Err(e) => violations.push(format!("rho0: {e}")),
                    Ok(rho) => {
                        if let Some(h) = &h {
                            if h.dim() != rho.dim() {
                                violations.push(format!(
                                    "dimension mismatch: hamiltonian is {}, rho0 is {}",
                                    h.dim(),
                                    rho.dim()
                                ));
                            }
                        }
                    }
                }
            }
        },
        Mode::Gas => match serde_json::from_value::<GasSystem>(raw.system.clone()) {
            Err(e) => violations.push(format!("system: {e}")),
            Ok(sys) => {
                if sys.levels.len() != sys.p0.len() {
                    violations.push(format!(
                        "levels ({}) and p0 ({}) lengths differ",
                        sys.levels.len(),
                        sys.p0.len()
                    ));
                } else if let Err(e) =
                    ProbabilityVector::new(sys.p0.clone(), sys.levels.clone())
                {
                    violations.push(format!("p0: {e}"));
                }
                if let Some(scan) = &sys.fundamental_relation {
                    let lo = sys.levels.iter().cloned().fold(f64::INFINITY, f64::min);
                    let hi = sys.levels.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
                    if scan.points < 3 {
                        violations.push("fundamental_relation: needs at least 3 points".into());
                    }
                    for (label, bound) in [("e_min", scan.e_min), ("e_max", scan.e_max)] {
                        if let Some(v) = bound {
                            if !(v > lo && v < hi) {
                                violations.push(format!(
                                    "fundamental_relation: infeasible energy {label} = {v} \
                                     outside the open interval ({lo}, {hi})"
                                ));
                            }
                        }
                    }
                }
            }
        },
        Mode::Composite => {
            match serde_json::from_value::<crate::config::CompositeSystem>(raw.system.clone()) {
                Err(e) => violations.push(format!("system: {e}")),
                Ok(sys) => {
                    if !(sys.tau_a > 0.0 && sys.tau_b > 0.0) {
                        violations.push("tau_a and tau_b must be positive".into());
                    }
                    let h_a = sys.h_a.to_hermitian();
                    let h_b = sys.h_b.to_hermitian();
                    if let Err(e) = &h_a {
                        violations.push(format!("h_a: {e}"));
                    }
                    if let Err(e) = &h_b {
                        violations.push(format!("h_b: {e}"));
                    }
                    if let (Ok(ha), Ok(hb)) = (&h_a, &h_b) {
                        let dim = ha.dim() * hb.dim();
                        if let Some(vspec) = &sys.v {
                            match vspec.to_hermitian() {
                                Err(e) => violations.push(format!("v: {e}")),
                                Ok(v) if v.dim() != dim => violations.push(format!(
                                    "interaction dimension {} does not match the product space {}",
                                    v.dim(),
                                    dim
                                )),
                                _ => {}
                            }
                        }
                        match sys.rho0.to_density() {
                            Err(e) => violations.push(format!("rho0: {e}")),
                            Ok(rho) if rho.dim() != dim => violations.push(format!(
                                "rho0 dimension {} does not match the product space {}",
                                rho.dim(),
                                dim
                            )),
                            _ => {}
                        }
                    }
                }
            }
        }
        Mode::Criteria => {
            match serde_json::from_value::<crate::config::CriteriaSystem>(raw.system.clone()) {
                Err(e) => violations.push(format!("system: {e}")),
                Ok(sys) => {
                    if let Err(e) = sys.functional.build(raw.units.k) {
                        violations.push(format!("functional: {e}"));
                    }
                    if let Some(dims) = &sys.battery.dims {
                        if dims.is_empty() || dims.iter().any(|&d| d < 2) {
                            violations.push("battery dims must all be at least 2".into());
                        }
                    }
                }
            }
        }
        Mode::Balance => {
            match serde_json::from_value::<crate::config::BalanceSystem>(raw.system.clone()) {
                Err(e) => violations.push(format!("system: {e}")),
                Ok(sys) => {
                    if sys.processes.is_empty() {
                        violations.push("balance: needs at least one process".into());
                    }
                    for p in &sys.processes {
                        if let Err(e) = p.initial.build() {
                            violations.push(format!("process '{}' initial: {e}", p.id));
                        }
                        if let Err(e) = p.final_.build() {
                            violations.push(format!("process '{}' final: {e}", p.id));
                        }
                        if let Err(e) = p.build_ledger() {
                            violations.push(format!("process '{}' ledger: {e}", p.id));
                        }
                        if let Err(e) = p.source_kind() {
                            violations.push(format!("process '{}': {e}", p.id));
                        }
                    }
                }
            }
        }
    }
    violations
}

pub struct RunArgs {
    pub file: PathBuf,
    pub output_dir: Option<PathBuf>,
    pub format: Option<Format>,
    pub sweep: Option<String>,
}

pub fn run_file(args: &RunArgs) -> CliResult<()> {
    let text = fs::read_to_string(&args.file)
        .map_err(|e| io_err(&format!("cannot read {}", args.file.display()), e))?;
    let value: serde_json::Value = serde_json::from_str(&text).map_err(config_err)?;

    match &args.sweep {
        None => run_value(value, args, None),
        Some(spec) => run_sweep(value, args, spec),
    }
}

/// `--sweep key=v1,v2,...` fans out independent variants of one numeric
/// field to a worker pool with isolated output directories.
fn run_sweep(base: serde_json::Value, args: &RunArgs, spec: &str) -> CliResult<()> {
    let (key, values) = spec
        .split_once('=')
        .ok_or_else(|| CliError::Config(format!("sweep spec '{spec}' must be key=v1,v2,...")))?;
    let pointer = format!("/{}", key.replace('.', "/"));
    if base.pointer(&pointer).is_none() {
        return Err(CliError::Config(format!(
            "sweep key '{key}' not present in the scenario"
        )));
    }
    let values: Vec<f64> = values
        .split(',')
        .map(|v| {
            v.trim()
                .parse::<f64>()
                .map_err(|_| CliError::Config(format!("sweep value '{v}' is not a number")))
        })
        .collect::<CliResult<Vec<f64>>>()?;
    if values.is_empty() {
        return Err(CliError::Config("sweep needs at least one value".into()));
    }

    use rayon::prelude::*;
    let results: Vec<CliResult<()>> = values
        .par_iter()
        .map(|&v| {
            let mut variant = base.clone();
            *variant.pointer_mut(&pointer).expect("checked above") = json!(v);
            let sub = format!("sweep_{}_{v}", key.replace('.', "-"));
            let out = output_root(&variant, args).join(sub);
            let sub_args = RunArgs {
                file: args.file.clone(),
                output_dir: Some(out),
                format: args.format,
                sweep: None,
            };
            run_value(variant, &sub_args, Some(v))
        })
        .collect();

    let mut breach = None;
    for r in results {
        match r {
            Ok(()) => {}
            Err(CliError::Config(m)) => return Err(CliError::Config(m)),
            Err(CliError::Breach(m)) => breach = Some(m),
        }
    }
    match breach {
        Some(m) => Err(CliError::Breach(m)),
        None => Ok(()),
    }
}

fn output_root(value: &serde_json::Value, args: &RunArgs) -> PathBuf {
    if let Some(dir) = &args.output_dir {
        return dir.clone();
    }
    if let Some(dir) = value
        .pointer("/output/directory")
        .and_then(|v| v.as_str())
    {
        return PathBuf::from(dir);
    }
    PathBuf::from("seaqt_out")
}

fn run_value(
    value: serde_json::Value,
    args: &RunArgs,
    _sweep_value: Option<f64>,
) -> CliResult<()> {
    let raw: RawScenario = serde_json::from_value(value.clone()).map_err(config_err)?;
    let violations = validate_scenario(&raw);
    if !violations.is_empty() {
        return Err(CliError::Config(violations.join("; ")));
    }
    let outdir = output_root(&value, args);
    fs::create_dir_all(&outdir).map_err(|e| io_err("cannot create output directory", e))?;
    let format = args.format.unwrap_or(raw.output.format);

    match raw.mode {
        Mode::Single => run_single(&raw, &outdir, format),
        Mode::Gas => run_gas(&raw, &outdir, format),
        Mode::Composite => run_composite(&raw, &outdir, format),
        Mode::Criteria => run_criteria(&raw, &outdir),
        Mode::Balance => run_balance(&raw, &outdir, format),
    }
}

fn write(path: &Path, contents: &str) -> CliResult<()> {
    fs::write(path, contents).map_err(|e| io_err(&format!("cannot write {}", path.display()), e))
}

fn write_json(path: &Path, value: &serde_json::Value) -> CliResult<()> {
    let mut text = serde_json::to_string_pretty(value).map_err(config_err)?;
    text.push('\n');
    write(path, &text)
}

fn breach_err(e: seaqt::Error) -> CliError {
    CliError::Breach(e.to_string())
}

// ---------------------------------------------------------------------------
// single constituent
// ---------------------------------------------------------------------------

struct DissipatorAudit {
    trace_max: f64,
    energy_overlap_max: f64,
    entropy_overlap_min: f64,
}

fn audit_single(traj: &Trajectory, h: &HermitianOperator) -> CliResult<DissipatorAudit> {
    let mut audit = DissipatorAudit {
        trace_max: 0.0,
        energy_overlap_max: 0.0,
        entropy_overlap_min: f64::INFINITY,
    };
    for s in &traj.samples {
        let delta = dissipative_term(&s.rho, h).map_err(breach_err)?;
        audit.trace_max = audit.trace_max.max(delta.trace().abs());
        audit.energy_overlap_max = audit
            .energy_overlap_max
            .max(delta.trace_product(h).map_err(breach_err)?.abs());
        audit.entropy_overlap_min = audit
            .entropy_overlap_min
            .min(delta.trace_product(&s.rho.entropy_operator()).map_err(breach_err)?);
    }
    Ok(audit)
}

fn invariant_report(
    meta: &TrajectoryMeta,
    audit: &DissipatorAudit,
    h_norm: f64,
) -> (serde_json::Value, bool) {
    let energy_tol = 1e-8 * (1.0 + meta.initial_energy.abs());
    let green = meta.max_trace_drift <= 1e-9
        && meta.max_energy_drift <= energy_tol
        && meta.min_entropy_step >= -1e-9
        && audit.trace_max <= 1e-10
        && audit.energy_overlap_max <= 1e-10 * (1.0 + h_norm)
        && audit.entropy_overlap_min >= -1e-10;
    let report = json!({
        "support_dim": meta.support_dim,
        "support_dim_constant": true,
        "max_trace_drift": meta.max_trace_drift,
        "trace_drift_tolerance": 1e-9,
        "max_energy_drift": meta.max_energy_drift,
        "energy_drift_tolerance": energy_tol,
        "min_entropy_step": meta.min_entropy_step,
        "entropy_step_tolerance": -1e-9,
        "max_kernel_rate": meta.max_kernel_rate,
        "clamped_eigenvalues": meta.clamped_eigenvalues,
        "dissipator_trace_max": audit.trace_max,
        "dissipator_energy_overlap_max": audit.energy_overlap_max,
        "dissipator_entropy_overlap_min": audit.entropy_overlap_min,
        "all_green": green,
    });
    (report, green)
}

fn write_snapshots(
    outdir: &Path,
    every: usize,
    samples: impl Iterator<Item = (usize, DensityOperator)>,
) -> CliResult<()> {
    if every == 0 {
        return Ok(());
    }
    let dir = outdir.join("snapshots");
    fs::create_dir_all(&dir).map_err(|e| io_err("cannot create snapshot directory", e))?;
    for (index, rho) in samples {
        if index % every == 0 {
            let path = dir.join(format!("sample_{index:06}.txt"));
            write(&path, &serial::write_density(&rho))?;
        }
    }
    Ok(())
}

fn run_single(raw: &RawScenario, outdir: &Path, format: Format) -> CliResult<()> {
    let sys: SingleSystem = serde_json::from_value(raw.system.clone()).map_err(config_err)?;
    let h = sys.hamiltonian.to_hermitian().map_err(CliError::Config)?;
    let rho0 = sys.rho0.to_density().map_err(CliError::Config)?;
    let cfg = DynamicsConfig {
        hamiltonian: h.clone(),
        tau: raw.dynamics.tau,
        hbar: raw.units.hbar,
        k: raw.units.k,
        dt: raw.dynamics.step(),
        t_final: raw.dynamics.t_final,
        monitor_every: raw.dynamics.monitor_every,
    };
    let traj = integrate(&rho0, &cfg).map_err(breach_err)?;

    match format {
        Format::Csv => {
            let mut out = String::from("t,E,S,trace_drift,min_eig,support_dim,dSdt,D_norm\n");
            for s in &traj.samples {
                out.push_str(&format!(
                    "{},{},{},{},{},{},{},{}\n",
                    fmt_f64(s.t),
                    fmt_f64(s.energy),
                    fmt_f64(s.entropy),
                    fmt_f64(s.trace_drift),
                    fmt_f64(s.min_eigenvalue),
                    s.support_dim,
                    fmt_f64(s.ds_dt),
                    fmt_f64(s.dissipator_norm),
                ));
            }
            write(&outdir.join("trajectory.csv"), &out)?;
        }
        Format::Json => {
            let samples: Vec<serde_json::Value> = traj
                .samples
                .iter()
                .map(|s| {
                    json!({
                        "t": s.t, "E": s.energy, "S": s.entropy,
                        "trace_drift": s.trace_drift, "min_eig": s.min_eigenvalue,
                        "support_dim": s.support_dim, "dSdt": s.ds_dt,
                        "D_norm": s.dissipator_norm,
                    })
                })
                .collect();
            write_json(&outdir.join("trajectory.json"), &json!({ "samples": samples }))?;
        }
    }

    write_snapshots(
        outdir,
        raw.output.snapshot_every,
        traj.samples.iter().enumerate().map(|(i, s)| (i, s.rho.clone())),
    )?;

    let audit = audit_single(&traj, &h)?;
    let (report, green) = invariant_report(&traj.meta, &audit, h.frobenius_norm());
    write_json(&outdir.join("invariants.json"), &report)?;

    let last = traj.samples.last().expect("nonempty");
    let summary = json!({
        "mode": "single",
        "seed": raw.seed,
        "samples": traj.samples.len(),
        "steps": traj.meta.steps,
        "final_t": last.t,
        "final_energy": last.energy,
        "final_entropy": last.entropy,
        "final_state": serial::write_density(&last.rho),
        "support_dim": traj.meta.support_dim,
        "converged_at": traj.meta.converged_at,
        "equilibrium_residual": traj.meta.final_residual,
        "invariants_green": green,
    });
    write_json(&outdir.join("summary.json"), &summary)?;

    println!(
        "single: {} samples to t = {}, S = {:.6}, residual {:.3e}{}",
        traj.samples.len(),
        last.t,
        last.entropy,
        traj.meta.final_residual,
        if green { "" } else { " [INVARIANT BREACH]" }
    );
    if !green {
        return Err(CliError::Breach(
            "run completed but the invariant report is not green (see invariants.json)".into(),
        ));
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// gas
// ---------------------------------------------------------------------------

fn run_gas(raw: &RawScenario, outdir: &Path, format: Format) -> CliResult<()> {
    let sys: GasSystem = serde_json::from_value(raw.system.clone()).map_err(config_err)?;
    let pv = ProbabilityVector::new(sys.p0.clone(), sys.levels.clone())
        .map_err(|e| CliError::Config(e.to_string()))?;
    let cfg = GasRunConfig {
        tau: raw.dynamics.tau,
        dt: raw.dynamics.step(),
        t_final: raw.dynamics.t_final,
        k: raw.units.k,
        monitor_every: raw.dynamics.monitor_every,
    };
    let traj = integrate_gas(&pv, &cfg).map_err(breach_err)?;
    let n = sys.levels.len();

    match format {
        Format::Csv => {
            let mut header = String::from("t");
            for i in 1..=n {
                header.push_str(&format!(",p_{i}"));
            }
            header.push_str(",E,S,dSdt\n");
            let mut out = header;
            for s in &traj.samples {
                out.push_str(&fmt_f64(s.t));
                for &p in &s.p {
                    out.push(',');
                    out.push_str(&fmt_f64(p));
                }
                out.push_str(&format!(
                    ",{},{},{}\n",
                    fmt_f64(s.energy),
                    fmt_f64(s.entropy),
                    fmt_f64(s.ds_dt)
                ));
            }
            write(&outdir.join("trajectory.csv"), &out)?;
        }
        Format::Json => {
            let samples: Vec<serde_json::Value> = traj
                .samples
                .iter()
                .map(|s| json!({"t": s.t, "p": s.p, "E": s.energy, "S": s.entropy, "dSdt": s.ds_dt}))
                .collect();
            write_json(&outdir.join("trajectory.json"), &json!({ "samples": samples }))?;
        }
    }

    if let Some(scan) = &sys.fundamental_relation {
        let lo = sys.levels.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = sys.levels.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let margin = 0.05 * (hi - lo);
        let a = scan.e_min.unwrap_or(lo + margin);
        let b = scan.e_max.unwrap_or(hi - margin);
        let grid: Vec<f64> = (0..scan.points)
            .map(|i| a + (b - a) * i as f64 / (scan.points - 1) as f64)
            .collect();
        let rows =
            fundamental_relation_scan(&sys.levels, &grid, raw.units.k).map_err(breach_err)?;
        match format {
            Format::Csv => {
                let mut out = String::from("E,S,T\n");
                for (e, s, t) in &rows {
                    out.push_str(&format!("{},{},{}\n", fmt_f64(*e), fmt_f64(*s), fmt_f64(*t)));
                }
                write(&outdir.join("fundamental.csv"), &out)?;
            }
            Format::Json => {
                let rows: Vec<serde_json::Value> = rows
                    .iter()
                    .map(|(e, s, t)| json!({"E": e, "S": s, "T": t}))
                    .collect();
                write_json(&outdir.join("fundamental.json"), &json!({ "rows": rows }))?;
            }
        }
    }

    let energy_tol = 1e-9 * (1.0 + traj.samples[0].energy.abs());
    let green = traj.meta.max_energy_drift <= energy_tol
        && traj.meta.max_norm_drift <= 1e-9
        && traj.meta.min_entropy_step >= -1e-9;
    write_json(
        &outdir.join("invariants.json"),
        &json!({
            "max_energy_drift": traj.meta.max_energy_drift,
            "energy_drift_tolerance": energy_tol,
            "max_norm_drift": traj.meta.max_norm_drift,
            "min_entropy_step": traj.meta.min_entropy_step,
            "support_mask_constant": true,
            "all_green": green,
        }),
    )?;

    let last = traj.samples.last().expect("nonempty");
    write_json(
        &outdir.join("summary.json"),
        &json!({
            "mode": "gas",
            "seed": raw.seed,
            "samples": traj.samples.len(),
            "final_t": last.t,
            "final_p": last.p,
            "final_energy": last.energy,
            "final_entropy": last.entropy,
            "converged_at": traj.meta.converged_at,
            "rate_norm": traj.meta.final_rate_norm,
            "invariants_green": green,
        }),
    )?;
    println!(
        "gas: {} samples to t = {}, S = {:.6}, rate norm {:.3e}{}",
        traj.samples.len(),
        last.t,
        last.entropy,
        traj.meta.final_rate_norm,
        if green { "" } else { " [INVARIANT BREACH]" }
    );
    if !green {
        return Err(CliError::Breach(
            "gas run completed but the invariant report is not green".into(),
        ));
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// composite
// ---------------------------------------------------------------------------

fn run_composite(raw: &RawScenario, outdir: &Path, format: Format) -> CliResult<()> {
    let spec: crate::config::CompositeSystem =
        serde_json::from_value(raw.system.clone()).map_err(config_err)?;
    let h_a = spec.h_a.to_hermitian().map_err(CliError::Config)?;
    let h_b = spec.h_b.to_hermitian().map_err(CliError::Config)?;
    let mut sys = seaqt::composite::CompositeSystem::noninteracting(h_a, h_b);
    if let Some(vspec) = &spec.v {
        let v = vspec.to_hermitian().map_err(CliError::Config)?;
        sys = sys.with_interaction(v).map_err(|e| CliError::Config(e.to_string()))?;
    }
    sys.tau_a = spec.tau_a;
    sys.tau_b = spec.tau_b;
    sys.hbar = raw.units.hbar;
    sys.k = raw.units.k;
    let rho0 = spec.rho0.to_density().map_err(CliError::Config)?;

    let run = CompositeRunConfig {
        dt: raw.dynamics.step(),
        t_final: raw.dynamics.t_final,
        monitor_every: raw.dynamics.monitor_every,
    };
    let traj = integrate_composite(&rho0, &sys, &run).map_err(breach_err)?;

    match format {
        Format::Csv => {
            let mut out = String::from(
                "t,E,S,trace_drift,min_eig,support_dim,dSdt,D_norm,\
                 E_A_local,E_B_local,S_A_perceived,S_B_perceived,mutual_entropy\n",
            );
            for s in &traj.samples {
                out.push_str(&format!(
                    "{},{},{},{},{},{},{},{},{},{},{},{},{}\n",
                    fmt_f64(s.base.t),
                    fmt_f64(s.base.energy),
                    fmt_f64(s.base.entropy),
                    fmt_f64(s.base.trace_drift),
                    fmt_f64(s.base.min_eigenvalue),
                    s.base.support_dim,
                    fmt_f64(s.base.ds_dt),
                    fmt_f64(s.base.dissipator_norm),
                    fmt_f64(s.local_energy_a),
                    fmt_f64(s.local_energy_b),
                    fmt_f64(s.perceived_entropy_a),
                    fmt_f64(s.perceived_entropy_b),
                    fmt_f64(s.mutual_entropy),
                ));
            }
            write(&outdir.join("trajectory.csv"), &out)?;
        }
        Format::Json => {
            let samples: Vec<serde_json::Value> = traj
                .samples
                .iter()
                .map(|s| {
                    json!({
                        "t": s.base.t, "E": s.base.energy, "S": s.base.entropy,
                        "trace_drift": s.base.trace_drift, "min_eig": s.base.min_eigenvalue,
                        "support_dim": s.base.support_dim, "dSdt": s.base.ds_dt,
                        "D_norm": s.base.dissipator_norm,
                        "E_A_local": s.local_energy_a, "E_B_local": s.local_energy_b,
                        "S_A_perceived": s.perceived_entropy_a,
                        "S_B_perceived": s.perceived_entropy_b,
                        "mutual_entropy": s.mutual_entropy,
                    })
                })
                .collect();
            write_json(&outdir.join("trajectory.json"), &json!({ "samples": samples }))?;
        }
    }

    write_snapshots(
        outdir,
        raw.output.snapshot_every,
        traj.samples.iter().enumerate().map(|(i, s)| (i, s.base.rho.clone())),
    )?;

    // local trace identities audited over the recorded samples
    let mut local_trace_max = 0.0f64;
    let mut local_energy_max = 0.0f64;
    let mut local_entropy_min = f64::INFINITY;
    for s in &traj.samples {
        let perc = perceived_operators(&s.base.rho, &sys).map_err(breach_err)?;
        for (j, h_perc, s_perc) in [
            (Subsystem::A, &perc.h_a, &perc.s_a),
            (Subsystem::B, &perc.h_b, &perc.s_b),
        ] {
            let d = subsystem_dissipative_term(&s.base.rho, &sys, j).map_err(breach_err)?;
            local_trace_max = local_trace_max.max(d.trace().abs());
            local_energy_max = local_energy_max
                .max(d.trace_product(h_perc).map_err(breach_err)?.abs());
            local_entropy_min = local_entropy_min
                .min(d.trace_product(s_perc).map_err(breach_err)?);
        }
    }
    let energy_tol = 1e-8 * (1.0 + traj.meta.initial_energy.abs());
    let green = traj.meta.max_trace_drift <= 1e-9
        && traj.meta.max_energy_drift <= energy_tol
        && traj.meta.min_entropy_step >= -1e-9
        && local_trace_max <= 1e-10
        && local_entropy_min >= -1e-10;
    write_json(
        &outdir.join("invariants.json"),
        &json!({
            "support_dim": traj.meta.support_dim,
            "support_dim_constant": true,
            "max_trace_drift": traj.meta.max_trace_drift,
            "max_energy_drift": traj.meta.max_energy_drift,
            "energy_drift_tolerance": energy_tol,
            "min_entropy_step": traj.meta.min_entropy_step,
            "max_kernel_rate": traj.meta.max_kernel_rate,
            "local_dissipator_trace_max": local_trace_max,
            "local_energy_overlap_max": local_energy_max,
            "local_entropy_overlap_min": local_entropy_min,
            "all_green": green,
        }),
    )?;

    let last = traj.samples.last().expect("nonempty");
    write_json(
        &outdir.join("summary.json"),
        &json!({
            "mode": "composite",
            "seed": raw.seed,
            "samples": traj.samples.len(),
            "final_t": last.base.t,
            "final_energy": last.base.energy,
            "final_entropy": last.base.entropy,
            "final_state": serial::write_density(&last.base.rho),
            "final_mutual_entropy": last.mutual_entropy,
            "support_dim": traj.meta.support_dim,
            "converged_at": traj.meta.converged_at,
            "equilibrium_residual": traj.meta.final_residual,
            "invariants_green": green,
        }),
    )?;
    println!(
        "composite: {} samples to t = {}, S = {:.6}, mutual {:.6}{}",
        traj.samples.len(),
        last.base.t,
        last.base.entropy,
        last.mutual_entropy,
        if green { "" } else { " [INVARIANT BREACH]" }
    );
    if !green {
        return Err(CliError::Breach(
            "composite run completed but the invariant report is not green".into(),
        ));
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// criteria
// ---------------------------------------------------------------------------

fn verdict_label(v: Verdict) -> &'static str {
    match v {
        Verdict::Pass => "pass",
        Verdict::Fail => "fail",
        Verdict::NotTestable => "not-testable",
    }
}

fn report_to_json(report: &CriteriaReport) -> serde_json::Value {
    let criteria: Vec<serde_json::Value> = report
        .results
        .iter()
        .map(|r| {
            let witness = r.witness.as_ref().map(|w| {
                json!({
                    "description": w.description,
                    "operators": w.operators.iter().map(|(label, text)| {
                        json!({"label": label, "text": text})
                    }).collect::<Vec<_>>(),
                    "values": w.values.iter().map(|(name, value)| {
                        json!({"name": name, "value": value})
                    }).collect::<Vec<_>>(),
                })
            });
            json!({
                "index": r.index,
                "name": r.name,
                "verdict": verdict_label(r.verdict),
                "detail": r.detail,
                "witness": witness,
            })
        })
        .collect();
    json!({
        "functional": report.functional.label(),
        "passes_all_testable": report.passes_all_testable(),
        "failed_criteria": report.failed_criteria(),
        "criteria": criteria,
    })
}

fn run_criteria(raw: &RawScenario, outdir: &Path) -> CliResult<()> {
    let sys: crate::config::CriteriaSystem =
        serde_json::from_value(raw.system.clone()).map_err(config_err)?;
    let functional = sys.functional.build(raw.units.k).map_err(CliError::Config)?;
    let battery = sys.battery.build(raw.seed, raw.units.k);
    let report = criteria_report(&functional, &battery).map_err(breach_err)?;

    write_json(&outdir.join("criteria_report.json"), &report_to_json(&report))?;
    write_json(
        &outdir.join("summary.json"),
        &json!({
            "mode": "criteria",
            "seed": raw.seed,
            "functional": report.functional.label(),
            "passes_all_testable": report.passes_all_testable(),
            "failed_criteria": report.failed_criteria(),
        }),
    )?;
    println!(
        "criteria: {} -> {}",
        report.functional.label(),
        if report.passes_all_testable() {
            "passes all testable criteria".to_string()
        } else {
            format!("fails criteria {:?}", report.failed_criteria())
        }
    );
    Ok(())
}

// ---------------------------------------------------------------------------
// balance
// ---------------------------------------------------------------------------

fn run_balance(raw: &RawScenario, outdir: &Path, format: Format) -> CliResult<()> {
    let sys: crate::config::BalanceSystem =
        serde_json::from_value(raw.system.clone()).map_err(config_err)?;
    let mut rows = Vec::new();
    for p in &sys.processes {
        let initial = p.initial.build().map_err(CliError::Config)?;
        let final_ = p.final_.build().map_err(CliError::Config)?;
        let ledger = p.build_ledger().map_err(CliError::Config)?;
        let closure = close_balance(&initial, &final_, &ledger);
        let mut verdict = if !closure.energy_balanced {
            "unbalanced-energy"
        } else if !closure.second_law_ok {
            "entropy-violation"
        } else {
            "ok"
        };
        if let Some(source) = p.source_kind().map_err(CliError::Config)? {
            if let ReservoirVerdict::PerpetualMotionSecondKind { .. } =
                work_from_reservoir_check(&ledger, source)
            {
                verdict = "pmm2";
            }
        }
        rows.push((p.id.clone(), closure.energy_residual, closure.entropy_generated, verdict));
    }

    match format {
        Format::Csv => {
            let mut out = String::from("process,E_residual,S_irr,verdict\n");
            for (id, e, s, v) in &rows {
                out.push_str(&format!("{id},{},{},{v}\n", fmt_f64(*e), fmt_f64(*s)));
            }
            write(&outdir.join("balance.csv"), &out)?;
        }
        Format::Json => {
            let rows: Vec<serde_json::Value> = rows
                .iter()
                .map(|(id, e, s, v)| {
                    json!({"process": id, "E_residual": e, "S_irr": s, "verdict": v})
                })
                .collect();
            write_json(&outdir.join("balance.json"), &json!({ "rows": rows }))?;
        }
    }
    let all_ok = rows.iter().all(|(_, _, _, v)| *v == "ok");
    write_json(
        &outdir.join("summary.json"),
        &json!({
            "mode": "balance",
            "processes": rows.iter().map(|(id, e, s, v)| {
                json!({"process": id, "E_residual": e, "S_irr": s, "verdict": v})
            }).collect::<Vec<_>>(),
            "all_consistent": all_ok,
        }),
    )?;
    println!(
        "balance: {} process(es), {}",
        rows.len(),
        if all_ok { "all consistent" } else { "violations flagged" }
    );
    Ok(())
}
