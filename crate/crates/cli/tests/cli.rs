//! End-to-end checks of the scenario runner against the bundled examples.

use std::fs;
use std::path::{Path, PathBuf};

use seaqt_cli::{run_file, validate_file, CliError, RunArgs};

fn scenario(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("scenarios")
        .join(name)
}

fn run_into(name: &str, dir: &Path) -> Result<(), CliError> {
    run_file(&RunArgs {
        file: scenario(name),
        output_dir: Some(dir.to_path_buf()),
        format: None,
        sweep: None,
    })
}

#[test]
fn bundled_scenarios_validate() {
    for name in [
        "single_two_level.json",
        "gas_four_level.json",
        "composite_qubits.json",
        "criteria_daroczy.json",
        "balance_ledgers.json",
    ] {
        let violations = validate_file(&scenario(name)).unwrap();
        assert!(violations.is_empty(), "{name}: {violations:?}");
    }
}

#[test]
fn invalid_trace_is_reported() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.json");
    fs::write(
        &path,
        r#"{
            "mode": "single",
            "system": {
                "hamiltonian": { "diagonal": [0.0, 1.0] },
                "rho0": { "diagonal": [0.5, 0.3] }
            }
        }"#,
    )
    .unwrap();
    let violations = validate_file(&path).unwrap();
    assert_eq!(violations.len(), 1, "{violations:?}");
    assert!(violations[0].contains("trace"), "{violations:?}");
}

#[test]
fn infeasible_scan_energy_is_reported() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad_gas.json");
    fs::write(
        &path,
        r#"{
            "mode": "gas",
            "system": {
                "levels": [0.0, 1.0],
                "p0": [0.6, 0.4],
                "fundamental_relation": { "points": 10, "e_max": 5.0 }
            }
        }"#,
    )
    .unwrap();
    let violations = validate_file(&path).unwrap();
    assert!(
        violations.iter().any(|v| v.contains("infeasible energy")),
        "{violations:?}"
    );
}

#[test]
fn single_run_emits_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    run_into("single_two_level.json", dir.path()).unwrap();
    let csv = fs::read_to_string(dir.path().join("trajectory.csv")).unwrap();
    assert!(csv.starts_with("t,E,S,trace_drift,min_eig,support_dim,dSdt,D_norm\n"));
    assert!(csv.lines().count() > 50);
    let summary: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("summary.json")).unwrap())
            .unwrap();
    assert_eq!(summary["mode"], "single");
    assert_eq!(summary["invariants_green"], true);
    let invariants: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("invariants.json")).unwrap())
            .unwrap();
    assert_eq!(invariants["all_green"], true);
    assert!(dir.path().join("snapshots/sample_000000.txt").exists());
    // snapshots parse back as densities
    let text = fs::read_to_string(dir.path().join("snapshots/sample_000000.txt")).unwrap();
    seaqt::serial::parse_operator(&text)
        .unwrap()
        .into_density()
        .unwrap();
}

#[test]
fn gas_run_converges_to_the_masked_equilibrium() {
    let dir = tempfile::tempdir().unwrap();
    run_into("gas_four_level.json", dir.path()).unwrap();
    let summary: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("summary.json")).unwrap())
            .unwrap();
    let final_p: Vec<f64> = summary["final_p"]
        .as_array()
        .unwrap()
        .iter()
        .map(|v| v.as_f64().unwrap())
        .collect();
    // the initial energy is 0.98*0 + 0.01*1 + 0.01*2 = 0.03 over levels (0,1,2)
    let expect = seaqt::gas::partial_equilibrium(
        0.03,
        &[true, true, true, false],
        &[0.0, 1.0, 2.0, 3.0],
    )
    .unwrap();
    for i in 0..4 {
        assert!(
            (final_p[i] - expect.probabilities()[i]).abs() < 1e-6,
            "level {i}: {} vs {}",
            final_p[i],
            expect.probabilities()[i]
        );
    }
    assert_eq!(final_p[3], 0.0);
    assert!(dir.path().join("fundamental.csv").exists());
}

#[test]
fn composite_run_emits_locality_columns() {
    let dir = tempfile::tempdir().unwrap();
    run_into("composite_qubits.json", dir.path()).unwrap();
    let csv = fs::read_to_string(dir.path().join("trajectory.csv")).unwrap();
    let header = csv.lines().next().unwrap();
    for column in [
        "E_A_local",
        "E_B_local",
        "S_A_perceived",
        "S_B_perceived",
        "mutual_entropy",
    ] {
        assert!(header.contains(column), "missing {column}");
    }
    let invariants: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("invariants.json")).unwrap())
            .unwrap();
    assert_eq!(invariants["all_green"], true);
}

#[test]
fn criteria_run_stores_the_additivity_witness() {
    let dir = tempfile::tempdir().unwrap();
    run_into("criteria_daroczy.json", dir.path()).unwrap();
    let report: serde_json::Value = serde_json::from_str(
        &fs::read_to_string(dir.path().join("criteria_report.json")).unwrap(),
    )
    .unwrap();
    assert_eq!(report["passes_all_testable"], false);
    let failed: Vec<u64> = report["failed_criteria"]
        .as_array()
        .unwrap()
        .iter()
        .map(|v| v.as_u64().unwrap())
        .collect();
    assert!(failed.contains(&3), "failed: {failed:?}");
    let c3 = &report["criteria"][2];
    assert_eq!(c3["verdict"], "fail");
    let witness_text = c3["witness"]["operators"][0]["text"].as_str().unwrap();
    seaqt::serial::parse_operator(witness_text).unwrap();
}

#[test]
fn balance_run_flags_the_perpetual_motion_pattern() {
    let dir = tempfile::tempdir().unwrap();
    run_into("balance_ledgers.json", dir.path()).unwrap();
    let csv = fs::read_to_string(dir.path().join("balance.csv")).unwrap();
    assert!(csv.starts_with("process,E_residual,S_irr,verdict\n"));
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines.len(), 5);
    assert!(lines[1].starts_with("work-only,") && lines[1].ends_with(",ok"));
    assert!(lines[2].starts_with("heat-only,") && lines[2].ends_with(",ok"));
    assert!(lines[3].starts_with("reversible-cycle,") && lines[3].ends_with(",ok"));
    assert!(lines[4].starts_with("reservoir-pump,") && lines[4].ends_with(",pmm2"));
}

#[test]
fn sweep_fans_out_isolated_variants() {
    let dir = tempfile::tempdir().unwrap();
    run_file(&RunArgs {
        file: scenario("single_two_level.json"),
        output_dir: Some(dir.path().to_path_buf()),
        format: None,
        sweep: Some("dynamics.tau=0.5,2.0".into()),
    })
    .unwrap();
    for tau in ["0.5", "2"] {
        let sub = dir.path().join(format!("sweep_dynamics-tau_{tau}"));
        assert!(sub.join("trajectory.csv").exists(), "missing {}", sub.display());
    }
}

#[test]
fn numerical_breach_maps_to_the_breach_error() {
    // a step size far beyond stability blows positivity, which must surface
    // as a breach (exit code 2), not a configuration error
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("unstable.json");
    fs::write(
        &path,
        r#"{
            "mode": "single",
            "system": {
                "hamiltonian": { "matrix": [[0.0, 2.0], [2.0, 1.0]] },
                "rho0": { "diagonal": [0.9, 0.1] }
            },
            "dynamics": { "tau": 0.001, "dt": 0.8, "t_final": 40.0 }
        }"#,
    )
    .unwrap();
    let out = dir.path().join("out");
    let result = run_file(&RunArgs {
        file: path,
        output_dir: Some(out),
        format: None,
        sweep: None,
    });
    match result {
        Err(CliError::Breach(_)) => {}
        other => panic!("expected a breach, got {other:?}"),
    }
}

#[test]
fn projector_scenario_tracks_unitary_propagation() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("projector.json");
    fs::write(
        &path,
        r#"{
            "mode": "single",
            "system": {
                "hamiltonian": { "matrix": [[0.0, [0.4, 0.3]], [[0.4, -0.3], 1.0]] },
                "rho0": { "pure": [0.6, [0.0, 0.8]] }
            },
            "dynamics": { "tau": 1.0, "dt": 0.001, "t_final": 3.0, "monitor_every": 100 }
        }"#,
    )
    .unwrap();
    let out = dir.path().join("out");
    run_file(&RunArgs {
        file: path,
        output_dir: Some(out.clone()),
        format: None,
        sweep: None,
    })
    .unwrap();
    let summary: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out.join("summary.json")).unwrap()).unwrap();
    assert_eq!(summary["support_dim"], 1);
    let final_state = seaqt::serial::parse_operator(summary["final_state"].as_str().unwrap())
        .unwrap()
        .into_density()
        .unwrap();

    // independent oracle: exact unitary propagation of the initial projector
    let h = seaqt::operator::HermitianOperator::from_rows(&[
        vec![
            seaqt::C64::new(0.0, 0.0),
            seaqt::C64::new(0.4, 0.3),
        ],
        vec![
            seaqt::C64::new(0.4, -0.3),
            seaqt::C64::new(1.0, 0.0),
        ],
    ])
    .unwrap();
    let rho0 = seaqt::DensityOperator::pure(&[
        seaqt::C64::new(0.6, 0.0),
        seaqt::C64::new(0.0, 0.8),
    ])
    .unwrap();
    let exact = seaqt::dynamics::evolve_unitary(&rho0, &h, 3.0, 1.0).unwrap();
    let dist = seaqt::density::trace_distance(&final_state, &exact).unwrap();
    assert!(dist <= 1e-8, "trajectory left the unitary orbit: {dist}");
}
