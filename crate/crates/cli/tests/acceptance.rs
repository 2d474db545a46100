//! Acceptance: determinism of scenario outputs. Identical configuration and
//! seed must reproduce bit-identical artifacts.

use std::fs;
use std::path::{Path, PathBuf};

use seaqt_cli::{run_file, RunArgs};

fn scenario(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("scenarios")
        .join(name)
}

fn run_twice_and_compare(name: &str, files: &[&str]) {
    let dir_a = tempfile::tempdir().unwrap();
    let dir_b = tempfile::tempdir().unwrap();
    for dir in [&dir_a, &dir_b] {
        run_file(&RunArgs {
            file: scenario(name),
            output_dir: Some(dir.path().to_path_buf()),
            format: None,
            sweep: None,
        })
        .unwrap();
    }
    for file in files {
        let a = fs::read(dir_a.path().join(file)).unwrap();
        let b = fs::read(dir_b.path().join(file)).unwrap();
        assert_eq!(a, b, "{name}: {file} differs between identical runs");
    }
}

#[test]
fn criterion_13_determinism() {
    run_twice_and_compare(
        "single_two_level.json",
        &["trajectory.csv", "summary.json", "invariants.json"],
    );
    run_twice_and_compare(
        "gas_four_level.json",
        &["trajectory.csv", "fundamental.csv", "summary.json"],
    );
    run_twice_and_compare(
        "criteria_daroczy.json",
        &["criteria_report.json", "summary.json"],
    );
    run_twice_and_compare("balance_ledgers.json", &["balance.csv", "summary.json"]);
    println!("criterion 13 (determinism): PASS");
}
