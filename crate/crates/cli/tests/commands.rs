//! Binary-level smoke tests of the command surface and exit codes.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn identkit() -> Command {
    Command::new(env!("CARGO_BIN_EXE_identkit"))
}

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures").join(name)
}

fn run(args: &[&str]) -> Output {
    identkit().args(args).output().expect("spawn identkit")
}

#[test]
fn pipeline_on_bundled_creep_fixture_succeeds() {
    let out_dir = tempfile::tempdir().unwrap();
    let out = run(&[
        "pipeline",
        fixture("creep3.toml").to_str().unwrap(),
        "--out",
        out_dir.path().to_str().unwrap(),
    ]);
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    assert!(out_dir.path().join("verdict.txt").exists());
    assert!(out_dir.path().join("history.csv").exists());
    assert!(out_dir.path().join("scan/bounds.csv").exists());
    let verdict = std::fs::read_to_string(out_dir.path().join("verdict.txt")).unwrap();
    assert!(verdict.starts_with("verdict = "), "{verdict}");
}

#[test]
fn identify_writes_solution_and_traces() {
    let out_dir = tempfile::tempdir().unwrap();
    let out = run(&[
        "identify",
        fixture("creep3.toml").to_str().unwrap(),
        "--out",
        out_dir.path().to_str().unwrap(),
    ]);
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    for file in ["solution.csv", "ga_trace.csv", "lm_trace.csv"] {
        assert!(out_dir.path().join(file).exists(), "{file} missing");
    }
    let solution = std::fs::read_to_string(out_dir.path().join("solution.csv")).unwrap();
    assert!(solution.starts_with("parameter,value\n"), "{solution}");
    assert!(solution.contains("objective,"), "{solution}");
}

#[test]
fn ensemble_is_byte_identical_for_a_fixed_seed() {
    let dir_a = tempfile::tempdir().unwrap();
    let dir_b = tempfile::tempdir().unwrap();
    for dir in [&dir_a, &dir_b] {
        let out = run(&[
            "ensemble",
            fixture("creep3.toml").to_str().unwrap(),
            "--out",
            dir.path().to_str().unwrap(),
        ]);
        assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    }
    for file in ["ensemble.csv", "verdict.txt"] {
        let a = std::fs::read(dir_a.path().join(file)).unwrap();
        let b = std::fs::read(dir_b.path().join(file)).unwrap();
        assert_eq!(a, b, "{file} differs between identically seeded runs");
    }
}

#[test]
fn scan_classifies_the_absent_parameter_as_uniform() {
    // In the restricted variant the response never involves d, so its
    // retained distribution must be flat.
    let out_dir = tempfile::tempdir().unwrap();
    let out = run(&[
        "scan",
        fixture("sloppy_restricted.toml").to_str().unwrap(),
        "--out",
        out_dir.path().to_str().unwrap(),
    ]);
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    let classification =
        std::fs::read_to_string(out_dir.path().join("classification.csv")).unwrap();
    let d_row = classification
        .lines()
        .find(|l| l.starts_with("d,"))
        .expect("classification row for d");
    assert!(d_row.contains("Uniform"), "{d_row}");
    assert!(out_dir.path().join("scatter_d.csv").exists());
}

#[test]
fn synth_round_trips_through_the_files_source() {
    let out_dir = tempfile::tempdir().unwrap();
    let out = run(&[
        "synth",
        fixture("creep3.toml").to_str().unwrap(),
        "--out",
        out_dir.path().to_str().unwrap(),
    ]);
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    assert!(out_dir.path().join("manifest.csv").exists());
    assert!(out_dir.path().join("creep-10__axial.csv").exists());

    // Identify against the files we just wrote.
    let config = std::fs::read_to_string(fixture("creep3.toml"))
        .unwrap()
        .replace(
            "source = \"synthetic\"\ntruth = [1000.0, 2000.0, 5.0]\nnoise_std = 0.0",
            &format!("source = \"files\"\nmanifest = \"{}\"", out_dir.path().join("manifest.csv").display()),
        );
    let config_path = out_dir.path().join("files.toml");
    std::fs::write(&config_path, config).unwrap();
    let run_dir = tempfile::tempdir().unwrap();
    let out = run(&[
        "identify",
        config_path.to_str().unwrap(),
        "--out",
        run_dir.path().to_str().unwrap(),
    ]);
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    let solution = std::fs::read_to_string(run_dir.path().join("solution.csv")).unwrap();
    let e_row = solution.lines().find(|l| l.starts_with("E,")).unwrap();
    let value: f64 = e_row.split(',').nth(1).unwrap().parse().unwrap();
    assert!((value - 1000.0).abs() / 1000.0 < 1e-3, "{e_row}");
}

#[test]
fn unknown_subcommand_is_a_usage_error() {
    let out = run(&["frobnicate", "whatever.toml"]);
    assert!(!out.status.success());
}

#[test]
fn broken_config_exits_with_code_one() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("broken.toml");
    std::fs::write(&path, "this is not toml at all [[[").unwrap();
    let out = run(&["identify", path.to_str().unwrap(), "--out", dir.path().to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn missing_manifest_exits_with_code_two() {
    let dir = tempfile::tempdir().unwrap();
    let config = r#"
master_seed = 1
output_dir = "out"

[model]
name = "creep3"

[space]
names = ["E", "E_v", "tau"]
lower = [100.0, 500.0, 0.5]
upper = [5000.0, 10000.0, 20.0]

[[test]]
id = "a"
sensors = ["s"]
loading = { type = "stress_steps", steps = [{ start_time = 0.0, stress = 10.0 }] }

[data]
source = "files"
manifest = "does_not_exist.csv"
"#;
    let path = dir.path().join("cfg.toml");
    std::fs::write(&path, config).unwrap();
    let out = run(&["identify", path.to_str().unwrap(), "--out", dir.path().to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2), "stderr: {}", String::from_utf8_lossy(&out.stderr));
}
