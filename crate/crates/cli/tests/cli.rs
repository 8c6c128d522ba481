use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use dwlab::commands::{self, Manifest, RunContext};
use dwlab::ExperimentConfig;

fn repo_file(rel: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../..").join(rel)
}

fn dwlab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_dwlab"))
        .args(args)
        .env("RUST_LOG", "warn")
        .output()
        .expect("binary runs")
}

fn write_config(dir: &Path, body: &str) -> String {
    let p = dir.join("config.toml");
    fs::write(&p, body).unwrap();
    p.to_string_lossy().into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn shipped_default_config_matches_builtin() {
    let c = ExperimentConfig::load(&repo_file("configs/default.toml")).unwrap();
    assert_eq!(c, ExperimentConfig::default());
    let o = dwlab(&["validate", "--config", repo_file("configs/default.toml").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    assert!(o.stdout.is_empty());
    let smoke = ExperimentConfig::load(&repo_file("configs/smoke.toml")).unwrap();
    assert!(smoke.validate().is_empty(), "{:?}", smoke.validate());
}

#[test]
fn negative_volume_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "[far_field]\nv_minus = -1.0\n");
    let out = dir.path().join("out");
    let o = dwlab(&["profile", "--config", &cfg, "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("far_field.v_minus"), "{}", stderr(&o));
    assert!(!out.exists());
}

#[test]
fn range_and_boundary_violations_are_named() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "[solver]\ncfl = 1.5\n[schedule]\nt_end = 4000.0\n");
    let o = dwlab(&["validate", "--config", &cfg]);
    assert_eq!(o.status.code(), Some(2));
    let text = String::from_utf8_lossy(&o.stdout);
    assert!(text.contains("solver.cfl"), "{text}");
    assert!(text.contains("schedule.t_end"), "{text}");
}

#[test]
fn unknown_keys_are_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "[grid]\nspacing = 0.1\n");
    let o = dwlab(&["validate", "--config", &cfg]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn analyze_needs_a_simulation() {
    let dir = tempfile::tempdir().unwrap();
    let o = dwlab(&["analyze", "--out", dir.path().to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("missing upstream artifact"), "{}", stderr(&o));
}

#[test]
fn flat_profile_has_zero_residual() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "[far_field]\nv_minus = 1.0\nv_plus = 1.0\n");
    let out = dir.path().join("out");
    let o = dwlab(&["profile", "--config", &cfg, "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let summary: serde_json::Value = serde_json::from_str(&fs::read_to_string(out.join("profile.json")).unwrap()).unwrap();
    assert_eq!(summary["max_residual"].as_f64(), Some(0.0));
    let csv = fs::read_to_string(out.join("profile.csv")).unwrap();
    for line in csv.lines().filter(|l| !l.starts_with('#') && !l.starts_with('x')) {
        let cols: Vec<f64> = line.split(',').map(|c| c.parse().unwrap()).collect();
        assert_eq!(&cols[1..], &[1.0, 0.0, 0.0, 0.0]);
    }
}

#[test]
fn report_on_empty_directory_is_all_pending() {
    let dir = tempfile::tempdir().unwrap();
    let o = dwlab(&["report", "--out", dir.path().to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    let r = dwlab::report::collate(dir.path()).unwrap();
    assert_eq!((r.passed, r.failed, r.pending), (0, 0, 9));
}

#[test]
fn resumed_simulation_is_bit_identical() {
    let config = ExperimentConfig::load(&repo_file("configs/smoke.toml")).unwrap();
    let full = tempfile::tempdir().unwrap();
    let part = tempfile::tempdir().unwrap();
    let a = RunContext::new(config.clone(), full.path().to_path_buf(), 1).unwrap();
    commands::simulate(&a, false).unwrap();

    // cut the finished run back to its first twelve snapshots
    let b = RunContext::new(config, part.path().to_path_buf(), 1).unwrap();
    commands::simulate(&b, false).unwrap();
    let mut m: Manifest = serde_json::from_str(&fs::read_to_string(part.path().join("manifest.json")).unwrap()).unwrap();
    for e in m.snapshots.drain(12..) {
        fs::remove_file(part.path().join(&e.file)).unwrap();
    }
    m.complete = false;
    dwlab::output::write_json(&part.path().join("manifest.json"), &m).unwrap();
    commands::simulate(&b, true).unwrap();

    let da = dwlab::output::digest_dir(full.path()).unwrap();
    let db = dwlab::output::digest_dir(part.path()).unwrap();
    assert_eq!(da, db);
}
