use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn run(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_subdyadic"))
        .arg("--output-dir")
        .arg(dir)
        .args(args)
        .output()
        .expect("binary runs")
}

fn ok(dir: &Path, args: &[&str]) {
    let out = run(dir, args);
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
}

fn read(dir: &Path, name: &str) -> Value {
    serde_json::from_str(&std::fs::read_to_string(dir.join(name)).unwrap()).unwrap()
}

// ---------------------------------------------------------------------------
// lattice and frame

#[test]
fn build_lattice_reports_covering() {
    let dir = tempfile::tempdir().unwrap();
    ok(dir.path(), &["build-lattice"]);
    let r = read(dir.path(), "lattice_report.json");
    assert!(r["report"]["node_count"].as_u64().unwrap() > 0);
    assert!(r["report"]["overlap_bound"].as_u64().unwrap() <= 16);
    assert_eq!(r["report"]["uncovered_frequencies"], 0);
    assert_eq!(r["uniform_grid"], false);
    let nodes = std::fs::read_to_string(dir.path().join("lattice_nodes.csv")).unwrap();
    assert_eq!(nodes.lines().count() as u64, r["report"]["node_count"].as_u64().unwrap() + 1);

    let flat = tempfile::tempdir().unwrap();
    ok(flat.path(), &["--alpha-params-alpha", "1", "build-lattice"]);
    assert_eq!(read(flat.path(), "lattice_report.json")["uniform_grid"], true);
}

#[test]
fn invalid_configuration_exits_with_two_and_writes_nothing() {
    let dir = tempfile::tempdir().unwrap();
    let out_dir = dir.path().join("out");
    let out = run(&out_dir, &["--alpha-params-alpha", "0", "build-lattice"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("alpha"));
    assert!(!out_dir.exists());

    let cfg = dir.path().join("bad.json");
    std::fs::write(&cfg, r#"{"grid": {"d": 1, "n": 1000, "L": 64.0}}"#).unwrap();
    let out = run(&out_dir, &["--config", cfg.to_str().unwrap(), "build-lattice"]);
    assert_eq!(out.status.code(), Some(2));
    let out = run(&out_dir, &["--grid-n", "8", "build-lattice"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn config_file_is_read_and_flags_win() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.json");
    std::fs::write(&cfg, r#"{"grid": {"d": 1, "n": 256, "L": 16.0}, "seed": 3}"#).unwrap();
    let out = dir.path().join("out");
    ok(&out, &["--config", cfg.to_str().unwrap(), "--grid-n", "512", "build-lattice"]);
    let r = read(&out, "lattice_report.json");
    assert_eq!(r["run"]["grid"]["n"], 512);
    assert_eq!(r["run"]["grid"]["L"], 16.0);
    assert_eq!(r["run"]["seed"], 3);
}

#[test]
fn frame_report_has_bounds_schur_constant_and_residual() {
    let dir = tempfile::tempdir().unwrap();
    ok(dir.path(), &["frame-report", "--dual-stride", "60"]);
    let r = read(dir.path(), "frame_report.json");
    let (a, b) = (r["A"].as_f64().unwrap(), r["B"].as_f64().unwrap());
    assert!(a > 0.0 && a <= b);
    assert!(r["schur_off_diagonal_C_star"].as_f64().unwrap().is_finite());
    assert!(r["reconstruction"]["max_relative_residual"].as_f64().unwrap() < 1e-8);
    assert!(r["gram_decay"]["N"].as_f64().unwrap() >= 4.0);
    let dual = &r["dual_cross_decay"];
    assert!(dual["profile"]["N"].as_f64().unwrap() > 0.0);
    assert!(dual["meets_inherited_bound"].is_boolean());
    assert!(dir.path().join("frame_bounds.csv").exists());
}

#[test]
fn non_convergence_exits_with_three() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(dir.path(), &["--caps-max-iterations", "1", "frame-report", "--skip-dual-decay"]);
    assert_eq!(out.status.code(), Some(3));
    assert!(!dir.path().join("frame_report.json").exists());
}

// ---------------------------------------------------------------------------
// signals, norms and multipliers

#[test]
fn generated_signal_feeds_modnorm() {
    let dir = tempfile::tempdir().unwrap();
    let sig = dir.path().join("f.bin");
    ok(dir.path(), &["gen-signal", "--kind", "random-bandlimited", "--lo", "0", "--hi", "30", "--out", sig.to_str().unwrap()]);
    assert!(dir.path().join("f.meta.json").exists());
    ok(dir.path(), &["modnorm", "--signal", sig.to_str().unwrap()]);
    let r = read(dir.path(), "modnorm.json");
    let v = r["value_over_l2_norm"].as_f64().unwrap();
    assert!(v >= r["sqrt_A"].as_f64().unwrap() && v <= r["sqrt_B"].as_f64().unwrap());
    assert_eq!(r["within_frame_bracket"], true);

    ok(dir.path(), &["modnorm", "--p", "inf", "--q", "1", "--beta", "-2", "--signal", sig.to_str().unwrap()]);
    assert!(read(dir.path(), "modnorm.json")["spec"]["p"].is_string());

    let missing = run(dir.path(), &["modnorm", "--signal", dir.path().join("nope.bin").to_str().unwrap()]);
    assert_eq!(missing.status.code(), Some(1));
    let mismatch = run(dir.path(), &["--grid-n", "512", "modnorm", "--signal", sig.to_str().unwrap()]);
    assert_eq!(mismatch.status.code(), Some(2));
}

#[test]
fn unimodular_multiplier_preserves_energy() {
    let dir = tempfile::tempdir().unwrap();
    let out_sig = dir.path().join("tf.bin");
    ok(dir.path(), &["multiplier", "--trials", "20", "--output-signal", out_sig.to_str().unwrap()]);
    let r = read(dir.path(), "multiplier.json");
    assert!((r["energy_ratio"].as_f64().unwrap() - 1.0).abs() < 1e-12);
    assert_eq!(r["boundedness"]["within_bracket"], true);
    assert_eq!(r["boundedness"]["trials"], 20);
    assert!(r["normalized_matrix_decay"]["N"].as_f64().unwrap() >= 4.0);
    assert!(out_sig.exists());
    let trials = std::fs::read_to_string(dir.path().join("boundedness_trials.csv")).unwrap();
    assert_eq!(trials.lines().count(), 21);
}

#[test]
fn miyachi_check_detects_the_wrong_exponent() {
    let dir = tempfile::tempdir().unwrap();
    ok(dir.path(), &["miyachi-check", "--beta-inf", "1"]);
    let r = read(dir.path(), "miyachi_check.json");
    assert_eq!(r["pointwise"]["pass"], true);
    assert_eq!(r["averaged"]["pass"], true);
    ok(dir.path(), &["miyachi-check", "--beta-inf", "1", "--check-beta", "4", "--threshold", "10"]);
    let r = read(dir.path(), "miyachi_check.json");
    assert_eq!(r["pointwise"]["pass"], false);
    assert!(r["averaged"].is_null());
}

// ---------------------------------------------------------------------------
// wavefront

#[test]
fn wavefront_of_a_delta_is_its_cell() {
    let dir = tempfile::tempdir().unwrap();
    ok(dir.path(), &["wavefront", "--kind", "delta", "--center", "30"]);
    let entries = read(dir.path(), "wavefront.json");
    let singular: Vec<&Value> = entries.as_array().unwrap().iter().filter(|e| e["singular"] == true).collect();
    assert_eq!(singular.len(), 2);
    assert!(singular.iter().all(|e| e["x_cell"][0] == 7));
    let scan = std::fs::read_to_string(dir.path().join("wavefront_scan.csv")).unwrap();
    assert!(scan.starts_with("x_cell,cone,shell"));
}

#[test]
fn psido_invariance_for_stock_operators() {
    let dir = tempfile::tempdir().unwrap();
    for op in ["identity", "elliptic", "spatially-vanishing"] {
        ok(dir.path(), &["psido-invariance", "--operator", op]);
        let r = read(dir.path(), "psido_invariance.json");
        assert_eq!(r["contained"], true, "{op}");
        if op != "spatially-vanishing" {
            assert_eq!(r["reverse_contained"], true, "{op}");
        }
    }
}

#[test]
fn repeated_runs_are_byte_identical() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    for dir in [a.path(), b.path()] {
        ok(dir, &["--seed", "11", "multiplier", "--trials", "10"]);
        ok(dir, &["--seed", "11", "gen-signal", "--kind", "random-bandlimited"]);
    }
    for name in ["multiplier.json", "boundedness_trials.csv", "oscillation.csv", "random_bandlimited.bin"] {
        assert_eq!(std::fs::read(a.path().join(name)).unwrap(), std::fs::read(b.path().join(name)).unwrap(), "{name}");
    }
}
