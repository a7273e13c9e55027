//! End-to-end checks of the binary: exit codes, example-config round
//! trips, and artifact emission for small instances.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> PathBuf {
    let mut p = PathBuf::from(env!("CARGO_BIN_EXE_mfgabsorb"));
    assert!(p.exists(), "binary not built: {p:?}");
    p = p.canonicalize().unwrap();
    p
}

fn run(args: &[&str]) -> Output {
    Command::new(bin()).args(args).output().expect("spawn mfgabsorb")
}

fn tmp_dir(tag: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("mfgabsorb-cli-{tag}-{}", std::process::id()));
    let _ = fs::remove_dir_all(&dir);
    fs::create_dir_all(&dir).unwrap();
    dir
}

fn write_config(dir: &Path, name: &str, json: &str) -> PathBuf {
    let path = dir.join(name);
    fs::write(&path, json).unwrap();
    path
}

#[test]
fn example_configs_are_valid_inputs() {
    for sub in ["solve-mfg", "toy", "simulate", "nash2", "converge", "flat-distance"] {
        let out = run(&[sub, "--example-config"]);
        assert!(out.status.success(), "{sub}: {:?}", out);
        let text = String::from_utf8(out.stdout).unwrap();
        let parsed: serde_json::Value = serde_json::from_str(&text).unwrap();
        assert!(parsed.get("kind").is_some(), "{sub} example lacks kind");
    }
}

#[test]
fn missing_config_is_a_precondition_error() {
    let out = run(&["toy"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn invalid_config_is_a_precondition_error() {
    let dir = tmp_dir("badcfg");
    let cfg = write_config(
        &dir,
        "bad.json",
        r#"{"kind":"converge","converge":{"n_ladder":[64,16,256],"seeds":2,"sim_dt":1e-3,
            "refine_levels":[[21,21]],"nash_base":[11,21],"nash_refined":[21,41],"w_samples":10}}"#,
    );
    let out = run(&["converge", "--config", cfg.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn non_convergence_maps_to_exit_code_3() {
    let dir = tmp_dir("noconv");
    // one undamped iteration cannot satisfy a 1e-12 tolerance
    let cfg = write_config(
        &dir,
        "mfg.json",
        r#"{"kind":"mfg",
            "grid":{"n_space":31,"n_time":31,"t0":0.0,"t_final":0.3},
            "picard":{"damping":1.0,"tol":1e-12,"max_iter":1}}"#,
    );
    let out = run(&[
        "solve-mfg",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        dir.join("out").to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(3), "stderr: {}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn flat_distance_prints_17_significant_digits() {
    let dir = tmp_dir("flat");
    let cfg = write_config(
        &dir,
        "d.json",
        r#"{"kind":"flat-distance","m1":{"dirac":{"x":0.2}},"m2":{"dirac":{"x":0.7}}}"#,
    );
    let out = run(&["flat-distance", "--config", cfg.to_str().unwrap()]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    let line = text.trim();
    assert_eq!(line, "5.0000000000000000e-1");
}

#[test]
fn toy_subcommand_emits_artifacts_and_literal_variant_fails_terminal() {
    let dir = tmp_dir("toy");
    let cfg = write_config(
        &dir,
        "toy.json",
        r#"{"kind":"toy","grid":{"n_space":101,"n_time":101,"t0":0.0,"t_final":0.5},
            "toy":{"k_order":200,"fixed_point_tol":1e-8,"max_iter":200}}"#,
    );
    let out_path = dir.join("out");
    let out = run(&[
        "toy",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        out_path.to_str().unwrap(),
        "--bk-literal",
    ]);
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    for f in ["bk.csv", "bk_literal.csv", "u_series.csv", "m.csv", "mass_trace.csv", "u_t0.svg", "toy.json"] {
        assert!(out_path.join(f).exists(), "missing {f}");
    }
    let manifest: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out_path.join("toy.json")).unwrap()).unwrap();
    let corrected = manifest["terminal_defect"].as_f64().unwrap();
    let literal = manifest["literal_terminal_defect"].as_f64().unwrap();
    assert!(corrected < 1e-6, "corrected defect {corrected:.3e}");
    assert!(literal > 0.1, "literal defect unexpectedly small: {literal:.3e}");
}

#[test]
fn simulate_runs_are_reproducible_byte_for_byte() {
    let dir = tmp_dir("sim");
    let cfg = write_config(
        &dir,
        "sim.json",
        r#"{"kind":"simulate",
            "grid":{"n_space":51,"n_time":51,"t0":0.0,"t_final":0.2},
            "simulate":{"n_players":16,"dt":0.002,"seed":7,"policy":"constant","constant_drift":0.1}}"#,
    );
    let out_a = dir.join("a");
    let out_b = dir.join("b");
    for out_path in [&out_a, &out_b] {
        let out = run(&[
            "simulate",
            "--config",
            cfg.to_str().unwrap(),
            "--out",
            out_path.to_str().unwrap(),
        ]);
        assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    }
    for f in ["paths.csv", "run.json"] {
        let a = fs::read(out_a.join(f)).unwrap();
        let b = fs::read(out_b.join(f)).unwrap();
        assert_eq!(a, b, "{f} differs between identical runs");
    }
}
