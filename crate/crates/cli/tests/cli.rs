//! End-to-end tests of the `modeconv` binary: exit codes, artifact
//! layout, constants caching, and run-to-run determinism. Solver-facing
//! tests run on deliberately coarse meshes; the physics itself is covered
//! by the library's own suites.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::{json, Value};

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_modeconv"))
        .args(args)
        .output()
        .expect("binary should spawn")
}

fn stdout(output: &Output) -> String {
    String::from_utf8_lossy(&output.stdout).into_owned()
}

fn stderr(output: &Output) -> String {
    String::from_utf8_lossy(&output.stderr).into_owned()
}

fn assert_code(output: &Output, want: i32) {
    assert_eq!(
        output.status.code(),
        Some(want),
        "stdout:\n{}\nstderr:\n{}",
        stdout(output),
        stderr(output)
    );
}

fn write_config(dir: &Path, value: &Value) -> PathBuf {
    let path = dir.join("config.json");
    std::fs::write(&path, value.to_string()).unwrap();
    path
}

fn read_json(path: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

/// Constants settings coarse enough for a test run.
fn cheap_constants() -> Value {
    json!({
        "junction_doublings": 1,
        "junction_h": 0.1,
        "greens": {"h": 0.06, "truncation": 1.0, "r0": null, "n_terms": 10}
    })
}

fn coarse_mesh() -> Value {
    json!({"h": 0.08, "junction_levels": 2, "tube_layers": 3, "grade": 0.6, "aspect_cap": 6.0})
}

/// A two-ligament geometry spelled out directly, so no constants solve is
/// needed to build it.
fn explicit_config() -> Value {
    json!({
        "epsilon": 0.02,
        "dtn_terms": 10,
        "truncation": 1.0,
        "mesh": coarse_mesh(),
        "ligaments": {
            "minus": {"y_attach": 0.7090209, "length": 1.0, "width": 0.02, "bend": "Up"},
            "plus": {"y_attach": 0.2909791, "length": 1.3333333, "width": 0.02, "bend": "Down"}
        }
    })
}

#[test]
fn usage_errors_exit_3_and_help_exits_0() {
    assert_code(&run(&["--help"]), 0);
    assert_code(&run(&["--version"]), 0);
    assert_code(&run(&[]), 3);
    assert_code(&run(&["frobnicate"]), 3);
    assert_code(&run(&["solve", "--abc", "robin"]), 3);
}

#[test]
fn config_errors_exit_3() {
    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("nope.json");
    assert_code(&run(&["design", "--config", missing.to_str().unwrap()]), 3);

    let garbled = dir.path().join("garbled.json");
    std::fs::write(&garbled, "{not json").unwrap();
    assert_code(&run(&["design", "--config", garbled.to_str().unwrap()]), 3);

    let unknown = write_config(dir.path(), &json!({"omegaa": 4.0}));
    assert_code(&run(&["design", "--config", unknown.to_str().unwrap()]), 3);

    let out_of_band = write_config(
        dir.path(),
        &json!({"omega": 2.5 * std::f64::consts::PI}),
    );
    let output = run(&["design", "--config", out_of_band.to_str().unwrap()]);
    assert_code(&output, 3);
    assert!(
        stderr(&output).contains("two-mode band"),
        "stderr:\n{}",
        stderr(&output)
    );

    let config = write_config(dir.path(), &explicit_config());
    let output = run(&[
        "sweep",
        "--config",
        config.to_str().unwrap(),
        "--grid",
        "0.9:1.0:3",
    ]);
    assert_code(&output, 3);
}

#[test]
fn constants_cache_then_zero_width_design() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    let out_arg = out.to_str().unwrap().to_owned();
    let config = write_config(
        dir.path(),
        &json!({"epsilon": 0.0, "constants": cheap_constants()}),
    );
    let config_arg = config.to_str().unwrap().to_owned();

    let first = run(&["constants", "--config", &config_arg, "--out", &out_arg]);
    assert_code(&first, 0);
    assert!(stdout(&first).contains("computed"));
    assert!(stdout(&first).contains("junction constant C_Xi"));
    assert!(out.join("constants.json").exists());
    assert!(out.join("constants_cache.json").exists());

    let second = run(&["constants", "--config", &config_arg, "--out", &out_arg]);
    assert_code(&second, 0);
    assert!(stdout(&second).contains("cache hit"));

    let constants = read_json(&out.join("constants.json"));
    assert!(constants["junction"]["value"].as_f64().unwrap().is_finite());

    let design = run(&["design", "--config", &config_arg, "--out", &out_arg]);
    assert_code(&design, 0);
    assert!(stdout(&design).contains("cache hit"));
    let spec = read_json(&out.join("design.json"));
    let ell_minus_eps = spec["ell_minus_eps"].as_f64().unwrap();
    let ell_plus_eps = spec["ell_plus_eps"].as_f64().unwrap();
    assert!((ell_minus_eps - 1.0).abs() < 1e-12, "{ell_minus_eps}");
    assert!((ell_plus_eps - 4.0 / 3.0).abs() < 1e-12, "{ell_plus_eps}");
}

#[test]
fn solve_writes_artifacts_and_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), &explicit_config());
    let config_arg = config.to_str().unwrap().to_owned();

    let half_out = dir.path().join("half");
    let output = run(&[
        "solve",
        "--config",
        &config_arg,
        "--out",
        half_out.to_str().unwrap(),
        "--abc",
        "neumann",
    ]);
    assert_code(&output, 0);
    assert!(stdout(&output).contains("R_N"));
    assert!(stdout(&output).contains("energy row sum"));
    assert!(stdout(&output).contains("PASS"));
    let matrices = std::fs::read_to_string(half_out.join("matrices.csv")).unwrap();
    assert_eq!(matrices.lines().count(), 5);
    assert!(matrices.starts_with("row,col,r_re,r_im"));
    assert!(!half_out.join("fields.vtk").exists());
    let report = read_json(&half_out.join("report.json"));
    assert_eq!(report["bc"], "Neumann");

    let full_a = dir.path().join("full_a");
    let output = run(&[
        "solve",
        "--config",
        &config_arg,
        "--out",
        full_a.to_str().unwrap(),
    ]);
    assert_code(&output, 0);
    let matrices_a = std::fs::read_to_string(full_a.join("matrices.csv")).unwrap();
    assert!(matrices_a.starts_with("row,col,r_re,r_im,t_re,t_im"));
    let vtk = std::fs::read_to_string(full_a.join("fields.vtk")).unwrap();
    assert!(vtk.contains("u1_re") && vtk.contains("u2_im"));
    let report = read_json(&full_a.join("report.json"));
    assert_eq!(report["transmission"].as_array().unwrap().len(), 2);

    let full_b = dir.path().join("full_b");
    assert_code(
        &run(&[
            "solve",
            "--config",
            &config_arg,
            "--out",
            full_b.to_str().unwrap(),
        ]),
        0,
    );
    let matrices_b = std::fs::read_to_string(full_b.join("matrices.csv")).unwrap();
    assert_eq!(matrices_a, matrices_b);
}

#[test]
fn sweep_grid_override_writes_landscape_and_argmin() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), &explicit_config());
    let out = dir.path().join("out");
    let output = run(&[
        "sweep",
        "--config",
        config.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
        "--grid",
        "0.99:1.01:2,1.32:1.34:2",
        "--targets",
        "antidiagonal",
    ]);
    assert_code(&output, 0);
    assert!(stdout(&output).contains("optimum"));
    let landscape = std::fs::read_to_string(out.join("landscape.csv")).unwrap();
    assert_eq!(landscape.lines().count(), 5);
    assert!(landscape.starts_with("ell_minus,ell_plus,cost"));
    let argmin = read_json(&out.join("argmin.json"));
    assert!(argmin["optimum"]["cost"].as_f64().unwrap().is_finite());
    assert_eq!(argmin["n_points"], 4);
    assert!(argmin["deficit"].is_null());
}

#[test]
fn verify_reports_all_invariants() {
    let dir = tempfile::tempdir().unwrap();
    let mut value = explicit_config();
    value["mesh"]["h"] = json!(0.06);
    let config = write_config(dir.path(), &value);
    let out = dir.path().join("out");
    let output = run(&[
        "verify",
        "--config",
        config.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_code(&output, 0);
    let text = stdout(&output);
    for name in [
        "duct transparency",
        "mirror decomposition",
        "energy conservation",
        "reciprocity",
        "incomparable-run guard",
    ] {
        assert!(text.contains(name), "missing check '{name}':\n{text}");
    }
    assert!(!text.contains("FAIL"), "{text}");
    let checks = read_json(&out.join("verify.json"));
    assert!(checks.as_array().unwrap().iter().all(|c| c["pass"] == true));
}
