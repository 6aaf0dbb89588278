use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use num_complex::Complex64;
use serde_json::{json, Value};

use scatter_core::export::fmt_f64;
use scatter_core::incident::IncidentField;
use scatter_core::{PlaneWave, Vec3};

fn bin() -> Command {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_scatter-swarm"));
    cmd.env("SCATTER_THREADS", "1");
    cmd
}

fn base_config(out: &Path, h: f64) -> Value {
    json!({
        "medium": {"eps0": 1.0, "mu0": 1.0, "sigma0": 0.0, "omega": 1.0},
        "domain": {"min": [0, 0, 0], "max": [1, 1, 1]},
        "materials": {"h": {"constant": {"value": [h, 0.0]}}, "n": {"constant": {"value": 1.0}}},
        "wave": {"direction": [0, 0, 1], "polarization": [[1, 0], [0, 0], [0, 0]]},
        "solver": {"mode": "las", "a": 0.1, "kappa": 0.5, "cells_per_axis": 3},
        "output": {"dir": out, "probes": {"min": [-0.5, -0.5, 1.5], "max": [1.5, 1.5, 2.5], "n": 3}}
    })
}

fn write_config(dir: &Path, cfg: &Value) -> PathBuf {
    let path = dir.join("config.json");
    std::fs::write(&path, serde_json::to_string_pretty(cfg).unwrap()).unwrap();
    path
}

fn run(args: &[&str], config: &Path) -> Output {
    bin().args(args).arg(config).output().unwrap()
}

fn stderr_json(out: &Output) -> Value {
    let text = String::from_utf8_lossy(&out.stderr);
    let line = text.lines().last().expect("stderr is empty");
    serde_json::from_str(line).unwrap_or_else(|e| panic!("not JSON: {line}: {e}"))
}

fn read_json(path: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn transparent_las_run_reproduces_the_incident_field() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("out");
    let cfg = write_config(tmp.path(), &base_config(&out, 0.0));
    let res = run(&["run"], &cfg);
    assert_eq!(res.status.code(), Some(0), "{}", String::from_utf8_lossy(&res.stderr));

    let csv = std::fs::read_to_string(out.join("fields.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(
        lines.next().unwrap(),
        "x,y,z,Re(Ex),Im(Ex),Re(Ey),Im(Ey),Re(Ez),Im(Ez),Re(Hx),Im(Hx),Re(Hy),Im(Hy),Re(Hz),Im(Hz)"
    );
    let wave = PlaneWave::along_z(Complex64::new(1.0, 0.0));
    let k = Complex64::new(1.0, 0.0);
    let mut rows = 0;
    for line in lines {
        let cols: Vec<&str> = line.split(',').collect();
        assert_eq!(cols.len(), 15);
        let x: Vec<f64> = cols[..3].iter().map(|c| c.parse().unwrap()).collect();
        let e = wave.e(k, Vec3::new(x[0], x[1], x[2])).to_array();
        for (i, v) in e.iter().enumerate() {
            assert_eq!(cols[3 + 2 * i], fmt_f64(v.re));
            assert_eq!(cols[4 + 2 * i], fmt_f64(v.im));
        }
        // Independent check against e^{ikz} x̂ and H = ŷ e^{ikz}.
        let phase = Complex64::new(0.0, x[2]).exp();
        let ex = Complex64::new(cols[3].parse().unwrap(), cols[4].parse().unwrap());
        let hy = Complex64::new(cols[11].parse().unwrap(), cols[12].parse().unwrap());
        assert!((ex - phase).norm() < 1e-15);
        assert!((hy - phase).norm() < 1e-15);
        rows += 1;
    }
    assert_eq!(rows, 27);
    let sol = read_json(&out.join("solution.json"));
    assert_eq!(sol["config"]["solver"]["a"], json!(0.1));
    assert!(read_json(&out.join("diagnostics.json"))["cloud"]["m"].as_u64().unwrap() > 0);
}

#[test]
fn reports_are_deterministic_and_replayable() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("out");
    let cfg = write_config(tmp.path(), &base_config(&out, 0.05));
    assert_eq!(run(&["run"], &cfg).status.code(), Some(0));
    let first = std::fs::read(out.join("solution.json")).unwrap();
    let fields = std::fs::read(out.join("fields.csv")).unwrap();
    assert_eq!(run(&["run"], &cfg).status.code(), Some(0));
    assert_eq!(first, std::fs::read(out.join("solution.json")).unwrap());

    // Floats carry 17 significant digits.
    let text = String::from_utf8(first.clone()).unwrap();
    assert!(text.contains("1.0000000000000001e-1"), "a = 0.1 should print with 17 digits");

    // Re-running from the embedded config reproduces the outputs.
    let embedded = read_json(&out.join("solution.json"))["config"].clone();
    let replay = tmp.path().join("replay");
    std::fs::create_dir(&replay).unwrap();
    let cfg2 = write_config(&replay, &embedded);
    assert_eq!(run(&["run"], &cfg2).status.code(), Some(0));
    assert_eq!(first, std::fs::read(out.join("solution.json")).unwrap());
    assert_eq!(fields, std::fs::read(out.join("fields.csv")).unwrap());
}

#[test]
fn schema_errors_exit_2_with_key_path() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("out");

    let mut cfg = base_config(&out, 0.05);
    cfg["solver"]["a"] = json!(-0.1);
    let res = run(&["run"], &write_config(tmp.path(), &cfg));
    assert_eq!(res.status.code(), Some(2));
    let err = stderr_json(&res);
    assert_eq!(err["status"], "error");
    assert_eq!(err["error"]["kind"], "schema");
    assert_eq!(err["error"]["path"], "solver.a");

    let mut cfg = base_config(&out, 0.05);
    cfg["medium"]["omega"] = json!("fast");
    let res = run(&["run"], &write_config(tmp.path(), &cfg));
    assert_eq!(res.status.code(), Some(2));
    assert_eq!(stderr_json(&res)["error"]["path"], "medium.omega");

    let mut cfg = base_config(&out, 0.05);
    cfg["materials"]["h"] = json!({"constant": {"value": [-1.0, 0.0]}});
    let res = run(&["run"], &write_config(tmp.path(), &cfg));
    assert_eq!(res.status.code(), Some(2));
    assert_eq!(stderr_json(&res)["error"]["path"], "materials");

    let res = bin().args(["run", tmp.path().join("missing.json").to_str().unwrap()]).output().unwrap();
    assert_eq!(res.status.code(), Some(2));

    let cfg = write_config(tmp.path(), &base_config(&out, 0.05));
    let res = bin().env("SCATTER_THREADS", "zero").arg("run").arg(&cfg).output().unwrap();
    assert_eq!(res.status.code(), Some(2));
    assert_eq!(stderr_json(&res)["error"]["path"], "env.SCATTER_THREADS");
    assert!(!out.exists(), "no artifacts on failure");
}

#[test]
fn solver_failure_exits_3() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("out");
    let mut cfg = base_config(&out, 0.05);
    cfg["solver"]["mode"] = json!("design");
    cfg["design"] = json!({"target_mu": {"constant": {"value": [0.0, 0.0]}}, "grid": [3, 3, 3]});
    let res = run(&["run"], &write_config(tmp.path(), &cfg));
    assert_eq!(res.status.code(), Some(3));
    assert_eq!(stderr_json(&res)["error"]["kind"], "zero_permeability");
}

#[test]
fn design_with_host_permeability_gives_zero_h() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("out");
    let mut cfg = base_config(&out, 0.05);
    cfg["design"] = json!({"target_mu": {"constant": {"value": [1.0, 0.0]}}, "grid": [4, 4, 4]});
    let res = run(&["run", "--mode", "design"], &write_config(tmp.path(), &cfg));
    assert_eq!(res.status.code(), Some(0), "{}", String::from_utf8_lossy(&res.stderr));
    let h = read_json(&out.join("h.json"));
    let values = h["values"].as_array().unwrap();
    assert_eq!(values.len(), 64);
    assert!(values.iter().all(|v| v == &json!([0.0, 0.0])));
    let rep = read_json(&out.join("design.json"));
    assert_eq!(rep["feasibility"]["feasible"], json!(true));
    assert_eq!(rep["config"]["solver"]["mode"], "design");
}

#[test]
fn overrides_apply_and_are_embedded() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("out");
    let other = tmp.path().join("other");
    let cfg = write_config(tmp.path(), &base_config(&out, 0.05));
    let res = bin()
        .args(["run", "--mode", "limit", "--a", "0.2", "--out"])
        .arg(&other)
        .arg(&cfg)
        .output()
        .unwrap();
    assert_eq!(res.status.code(), Some(0), "{}", String::from_utf8_lossy(&res.stderr));
    assert!(!out.exists());
    let sol = read_json(&other.join("solution.json"));
    assert_eq!(sol["config"]["solver"]["mode"], "limit");
    assert_eq!(sol["config"]["solver"]["a"], json!(0.2));
    assert_eq!(sol["W"].as_array().unwrap().len(), 27);
    assert!(other.join("effective_medium.csv").exists());
    let summary: Value = serde_json::from_slice(&res.stdout).unwrap();
    assert_eq!(summary["status"], "ok");
}

#[test]
fn validate_emits_passing_checks() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("out");
    let mut cfg = base_config(&out, 0.05);
    cfg["output"]["probes"] = json!({"min": [-2.0, -2.0, 3.0], "max": [3.0, 3.0, 4.0], "n": 2});
    let res = run(&["validate"], &write_config(tmp.path(), &cfg));
    assert_eq!(res.status.code(), Some(0), "{}", String::from_utf8_lossy(&res.stderr));
    let rep = read_json(&out.join("validate.json"));
    assert_eq!(rep["passed"], json!(true));
    let names: Vec<&str> = rep["checks"].as_array().unwrap().iter().map(|c| c["name"].as_str().unwrap()).collect();
    for name in ["green_helmholtz_residual", "mesh_normal_moment", "incident_faraday", "las_faraday"] {
        assert!(names.contains(&name), "{name} missing from {names:?}");
    }
}

#[test]
fn study_of_transparent_material_has_zero_discrepancy() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("out");
    let mut cfg = base_config(&out, 0.0);
    cfg["solver"]["a_sequence"] = json!([0.1, 0.05]);
    let res = run(&["study"], &write_config(tmp.path(), &cfg));
    assert_eq!(res.status.code(), Some(0), "{}", String::from_utf8_lossy(&res.stderr));
    let rep = read_json(&out.join("study.json"));
    let rows = rep["study"]["rows"].as_array().unwrap();
    assert_eq!(rows.len(), 2);
    assert!(rows.iter().all(|r| r["D"] == json!(0.0)));
    assert!(rows.iter().all(|r| r.get("a_over_d").is_some() && r.get("ka").is_some()));
    assert_eq!(rep["study"]["passed"], json!(true));
}

#[test]
fn oracle_report_has_the_documented_keys() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("out");
    let mut cfg = base_config(&out, 0.1);
    cfg["solver"]["mode"] = json!("oracle");
    cfg["solver"]["a_sequence"] = json!([0.05, 0.025]);
    cfg["solver"]["n_theta"] = json!(6);
    let res = run(&["run"], &write_config(tmp.path(), &cfg));
    assert_eq!(res.status.code(), Some(0), "{}", String::from_utf8_lossy(&res.stderr));
    let rep = read_json(&out.join("oracle.json"));
    for key in ["a", "rel_error", "Q_oracle", "Q_asym"] {
        assert_eq!(rep["report"][key].as_array().unwrap().len(), 2, "{key}");
    }
}
