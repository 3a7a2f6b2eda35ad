use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use semiquantum_lab::table::{read_section, read_trajectory};
use serde_json::Value;

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_semiquantum"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn code(args: &[&str]) -> i32 {
    let out = run(args);
    out.status.code().expect("exit code")
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let path = dir.join(name);
    fs::write(&path, text).unwrap();
    path.to_str().unwrap().to_owned()
}

fn json(path: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

const SMALL: &str = r#"{"eps": 1.05, "delta": 1, "alpha": 0.015, "omega": 1, "t_end": 20,
    "initial": {"n0": 1, "ominus0": 0, "oplus0": 0, "x0": 1, "p0": -2.54950976}}"#;

#[test]
fn usage_errors_exit_1() {
    assert_eq!(code(&[]), 1);
    assert_eq!(code(&["frobnicate"]), 1);
    assert_eq!(code(&["simulate"]), 1);
    assert_eq!(code(&["simulate", "--preset", "fig9"]), 1);
    assert_eq!(code(&["poincare", "--preset", "fig2a", "--direction", "sideways"]), 1);
    assert_eq!(code(&["--help"]), 0);
}

#[test]
fn config_errors_exit_1() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let bad_json = write(dir.path(), "bad.json", "{ nope");
    let bad_params = write(dir.path(), "neg.json", &SMALL.replace("1.05", "-1.05"));
    let both = write(dir.path(), "ok.json", SMALL);
    assert_eq!(code(&["simulate", "--config", "/nonexistent/run.json", "--out", out]), 1);
    assert_eq!(code(&["simulate", "--config", &bad_json, "--out", out]), 1);
    assert_eq!(code(&["simulate", "--config", &bad_params, "--out", out]), 1);
    assert_eq!(code(&["simulate", "--config", &both, "--preset", "fig1a", "--out", out]), 1);
    // Direct initial states carry no family recipe.
    assert_eq!(code(&["poincare", "--config", &both, "--families", "3", "--out", out]), 1);
    assert_eq!(code(&["simulate", "--config", &both, "--out", "/dev/null/sub"]), 1);
}

#[test]
fn oracle_evolution_modes_need_decoupling() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let out_run = run(&["oracle", "--mode", "linear", "--preset", "fig1b", "--out", out]);
    assert_eq!(out_run.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out_run.stderr).contains("alpha"));
    let near_critical = write(dir.path(), "crit.json", &SMALL.replace("0.015", "0").replace("1.05", "1.2"));
    assert_eq!(code(&["oracle", "--mode", "critical", "--config", &near_critical, "--out", out]), 1);
    assert_eq!(code(&["oracle", "--mode", "classify", "--preset", "fig1b", "--out", out]), 0);
}

#[test]
fn numerical_failure_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "tiny.json", &SMALL.replace("\"t_end\": 20", "\"t_end\": 20, \"integrator\": {\"max_steps\": 10}"));
    assert_eq!(code(&["simulate", "--config", &cfg, "--out", dir.path().to_str().unwrap()]), 2);
    assert!(dir.path().join("tiny.summary.json").exists());
}

#[test]
fn divergence_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    assert_eq!(code(&["simulate", "--preset", "fig1c", "--out", out]), 3);
    assert_eq!(code(&["simulate", "--preset", "fig1c", "--expect-divergence", "--out", out]), 0);
    let summary = json(&dir.path().join("fig1c.summary.json"));
    assert_eq!(summary["status"], "Diverged");
    assert!(summary["divergence_time"].as_f64().unwrap() > 0.0);

    assert_eq!(code(&["lyapunov", "--preset", "fig1c", "--out", out]), 3);
    let partial = json(&dir.path().join("fig1c.lyapunov.json"));
    assert_eq!(partial["status"], "DivergedBeforeTransient");
}

#[test]
fn empty_section_is_a_warning() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "short.json", &SMALL.replace("\"t_end\": 20", "\"t_end\": 0.1"));
    let out = run(&["poincare", "--config", &cfg, "--out", dir.path().to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    let rows = read_section(fs::File::open(dir.path().join("short.section.csv")).unwrap()).unwrap();
    assert!(rows.is_empty());
    let summary = json(&dir.path().join("short.summary.json"));
    assert_eq!(summary["warnings"].as_array().unwrap().len(), 1);
}

#[test]
fn simulate_writes_deterministic_csv_and_plot() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let cfg = write(a.path(), "small.json", SMALL);
    for dir in [&a, &b] {
        assert_eq!(code(&["simulate", "--config", &cfg, "--plot", "--out", dir.path().to_str().unwrap()]), 0);
    }
    let bytes_a = fs::read(a.path().join("small.trajectory.csv")).unwrap();
    let bytes_b = fs::read(b.path().join("small.trajectory.csv")).unwrap();
    assert_eq!(bytes_a, bytes_b);
    let rows = read_trajectory(bytes_a.as_slice()).unwrap();
    assert_eq!(rows.len(), 201);
    let svg = fs::read_to_string(a.path().join("small.trajectory.svg")).unwrap();
    assert_eq!(svg.matches("<polyline").count(), 3);
}

#[test]
fn families_write_one_file_per_member() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "fam.json",
        r#"{"eps": 1.5, "delta": 1, "alpha": 0.015, "omega": 1, "t_end": 60,
            "initial": {"e_eff": 4.8, "i_inv": 4, "x0": 1}}"#,
    );
    let out = dir.path().to_str().unwrap();
    assert_eq!(code(&["poincare", "--config", &cfg, "--families", "5", "--direction", "+1", "--plot", "--out", out]), 0);
    for k in 0..5 {
        let rows = read_section(fs::File::open(dir.path().join(format!("fam.family{k:02}.section.csv"))).unwrap()).unwrap();
        assert!(!rows.is_empty());
        assert!(rows.iter().all(|r| r.direction == 1));
    }
    assert!(dir.path().join("fam.section.svg").exists());
    assert_eq!(json(&dir.path().join("fam.summary.json"))["members"].as_array().unwrap().len(), 5);
}

#[test]
fn sweep_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let spec = r#"{
        "axis1": {"name": "eps", "values": [0.5, 1.5]},
        "axis2": {"name": "alpha", "values": [1.0]},
        "fixed": {"delta": 1, "omega": 1},
        "initial": {"n0": 1, "ominus0": 0, "oplus0": 0, "x0": 1, "p0": -2.54950976},
        "criteria": {"budget": {"transient": 20, "total": 200}, "min_crossings": 10},
        "output": "maps/regimes.csv"
    }"#;
    let good = write(dir.path(), "spec.json", spec);
    assert_eq!(code(&["sweep", &good, "--out", out, "--workers", "2"]), 0);
    let text = fs::read_to_string(dir.path().join("maps/regimes.csv")).unwrap();
    assert!(text.starts_with("axis1_name,axis1_value,axis2_name,axis2_value,regime,lambda_max,stderr,divergence_time,status\n"));
    assert_eq!(text.lines().count(), 3);
    assert!(text.lines().nth(1).unwrap().contains(",Divergent,"));

    let unwritable = write(dir.path(), "bad_out.json", &spec.replace("maps/regimes.csv", "/dev/null/regimes.csv"));
    assert_eq!(code(&["sweep", &unwritable]), 1);
    let invalid = write(dir.path(), "bad.json", &spec.replace("\"alpha\"", "\"eps\""));
    assert_eq!(code(&["sweep", &invalid, "--out", out]), 1);
    assert_eq!(code(&["sweep", "--out", out]), 1);
}
