mod common;

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use common::preset_config;
use lfc::cli::read_trace_csv;
use serde_json::{json, Value};
use tempfile::TempDir;

fn lfc(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_lfc")).args(args).output().expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exited normally")
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn preset_json() -> Value {
    serde_json::to_value(preset_config()).unwrap()
}

fn write_config(dir: &Path, v: &Value) -> PathBuf {
    let p = dir.join("config.json");
    std::fs::write(&p, serde_json::to_string_pretty(v).unwrap()).unwrap();
    p
}

fn read_json(p: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(p).unwrap()).unwrap()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn run_preset_lqg() {
    let tmp = TempDir::new().unwrap();
    let o = lfc(&["run", "--preset", "paper-three-area", "--controller", "lqg", "--out", s(tmp.path())]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let (names, cols) = read_trace_csv(&tmp.path().join("trace.csv")).unwrap();
    assert_eq!(names[0], "t");
    let states = names.iter().filter(|n| n.starts_with('d') && !n.starts_with("dpd") || n.starts_with("xi")).count();
    assert_eq!(states, 15);
    assert!(names.iter().any(|n| n == "y_df1") && names.iter().any(|n| n == "u3"));
    assert_eq!(cols[0].len(), 3001);
    let report = read_json(&tmp.path().join("report.json"));
    assert_eq!(report["controller"], "lqg");
    assert_eq!(report["metadata"]["seed"], 42);
    assert_eq!(report["stability"]["hurwitz"], true);
}

#[test]
fn negative_time_constant_is_a_parse_class_error() {
    let tmp = TempDir::new().unwrap();
    let mut v = preset_json();
    v["areas"][2]["t_p"] = json!(-1.0);
    let cfg = write_config(tmp.path(), &v);
    let o = lfc(&["run", s(&cfg), "--out", s(tmp.path())]);
    assert_eq!(code(&o), 2);
    let err = stderr(&o);
    assert!(err.contains("turbine") && err.contains("t_p"), "{err}");
}

#[test]
fn unknown_key_rejected() {
    let tmp = TempDir::new().unwrap();
    let mut v = preset_json();
    v["scenario"]["horizn"] = json!(3.0);
    let cfg = write_config(tmp.path(), &v);
    let o = lfc(&["run", s(&cfg), "--out", s(tmp.path())]);
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("horizn"));
}

#[test]
fn controllers_see_identical_disturbances() {
    let tmp = TempDir::new().unwrap();
    let mut v = preset_json();
    v["scenario"]["disturbances"]["channels"][0] = json!([{"kind": "gauss", "sigma": 0.01, "bandwidth": 0.2}]);
    v["scenario"]["horizon"] = json!(5.0);
    let cfg = write_config(tmp.path(), &v);
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    for (ctrl, out) in [("droop", &a), ("lqg", &b)] {
        let o = lfc(&["run", s(&cfg), "--controller", ctrl, "--seed", "7", "--out", s(out)]);
        assert_eq!(code(&o), 0, "{}", stderr(&o));
    }
    let (na, ca) = read_trace_csv(&a.join("trace.csv")).unwrap();
    let (nb, cb) = read_trace_csv(&b.join("trace.csv")).unwrap();
    for name in ["dpd1", "dpd2", "dpd3"] {
        let ia = na.iter().position(|n| n == name).unwrap();
        let ib = nb.iter().position(|n| n == name).unwrap();
        assert_eq!(ca[ia], cb[ib]);
    }
    let ia = na.iter().position(|n| n == "dpd1").unwrap();
    assert!(ca[ia].iter().any(|&x| x != 0.0));
    assert_eq!(read_json(&b.join("report.json"))["metadata"]["seed"], 7);
}

#[test]
fn compare_preset() {
    let tmp = TempDir::new().unwrap();
    let out = tmp.path().join("nested/dir");
    let o = lfc(&["compare", "--preset", "paper-three-area", "--out", s(&out)]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert!(out.join("trace-droop.csv").exists() && out.join("trace-lqg.csv").exists());
    let r = read_json(&out.join("report.json"));
    for sig in r["signals"].as_array().unwrap() {
        if sig["signal"].as_str().unwrap().starts_with("df") {
            assert!(sig["lqg"]["steady_state"].as_f64().unwrap().abs() < 1e-4);
            assert!(sig["baseline"]["steady_state"].as_f64().unwrap().abs() > 1e-3);
        }
    }
    assert!(r["stability"]["lqg"]["hurwitz"].as_bool().unwrap());
}

#[test]
fn compare_short_horizon_is_unsettled() {
    let tmp = TempDir::new().unwrap();
    let o = lfc(&["compare", "--preset", "paper-three-area", "--horizon", "0.1", "--out", s(tmp.path())]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let r = read_json(&tmp.path().join("report.json"));
    for sig in r["signals"].as_array().unwrap() {
        assert!(sig["baseline"]["settling_time"].is_null());
        assert!(sig["lqg"]["settling_time"].is_null());
    }
}

#[test]
fn validate_outcomes() {
    let o = lfc(&["validate", "--preset", "paper-three-area"]);
    assert_eq!(code(&o), 0);
    assert!(String::from_utf8_lossy(&o.stdout).contains("0 error(s)"));

    let tmp = TempDir::new().unwrap();
    let mut v = preset_json();
    v["areas"][0]["r"] = json!(0.0);
    let o = lfc(&["validate", s(&write_config(tmp.path(), &v))]);
    assert_eq!(code(&o), 1);
    assert!(String::from_utf8_lossy(&o.stdout).contains("error"));

    let mut v = preset_json();
    v["ties"] = json!([{"from_area": 0, "to_area": 1}]);
    let o = lfc(&["validate", s(&write_config(tmp.path(), &v))]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stdout));
    assert!(String::from_utf8_lossy(&o.stdout).contains("warning"));
}

#[test]
fn synthesis_failure_exit_code() {
    let tmp = TempDir::new().unwrap();
    let mut v = preset_json();
    v["controller"]["v"] = json!({"diag": [0.0, 0.0, 0.0, 0.0, 0.0, 0.0]});
    let o = lfc(&["run", s(&write_config(tmp.path(), &v)), "--out", s(tmp.path())]);
    assert_eq!(code(&o), 3, "{}", stderr(&o));
}

#[test]
fn divergence_exit_code() {
    let tmp = TempDir::new().unwrap();
    let mut v = preset_json();
    v["scenario"]["disturbances"]["channels"][1] = json!([{"kind": "step", "time": 0.0, "magnitude": 1e12}]);
    let o = lfc(&["run", s(&write_config(tmp.path(), &v)), "--controller", "droop", "--out", s(tmp.path())]);
    assert_eq!(code(&o), 4, "{}", stderr(&o));
}

#[test]
fn io_failure_exit_code() {
    let tmp = TempDir::new().unwrap();
    let file = tmp.path().join("plain");
    std::fs::write(&file, "x").unwrap();
    let o = lfc(&["run", "--preset", "paper-three-area", "--out", s(&file.join("sub"))]);
    assert_eq!(code(&o), 1);
    let o = lfc(&["run", s(&tmp.path().join("missing.json"))]);
    assert_eq!(code(&o), 1);
}

#[test]
fn csv_round_trips_bit_for_bit() {
    let tmp = TempDir::new().unwrap();
    let o = lfc(&["run", "--preset", "paper-three-area", "--horizon", "3", "--out", s(tmp.path())]);
    assert_eq!(code(&o), 0);
    let (names, cols) = read_trace_csv(&tmp.path().join("trace.csv")).unwrap();

    let cfg = preset_config();
    let plant = lfc::model::build_plant(&cfg.areas, &cfg.ties).unwrap();
    let ctrl = lfc::synthesis::design_lqg(&plant, None, None).unwrap();
    let sys = lfc::synthesis::assemble_closed_loop(&plant, &ctrl).unwrap();
    let mut sc = cfg.scenario;
    sc.horizon = 3.0;
    let trace = lfc::simulation::simulate(&sys, &sc).unwrap();
    assert_eq!(cols[0], trace.times);
    for (name, col) in names.iter().zip(&cols).skip(1) {
        let want = trace.column(name).unwrap();
        assert!(col.iter().zip(want).all(|(a, b)| a.to_bits() == b.to_bits()), "{name}");
    }
}

#[test]
fn help_and_usage_errors() {
    assert_eq!(code(&lfc(&["--help"])), 0);
    assert_eq!(code(&lfc(&["run"])), 2);
    assert_eq!(code(&lfc(&["run", "--preset", "nope"])), 2);
}
