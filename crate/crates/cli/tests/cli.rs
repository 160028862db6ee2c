use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn zonofd(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_zonofd"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn lines(path: &Path) -> usize {
    fs::read_to_string(path).unwrap().lines().count()
}

#[test]
fn preset_lists_and_prints() {
    let o = zonofd(&["preset"]);
    assert!(o.status.success());
    assert!(stdout(&o).lines().any(|l| l == "afd-g2"));

    let o = zonofd(&["preset", "pfd-g1"]);
    assert!(o.status.success());
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["design"], "pfd_unconstrained");

    assert_eq!(zonofd(&["preset", "missing"]).status.code(), Some(2));
}

#[test]
fn run_writes_trace_polygons_and_echo() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("run");
    let o = zonofd(&["run", "--preset", "pfd-g2", "--seed", "5", "--out", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(stdout(&o).starts_with("pfd-g2: detection"));
    assert!(lines(&out.join("trace.csv")) > 1);
    assert!(out.join("polygons/1_0.csv").exists());
    let echo: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out.join("scenario-echo.json")).unwrap()).unwrap();
    assert_eq!(echo["seed"], 5);
}

#[test]
fn run_from_scenario_file_in_json() {
    let dir = tempfile::tempdir().unwrap();
    let file = dir.path().join("s.json");
    let mut v: serde_json::Value = serde_json::from_str(&stdout(&zonofd(&["preset", "afd-g2"]))).unwrap();
    v["params"]["horizon"] = 2.into();
    fs::write(&file, v.to_string()).unwrap();
    let out = dir.path().join("out");
    let o = zonofd(&[
        "run",
        "--scenario",
        file.to_str().unwrap(),
        "--format",
        "json",
        "--m",
        "8",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let trace: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out.join("trace.json")).unwrap()).unwrap();
    assert!(!trace["steps"].as_array().unwrap().is_empty());
    assert!(!out.join("trace.csv").exists());
}

#[test]
fn grid_and_compare_on_small_grids() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("grid");
    let o = zonofd(&[
        "grid",
        "--methods",
        "pfd_unconstrained,fixed_gain",
        "--values=-0.26,0.26",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(lines(&out.join("grid.csv")), 1 + 8);
    assert_eq!(lines(&out.join("grid-compare.csv")), 1 + 4);

    let out = dir.path().join("cmp");
    let o = zonofd(&[
        "compare",
        "--preset",
        "afd-g2",
        "--pfd-design",
        "pfd_unconstrained",
        "--k-max",
        "4",
        "--m",
        "8",
        "--values=-2.6,2.6",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(stdout(&o).contains("afd faster or equal in"));
    assert_eq!(lines(&out.join("compare.csv")), 1 + 4);
}

#[test]
fn bad_inputs_exit_with_scenario_code() {
    let dir = tempfile::tempdir().unwrap();
    let file = dir.path().join("bad.json");
    fs::write(&file, "{\"name\": 1}").unwrap();
    let o = zonofd(&["run", "--scenario", file.to_str().unwrap(), "--out", dir.path().to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).starts_with("error:"));

    let o = zonofd(&["grid", "--methods", "afd_joint", "--values", "0.1", "--out", dir.path().to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));

    let o = zonofd(&["grid", "--methods", "bogus", "--out", dir.path().to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
}
