use std::process::{Command, Output};

fn dexflat(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_dexflat"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

#[test]
fn classify_builtin_lists_the_dexterity_family() {
    let o = dexflat(&["classify", "--builtin", "example1"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("D  = {{1}, {2}}"));
}

#[test]
fn classify_json_is_valid() {
    let o = dexflat(&["--seed", "3", "classify", "--builtin", "motivating_rect", "--format", "json"]);
    assert_eq!(o.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["system"], "motivating_rect");
}

#[test]
fn exported_system_classifies_from_a_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("sq.sys");
    let o = dexflat(&["export-builtin", "motivating_square"]);
    std::fs::write(&path, &o.stdout).unwrap();
    let o = dexflat(&["classify", path.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn parse_errors_name_file_and_line() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.scn");
    std::fs::write(&path, "scenario x\nsystem builtin:example1\nbogus 1\n").unwrap();
    let o = dexflat(&["simulate", path.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("bad.scn") && err.contains("line 3"), "{err}");
}

#[test]
fn graph_writes_dot() {
    let dir = tempfile::tempdir().unwrap();
    let dot = dir.path().join("g.dot");
    let o = dexflat(&[
        "graph",
        "--builtin",
        "motivating_square",
        "--ell",
        "0,1,0",
        "--dot",
        dot.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0));
    assert!(std::fs::read_to_string(&dot).unwrap().contains("v0 -- v1"));
}

#[test]
fn simulate_writes_csv_and_plot_script() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("run.csv");
    let gp = dir.path().join("run.gp");
    let o = dexflat(&[
        "simulate",
        "--builtin",
        "motivating_unified",
        "--csv",
        csv.to_str().unwrap(),
        "--plot",
        gp.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("switch FM -> U2OFF"));
    assert!(std::fs::read_to_string(&csv).unwrap().starts_with("t,"));
    assert!(std::fs::read_to_string(&gp).unwrap().contains("run.csv"));
}

#[test]
fn budget_warnings_exit_with_two() {
    let o = dexflat(&["classify", "--builtin", "example1", "--l-max", "0"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn check_runs_selected_criteria() {
    let o = dexflat(&["check", "--suite", "acceptance", "--only", "AC2"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).starts_with("AC2  PASS"));
    assert_eq!(dexflat(&["check", "--only", "AC99"]).status.code(), Some(1));
}
