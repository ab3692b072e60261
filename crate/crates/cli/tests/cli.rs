use std::path::Path;
use std::process::{Command, Output};

fn fogplan(args: &[&str], threads: Option<&str>) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_fogplan"));
    cmd.args(args);
    match threads {
        Some(n) => cmd.env("FOGPLAN_THREADS", n),
        None => cmd.env_remove("FOGPLAN_THREADS"),
    };
    cmd.output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn write_config(dir: &Path, name: &str, json: &str) -> String {
    let p = dir.join(name);
    std::fs::write(&p, json).unwrap();
    p.to_str().unwrap().to_string()
}

const QUICK: &str = r#"{"mde": {"pop_size": 8, "max_generations": 4}, "mc": {"max_trials": 60, "batch": 20}}"#;

#[test]
fn toy_vanet_json() {
    let o = fogplan(&["toy-vanet", "--format", "json"], None);
    assert!(o.status.success());
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["scenario_1"]["total"], "73");
    assert_eq!(v["scenario_2"]["total"], "43");
    assert_eq!(v["scenario_1"]["upload_delay"], "1");
    assert_eq!(v["scenario_2"]["upload_delay"], "1/4");
    assert_eq!(v["improvement_pct"], "41.09");
    assert_eq!(v["delay_reduction_pct"], "75.00");
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let ok = fogplan(&["evaluate", "--pilot", "--format", "json"], None);
    assert_eq!(ok.status.code(), Some(0));

    let tight = write_config(dir.path(), "tight.json", r#"{"params": {"delay_limits": [1e-9]}}"#);
    let o = fogplan(&["evaluate", "--pilot", "--config", &tight, "--format", "json"], None);
    assert_eq!(o.status.code(), Some(2));
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["feasible"], false);

    let bad = write_config(dir.path(), "bad.json", r#"{"mde": {"pop_size": 2}}"#);
    assert_eq!(fogplan(&["toy-vanet", "--config", &bad], None).status.code(), Some(1));
    let garbled = write_config(dir.path(), "garbled.json", "{");
    assert_eq!(fogplan(&["toy-vanet", "--config", &garbled], None).status.code(), Some(1));
    assert_eq!(fogplan(&["toy-vanet", "--config", "/nonexistent/c.json"], None).status.code(), Some(1));
    assert_eq!(fogplan(&["sweep", "--kind", "nope"], None).status.code(), Some(1));
    assert_eq!(fogplan(&["gen-topology", "--format", "svg"], None).status.code(), Some(1));
    assert_eq!(fogplan(&["--help"], None).status.code(), Some(0));
}

#[test]
fn out_flag_writes_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("topo.json");
    let o = fogplan(&["gen-topology", "--pilot", "--format", "json", "--out", path.to_str().unwrap()], None);
    assert!(o.status.success());
    assert!(o.stdout.is_empty());
    let t = fogplan::Topology::from_json(&std::fs::read_to_string(&path).unwrap()).unwrap();
    assert_eq!(t.n_fogs(), 50);
    assert_eq!(t.n_consumers(), 80);
}

#[test]
fn evaluate_reads_saved_inputs() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "quick.json", QUICK);
    let topo = dir.path().join("t.json");
    let dv = dir.path().join("dv.json");
    assert!(fogplan(&["gen-topology", "--pilot", "--format", "json", "--out", topo.to_str().unwrap()], None)
        .status
        .success());
    let o = fogplan(
        &["optimize", "--config", &cfg, "--decision-out", dv.to_str().unwrap(), "--format", "json"],
        None,
    );
    assert!(o.status.code().unwrap() <= 2);
    let e = fogplan(
        &["evaluate", "--topology", topo.to_str().unwrap(), "--decision", dv.to_str().unwrap(), "--format", "json"],
        None,
    );
    let a: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    let b: serde_json::Value = serde_json::from_str(&stdout(&e)).unwrap();
    assert_eq!(a["breakdown"]["total"], b["breakdown"]["total"]);
    assert_eq!(a["feasible"], b["feasible"]);
}

#[test]
fn repeated_runs_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "quick.json", QUICK);
    let runs: [&[&str]; 5] = [
        &["gen-topology", "--format", "json", "--seed", "42"],
        &["toy-vanet", "--format", "csv"],
        &["optimize", "--config", &cfg, "--format", "json", "--seed", "3"],
        &["estimate-pic", "--config", &cfg, "--format", "csv"],
        &["evaluate", "--pilot", "--format", "csv"],
    ];
    for args in runs {
        let a = fogplan(args, None);
        let b = fogplan(args, None);
        assert!(!a.stdout.is_empty(), "{args:?}");
        assert_eq!(a.stdout, b.stdout, "{args:?}");
    }
}

#[test]
fn thread_count_does_not_change_results() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "quick.json", QUICK);
    let args = ["optimize", "--config", &cfg, "--format", "json"];
    let one = fogplan(&args, Some("1"));
    let three = fogplan(&args, Some("3"));
    assert_eq!(one.stdout, three.stdout);
    let mc = ["estimate-pic", "--config", &cfg, "--format", "json"];
    assert_eq!(fogplan(&mc, Some("1")).stdout, fogplan(&mc, Some("3")).stdout);
}

#[test]
fn svg_sweep_is_xml() {
    let o = fogplan(&["sweep", "--kind", "fne", "--format", "svg"], None);
    assert!(o.status.success());
    let text = stdout(&o);
    assert!(text.starts_with("<?xml"));
    assert!(text.contains("<polyline"));
}
