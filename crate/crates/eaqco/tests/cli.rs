use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::{json, Value};

fn eaqco(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_eaqco")).args(args).env_remove("EAQCO_OUT").output().unwrap()
}

fn small_config(dir: &Path, policy: &str) -> PathBuf {
    let cfg = json!({
        "name": "small",
        "topology": {
            "nodes": [1, 2, 3, 4],
            "links": [{"a": 1, "b": 2}, {"a": 2, "b": 3}, {"a": 3, "b": 4}, {"a": 4, "b": 1}]
        },
        "policy": policy,
        "workload": {
            "segments": [{"start_s": 0.5, "end_s": 2.0, "load": {"rate": 50.0}}],
            "measured": {"source": 1, "destination": 3, "count": 40, "start_s": 0.6, "interval_s": 0.02}
        },
        "instrumented_node": 1,
        "trials": 2,
        "seed": 3
    });
    let path = dir.join(format!("{policy}.json"));
    fs::write(&path, serde_json::to_string_pretty(&cfg).unwrap()).unwrap();
    path
}

fn text(out: &Output) -> String {
    format!("{}{}", String::from_utf8_lossy(&out.stdout), String::from_utf8_lossy(&out.stderr))
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn run_writes_traces_and_summary() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small_config(dir.path(), "eaqco");
    let out = dir.path().join("out");
    let res = eaqco(&["run", "--config", s(&cfg), "--out", s(&out), "--trials", "3", "--seed", "5", "--parallel", "2"]);
    assert!(res.status.success(), "{}", text(&res));

    let summary: Value = serde_json::from_str(&fs::read_to_string(out.join("summary.json")).unwrap()).unwrap();
    assert_eq!(summary["seeds"], json!([5, 6, 7]));
    assert_eq!(summary["policy"], "eaqco");
    assert_eq!(summary["aggregate"]["std_formula"], "population");
    assert_eq!(summary["trials"].as_array().unwrap().len(), 3);
    assert!(summary["config"]["topology"].is_object(), "config echo carries the topology inline");

    let trial = out.join("trial_000_seed_5");
    for f in ["deliveries.csv", "qtrace.csv", "energy.csv", "actions.csv"] {
        assert!(trial.join(f).is_file(), "{f} missing");
    }
    let deliveries = fs::read_to_string(trial.join("deliveries.csv")).unwrap();
    let mut lines = deliveries.lines();
    assert_eq!(
        lines.next().unwrap(),
        "msg_id,created_at,delivered_at,processing_time,hops,origin_bits,delivered_bits,compute_nodes"
    );
    let first: Vec<&str> = lines.next().unwrap().split(',').collect();
    assert_eq!(first[1].split('.').nth(1).unwrap().len(), 9, "times carry nine decimals");
    let qtrace = fs::read_to_string(trial.join("qtrace.csv")).unwrap();
    assert!(qtrace.starts_with("time,node,destination,msg_id,q_forward_2,q_forward_4,q_compute,chosen"));
}

#[test]
fn echoed_config_reproduces_the_run() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small_config(dir.path(), "qco");
    let first = dir.path().join("first");
    assert!(eaqco(&["run", "--config", s(&cfg), "--out", s(&first)]).status.success());

    let summary: Value = serde_json::from_str(&fs::read_to_string(first.join("summary.json")).unwrap()).unwrap();
    let echo = dir.path().join("echo.json");
    fs::write(&echo, summary["config"].to_string()).unwrap();
    let second = dir.path().join("second");
    let res = eaqco(&["run", "--config", s(&echo), "--out", s(&second)]);
    assert!(res.status.success(), "{}", text(&res));
    for trial in ["trial_000_seed_3", "trial_001_seed_4"] {
        for f in ["deliveries.csv", "qtrace.csv", "energy.csv", "actions.csv"] {
            let a = fs::read(first.join(trial).join(f)).unwrap();
            let b = fs::read(second.join(trial).join(f)).unwrap();
            assert!(a == b, "{trial}/{f} differs");
        }
    }
}

#[test]
fn output_dir_from_environment() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small_config(dir.path(), "static");
    let out = dir.path().join("env-out");
    let res = Command::new(env!("CARGO_BIN_EXE_eaqco"))
        .args(["run", "--config", s(&cfg), "--trials", "1"])
        .env("EAQCO_OUT", &out)
        .output()
        .unwrap();
    assert!(res.status.success(), "{}", text(&res));
    assert!(out.join("summary.json").is_file());
}

#[test]
fn sweep_writes_one_result_set_per_value() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small_config(dir.path(), "eaqco");
    let out = dir.path().join("sweep");
    let res = eaqco(&["sweep", "--config", s(&cfg), "--param", "epsilon", "--values", "0.0,0.1,0.3", "--out", s(&out)]);
    assert!(res.status.success(), "{}", text(&res));
    for v in ["0", "0.1", "0.3"] {
        assert!(out.join(format!("epsilon_{v}")).join("summary.json").is_file(), "epsilon_{v} missing");
    }
    let table = fs::read_to_string(out.join("comparison.csv")).unwrap();
    let rows: Vec<&str> = table.lines().collect();
    assert_eq!(rows.len(), 4);
    assert!(rows[0].starts_with("epsilon,processing_time_mean_s"));
    assert!(rows[0].ends_with("q_variance_forward_2,q_variance_forward_4"));
    // every value shares the same seeds
    let seeds = |v: &str| -> Value {
        let p = out.join(format!("epsilon_{v}")).join("summary.json");
        serde_json::from_str::<Value>(&fs::read_to_string(p).unwrap()).unwrap()["seeds"].clone()
    };
    assert_eq!(seeds("0"), seeds("0.3"));
}

#[test]
fn validate_prints_the_resolved_config() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small_config(dir.path(), "qrouting");
    let res = eaqco(&["validate", "--config", s(&cfg)]);
    assert!(res.status.success(), "{}", text(&res));
    let echoed: Value = serde_json::from_slice(&res.stdout).unwrap();
    assert_eq!(echoed["eta"], json!(0.1));
    assert_eq!(echoed["reduction"]["service_time_s"], json!(0.005));
}

#[test]
fn config_errors_exit_with_2() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small_config(dir.path(), "eaqco");
    let mut v: Value = serde_json::from_str(&fs::read_to_string(&cfg).unwrap()).unwrap();
    v["eta"] = json!(3.0);
    fs::write(&cfg, v.to_string()).unwrap();
    let res = eaqco(&["validate", "--config", s(&cfg)]);
    assert_eq!(res.status.code(), Some(2));
    assert!(text(&res).contains("`eta`"), "{}", text(&res));

    let missing = eaqco(&["run", "--config", "/no/such/file.json", "--out", s(dir.path())]);
    assert_eq!(missing.status.code(), Some(2));

    let static_cfg = small_config(dir.path(), "static");
    let res = eaqco(&["sweep", "--config", s(&static_cfg), "--param", "eta", "--values", "0.1", "--out", s(dir.path())]);
    assert_eq!(res.status.code(), Some(2));
}

#[test]
fn unwritable_output_exits_with_3() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small_config(dir.path(), "qco");
    let blocker = dir.path().join("file");
    fs::write(&blocker, "not a directory").unwrap();
    let res = eaqco(&["run", "--config", s(&cfg), "--out", s(&blocker.join("out")), "--trials", "1"]);
    assert_eq!(res.status.code(), Some(3), "{}", text(&res));
    assert!(text(&res).contains("file/out"), "{}", text(&res));
}
