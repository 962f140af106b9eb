use std::fs;
use std::path::Path;

use eaqco::config::{ConfigError, PolicyName, ScenarioConfig, TopologySource};
use serde_json::{json, Value};

fn minimal() -> Value {
    json!({
        "topology": {
            "nodes": [1, 2, 3],
            "links": [{"a": 1, "b": 2}, {"a": 2, "b": 3}]
        },
        "policy": "qco",
        "workload": {
            "segments": [{"start_s": 0.5, "end_s": 2.0, "load": {"rate": 10.0}}],
            "measured": {"source": 1, "destination": 3, "count": 20, "start_s": 1.0}
        }
    })
}

fn parse(v: &Value) -> ScenarioConfig {
    ScenarioConfig::from_json(&v.to_string()).unwrap()
}

fn field_of(v: Value) -> String {
    match parse(&v).to_scenario() {
        Err(ConfigError::Invalid { field, .. }) => field,
        other => panic!("expected a field error, got {other:?}"),
    }
}

fn with(mut v: Value, path: &[&str], value: Value) -> Value {
    let mut cur = &mut v;
    for key in &path[..path.len() - 1] {
        cur = &mut cur[*key];
    }
    cur[path[path.len() - 1]] = value;
    v
}

#[test]
fn reference_scenarios_load_and_validate() {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("scenarios");
    let mut seen = 0;
    for entry in fs::read_dir(&dir).unwrap() {
        let path = entry.unwrap().path();
        let name = path.file_name().unwrap().to_str().unwrap();
        if name == "reference_topology.json" {
            continue;
        }
        let cfg = ScenarioConfig::load(&path).unwrap_or_else(|e| panic!("{name}: {e}"));
        assert!(matches!(cfg.topology, TopologySource::Inline(_)), "{name}: topology not inlined");
        let sc = cfg.to_scenario().unwrap_or_else(|e| panic!("{name}: {e}"));
        assert_eq!(sc.topology.node_count(), 6);
        seen += 1;
    }
    assert_eq!(seen, 7);
}

#[test]
fn defaults_fill_in() {
    let cfg = parse(&minimal());
    assert_eq!(cfg.policy, PolicyName::Qco);
    assert_eq!(cfg.eta, 0.1);
    assert_eq!(cfg.epsilon, 0.1);
    assert_eq!(cfg.trials, 10);
    assert_eq!(cfg.trial_seeds(), (1..=10).collect::<Vec<_>>());
    assert_eq!(cfg.reduction.min_output_bits, 512);
    assert_eq!(cfg.reduction.service_time_s, 0.005);
    let sc = cfg.to_scenario().unwrap();
    let m = sc.workload.measured.unwrap();
    assert_eq!(m.payload_bits, 18_880);
    // generators default to every node outside the measured pair
    assert_eq!(sc.workload.generators, vec![sc.topology.node_by_label(2).unwrap()]);
}

#[test]
fn explicit_seeds_override_base_seed() {
    let cfg = parse(&with(minimal(), &["seeds"], json!([9, 4])));
    assert_eq!(cfg.trial_seeds(), [9, 4]);
    assert_eq!(field_of(with(minimal(), &["seeds"], json!([]))), "seeds");
}

#[test]
fn unknown_fields_are_rejected() {
    let v = with(minimal(), &["battery"], json!({"capacity": 5.0}));
    assert!(ScenarioConfig::from_json(&v.to_string()).is_err());
    let v = with(minimal(), &["learning_rate"], json!(0.5));
    assert!(ScenarioConfig::from_json(&v.to_string()).is_err());
}

#[test]
fn invalid_values_name_their_field() {
    assert_eq!(field_of(with(minimal(), &["eta"], json!(0.0))), "eta");
    assert_eq!(field_of(with(minimal(), &["eta"], json!(1.5))), "eta");
    assert_eq!(field_of(with(minimal(), &["epsilon"], json!(-0.1))), "epsilon");
    assert_eq!(field_of(with(minimal(), &["trials"], json!(0))), "trials");
    assert_eq!(field_of(with(minimal(), &["reduction", "ratio"], json!(0.0))), "reduction.ratio");
    assert_eq!(field_of(with(minimal(), &["battery", "capacity_j"], json!(-1.0))), "battery.capacity_j");
    assert_eq!(
        field_of(with(minimal(), &["battery", "initial_used_fraction"], json!(1.0))),
        "battery.initial_used_fraction"
    );
    assert_eq!(field_of(with(minimal(), &["workload", "measured", "source"], json!(7))), "workload.measured.source");
    assert_eq!(field_of(with(minimal(), &["instrumented_node"], json!(42))), "instrumented_node");
    let overlapping = json!([
        {"start_s": 0.0, "end_s": 2.0, "load": "max_rate"},
        {"start_s": 1.0, "end_s": 3.0, "load": "pings_only"}
    ]);
    assert_eq!(field_of(with(minimal(), &["workload", "segments"], overlapping)), "workload.segments");
    assert_eq!(field_of(with(minimal(), &["horizon_s"], json!(-3.0))), "horizon_s");
}

#[test]
fn bad_topologies_are_config_errors() {
    let isolated = json!({"nodes": [1, 2, 3], "links": [{"a": 1, "b": 2}]});
    assert_eq!(field_of(with(minimal(), &["topology"], isolated)), "topology");
    let bad_energy = json!({"nodes": [1, 2], "links": [{"a": 1, "b": 2, "energy": {"reception_probability": 0.0}}]});
    assert_eq!(field_of(with(minimal(), &["topology"], bad_energy)), "topology.links[0].energy");
}

#[test]
fn static_routes_are_checked() {
    let mut v = with(minimal(), &["policy"], json!("static"));
    v = with(v, &["static_routes"], json!({"1": {"3": 3}}));
    assert_eq!(field_of(v), "static_routes");
    let mut v = with(minimal(), &["policy"], json!("static"));
    v = with(v, &["static_routes"], json!({"1": {"3": 2, "2": 2}, "2": {"3": 3, "1": 1}, "3": {"1": 2, "2": 2}}));
    parse(&v).to_scenario().unwrap();
}

#[test]
fn resolved_config_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let topo = json!({"nodes": [1, 2], "links": [{"a": 1, "b": 2, "bandwidth_bps": 5e6}]});
    fs::write(dir.path().join("topo.json"), topo.to_string()).unwrap();
    let mut v = minimal();
    v["topology"] = json!("topo.json");
    v["workload"]["measured"]["destination"] = json!(2);
    fs::write(dir.path().join("scenario.json"), v.to_string()).unwrap();

    let cfg = ScenarioConfig::load(&dir.path().join("scenario.json")).unwrap();
    let again = ScenarioConfig::from_json(&cfg.to_json_pretty()).unwrap();
    assert_eq!(cfg, again);
    assert_eq!(again.topology_config().unwrap().links[0].bandwidth_bps, Some(5e6));
}

#[test]
fn missing_files_report_their_path() {
    let dir = tempfile::tempdir().unwrap();
    let mut v = minimal();
    v["topology"] = json!("nowhere.json");
    let path = dir.path().join("scenario.json");
    fs::write(&path, v.to_string()).unwrap();
    match ScenarioConfig::load(&path) {
        Err(ConfigError::Io { path, .. }) => assert!(path.ends_with("nowhere.json")),
        other => panic!("expected an IO error, got {other:?}"),
    }
    match ScenarioConfig::load(&dir.path().join("absent.json")) {
        Err(e @ ConfigError::Io { .. }) => assert!(e.to_string().contains("absent.json")),
        other => panic!("expected an IO error, got {other:?}"),
    }
}
