//! Scenario configuration files.
//!
//! A config is a single JSON document. Every field has a stated default so
//! a config only needs to name what it changes; `eaqco validate` prints the
//! fully resolved form. Node references always use the topology's labels.
//! Sizes are given in bytes and converted to bits internally.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use eaqco_core::qpolicy::{PolicyKind, QParams, StaticRoutes};
use eaqco_core::sim::{
    BatterySpec, Load, MeasuredStream, MissionClock, ProtocolSpec, Scenario, Segment, WorkloadSpec,
};
use eaqco_core::types::{LinkSpec, NodeId, SimTime, Topology};
use eaqco_core::{LinkEnergyParams, ReductionSpec, ServiceModel};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{path}: {source}")]
    Parse { path: PathBuf, source: serde_json::Error },
    #[error("invalid `{field}`: {reason}")]
    Invalid { field: String, reason: String },
}

fn invalid(field: impl Into<String>, reason: impl ToString) -> ConfigError {
    ConfigError::Invalid { field: field.into(), reason: reason.to_string() }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PolicyName {
    Static,
    Qrouting,
    Qco,
    Eaqco,
}

/// Radio profile plus optional per-field overrides.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EnergyConfig {
    #[serde(default = "default_profile")]
    pub profile: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reception_probability: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub xmtr_power_w: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rcvr_power_w: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub data_rate_bps: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ack_rate_bps: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ack_bytes: Option<u64>,
}

fn default_profile() -> String {
    "lorawan-like".into()
}

impl Default for EnergyConfig {
    fn default() -> Self {
        EnergyConfig {
            profile: default_profile(),
            reception_probability: None,
            xmtr_power_w: None,
            rcvr_power_w: None,
            data_rate_bps: None,
            ack_rate_bps: None,
            ack_bytes: None,
        }
    }
}

impl EnergyConfig {
    fn resolve(&self, field: &str) -> Result<LinkEnergyParams, ConfigError> {
        let mut p = match self.profile.as_str() {
            "lorawan-like" => LinkEnergyParams::lorawan_like(),
            other => return Err(invalid(format!("{field}.profile"), format!("unknown profile {other:?}"))),
        };
        if let Some(v) = self.reception_probability {
            p.reception_probability = v;
        }
        if let Some(v) = self.xmtr_power_w {
            p.xmtr_power_w = v;
        }
        if let Some(v) = self.rcvr_power_w {
            p.rcvr_power_w = v;
        }
        if let Some(v) = self.data_rate_bps {
            p.data_rate_bps = v;
        }
        if let Some(v) = self.ack_rate_bps {
            p.ack_rate_bps = v;
        }
        if let Some(v) = self.ack_bytes {
            p.ack_bits = v * 8;
        }
        p.validate().map_err(|e| invalid(field, e))?;
        Ok(p)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LinkDefaults {
    #[serde(default = "default_propagation")]
    pub propagation_delay_s: f64,
    #[serde(default = "default_bandwidth")]
    pub bandwidth_bps: f64,
    #[serde(default)]
    pub energy: EnergyConfig,
}

fn default_propagation() -> f64 {
    0.0001
}

fn default_bandwidth() -> f64 {
    10_000_000.0
}

impl Default for LinkDefaults {
    fn default() -> Self {
        LinkDefaults {
            propagation_delay_s: default_propagation(),
            bandwidth_bps: default_bandwidth(),
            energy: EnergyConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LinkConfig {
    pub a: u32,
    pub b: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub propagation_delay_s: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bandwidth_bps: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub energy: Option<EnergyConfig>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TopologyConfig {
    pub nodes: Vec<u32>,
    #[serde(default)]
    pub link_defaults: LinkDefaults,
    pub links: Vec<LinkConfig>,
}

impl TopologyConfig {
    pub fn build(&self) -> Result<Topology, ConfigError> {
        let mut links = Vec::with_capacity(self.links.len());
        for (i, l) in self.links.iter().enumerate() {
            let field = format!("topology.links[{i}]");
            let d = &self.link_defaults;
            let prop = l.propagation_delay_s.unwrap_or(d.propagation_delay_s);
            if !(prop >= 0.0 && prop.is_finite()) {
                return Err(invalid(format!("{field}.propagation_delay_s"), "must be non-negative"));
            }
            let energy = l.energy.as_ref().unwrap_or(&d.energy).resolve(&format!("{field}.energy"))?;
            let spec = LinkSpec {
                propagation_delay: SimTime::from_secs_f64(prop),
                bandwidth_bps: l.bandwidth_bps.unwrap_or(d.bandwidth_bps),
                energy,
            };
            links.push((l.a, l.b, spec));
        }
        Topology::new(self.nodes.clone(), links).map_err(|e| invalid("topology", e))
    }
}

/// Inline topology or a path to a topology file, relative to the config.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum TopologySource {
    File(PathBuf),
    Inline(TopologyConfig),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BatteryConfig {
    #[serde(default = "default_capacity")]
    pub capacity_j: f64,
    /// Per-label capacity overrides.
    #[serde(default)]
    pub per_node_capacity_j: BTreeMap<u32, f64>,
    #[serde(default)]
    pub initial_used_fraction: f64,
    /// Length of the mission for the remaining-time scaling; `null` keeps
    /// the remaining fraction at 1.
    #[serde(default)]
    pub mission_duration_s: Option<f64>,
    #[serde(default)]
    pub ef_floor: Option<f64>,
    #[serde(default)]
    pub control_traffic_drains: bool,
    #[serde(default)]
    pub receive_j_per_bit: f64,
}

fn default_capacity() -> f64 {
    1000.0
}

impl Default for BatteryConfig {
    fn default() -> Self {
        BatteryConfig {
            capacity_j: default_capacity(),
            per_node_capacity_j: BTreeMap::new(),
            initial_used_fraction: 0.0,
            mission_duration_s: None,
            ef_floor: None,
            control_traffic_drains: false,
            receive_j_per_bit: 0.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReductionConfig {
    #[serde(default = "default_ratio")]
    pub ratio: f64,
    #[serde(default = "default_min_output")]
    pub min_output_bits: u64,
    #[serde(default = "default_service")]
    pub service_time_s: f64,
    /// When set, service time is proportional to payload size instead.
    #[serde(default)]
    pub service_s_per_bit: Option<f64>,
}

fn default_ratio() -> f64 {
    0.001
}

fn default_min_output() -> u64 {
    512
}

fn default_service() -> f64 {
    0.005
}

impl Default for ReductionConfig {
    fn default() -> Self {
        ReductionConfig {
            ratio: default_ratio(),
            min_output_bits: default_min_output(),
            service_time_s: default_service(),
            service_s_per_bit: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProtocolConfig {
    #[serde(default = "default_ping_bytes")]
    pub ping_bytes: u64,
    #[serde(default = "default_ack_base")]
    pub ack_base_bytes: u64,
    #[serde(default = "default_ack_per_dest")]
    pub ack_bytes_per_destination: u64,
    /// Counted in transmit energy only.
    #[serde(default)]
    pub header_bytes: u64,
    #[serde(default = "default_bootstrap_interval")]
    pub bootstrap_interval_s: f64,
    #[serde(default)]
    pub maintenance_ping_interval_s: Option<f64>,
    #[serde(default = "default_max_hops")]
    pub max_hops: u32,
}

fn default_ping_bytes() -> u64 {
    64
}

fn default_ack_base() -> u64 {
    64
}

fn default_ack_per_dest() -> u64 {
    16
}

fn default_bootstrap_interval() -> f64 {
    0.1
}

fn default_max_hops() -> u32 {
    64
}

impl Default for ProtocolConfig {
    fn default() -> Self {
        ProtocolConfig {
            ping_bytes: default_ping_bytes(),
            ack_base_bytes: default_ack_base(),
            ack_bytes_per_destination: default_ack_per_dest(),
            header_bytes: 0,
            bootstrap_interval_s: default_bootstrap_interval(),
            maintenance_ping_interval_s: None,
            max_hops: default_max_hops(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LoadConfig {
    PingsOnly,
    MaxRate,
    /// Messages per second per generator.
    Rate(f64),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SegmentConfig {
    pub start_s: f64,
    pub end_s: f64,
    pub load: LoadConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MeasuredConfig {
    #[serde(default = "default_source")]
    pub source: u32,
    #[serde(default = "default_destination")]
    pub destination: u32,
    #[serde(default = "default_count")]
    pub count: u32,
    #[serde(default = "default_payload")]
    pub payload_bytes: u64,
    #[serde(default = "default_measured_start")]
    pub start_s: f64,
    #[serde(default = "default_measured_interval")]
    pub interval_s: f64,
}

fn default_source() -> u32 {
    4
}

fn default_destination() -> u32 {
    1
}

fn default_count() -> u32 {
    750
}

fn default_payload() -> u64 {
    2360
}

fn default_measured_start() -> f64 {
    1.0
}

fn default_measured_interval() -> f64 {
    0.02
}

impl Default for MeasuredConfig {
    fn default() -> Self {
        MeasuredConfig {
            source: default_source(),
            destination: default_destination(),
            count: default_count(),
            payload_bytes: default_payload(),
            start_s: default_measured_start(),
            interval_s: default_measured_interval(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WorkloadConfig {
    #[serde(default)]
    pub segments: Vec<SegmentConfig>,
    /// Background generators by label; `null` means every node except the
    /// measured source and destination.
    #[serde(default)]
    pub generators: Option<Vec<u32>>,
    #[serde(default = "default_payload")]
    pub background_payload_bytes: u64,
    #[serde(default = "default_ping_interval")]
    pub ping_interval_s: f64,
    #[serde(default = "default_measured")]
    pub measured: Option<MeasuredConfig>,
}

fn default_ping_interval() -> f64 {
    1.0
}

fn default_measured() -> Option<MeasuredConfig> {
    Some(MeasuredConfig::default())
}

impl Default for WorkloadConfig {
    fn default() -> Self {
        WorkloadConfig {
            segments: Vec::new(),
            generators: None,
            background_payload_bytes: default_payload(),
            ping_interval_s: default_ping_interval(),
            measured: default_measured(),
        }
    }
}

/// A complete scenario file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    #[serde(default)]
    pub name: String,
    pub topology: TopologySource,
    pub policy: PolicyName,
    /// Static routes as `{node: {destination: next_hop}}`; defaults to
    /// fewest-hop routes with lowest-label tie-breaking.
    #[serde(default)]
    pub static_routes: Option<BTreeMap<u32, BTreeMap<u32, u32>>>,
    #[serde(default = "default_eta")]
    pub eta: f64,
    #[serde(default = "default_epsilon")]
    pub epsilon: f64,
    #[serde(default)]
    pub initial_q_s: f64,
    #[serde(default)]
    pub initial_compute_q_s: f64,
    #[serde(default)]
    pub battery: BatteryConfig,
    #[serde(default)]
    pub reduction: ReductionConfig,
    #[serde(default)]
    pub protocol: ProtocolConfig,
    #[serde(default)]
    pub workload: WorkloadConfig,
    #[serde(default)]
    pub instrumented_node: Option<u32>,
    /// Stop processing events after this time; `null` runs until idle.
    #[serde(default)]
    pub horizon_s: Option<f64>,
    #[serde(default = "default_trials")]
    pub trials: u32,
    #[serde(default = "default_seed")]
    pub seed: u64,
    /// Explicit per-trial seeds; overrides `seed` and `trials` when set.
    #[serde(default)]
    pub seeds: Option<Vec<u64>>,
}

fn default_eta() -> f64 {
    0.1
}

fn default_epsilon() -> f64 {
    0.1
}

fn default_trials() -> u32 {
    10
}

fn default_seed() -> u64 {
    1
}

fn secs(field: &str, v: f64) -> Result<SimTime, ConfigError> {
    if v >= 0.0 && v.is_finite() {
        Ok(SimTime::from_secs_f64(v))
    } else {
        Err(invalid(field, "must be a finite non-negative number of seconds"))
    }
}

impl ScenarioConfig {
    pub fn from_json(text: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(text)
    }

    /// Reads a config and inlines a file-referenced topology.
    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = fs::read_to_string(path).map_err(|source| ConfigError::Io { path: path.into(), source })?;
        let mut cfg = Self::from_json(&text).map_err(|source| ConfigError::Parse { path: path.into(), source })?;
        if let TopologySource::File(rel) = &cfg.topology {
            let topo_path = path.parent().unwrap_or(Path::new(".")).join(rel);
            let text = fs::read_to_string(&topo_path)
                .map_err(|source| ConfigError::Io { path: topo_path.clone(), source })?;
            let topo = serde_json::from_str(&text).map_err(|source| ConfigError::Parse { path: topo_path, source })?;
            cfg.topology = TopologySource::Inline(topo);
        }
        Ok(cfg)
    }

    pub fn topology_config(&self) -> Result<&TopologyConfig, ConfigError> {
        match &self.topology {
            TopologySource::Inline(t) => Ok(t),
            TopologySource::File(p) => Err(invalid("topology", format!("file {} was not loaded", p.display()))),
        }
    }

    /// Seeds of every trial, in order.
    pub fn trial_seeds(&self) -> Vec<u64> {
        match &self.seeds {
            Some(s) => s.clone(),
            None => (0..u64::from(self.trials)).map(|i| self.seed.wrapping_add(i)).collect(),
        }
    }

    /// Resolves and validates everything into a runnable scenario.
    pub fn to_scenario(&self) -> Result<Scenario, ConfigError> {
        if self.trials == 0 {
            return Err(invalid("trials", "must be at least 1"));
        }
        if self.seeds.as_ref().is_some_and(Vec::is_empty) {
            return Err(invalid("seeds", "must not be empty"));
        }
        let params = QParams::new(self.eta, self.epsilon, self.initial_q_s).map_err(|e| {
            let field = match e {
                eaqco_core::PolicyError::LearningRate(_) => "eta",
                eaqco_core::PolicyError::Exploration(_) => "epsilon",
                _ => "initial_q_s",
            };
            invalid(field, e)
        })?;
        let topology = self.topology_config()?.build()?;
        let node = |field: &str, label: u32| -> Result<NodeId, ConfigError> {
            topology.node_by_label(label).ok_or_else(|| invalid(field, format!("unknown node {label}")))
        };

        let policy = match self.policy {
            PolicyName::Static => {
                let routes = match &self.static_routes {
                    None => StaticRoutes::shortest_hops(&topology),
                    Some(table) => {
                        let mut rows = vec![BTreeMap::new(); topology.node_count()];
                        for (&x, row) in table {
                            let xi = node("static_routes", x)?;
                            for (&d, &next) in row {
                                rows[xi.index()].insert(node("static_routes", d)?, node("static_routes", next)?);
                            }
                        }
                        StaticRoutes::from_table(&topology, rows).map_err(|e| invalid("static_routes", e))?
                    }
                };
                PolicyKind::Static(routes)
            }
            PolicyName::Qrouting => PolicyKind::QRouting,
            PolicyName::Qco => PolicyKind::Qco,
            PolicyName::Eaqco => PolicyKind::Eaqco,
        };

        let b = &self.battery;
        let mut per_node = BTreeMap::new();
        for (&label, &c) in &b.per_node_capacity_j {
            per_node.insert(node("battery.per_node_capacity_j", label)?, c);
        }
        let mission = match b.mission_duration_s {
            None => MissionClock::Disabled,
            Some(d) => MissionClock::Linear { duration: secs("battery.mission_duration_s", d)? },
        };
        let battery = BatterySpec {
            capacity_j: b.capacity_j,
            per_node_capacity_j: per_node,
            initial_used_fraction: b.initial_used_fraction,
            mission,
            ef_floor: b.ef_floor,
            control_traffic_drains: b.control_traffic_drains,
            receive_j_per_bit: b.receive_j_per_bit,
        };

        let r = &self.reduction;
        let service = match r.service_s_per_bit {
            Some(s) if s >= 0.0 && s.is_finite() => ServiceModel::PerBit(s * 1e9),
            Some(_) => return Err(invalid("reduction.service_s_per_bit", "must be non-negative")),
            None => ServiceModel::Constant(secs("reduction.service_time_s", r.service_time_s)?),
        };
        let reduction = ReductionSpec::new(r.ratio, r.min_output_bits, service).map_err(|e| {
            let field = match e {
                eaqco_core::ComputeError::Ratio(_) => "reduction.ratio",
                _ => "reduction.min_output_bits",
            };
            invalid(field, e)
        })?;

        let p = &self.protocol;
        let protocol = ProtocolSpec {
            ping_bits: p.ping_bytes * 8,
            ack_base_bits: p.ack_base_bytes * 8,
            ack_bits_per_destination: p.ack_bytes_per_destination * 8,
            header_bits: p.header_bytes * 8,
            bootstrap_interval: secs("protocol.bootstrap_interval_s", p.bootstrap_interval_s)?,
            maintenance_ping_interval: p
                .maintenance_ping_interval_s
                .map(|v| secs("protocol.maintenance_ping_interval_s", v))
                .transpose()?,
            max_hops: p.max_hops,
        };

        let w = &self.workload;
        let mut segments = Vec::with_capacity(w.segments.len());
        for (i, s) in w.segments.iter().enumerate() {
            let load = match s.load {
                LoadConfig::PingsOnly => Load::PingsOnly,
                LoadConfig::MaxRate => Load::MaxRate,
                LoadConfig::Rate(r) => Load::Rate(r),
            };
            segments.push(Segment {
                start: secs(&format!("workload.segments[{i}].start_s"), s.start_s)?,
                end: secs(&format!("workload.segments[{i}].end_s"), s.end_s)?,
                load,
            });
        }
        let measured = match &w.measured {
            None => None,
            Some(m) => Some(MeasuredStream {
                source: node("workload.measured.source", m.source)?,
                destination: node("workload.measured.destination", m.destination)?,
                count: m.count,
                payload_bits: m.payload_bytes * 8,
                start: secs("workload.measured.start_s", m.start_s)?,
                interval: secs("workload.measured.interval_s", m.interval_s)?,
            }),
        };
        let generators = match &w.generators {
            Some(list) => list.iter().map(|&l| node("workload.generators", l)).collect::<Result<_, _>>()?,
            None => topology
                .nodes()
                .filter(|&n| measured.is_none_or(|m| n != m.source && n != m.destination))
                .collect(),
        };
        let workload = WorkloadSpec {
            segments,
            generators,
            background_payload_bits: w.background_payload_bytes * 8,
            ping_interval: secs("workload.ping_interval_s", w.ping_interval_s)?,
            measured,
        };

        let instrumented = self.instrumented_node.map(|l| node("instrumented_node", l)).transpose()?;
        let horizon = self.horizon_s.map(|h| secs("horizon_s", h)).transpose()?;

        let scenario = Scenario {
            topology,
            policy,
            params,
            initial_compute_q: self.initial_compute_q_s,
            battery,
            reduction,
            protocol,
            workload,
            instrumented,
            horizon,
        };
        scenario.validate().map_err(|e| match e {
            eaqco_core::ScenarioError::Invalid { field, reason } => invalid(field, reason),
        })?;
        Ok(scenario)
    }

    pub fn to_json_pretty(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }
}
