use alloc::collections::BTreeMap;
use alloc::vec::Vec;

use thiserror::Error;

use crate::compute::ReductionSpec;
use crate::energy::{BatteryState, EnergyError};
use crate::qpolicy::{PolicyKind, QParams};
use crate::types::{NodeId, SimTime, Topology};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ScenarioError {
    #[error("{field}: {reason}")]
    Invalid { field: &'static str, reason: &'static str },
}

fn invalid(field: &'static str, reason: &'static str) -> ScenarioError {
    ScenarioError::Invalid { field, reason }
}

/// Offered load of the background generators during one segment.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Load {
    /// Poisson arrivals at this many messages per second per generator.
    Rate(f64),
    /// Next message as soon as the previous one has left the generator.
    MaxRate,
    /// No data; every node pings its neighbors periodically.
    PingsOnly,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Segment {
    pub start: SimTime,
    pub end: SimTime,
    pub load: Load,
}

/// The source→destination stream whose deliveries and energy are measured.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeasuredStream {
    pub source: NodeId,
    pub destination: NodeId,
    pub count: u32,
    pub payload_bits: u64,
    pub start: SimTime,
    pub interval: SimTime,
}

impl MeasuredStream {
    pub fn end(&self) -> SimTime {
        self.start + SimTime(self.interval.0 * u64::from(self.count.saturating_sub(1)))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct WorkloadSpec {
    pub segments: Vec<Segment>,
    pub generators: Vec<NodeId>,
    pub background_payload_bits: u64,
    /// Ping period inside `PingsOnly` segments.
    pub ping_interval: SimTime,
    pub measured: Option<MeasuredStream>,
}

impl WorkloadSpec {
    pub fn segment_at(&self, t: SimTime) -> Option<&Segment> {
        self.segments.iter().find(|s| s.start <= t && t < s.end)
    }

    pub fn next_start_after(&self, t: SimTime) -> Option<SimTime> {
        self.segments.iter().map(|s| s.start).find(|&s| s > t)
    }

    /// Last time at which any workload is generated.
    pub fn end(&self) -> SimTime {
        let seg = self.segments.iter().map(|s| s.end).max().unwrap_or(SimTime::ZERO);
        let measured = self.measured.map_or(SimTime::ZERO, |m| m.end());
        seg.max(measured)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum MissionClock {
    Disabled,
    /// Remaining fraction falls linearly to zero over the mission.
    Linear { duration: SimTime },
}

impl MissionClock {
    pub fn remaining(&self, now: SimTime) -> f64 {
        match *self {
            MissionClock::Disabled => 1.0,
            MissionClock::Linear { duration } => {
                (1.0 - now.as_secs_f64() / duration.as_secs_f64()).clamp(0.0, 1.0)
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BatterySpec {
    pub capacity_j: f64,
    pub per_node_capacity_j: BTreeMap<NodeId, f64>,
    /// Fraction of every battery already consumed when the run starts.
    pub initial_used_fraction: f64,
    pub mission: MissionClock,
    pub ef_floor: Option<f64>,
    /// Whether pings and acknowledgements drain batteries.
    pub control_traffic_drains: bool,
    pub receive_j_per_bit: f64,
}

impl BatterySpec {
    pub fn capacity_for(&self, node: NodeId) -> f64 {
        self.per_node_capacity_j.get(&node).copied().unwrap_or(self.capacity_j)
    }

    pub fn battery_for(&self, node: NodeId) -> Result<BatteryState, EnergyError> {
        let capacity = self.capacity_for(node);
        Ok(BatteryState::new(capacity)?.with_consumed(capacity * self.initial_used_fraction))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProtocolSpec {
    pub ping_bits: u64,
    pub ack_base_bits: u64,
    pub ack_bits_per_destination: u64,
    /// Added to data payloads for energy accounting only.
    pub header_bits: u64,
    pub bootstrap_interval: SimTime,
    pub maintenance_ping_interval: Option<SimTime>,
    pub max_hops: u32,
}

/// A fully validated run description.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub topology: Topology,
    pub policy: PolicyKind,
    pub params: QParams,
    pub initial_compute_q: f64,
    pub battery: BatterySpec,
    pub reduction: ReductionSpec,
    pub protocol: ProtocolSpec,
    pub workload: WorkloadSpec,
    pub instrumented: Option<NodeId>,
    pub horizon: Option<SimTime>,
}

impl Scenario {
    pub fn validate(&self) -> Result<(), ScenarioError> {
        let topo = &self.topology;
        let n = topo.node_count() as u32;
        let in_range = |id: NodeId| id.0 < n;
        if n < 2 {
            return Err(invalid("topology", "need at least two nodes"));
        }
        if let PolicyKind::Static(routes) = &self.policy {
            routes.validate(topo).map_err(|_| invalid("static_routes", "routes must be loop-free over adjacent nodes"))?;
        }
        if !(self.initial_compute_q >= 0.0 && self.initial_compute_q.is_finite()) {
            return Err(invalid("initial_compute_q_s", "must be finite and non-negative"));
        }
        let b = &self.battery;
        if !(b.capacity_j > 0.0 && b.capacity_j.is_finite()) {
            return Err(invalid("battery.capacity_j", "must be positive"));
        }
        for (&node, &c) in &b.per_node_capacity_j {
            if !in_range(node) {
                return Err(invalid("battery.per_node_capacity_j", "unknown node"));
            }
            if !(c > 0.0 && c.is_finite()) {
                return Err(invalid("battery.per_node_capacity_j", "must be positive"));
            }
        }
        if !(0.0..1.0).contains(&b.initial_used_fraction) {
            return Err(invalid("battery.initial_used_fraction", "must lie in [0, 1)"));
        }
        if let Some(f) = b.ef_floor {
            if !(f >= 0.0 && f.is_finite()) {
                return Err(invalid("battery.ef_floor", "must be finite and non-negative"));
            }
        }
        if let MissionClock::Linear { duration } = b.mission {
            if duration == SimTime::ZERO {
                return Err(invalid("battery.mission_duration_s", "must be positive"));
            }
        }
        if !(b.receive_j_per_bit >= 0.0 && b.receive_j_per_bit.is_finite()) {
            return Err(invalid("battery.receive_j_per_bit", "must be non-negative"));
        }
        let p = &self.protocol;
        if p.ping_bits == 0 {
            return Err(invalid("protocol.ping_bytes", "must be positive"));
        }
        if p.ack_base_bits == 0 {
            return Err(invalid("protocol.ack_base_bytes", "must be positive"));
        }
        if p.bootstrap_interval == SimTime::ZERO {
            return Err(invalid("protocol.bootstrap_interval_s", "must be positive"));
        }
        if p.maintenance_ping_interval == Some(SimTime::ZERO) {
            return Err(invalid("protocol.maintenance_ping_interval_s", "must be positive"));
        }
        if p.max_hops == 0 {
            return Err(invalid("protocol.max_hops", "must be positive"));
        }
        let w = &self.workload;
        let mut prev_end = SimTime::ZERO;
        for seg in &w.segments {
            if seg.end <= seg.start {
                return Err(invalid("workload.segments", "segment end must follow its start"));
            }
            if seg.start < prev_end {
                return Err(invalid("workload.segments", "segments must be time-ordered and non-overlapping"));
            }
            prev_end = seg.end;
            if let Load::Rate(r) = seg.load {
                if !(r > 0.0 && r.is_finite()) {
                    return Err(invalid("workload.segments", "rate must be positive"));
                }
            }
        }
        if !w.generators.iter().copied().all(in_range) {
            return Err(invalid("workload.generators", "unknown node"));
        }
        if w.background_payload_bits == 0 {
            return Err(invalid("workload.background_payload_bytes", "must be positive"));
        }
        if w.segments.iter().any(|s| s.load == Load::PingsOnly) && w.ping_interval == SimTime::ZERO {
            return Err(invalid("workload.ping_interval_s", "must be positive"));
        }
        if let Some(m) = &w.measured {
            if !in_range(m.source) || !in_range(m.destination) {
                return Err(invalid("workload.measured", "unknown node"));
            }
            if m.source == m.destination {
                return Err(invalid("workload.measured", "source and destination must differ"));
            }
            if m.payload_bits == 0 {
                return Err(invalid("workload.measured.payload_bytes", "must be positive"));
            }
            if m.count > 1 && m.interval == SimTime::ZERO {
                return Err(invalid("workload.measured.interval_s", "must be positive"));
            }
        }
        if let Some(i) = self.instrumented {
            if !in_range(i) {
                return Err(invalid("instrumented_node", "unknown node"));
            }
        }
        Ok(())
    }
}
