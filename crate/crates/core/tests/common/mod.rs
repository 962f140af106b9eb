#![allow(dead_code)]

use std::collections::BTreeMap;

use eaqco_core::energy::LinkEnergyParams;
use eaqco_core::sim::{BatterySpec, MissionClock, ProtocolSpec, WorkloadSpec};
use eaqco_core::types::LinkSpec;
use eaqco_core::{NodeId, PolicyKind, QParams, ReductionSpec, Scenario, ServiceModel, SimTime, Topology};

pub fn link(propagation_s: f64, bandwidth_bps: f64) -> LinkSpec {
    LinkSpec {
        propagation_delay: SimTime::from_secs_f64(propagation_s),
        bandwidth_bps,
        energy: LinkEnergyParams::lorawan_like(),
    }
}

/// Nodes labelled 1..=n joined in a chain.
pub fn line(n: u32, spec: LinkSpec) -> Topology {
    let links = (1..n).map(|i| (i, i + 1, spec.clone())).collect();
    Topology::new((1..=n).collect(), links).unwrap()
}

pub fn node(t: &Topology, label: u32) -> NodeId {
    t.node_by_label(label).unwrap()
}

/// A quiet scenario with no workload: effectively unlimited batteries,
/// instant destination compute and small control frames.
pub fn scenario(topology: Topology, policy: PolicyKind, eta: f64, epsilon: f64) -> Scenario {
    Scenario {
        topology,
        policy,
        params: QParams::new(eta, epsilon, 0.0).unwrap(),
        initial_compute_q: 0.0,
        battery: BatterySpec {
            capacity_j: 1e12,
            per_node_capacity_j: BTreeMap::new(),
            initial_used_fraction: 0.0,
            mission: MissionClock::Disabled,
            ef_floor: None,
            control_traffic_drains: false,
            receive_j_per_bit: 0.0,
        },
        reduction: ReductionSpec::new(0.001, 512, ServiceModel::Constant(SimTime::ZERO)).unwrap(),
        protocol: ProtocolSpec {
            ping_bits: 512,
            ack_base_bits: 512,
            ack_bits_per_destination: 128,
            header_bits: 0,
            bootstrap_interval: SimTime::from_millis(100),
            maintenance_ping_interval: None,
            max_hops: 64,
        },
        workload: WorkloadSpec {
            segments: Vec::new(),
            generators: Vec::new(),
            background_payload_bits: 18_880,
            ping_interval: SimTime::from_millis(1000),
            measured: None,
        },
        instrumented: None,
        horizon: None,
    }
}

/// Connected graph on labels 1..=n: a random spanning tree plus each
/// remaining pair with probability `extra`. Propagation delays are drawn
/// uniformly from `delay_us` microseconds.
pub fn random_graph(seed: u64, n: u32, extra: f64, delay_us: std::ops::Range<u64>, bandwidth_bps: f64) -> Topology {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let spec = |rng: &mut rand_chacha::ChaCha8Rng| LinkSpec {
        propagation_delay: SimTime(rng.gen_range(delay_us.clone()) * 1000),
        bandwidth_bps,
        energy: LinkEnergyParams::lorawan_like(),
    };
    let mut pairs = std::collections::BTreeSet::new();
    let mut links = Vec::new();
    for i in 2..=n {
        let j = rng.gen_range(1..i);
        pairs.insert((j, i));
        let s = spec(&mut rng);
        links.push((j, i, s));
    }
    for a in 1..=n {
        for b in a + 1..=n {
            if !pairs.contains(&(a, b)) && rng.gen_bool(extra) {
                let s = spec(&mut rng);
                links.push((a, b, s));
            }
        }
    }
    Topology::new((1..=n).collect(), links).unwrap()
}
