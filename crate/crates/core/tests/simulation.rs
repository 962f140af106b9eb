mod common;

use common::{line, link, node, random_graph, scenario};
use eaqco_core::energy::expected_transmit_energy;
use eaqco_core::sim::{Load, MeasuredStream, Segment};
use eaqco_core::{run, PolicyKind, SimTime, Simulation, StaticRoutes, Topology};
use proptest::prelude::*;

fn static_policy(t: &Topology) -> PolicyKind {
    PolicyKind::Static(StaticRoutes::shortest_hops(t))
}

fn measured(t: &Topology, from: u32, to: u32, count: u32, start_s: f64, interval_s: f64) -> MeasuredStream {
    MeasuredStream {
        source: node(t, from),
        destination: node(t, to),
        count,
        payload_bits: 18_880,
        start: SimTime::from_secs_f64(start_s),
        interval: SimTime::from_secs_f64(interval_s),
    }
}

#[test]
fn two_node_run_delivers_one_message_in_one_hop() {
    let t = line(2, link(0.001, 1e6));
    let mut sc = scenario(t.clone(), static_policy(&t), 0.1, 0.0);
    sc.workload.measured = Some(measured(&t, 1, 2, 1, 1.0, 0.1));
    let trace = run(&sc, 1);
    assert_eq!(trace.deliveries.len(), 1);
    assert_eq!(trace.deliveries[0].hops, 1);
    assert!(trace.audit.is_clean(), "{:?}", trace.audit);
}

#[test]
fn arrival_time_follows_link_model() {
    // 18,880 b at 1 Mb/s plus 1 ms propagation
    let t = line(2, link(0.001, 1e6));
    let sc = scenario(t.clone(), static_policy(&t), 0.1, 0.0);
    let mut sim = Simulation::new(&sc, 1);
    sim.inject(SimTime::from_secs_f64(1.0), node(&t, 1), node(&t, 2), 18_880);
    sim.run_until_idle();
    let trace = sim.finish();
    assert_eq!(trace.deliveries[0].delivered_at, SimTime(1_019_880_000));
}

#[test]
fn back_to_back_messages_queue_on_the_link() {
    let t = line(2, link(0.001, 1e6));
    let sc = scenario(t.clone(), static_policy(&t), 0.1, 0.0);
    let mut sim = Simulation::new(&sc, 1);
    let at = SimTime::from_secs_f64(1.0);
    sim.inject(at, node(&t, 1), node(&t, 2), 18_880);
    sim.inject(at, node(&t, 1), node(&t, 2), 18_880);
    sim.run_until_idle();
    let trace = sim.finish();
    let times: Vec<_> = trace.deliveries.iter().map(|d| d.delivered_at).collect();
    assert_eq!(times, [SimTime(1_019_880_000), SimTime(1_038_760_000)]);
    assert!(trace.audit.is_clean());
}

#[test]
fn depleted_sender_drops_instead_of_sending() {
    let t = line(2, link(0.001, 1e6));
    let mut sc = scenario(t.clone(), static_policy(&t), 0.1, 0.0);
    let one = expected_transmit_energy(&link(0.001, 1e6).energy, 18_880);
    sc.battery.per_node_capacity_j.insert(node(&t, 1), one * 0.5);
    let mut sim = Simulation::new(&sc, 1);
    for i in 0..3 {
        sim.inject(SimTime::from_secs_f64(1.0 + f64::from(i)), node(&t, 1), node(&t, 2), 18_880);
    }
    sim.run_until_idle();
    let trace = sim.finish();
    assert_eq!(trace.deliveries.len(), 1);
    assert_eq!(trace.conservation.dropped_depleted, 2);
    assert!(trace.conservation.balances());
    assert_eq!(trace.ledger.measured.transmissions, 1);
    assert!(trace.audit.is_clean());
}

#[test]
fn bootstrap_reaches_across_a_line() {
    let t = line(3, link(0.001, 1e6));
    let sc = scenario(t.clone(), PolicyKind::QRouting, 0.1, 0.0);
    let mut sim = Simulation::new(&sc, 1);
    assert_eq!(sim.bootstrap_end(), SimTime::from_millis(200));
    sim.run_until(SimTime::from_millis(300));
    let (a, b, c) = (node(&t, 1), node(&t, 2), node(&t, 3));
    assert!(sim.node(a).qtable.entry(b, c).is_some());
    assert!(sim.node(c).qtable.entry(b, a).is_some());
    for n in t.nodes() {
        for d in t.nodes().filter(|&d| d != n) {
            assert!(sim.node(n).qtable.knows(d), "{n} does not know {d}");
        }
    }
}

#[test]
fn triangle_learns_the_faster_two_hop_path() {
    let (fast, slow) = (link(0.005, 1e6), link(0.05, 1e6));
    let t = Topology::new(vec![1, 2, 3], vec![(1, 2, fast.clone()), (2, 3, fast), (1, 3, slow)]).unwrap();
    let mut sc = scenario(t.clone(), PolicyKind::QRouting, 0.1, 0.0);
    sc.workload.measured = Some(measured(&t, 1, 3, 60, 1.0, 0.1));
    let mut sim = Simulation::new(&sc, 3);
    sim.schedule_workload();
    sim.run_until_idle();
    let (a, b, c) = (node(&t, 1), node(&t, 2), node(&t, 3));
    assert_eq!(sim.node(a).qtable.lookup_min(c).unwrap().0, b);
    let trace = sim.finish();
    assert_eq!(trace.deliveries.len(), 60);
    assert!(trace.deliveries[40..].iter().all(|d| d.hops == 2));
}

fn busy_scenario(policy: PolicyKind, t: &Topology) -> eaqco_core::Scenario {
    let mut sc = scenario(t.clone(), policy, 0.1, 0.1);
    sc.workload.segments = vec![Segment { start: SimTime::ZERO, end: SimTime::from_secs_f64(2.0), load: Load::Rate(40.0) }];
    sc.workload.generators = t.nodes().collect();
    sc.workload.measured = Some(measured(t, 1, 4, 50, 0.5, 0.02));
    sc.instrumented = Some(node(t, 1));
    sc
}

#[test]
fn same_seed_same_trace() {
    let t = random_graph(11, 6, 0.3, 500..5000, 2e6);
    let sc = busy_scenario(PolicyKind::Eaqco, &t);
    let a = run(&sc, 42);
    let b = run(&sc, 42);
    assert_eq!(a, b);
    let c = run(&sc, 43);
    assert_ne!(a.deliveries, c.deliveries);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn audits_hold_across_policies_and_graphs(
        graph_seed in any::<u64>(),
        n in 4u32..=7,
        policy_ix in 0usize..4,
        rate in 5.0f64..200.0,
        capacity in prop_oneof![Just(1e9), 2.0f64..40.0],
        seed in any::<u64>(),
    ) {
        let t = random_graph(graph_seed, n, 0.3, 200..3000, 2e6);
        let policy = match policy_ix {
            0 => static_policy(&t),
            1 => PolicyKind::QRouting,
            2 => PolicyKind::Qco,
            _ => PolicyKind::Eaqco,
        };
        let mut sc = busy_scenario(policy, &t);
        sc.workload.segments[0].load = Load::Rate(rate);
        sc.battery.capacity_j = capacity;
        sc.reduction = eaqco_core::ReductionSpec::new(
            0.001, 512, eaqco_core::ServiceModel::Constant(SimTime::from_millis(5))).unwrap();
        let trace = run(&sc, seed);
        prop_assert!(trace.audit.is_clean(), "{:?}", trace.audit);
        prop_assert!(trace.conservation.balances());
        prop_assert_eq!(trace.conservation.residual, 0);
        prop_assert!(trace.measured.balances());
        for d in &trace.deliveries {
            prop_assert!(d.delivered_bits <= d.origin_bits);
            prop_assert!(d.delivered_at >= d.created_at);
        }
        for (i, &used) in trace.final_batt_used.iter().enumerate() {
            prop_assert!((0.0..=1.0).contains(&used), "node {} used {}", i, used);
        }
    }
}
