use alloc::collections::BTreeMap;
use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::event::{EventKind, EventQueue, PingRepeat, Stream};
use super::scenario::{Load, Scenario};
use crate::compute::ComputeQueue;
use crate::energy::{energy_factor, expected_transmit_energy, BatteryState};
use crate::metrics::{
    ActionRecord, AuditReport, Conservation, DeliveryRecord, DropReason, EnergyLedger, QTraceSample, StreamTotals,
    TraceSet,
};
use crate::qpolicy::{static_next_hop, PolicyError, PolicyKind, QAdvertisement, QTable};
use crate::types::{Action, Message, MessageId, NodeId, SimTime};

// Retry gap for a max-rate generator whose message never reached a link.
const GENERATOR_RETRY: SimTime = SimTime(1_000);

/// Runtime state of one simulated node.
#[derive(Debug, Clone)]
pub struct NodeState {
    pub id: NodeId,
    pub qtable: QTable,
    pub battery: BatteryState,
    pub compute_queue: ComputeQueue,
    /// Reduction of raw data that reaches this node as its destination.
    pub destination_queue: ComputeQueue,
    pub link_busy_until: BTreeMap<NodeId, SimTime>,
}

// Per-message bookkeeping used by the time and energy audits.
#[derive(Debug, Clone, Default)]
struct MessageAudit {
    created_at: SimTime,
    origin_bits: u64,
    measured: bool,
    transmits: u32,
    link_wait: u64,
    serialization: u64,
    propagation: u64,
    compute_wait: u64,
    compute_service: u64,
    bits_hops: u64,
    joules: f64,
    arrived_bits: u64,
    compute_nodes: Vec<NodeId>,
}

impl MessageAudit {
    fn accounted(&self) -> u64 {
        self.link_wait + self.serialization + self.propagation + self.compute_wait + self.compute_service
    }
}

/// Deterministic discrete-event simulation of one trial.
pub struct Simulation<'a> {
    scenario: &'a Scenario,
    now: SimTime,
    events: EventQueue,
    nodes: Vec<NodeState>,
    rng: ChaCha8Rng,
    seed: u64,
    next_message: u64,
    measured_remaining: u32,
    outstanding: BTreeMap<MessageId, MessageAudit>,
    generator_pending: BTreeMap<MessageId, NodeId>,
    finished_bits_hops: u64,
    finished_joules: f64,
    ledger: EnergyLedger,
    conservation: Conservation,
    measured: Conservation,
    deliveries: Vec<DeliveryRecord>,
    qtrace: Vec<QTraceSample>,
    actions: Vec<ActionRecord>,
    time_mismatches: u64,
    hop_mismatches: u64,
    battery_violations: u64,
    q_violations: u64,
    events_processed: u64,
}

/// Runs `scenario` to completion with `seed`.
pub fn run(scenario: &Scenario, seed: u64) -> TraceSet {
    let mut sim = Simulation::new(scenario, seed);
    sim.schedule_workload();
    sim.run_until_idle();
    sim.finish()
}

impl<'a> Simulation<'a> {
    /// Builds node state and schedules the bootstrap ping rounds; workload
    /// is added separately by [`schedule_workload`](Self::schedule_workload)
    /// or by injecting messages.
    pub fn new(scenario: &'a Scenario, seed: u64) -> Self {
        let topo = &scenario.topology;
        let service = scenario.reduction.service();
        let nodes = topo
            .nodes()
            .map(|id| NodeState {
                id,
                qtable: QTable::new(topo.neighbors(id).collect(), scenario.params, scenario.initial_compute_q),
                battery: scenario
                    .battery
                    .battery_for(id)
                    .expect("scenario validation guarantees positive capacities"),
                compute_queue: ComputeQueue::new(service),
                destination_queue: ComputeQueue::new(service),
                link_busy_until: topo.neighbors(id).map(|n| (n, SimTime::ZERO)).collect(),
            })
            .collect();
        let mut sim = Simulation {
            scenario,
            now: SimTime::ZERO,
            events: EventQueue::new(),
            nodes,
            rng: ChaCha8Rng::seed_from_u64(seed),
            seed,
            next_message: 0,
            measured_remaining: 0,
            outstanding: BTreeMap::new(),
            generator_pending: BTreeMap::new(),
            finished_bits_hops: 0,
            finished_joules: 0.0,
            ledger: EnergyLedger::default(),
            conservation: Conservation::default(),
            measured: Conservation::default(),
            deliveries: Vec::new(),
            qtrace: Vec::new(),
            actions: Vec::new(),
            time_mismatches: 0,
            hop_mismatches: 0,
            battery_violations: 0,
            q_violations: 0,
            events_processed: 0,
        };
        sim.schedule_bootstrap();
        sim
    }

    /// One ping round per hop of the network diameter, so every node learns
    /// every reachable destination before data flows.
    fn schedule_bootstrap(&mut self) {
        let rounds = self.scenario.topology.diameter();
        let interval = self.scenario.protocol.bootstrap_interval;
        for round in 0..u64::from(rounds) {
            for node in self.scenario.topology.nodes() {
                self.events.push(SimTime(interval.0 * round), EventKind::PingRound { node, repeat: None });
            }
        }
    }

    pub fn bootstrap_end(&self) -> SimTime {
        let p = &self.scenario.protocol;
        SimTime(p.bootstrap_interval.0 * u64::from(self.scenario.topology.diameter()))
    }

    pub fn schedule_workload(&mut self) {
        let w = &self.scenario.workload;
        if let Some(m) = w.measured {
            self.measured_remaining = m.count;
            if m.count > 0 {
                self.events.push(m.start, EventKind::WorkloadTick { node: m.source, stream: Stream::Measured });
            }
        }
        if let Some(first) = w.segments.first() {
            for &g in &w.generators {
                self.events.push(first.start, EventKind::WorkloadTick { node: g, stream: Stream::Background });
            }
        }
        for seg in &w.segments {
            if seg.load == Load::PingsOnly {
                let repeat = Some(PingRepeat { interval: w.ping_interval, until: seg.end });
                for node in self.scenario.topology.nodes() {
                    self.events.push(seg.start, EventKind::PingRound { node, repeat });
                }
            }
        }
        if let Some(interval) = self.scenario.protocol.maintenance_ping_interval {
            let until = self.scenario.workload.end();
            let start = self.bootstrap_end();
            if start < until {
                let repeat = Some(PingRepeat { interval, until });
                for node in self.scenario.topology.nodes() {
                    self.events.push(start, EventKind::PingRound { node, repeat });
                }
            }
        }
    }

    /// Originates a data message at `source` at time `at`. Injected
    /// messages count as measured traffic, so they appear in `deliveries`.
    pub fn inject(&mut self, at: SimTime, source: NodeId, destination: NodeId, payload_bits: u64) -> MessageId {
        let id = self.allocate_id();
        let msg = Message::data(id, source, destination, payload_bits, at, true).expect("payload is non-zero");
        self.events.push(at, EventKind::MessageArrival { node: source, from: source, sent_at: at, message: msg });
        id
    }

    pub fn now(&self) -> SimTime {
        self.now
    }

    pub fn nodes(&self) -> &[NodeState] {
        &self.nodes
    }

    pub fn node(&self, id: NodeId) -> &NodeState {
        &self.nodes[id.index()]
    }

    pub fn pending_events(&self) -> usize {
        self.events.len()
    }

    /// Processes events until the queue drains or the horizon passes.
    pub fn run_until_idle(&mut self) {
        while let Some(t) = self.events.peek_time() {
            if self.scenario.horizon.is_some_and(|h| t > h) {
                break;
            }
            self.step();
        }
    }

    /// Processes events with time ≤ `t`.
    pub fn run_until(&mut self, t: SimTime) {
        while self.events.peek_time().is_some_and(|next| next <= t) {
            self.step();
        }
        self.now = self.now.max(t);
    }

    fn step(&mut self) {
        let Some(event) = self.events.pop() else { return };
        debug_assert!(event.time >= self.now);
        self.now = event.time;
        self.events_processed += 1;
        match event.kind {
            EventKind::MessageArrival { node, from, sent_at, message } => {
                if from == node {
                    self.originate(message);
                } else {
                    self.on_arrival(node, from, sent_at, message);
                }
            }
            EventKind::AckArrival { node, advertisement, subject: _, destination, is_ping } => {
                self.on_ack(node, &advertisement, destination, is_ping)
            }
            EventKind::ComputeDone { node, message, at_destination } => {
                self.on_compute_done(node, message, at_destination)
            }
            EventKind::WorkloadTick { node, stream: Stream::Measured } => self.on_measured_tick(node),
            EventKind::WorkloadTick { node, stream: Stream::Background } => self.on_background_tick(node),
            EventKind::PingRound { node, repeat } => self.on_ping_round(node, repeat),
        }
    }

    fn allocate_id(&mut self) -> MessageId {
        let id = MessageId(self.next_message);
        self.next_message += 1;
        id
    }

    fn on_measured_tick(&mut self, source: NodeId) {
        let Some(m) = self.scenario.workload.measured else { return };
        if self.measured_remaining == 0 || self.nodes[source.index()].battery.is_depleted() {
            return;
        }
        self.measured_remaining -= 1;
        let id = self.allocate_id();
        let msg = Message::data(id, source, m.destination, m.payload_bits, self.now, true)
            .expect("validated payload size");
        if self.measured_remaining > 0 {
            self.events.push(self.now + m.interval, EventKind::WorkloadTick { node: source, stream: Stream::Measured });
        }
        self.originate(msg);
    }

    fn on_background_tick(&mut self, g: NodeId) {
        if self.nodes[g.index()].battery.is_depleted() {
            return;
        }
        let w = &self.scenario.workload;
        let Some(seg) = w.segment_at(self.now).copied() else {
            if let Some(next) = w.next_start_after(self.now) {
                self.events.push(next, EventKind::WorkloadTick { node: g, stream: Stream::Background });
            }
            return;
        };
        match seg.load {
            Load::PingsOnly => {
                self.events.push(seg.end, EventKind::WorkloadTick { node: g, stream: Stream::Background });
            }
            Load::Rate(rate) => {
                let u: f64 = self.rng.gen();
                let gap = SimTime::from_secs_f64(-libm::log(1.0 - u) / rate).max(SimTime(1));
                self.events.push(self.now + gap, EventKind::WorkloadTick { node: g, stream: Stream::Background });
                let msg = self.background_message(g);
                self.originate(msg);
            }
            Load::MaxRate => {
                let msg = self.background_message(g);
                self.generator_pending.insert(msg.id(), g);
                self.originate(msg);
            }
        }
    }

    fn background_message(&mut self, g: NodeId) -> Message {
        let n = self.scenario.topology.node_count() as u32;
        let mut d = self.rng.gen_range(0..n - 1);
        if d >= g.0 {
            d += 1;
        }
        let id = self.allocate_id();
        Message::data(id, g, NodeId(d), self.scenario.workload.background_payload_bits, self.now, false)
            .expect("validated payload size")
    }

    fn originate(&mut self, msg: Message) {
        self.conservation.originated += 1;
        if msg.is_measured() {
            self.measured.originated += 1;
        }
        self.outstanding.insert(
            msg.id(),
            MessageAudit {
                created_at: msg.created_at(),
                origin_bits: msg.payload_bits(),
                measured: msg.is_measured(),
                ..Default::default()
            },
        );
        let at = msg.source();
        if msg.destination() == at {
            self.deliver(at, msg);
            return;
        }
        self.route(at, msg);
    }

    fn on_ping_round(&mut self, node: NodeId, repeat: Option<PingRepeat>) {
        if let Some(r) = repeat {
            let next = self.now + r.interval;
            if next < r.until {
                self.events.push(next, EventKind::PingRound { node, repeat });
            }
        }
        if self.nodes[node.index()].battery.is_depleted() {
            return;
        }
        let neighbors: Vec<NodeId> = self.scenario.topology.neighbors(node).collect();
        for y in neighbors {
            let id = self.allocate_id();
            let ping = Message::ping(id, node, y, self.scenario.protocol.ping_bits, self.now).expect("validated");
            self.transmit(node, y, ping);
        }
    }

    fn ef_for(&mut self, node: NodeId) -> f64 {
        if !self.scenario.policy.energy_aware() {
            return 1.0;
        }
        let battery = &mut self.nodes[node.index()].battery;
        let remaining = self.scenario.battery.mission.remaining(self.now);
        battery.set_msn_remain(remaining).expect("mission fraction is clamped to [0, 1]");
        let ef = energy_factor(battery);
        self.scenario.battery.ef_floor.map_or(ef, |f| ef.max(f))
    }

    fn route(&mut self, at: NodeId, msg: Message) {
        let offload = self.scenario.policy.offloads();
        let (action, values) = match &self.scenario.policy {
            PolicyKind::Static(routes) => match static_next_hop(routes.for_node(at), msg.destination()) {
                Ok(a) => (a, None),
                Err(_) => return self.drop_message(msg, DropReason::UnknownDestination),
            },
            _ => {
                let table = &self.nodes[at.index()].qtable;
                if !table.knows(msg.destination()) {
                    return self.drop_message(msg, DropReason::UnknownDestination);
                }
                let values = table.action_values(&msg, offload);
                let action = table.choose(&values, &mut self.rng);
                (action, Some(values))
            }
        };
        self.actions.push(ActionRecord {
            time: self.now,
            node: at,
            message: msg.id(),
            destination: msg.destination(),
            action,
            measured: msg.is_measured(),
        });
        if self.scenario.instrumented == Some(at) {
            self.sample(at, &msg, action, values);
        }
        match action {
            Action::Forward(next) => self.transmit(at, next, msg),
            Action::ComputeLocally => self.start_compute(at, msg),
        }
    }

    fn sample(&mut self, at: NodeId, msg: &Message, chosen: Action, values: Option<Vec<(Action, f64)>>) {
        let table = &self.nodes[at.index()].qtable;
        let mut values = values.unwrap_or_else(|| table.action_values(msg, false));
        let compute_eligible = values.iter().any(|(a, _)| *a == Action::ComputeLocally);
        if !compute_eligible {
            values.push((Action::ComputeLocally, table.compute_q()));
        }
        let batt_used = self.nodes[at.index()].battery.batt_used();
        let energy_factor = self.ef_for(at);
        self.qtrace.push(QTraceSample {
            time: self.now,
            node: at,
            destination: msg.destination(),
            message: msg.id(),
            values,
            chosen,
            compute_eligible,
            batt_used,
            energy_factor,
        });
    }

    fn start_compute(&mut self, at: NodeId, msg: Message) {
        let id = msg.id();
        let node = &mut self.nodes[at.index()];
        let queued = node.compute_queue.enqueue(msg, self.now).expect("compute offered only for unreduced data");
        let q = node.qtable.update_compute(queued.observed.as_secs_f64());
        if !(q >= 0.0 && q.is_finite()) {
            self.q_violations += 1;
        }
        if let Some(audit) = self.outstanding.get_mut(&id) {
            audit.compute_wait += queued.wait.0;
            audit.compute_service += queued.service.0;
            audit.compute_nodes.push(at);
        }
        self.events.push(queued.completion, EventKind::ComputeDone { node: at, message: id, at_destination: false });
    }

    fn on_compute_done(&mut self, at: NodeId, id: MessageId, at_destination: bool) {
        let reduction = self.scenario.reduction;
        let node = &mut self.nodes[at.index()];
        let queue = if at_destination { &mut node.destination_queue } else { &mut node.compute_queue };
        let (reduced, _) = queue.complete(self.now, &reduction).expect("compute events fire in FIFO order");
        debug_assert_eq!(reduced.id(), id);
        if at_destination {
            // delivered size is the size on arrival, before the final reduction
            let arrived_bits = self.outstanding.get(&id).map_or(0, |a| a.arrived_bits);
            self.deliver_with_bits(at, reduced, arrived_bits);
        } else if reduced.destination() == at {
            self.deliver(at, reduced);
        } else {
            self.route(at, reduced);
        }
    }

    fn transmit(&mut self, from: NodeId, to: NodeId, mut msg: Message) {
        if self.nodes[from.index()].battery.is_depleted() {
            if msg.is_ping() {
                return;
            }
            return self.drop_message(msg, DropReason::Depleted);
        }
        let spec = self.scenario.topology.link_between(from, to).expect("forward targets are neighbors");
        let bits = msg.payload_bits();
        let serialization = spec.serialization_time(bits);
        let node = &mut self.nodes[from.index()];
        let busy = node.link_busy_until.get_mut(&to).expect("link state for every neighbor");
        let departure = self.now.max(*busy);
        *busy = departure + serialization;
        let arrival = departure + serialization + spec.propagation_delay;

        let joules = expected_transmit_energy(&spec.energy, bits + self.scenario.protocol.header_bits);
        if !msg.is_ping() || self.scenario.battery.control_traffic_drains {
            self.drain(from, joules);
        }
        if msg.is_ping() {
            self.ledger.control.record(bits, joules);
        } else if msg.is_measured() {
            self.ledger.measured.record(bits, joules);
        } else {
            self.ledger.background.record(bits, joules);
        }

        msg.record_hop();
        if let Some(audit) = self.outstanding.get_mut(&msg.id()) {
            audit.transmits += 1;
            audit.link_wait += (departure - self.now).0;
            audit.serialization += serialization.0;
            audit.propagation += spec.propagation_delay.0;
            audit.bits_hops += bits;
            audit.joules += joules;
        }
        if let Some(g) = self.generator_pending.remove(&msg.id()) {
            self.events.push(departure + serialization, EventKind::WorkloadTick { node: g, stream: Stream::Background });
        }
        self.events.push(arrival, EventKind::MessageArrival { node: to, from, sent_at: self.now, message: msg });
    }

    fn drain(&mut self, node: NodeId, joules: f64) {
        let battery = &mut self.nodes[node.index()].battery;
        let before = battery.consumed();
        battery.drain(joules);
        if battery.consumed() < before || battery.consumed() > battery.capacity() {
            self.battery_violations += 1;
        }
    }

    fn on_arrival(&mut self, at: NodeId, from: NodeId, sent_at: SimTime, msg: Message) {
        let depleted = self.nodes[at.index()].battery.is_depleted();
        if msg.is_ping() {
            if !depleted {
                self.send_ack(at, from, sent_at, &msg);
            }
            return;
        }
        let receive = self.scenario.battery.receive_j_per_bit * msg.payload_bits() as f64;
        if receive > 0.0 {
            self.drain(at, receive);
        }
        if depleted && msg.destination() != at {
            return self.drop_message(msg, DropReason::Depleted);
        }
        if !depleted {
            self.send_ack(at, from, sent_at, &msg);
        }
        if msg.destination() == at {
            if msg.is_computed() {
                self.deliver(at, msg);
            } else {
                self.destination_compute(at, msg);
            }
            return;
        }
        if msg.hops_taken() >= self.scenario.protocol.max_hops {
            return self.drop_message(msg, DropReason::HopLimit);
        }
        self.route(at, msg);
    }

    fn destination_compute(&mut self, at: NodeId, msg: Message) {
        let id = msg.id();
        let bits = msg.payload_bits();
        let queued = self.nodes[at.index()]
            .destination_queue
            .enqueue(msg, self.now)
            .expect("only unreduced data reaches the destination queue");
        if let Some(audit) = self.outstanding.get_mut(&id) {
            audit.compute_wait += queued.wait.0;
            audit.compute_service += queued.service.0;
            audit.arrived_bits = bits;
        }
        self.events.push(queued.completion, EventKind::ComputeDone { node: at, message: id, at_destination: true });
    }

    /// Acknowledges a received message with the one-way time and the
    /// receiver's advertisement. Acks take priority over queued data but
    /// still occupy the reverse link for their serialization time.
    fn send_ack(&mut self, at: NodeId, to: NodeId, sent_at: SimTime, subject: &Message) {
        let p = &self.scenario.protocol;
        let offload = self.scenario.policy.offloads();
        let one_way = (self.now - sent_at).as_secs_f64();
        let adv = self.nodes[at.index()].qtable.make_advertisement(at, one_way, offload);
        let bits = p.ack_base_bits + p.ack_bits_per_destination * adv.best_to.len() as u64;
        let spec = self.scenario.topology.link_between(at, to).expect("acks return over the arrival link");
        let serialization = spec.serialization_time(bits);
        let arrival = self.now + serialization + spec.propagation_delay;
        let joules = expected_transmit_energy(&spec.energy, bits);
        if self.scenario.battery.control_traffic_drains {
            self.drain(at, joules);
        }
        self.ledger.control.record(bits, joules);
        let busy = self.nodes[at.index()].link_busy_until.get_mut(&to).expect("link state for every neighbor");
        *busy = (*busy).max(self.now) + serialization;
        self.events.push(
            arrival,
            EventKind::AckArrival {
                node: to,
                advertisement: adv,
                subject: subject.id(),
                destination: subject.destination(),
                is_ping: subject.is_ping(),
            },
        );
    }

    fn on_ack(&mut self, at: NodeId, adv: &QAdvertisement, destination: NodeId, is_ping: bool) {
        if !self.scenario.policy.learns() {
            return;
        }
        let ef = self.ef_for(at);
        let table = &mut self.nodes[at.index()].qtable;
        let result = if is_ping {
            table.absorb(at, adv, ef).map(|_| ())
        } else {
            match table.update_forward(adv.sender, destination, adv, ef) {
                Ok(v) if !(v >= 0.0 && v.is_finite()) => {
                    self.q_violations += 1;
                    Ok(())
                }
                Ok(_) | Err(PolicyError::UnknownDestination(_)) => Ok(()),
                Err(e) => Err(e),
            }
        };
        if result.is_err() {
            self.q_violations += 1;
        }
    }

    fn deliver(&mut self, at: NodeId, msg: Message) {
        let bits = msg.payload_bits();
        self.deliver_with_bits(at, msg, bits);
    }

    fn deliver_with_bits(&mut self, at: NodeId, msg: Message, delivered_bits: u64) {
        debug_assert_eq!(msg.destination(), at);
        let Some(audit) = self.outstanding.remove(&msg.id()) else { return };
        let latency = (self.now - audit.created_at).0;
        if latency != audit.accounted() {
            self.time_mismatches += 1;
        }
        if msg.hops_taken() != audit.transmits {
            self.hop_mismatches += 1;
        }
        self.conservation.delivered += 1;
        if audit.measured {
            self.measured.delivered += 1;
            self.deliveries.push(DeliveryRecord {
                message: msg.id(),
                created_at: audit.created_at,
                delivered_at: self.now,
                hops: msg.hops_taken(),
                origin_bits: audit.origin_bits,
                delivered_bits,
                compute_nodes: audit.compute_nodes.clone(),
            });
        }
        self.retire(&audit);
    }

    fn drop_message(&mut self, msg: Message, reason: DropReason) {
        if let Some(g) = self.generator_pending.remove(&msg.id()) {
            self.events.push(self.now + GENERATOR_RETRY, EventKind::WorkloadTick { node: g, stream: Stream::Background });
        }
        let Some(audit) = self.outstanding.remove(&msg.id()) else { return };
        self.conservation.record_drop(reason);
        if audit.measured {
            self.measured.record_drop(reason);
        }
        self.retire(&audit);
    }

    fn retire(&mut self, audit: &MessageAudit) {
        self.finished_bits_hops += audit.bits_hops;
        self.finished_joules += audit.joules;
    }

    /// Closes the run and produces the trace with its audit report.
    pub fn finish(mut self) -> TraceSet {
        let mut bits = self.finished_bits_hops;
        let mut joules = self.finished_joules;
        let mut residual = Conservation::default();
        for audit in self.outstanding.values() {
            bits += audit.bits_hops;
            joules += audit.joules;
            residual.residual += 1;
            if audit.measured {
                self.measured.residual += 1;
            }
        }
        self.conservation.residual = residual.residual;
        let data = StreamTotals {
            bits_hops: self.ledger.measured.bits_hops + self.ledger.background.bits_hops,
            joules: self.ledger.measured.joules + self.ledger.background.joules,
            ..Default::default()
        };
        self.ledger.measured.messages = self.measured.originated;
        self.ledger.background.messages = self.conservation.originated - self.measured.originated;
        let joules_agree = (data.joules - joules).abs() <= 1e-9 * data.joules.abs().max(1.0);
        let q_violations = self.q_violations + self.nodes.iter().filter(|n| !n.qtable.is_consistent()).count() as u64;
        let audit = AuditReport {
            time_mismatches: self.time_mismatches,
            hop_mismatches: self.hop_mismatches,
            energy_bits_agree: data.bits_hops == bits,
            energy_joules_agree: joules_agree,
            battery_violations: self.battery_violations,
            q_violations,
            conservation_ok: self.conservation.balances() && self.measured.balances(),
        };
        TraceSet {
            seed: self.seed,
            end_time: self.now,
            deliveries: self.deliveries,
            qtrace: self.qtrace,
            actions: self.actions,
            ledger: self.ledger,
            conservation: self.conservation,
            measured: self.measured,
            audit,
            final_batt_used: self.nodes.iter().map(|n| n.battery.batt_used()).collect(),
            events_processed: self.events_processed,
        }
    }
}
