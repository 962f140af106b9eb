//! Q-table maintenance, action selection and the static-route baseline.
//!
//! A node `x` keeps `Q_x(y, d)`, its estimate of the time to deliver a
//! message to `d` when handing it to neighbor `y`, plus a single scalar
//! estimate for reducing the message in place. Estimates move toward the
//! target `ef · q_y + best_y(d)` at learning rate `η`, where `q_y` is the
//! acknowledged one-way time to `y`, `best_y(d)` is the minimum `y`
//! advertised for `d` (its own compute estimate included), and `ef` is the
//! energy factor (1 for the energy-agnostic policies).

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::vec::Vec;

use rand::Rng;
use thiserror::Error;

use crate::types::{Action, Message, NodeId, Topology};

#[derive(Debug, Clone, Copy, PartialEq, Error)]
pub enum PolicyError {
    #[error("node has no neighbors")]
    NoNeighbors,
    #[error("no eligible action")]
    NoEligibleAction,
    #[error("advertisement carries no estimate for destination {0}")]
    UnknownDestination(NodeId),
    #[error("{0} is not a neighbor of this node")]
    NotNeighbor(NodeId),
    #[error("advertisement from {sender} applied to neighbor {neighbor}")]
    SenderMismatch { sender: NodeId, neighbor: NodeId },
    #[error("no static route to destination {0}")]
    NoRoute(NodeId),
    #[error("learning rate must lie in (0, 1], got {0}")]
    LearningRate(f64),
    #[error("exploration must lie in [0, 1], got {0}")]
    Exploration(f64),
    #[error("{0} must be finite and non-negative")]
    NegativeEstimate(&'static str),
    #[error("static routes loop or dead-end from {from} toward {destination}")]
    RouteLoop { from: NodeId, destination: NodeId },
    #[error("static route from {from} uses non-adjacent next hop {next}")]
    RouteNotAdjacent { from: NodeId, next: NodeId },
}

/// Learning hyper-parameters shared by every node in a run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QParams {
    learning_rate: f64,
    exploration: f64,
    initial_q: f64,
}

impl QParams {
    pub fn new(learning_rate: f64, exploration: f64, initial_q: f64) -> Result<Self, PolicyError> {
        if !(learning_rate > 0.0 && learning_rate <= 1.0) {
            return Err(PolicyError::LearningRate(learning_rate));
        }
        if !(0.0..=1.0).contains(&exploration) {
            return Err(PolicyError::Exploration(exploration));
        }
        if !(initial_q >= 0.0 && initial_q.is_finite()) {
            return Err(PolicyError::NegativeEstimate("initial_q"));
        }
        Ok(QParams { learning_rate, exploration, initial_q })
    }

    pub fn learning_rate(&self) -> f64 {
        self.learning_rate
    }
    pub fn exploration(&self) -> f64 {
        self.exploration
    }
    pub fn initial_q(&self) -> f64 {
        self.initial_q
    }
}

/// Per-node routing table keyed by destination, then next hop.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StaticRoutes {
    table: Vec<BTreeMap<NodeId, NodeId>>,
}

impl StaticRoutes {
    /// Fewest-hop routes; among equal-length next hops the lowest id wins.
    pub fn shortest_hops(topology: &Topology) -> Self {
        let n = topology.node_count();
        let dist: Vec<Vec<Option<u32>>> = topology.nodes().map(|d| topology.hop_distances(d)).collect();
        let mut table = alloc::vec![BTreeMap::new(); n];
        for x in topology.nodes() {
            for d in topology.nodes().filter(|&d| d != x) {
                let here = dist[d.index()][x.index()];
                let next = topology
                    .neighbors(x)
                    .find(|y| matches!((dist[d.index()][y.index()], here), (Some(a), Some(b)) if a + 1 == b));
                if let Some(y) = next {
                    table[x.index()].insert(d, y);
                }
            }
        }
        StaticRoutes { table }
    }

    /// Explicit routes, checked for adjacency and loop-freedom: following
    /// next hops from any node must reach the destination.
    pub fn from_table(topology: &Topology, table: Vec<BTreeMap<NodeId, NodeId>>) -> Result<Self, PolicyError> {
        let routes = StaticRoutes { table };
        routes.validate(topology)?;
        Ok(routes)
    }

    pub fn validate(&self, topology: &Topology) -> Result<(), PolicyError> {
        for x in topology.nodes() {
            let Some(routes) = self.table.get(x.index()) else { continue };
            for (&d, &next) in routes {
                if !topology.are_adjacent(x, next) {
                    return Err(PolicyError::RouteNotAdjacent { from: x, next });
                }
                let mut at = x;
                let mut visited = BTreeSet::new();
                while at != d {
                    if !visited.insert(at) {
                        return Err(PolicyError::RouteLoop { from: x, destination: d });
                    }
                    at = match self.next_hop(at, d) {
                        Some(n) => n,
                        None => return Err(PolicyError::RouteLoop { from: x, destination: d }),
                    };
                }
            }
        }
        Ok(())
    }

    pub fn next_hop(&self, node: NodeId, destination: NodeId) -> Option<NodeId> {
        self.table.get(node.index())?.get(&destination).copied()
    }

    pub fn for_node(&self, node: NodeId) -> &BTreeMap<NodeId, NodeId> {
        &self.table[node.index()]
    }

    /// Hop count along the static route, if one exists.
    pub fn route_hops(&self, from: NodeId, destination: NodeId) -> Option<u32> {
        let mut at = from;
        let mut hops = 0;
        while at != destination {
            at = self.next_hop(at, destination)?;
            hops += 1;
            if hops as usize > self.table.len() {
                return None;
            }
        }
        Some(hops)
    }
}

/// Next hop on a predefined route. Never computes in transit.
pub fn static_next_hop(routes: &BTreeMap<NodeId, NodeId>, destination: NodeId) -> Result<Action, PolicyError> {
    routes
        .get(&destination)
        .map(|&n| Action::Forward(n))
        .ok_or(PolicyError::NoRoute(destination))
}

#[derive(Debug, Clone, PartialEq)]
pub enum PolicyKind {
    Static(StaticRoutes),
    QRouting,
    /// Q-routing plus the compute-locally action.
    Qco,
    /// `Qco` with the energy factor applied to the local-hop term.
    Eaqco,
}

impl PolicyKind {
    pub fn offloads(&self) -> bool {
        matches!(self, PolicyKind::Qco | PolicyKind::Eaqco)
    }

    pub fn energy_aware(&self) -> bool {
        matches!(self, PolicyKind::Eaqco)
    }

    pub fn learns(&self) -> bool {
        !matches!(self, PolicyKind::Static(_))
    }

    pub fn name(&self) -> &'static str {
        match self {
            PolicyKind::Static(_) => "static",
            PolicyKind::QRouting => "qrouting",
            PolicyKind::Qco => "qco",
            PolicyKind::Eaqco => "eaqco",
        }
    }
}

/// A neighbor's reply to a ping or data message: the measured one-way time
/// and its best estimate per destination.
#[derive(Debug, Clone, PartialEq)]
pub struct QAdvertisement {
    pub sender: NodeId,
    pub one_way_time: f64,
    pub best_to: BTreeMap<NodeId, f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct QTable {
    neighbors: Vec<NodeId>,
    // destination -> neighbor -> estimate (seconds)
    entries: BTreeMap<NodeId, BTreeMap<NodeId, f64>>,
    compute_q: f64,
    params: QParams,
}

impl QTable {
    pub fn new(mut neighbors: Vec<NodeId>, params: QParams, initial_compute_q: f64) -> Self {
        neighbors.sort();
        neighbors.dedup();
        debug_assert!(initial_compute_q >= 0.0 && initial_compute_q.is_finite());
        QTable { neighbors, entries: BTreeMap::new(), compute_q: initial_compute_q, params }
    }

    pub fn neighbors(&self) -> &[NodeId] {
        &self.neighbors
    }

    pub fn params(&self) -> &QParams {
        &self.params
    }

    pub fn compute_q(&self) -> f64 {
        self.compute_q
    }

    /// Whether any neighbor has an entry for `destination`.
    pub fn knows(&self, destination: NodeId) -> bool {
        self.entries.get(&destination).is_some_and(|m| !m.is_empty())
    }

    pub fn destinations(&self) -> impl Iterator<Item = NodeId> + '_ {
        self.entries.keys().copied()
    }

    pub fn entry(&self, neighbor: NodeId, destination: NodeId) -> Option<f64> {
        self.entries.get(&destination)?.get(&neighbor).copied()
    }

    /// Stored estimate, or `initial_q` for an unseen pair.
    pub fn q_value(&self, neighbor: NodeId, destination: NodeId) -> f64 {
        self.entry(neighbor, destination).unwrap_or(self.params.initial_q)
    }

    /// Best neighbor for `destination`; ties go to the lowest id.
    pub fn lookup_min(&self, destination: NodeId) -> Result<(NodeId, f64), PolicyError> {
        let mut best: Option<(NodeId, f64)> = None;
        for &y in &self.neighbors {
            let v = self.q_value(y, destination);
            if best.is_none_or(|(_, b)| v < b) {
                best = Some((y, v));
            }
        }
        best.ok_or(PolicyError::NoNeighbors)
    }

    /// Moves `Q(neighbor, destination)` toward `ef · q_y + best_y(d)`.
    ///
    /// `best_y(d)` is zero when the neighbor is the destination. A pair
    /// with no stored estimate is seeded with the target directly.
    pub fn update_forward(
        &mut self,
        neighbor: NodeId,
        destination: NodeId,
        adv: &QAdvertisement,
        ef: f64,
    ) -> Result<f64, PolicyError> {
        if adv.sender != neighbor {
            return Err(PolicyError::SenderMismatch { sender: adv.sender, neighbor });
        }
        let downstream = if destination == neighbor {
            0.0
        } else {
            *adv.best_to.get(&destination).ok_or(PolicyError::UnknownDestination(destination))?
        };
        self.learn(neighbor, destination, adv.one_way_time, downstream, ef)
    }

    fn learn(
        &mut self,
        neighbor: NodeId,
        destination: NodeId,
        one_way: f64,
        downstream: f64,
        ef: f64,
    ) -> Result<f64, PolicyError> {
        if self.neighbors.binary_search(&neighbor).is_err() {
            return Err(PolicyError::NotNeighbor(neighbor));
        }
        if !(one_way >= 0.0 && one_way.is_finite()) {
            return Err(PolicyError::NegativeEstimate("one_way_time"));
        }
        if !(downstream >= 0.0 && downstream.is_finite()) {
            return Err(PolicyError::NegativeEstimate("advertised estimate"));
        }
        if !(ef >= 0.0 && ef.is_finite()) {
            return Err(PolicyError::NegativeEstimate("energy factor"));
        }
        let target = ef * one_way + downstream;
        let eta = self.params.learning_rate;
        let slot = self.entries.entry(destination).or_default().entry(neighbor);
        let value = match slot {
            alloc::collections::btree_map::Entry::Vacant(v) => *v.insert(target),
            alloc::collections::btree_map::Entry::Occupied(mut o) => {
                let old = *o.get();
                let new = (old + eta * (target - old)).max(0.0);
                o.insert(new);
                new
            }
        };
        Ok(value)
    }

    /// Applies every estimate in a full advertisement: the sender itself as
    /// a destination plus each advertised destination other than `owner`.
    /// Returns the number of entries touched.
    pub fn absorb(&mut self, owner: NodeId, adv: &QAdvertisement, ef: f64) -> Result<usize, PolicyError> {
        self.learn(adv.sender, adv.sender, adv.one_way_time, 0.0, ef)?;
        let mut touched = 1;
        for (&d, &best) in &adv.best_to {
            if d == owner || d == adv.sender {
                continue;
            }
            self.learn(adv.sender, d, adv.one_way_time, best, ef)?;
            touched += 1;
        }
        Ok(touched)
    }

    /// Moves the compute estimate toward an observed queue-plus-service time.
    pub fn update_compute(&mut self, observed: f64) -> f64 {
        debug_assert!(observed >= 0.0 && observed.is_finite());
        let eta = self.params.learning_rate;
        self.compute_q = (self.compute_q + eta * (observed - self.compute_q)).max(0.0);
        self.compute_q
    }

    /// Eligible actions with their estimates: every neighbor in id order,
    /// then compute if `offload` and the message is unreduced data.
    pub fn action_values(&self, msg: &Message, offload: bool) -> Vec<(Action, f64)> {
        let mut out: Vec<(Action, f64)> = self
            .neighbors
            .iter()
            .map(|&y| (Action::Forward(y), self.q_value(y, msg.destination())))
            .collect();
        if offload && !msg.is_computed() && !msg.is_ping() {
            out.push((Action::ComputeLocally, self.compute_q));
        }
        out
    }

    /// ε-greedy choice over the eligible actions. The greedy branch takes
    /// the minimum estimate; forwarding wins ties against compute and
    /// neighbor ties go to the lowest id.
    pub fn select_action<R: Rng + ?Sized>(
        &self,
        msg: &Message,
        offload: bool,
        rng: &mut R,
    ) -> Result<Action, PolicyError> {
        let actions = self.action_values(msg, offload);
        if actions.is_empty() {
            return Err(PolicyError::NoEligibleAction);
        }
        Ok(self.choose(&actions, rng))
    }

    /// Same decision as [`select_action`](Self::select_action) over values
    /// already produced by [`action_values`](Self::action_values).
    pub fn choose<R: Rng + ?Sized>(&self, actions: &[(Action, f64)], rng: &mut R) -> Action {
        let eps = self.params.exploration;
        if eps > 0.0 && rng.gen::<f64>() < eps {
            return actions[rng.gen_range(0..actions.len())].0;
        }
        greedy(actions)
    }

    pub fn make_advertisement(&self, owner: NodeId, one_way_time: f64, offload: bool) -> QAdvertisement {
        let mut best_to = BTreeMap::new();
        for (&d, by_neighbor) in &self.entries {
            if d == owner {
                continue;
            }
            let Some(min_fwd) = by_neighbor.values().copied().reduce(f64::min) else { continue };
            let best = if offload { min_fwd.min(self.compute_q) } else { min_fwd };
            best_to.insert(d, best);
        }
        QAdvertisement { sender: owner, one_way_time, best_to }
    }

    /// All stored estimates are finite and non-negative.
    pub fn is_consistent(&self) -> bool {
        self.compute_q >= 0.0
            && self.compute_q.is_finite()
            && self
                .entries
                .values()
                .flat_map(|m| m.iter())
                .all(|(y, &v)| v >= 0.0 && v.is_finite() && self.neighbors.binary_search(y).is_ok())
    }
}

fn greedy(actions: &[(Action, f64)]) -> Action {
    let mut best = actions[0];
    for &(a, v) in &actions[1..] {
        if v < best.1 {
            best = (a, v);
        }
    }
    best.0
}
