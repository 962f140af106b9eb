//! Domain types shared by every module: node identifiers, simulated time,
//! the link graph, messages and routing actions.

use alloc::collections::{BTreeSet, VecDeque};
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;
use core::ops::{Add, Sub};

use thiserror::Error;

use crate::energy::LinkEnergyParams;

/// Dense node index, `0..node_count` within its [`Topology`].
///
/// Configs refer to nodes by a free-form label; the topology maps labels to
/// indices so that per-node state can live in plain vectors.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct NodeId(pub u32);

impl NodeId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "#{}", self.0)
    }
}

/// Simulated time or duration in integer nanoseconds.
///
/// Integer time keeps event ordering and the per-message time audit exact.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct SimTime(pub u64);

impl SimTime {
    pub const ZERO: SimTime = SimTime(0);
    pub const NANOS_PER_SEC: u64 = 1_000_000_000;

    pub fn from_secs_f64(secs: f64) -> SimTime {
        debug_assert!(secs >= 0.0 && secs.is_finite());
        SimTime(libm::round(secs * Self::NANOS_PER_SEC as f64) as u64)
    }

    pub fn from_millis(ms: u64) -> SimTime {
        SimTime(ms * 1_000_000)
    }

    pub fn as_secs_f64(self) -> f64 {
        self.0 as f64 / Self::NANOS_PER_SEC as f64
    }

    pub fn saturating_sub(self, other: SimTime) -> SimTime {
        SimTime(self.0.saturating_sub(other.0))
    }
}

impl Add for SimTime {
    type Output = SimTime;
    fn add(self, rhs: SimTime) -> SimTime {
        SimTime(self.0 + rhs.0)
    }
}

impl Sub for SimTime {
    type Output = SimTime;
    fn sub(self, rhs: SimTime) -> SimTime {
        SimTime(self.0 - rhs.0)
    }
}

/// Physical parameters of one undirected link.
#[derive(Debug, Clone, PartialEq)]
pub struct LinkSpec {
    pub propagation_delay: SimTime,
    pub bandwidth_bps: f64,
    pub energy: LinkEnergyParams,
}

impl LinkSpec {
    /// Time to clock `bits` onto the link, rounded up to whole nanoseconds.
    pub fn serialization_time(&self, bits: u64) -> SimTime {
        SimTime(libm::ceil(bits as f64 * SimTime::NANOS_PER_SEC as f64 / self.bandwidth_bps) as u64)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Link {
    pub a: NodeId,
    pub b: NodeId,
    pub spec: LinkSpec,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TopologyError {
    #[error("topology has no nodes")]
    Empty,
    #[error("node label {0} appears more than once")]
    DuplicateNode(u32),
    #[error("link references unknown node label {0}")]
    UnknownNode(u32),
    #[error("self-link on node {0}")]
    SelfLink(u32),
    #[error("duplicate link between nodes {0} and {1}")]
    DuplicateLink(u32, u32),
    #[error("link {0}-{1} has an invalid parameter: {2}")]
    InvalidLink(u32, u32, &'static str),
    #[error("graph is disconnected: node {0} is unreachable from node {1}")]
    DisconnectedGraph(u32, u32),
}

/// Undirected link graph with symmetric link parameters.
#[derive(Debug, Clone)]
pub struct Topology {
    labels: Vec<u32>,
    links: Vec<Link>,
    // neighbor lists sorted by NodeId: (neighbor, index into `links`)
    adjacency: Vec<Vec<(NodeId, usize)>>,
}

impl Topology {
    /// Builds a topology from labelled nodes and links and validates it.
    pub fn new(labels: Vec<u32>, links: Vec<(u32, u32, LinkSpec)>) -> Result<Self, TopologyError> {
        let mut resolved = Vec::with_capacity(links.len());
        for (a, b, spec) in links {
            let ia = labels.iter().position(|&l| l == a).ok_or(TopologyError::UnknownNode(a))?;
            let ib = labels.iter().position(|&l| l == b).ok_or(TopologyError::UnknownNode(b))?;
            resolved.push(Link { a: NodeId(ia as u32), b: NodeId(ib as u32), spec });
        }
        let mut adjacency = vec![Vec::new(); labels.len()];
        for (i, link) in resolved.iter().enumerate() {
            if link.a != link.b {
                adjacency[link.a.index()].push((link.b, i));
                adjacency[link.b.index()].push((link.a, i));
            }
        }
        for list in &mut adjacency {
            list.sort_by_key(|&(n, _)| n);
        }
        let topology = Topology { labels, links: resolved, adjacency };
        topology.validate()?;
        Ok(topology)
    }

    /// Checks every structural invariant: unique labels, no self-links, at
    /// most one link per unordered pair, valid link parameters, connectivity.
    pub fn validate(&self) -> Result<(), TopologyError> {
        if self.labels.is_empty() {
            return Err(TopologyError::Empty);
        }
        let mut seen = BTreeSet::new();
        for &l in &self.labels {
            if !seen.insert(l) {
                return Err(TopologyError::DuplicateNode(l));
            }
        }
        let mut pairs = BTreeSet::new();
        for link in &self.links {
            let (la, lb) = (self.label(link.a), self.label(link.b));
            if link.a == link.b {
                return Err(TopologyError::SelfLink(la));
            }
            if !pairs.insert((link.a.min(link.b), link.a.max(link.b))) {
                return Err(TopologyError::DuplicateLink(la, lb));
            }
            let spec = &link.spec;
            if !(spec.bandwidth_bps > 0.0 && spec.bandwidth_bps.is_finite()) {
                return Err(TopologyError::InvalidLink(la, lb, "bandwidth must be positive"));
            }
            if spec.energy.validate().is_err() {
                return Err(TopologyError::InvalidLink(la, lb, "energy parameters out of range"));
            }
        }
        let dist = self.hop_distances(NodeId(0));
        if let Some(i) = dist.iter().position(Option::is_none) {
            return Err(TopologyError::DisconnectedGraph(self.labels[i], self.labels[0]));
        }
        Ok(())
    }

    pub fn node_count(&self) -> usize {
        self.labels.len()
    }

    pub fn nodes(&self) -> impl Iterator<Item = NodeId> + '_ {
        (0..self.labels.len() as u32).map(NodeId)
    }

    pub fn label(&self, node: NodeId) -> u32 {
        self.labels[node.index()]
    }

    pub fn labels(&self) -> &[u32] {
        &self.labels
    }

    pub fn node_by_label(&self, label: u32) -> Option<NodeId> {
        self.labels.iter().position(|&l| l == label).map(|i| NodeId(i as u32))
    }

    pub fn links(&self) -> &[Link] {
        &self.links
    }

    /// Neighbors of `node`, ascending by id.
    pub fn neighbors(&self, node: NodeId) -> impl Iterator<Item = NodeId> + '_ {
        self.adjacency[node.index()].iter().map(|&(n, _)| n)
    }

    pub fn degree(&self, node: NodeId) -> usize {
        self.adjacency[node.index()].len()
    }

    pub fn are_adjacent(&self, a: NodeId, b: NodeId) -> bool {
        self.link_between(a, b).is_some()
    }

    pub fn link_between(&self, a: NodeId, b: NodeId) -> Option<&LinkSpec> {
        self.adjacency
            .get(a.index())?
            .iter()
            .find(|&&(n, _)| n == b)
            .map(|&(_, i)| &self.links[i].spec)
    }

    /// BFS hop counts from `from`; `None` for unreachable nodes.
    pub fn hop_distances(&self, from: NodeId) -> Vec<Option<u32>> {
        let mut dist = vec![None; self.labels.len()];
        let mut queue = VecDeque::new();
        dist[from.index()] = Some(0);
        queue.push_back(from);
        while let Some(n) = queue.pop_front() {
            let d = dist[n.index()].unwrap_or(0);
            for m in self.neighbors(n) {
                if dist[m.index()].is_none() {
                    dist[m.index()] = Some(d + 1);
                    queue.push_back(m);
                }
            }
        }
        dist
    }

    /// Longest shortest path in hops.
    pub fn diameter(&self) -> u32 {
        self.nodes()
            .flat_map(|n| self.hop_distances(n))
            .map(|d| d.unwrap_or(0))
            .max()
            .unwrap_or(0)
    }
}

/// Unique per-run message identifier.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct MessageId(pub u64);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
pub enum MessageError {
    #[error("payload must be at least one bit")]
    EmptyPayload,
    #[error("message {0:?} has already been reduced")]
    AlreadyComputed(MessageId),
}

/// A routable unit: data, measured data, or a ping.
#[derive(Debug, Clone, PartialEq)]
pub struct Message {
    id: MessageId,
    source: NodeId,
    destination: NodeId,
    payload_bits: u64,
    created_at: SimTime,
    hops_taken: u32,
    computed: bool,
    is_ping: bool,
    is_measured: bool,
}

impl Message {
    pub fn data(
        id: MessageId,
        source: NodeId,
        destination: NodeId,
        payload_bits: u64,
        created_at: SimTime,
        is_measured: bool,
    ) -> Result<Self, MessageError> {
        if payload_bits == 0 {
            return Err(MessageError::EmptyPayload);
        }
        Ok(Message {
            id,
            source,
            destination,
            payload_bits,
            created_at,
            hops_taken: 0,
            computed: false,
            is_ping: false,
            is_measured,
        })
    }

    pub fn ping(
        id: MessageId,
        source: NodeId,
        destination: NodeId,
        payload_bits: u64,
        created_at: SimTime,
    ) -> Result<Self, MessageError> {
        let mut msg = Self::data(id, source, destination, payload_bits, created_at, false)?;
        msg.is_ping = true;
        Ok(msg)
    }

    pub fn id(&self) -> MessageId {
        self.id
    }
    pub fn source(&self) -> NodeId {
        self.source
    }
    pub fn destination(&self) -> NodeId {
        self.destination
    }
    pub fn payload_bits(&self) -> u64 {
        self.payload_bits
    }
    pub fn created_at(&self) -> SimTime {
        self.created_at
    }
    pub fn hops_taken(&self) -> u32 {
        self.hops_taken
    }
    pub fn is_computed(&self) -> bool {
        self.computed
    }
    pub fn is_ping(&self) -> bool {
        self.is_ping
    }
    pub fn is_measured(&self) -> bool {
        self.is_measured
    }

    pub fn record_hop(&mut self) {
        self.hops_taken += 1;
    }

    /// Applies the one-shot data reduction, replacing the payload size.
    pub fn mark_computed(&mut self, reduced_bits: u64) -> Result<(), MessageError> {
        if self.computed {
            return Err(MessageError::AlreadyComputed(self.id));
        }
        if reduced_bits == 0 {
            return Err(MessageError::EmptyPayload);
        }
        self.computed = true;
        self.payload_bits = reduced_bits;
        Ok(())
    }
}

/// What a node does with a message it holds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Action {
    Forward(NodeId),
    ComputeLocally,
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::energy::LinkEnergyParams;

    fn spec() -> LinkSpec {
        LinkSpec {
            propagation_delay: SimTime::from_millis(1),
            bandwidth_bps: 1e6,
            energy: LinkEnergyParams::lorawan_like(),
        }
    }

    #[test]
    fn triangle_is_valid() {
        let t = Topology::new(vec![1, 2, 3], vec![(1, 2, spec()), (2, 3, spec()), (1, 3, spec())]).unwrap();
        assert_eq!(t.diameter(), 1);
        assert_eq!(t.neighbors(NodeId(0)).collect::<Vec<_>>(), vec![NodeId(1), NodeId(2)]);
    }

    #[test]
    fn two_nodes_without_links_are_disconnected() {
        let err = Topology::new(vec![1, 2], vec![]).unwrap_err();
        assert_eq!(err, TopologyError::DisconnectedGraph(2, 1));
    }

    #[test]
    fn self_link_rejected() {
        let err = Topology::new(vec![1, 2], vec![(1, 1, spec()), (1, 2, spec())]).unwrap_err();
        assert_eq!(err, TopologyError::SelfLink(1));
    }

    #[test]
    fn duplicate_link_rejected_in_either_orientation() {
        let err = Topology::new(vec![1, 2], vec![(1, 2, spec()), (2, 1, spec())]).unwrap_err();
        assert_eq!(err, TopologyError::DuplicateLink(2, 1));
    }

    #[test]
    fn unknown_label_and_bad_bandwidth() {
        assert_eq!(
            Topology::new(vec![1, 2], vec![(1, 9, spec())]).unwrap_err(),
            TopologyError::UnknownNode(9)
        );
        let mut bad = spec();
        bad.bandwidth_bps = 0.0;
        assert!(matches!(
            Topology::new(vec![1, 2], vec![(1, 2, bad)]).unwrap_err(),
            TopologyError::InvalidLink(1, 2, _)
        ));
    }

    #[test]
    fn line_diameter() {
        let t = Topology::new(vec![1, 2, 3], vec![(1, 2, spec()), (2, 3, spec())]).unwrap();
        assert_eq!(t.diameter(), 2);
    }

    #[test]
    fn serialization_time_is_exact_for_whole_rates() {
        assert_eq!(spec().serialization_time(18_880), SimTime(18_880_000));
        assert_eq!(spec().serialization_time(1), SimTime(1_000));
    }

    #[test]
    fn computed_flag_is_one_way() {
        let mut m = Message::data(MessageId(1), NodeId(0), NodeId(1), 100, SimTime::ZERO, true).unwrap();
        m.mark_computed(10).unwrap();
        assert!(m.is_computed());
        assert_eq!(m.payload_bits(), 10);
        assert_eq!(m.mark_computed(5), Err(MessageError::AlreadyComputed(MessageId(1))));
        assert_eq!(m.payload_bits(), 10);
    }

    #[test]
    fn zero_payload_rejected() {
        assert_eq!(
            Message::data(MessageId(1), NodeId(0), NodeId(1), 0, SimTime::ZERO, false),
            Err(MessageError::EmptyPayload)
        );
    }
}
