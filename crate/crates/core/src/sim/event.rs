use alloc::collections::BinaryHeap;
use core::cmp::Ordering;

use crate::qpolicy::QAdvertisement;
use crate::types::{Message, MessageId, NodeId, SimTime};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stream {
    Measured,
    Background,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PingRepeat {
    pub interval: SimTime,
    pub until: SimTime,
}

#[derive(Debug, Clone, PartialEq)]
pub enum EventKind {
    MessageArrival { node: NodeId, from: NodeId, sent_at: SimTime, message: Message },
    AckArrival { node: NodeId, advertisement: QAdvertisement, subject: MessageId, destination: NodeId, is_ping: bool },
    ComputeDone { node: NodeId, message: MessageId, at_destination: bool },
    WorkloadTick { node: NodeId, stream: Stream },
    PingRound { node: NodeId, repeat: Option<PingRepeat> },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Event {
    pub time: SimTime,
    pub sequence: u64,
    pub kind: EventKind,
}

// Heap entry ordered only by (time, sequence), smallest first.
#[derive(Debug)]
struct Entry(Event);

impl PartialEq for Entry {
    fn eq(&self, other: &Self) -> bool {
        (self.0.time, self.0.sequence) == (other.0.time, other.0.sequence)
    }
}

impl Eq for Entry {}

impl Ord for Entry {
    fn cmp(&self, other: &Self) -> Ordering {
        (other.0.time, other.0.sequence).cmp(&(self.0.time, self.0.sequence))
    }
}

impl PartialOrd for Entry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Time-ordered schedule. Events at equal times pop in insertion order.
#[derive(Debug, Default)]
pub struct EventQueue {
    heap: BinaryHeap<Entry>,
    next_sequence: u64,
}

impl EventQueue {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, time: SimTime, kind: EventKind) -> u64 {
        let sequence = self.next_sequence;
        self.next_sequence += 1;
        self.heap.push(Entry(Event { time, sequence, kind }));
        sequence
    }

    pub fn pop(&mut self) -> Option<Event> {
        self.heap.pop().map(|e| e.0)
    }

    pub fn peek_time(&self) -> Option<SimTime> {
        self.heap.peek().map(|e| e.0.time)
    }

    pub fn len(&self) -> usize {
        self.heap.len()
    }

    pub fn is_empty(&self) -> bool {
        self.heap.is_empty()
    }
}
