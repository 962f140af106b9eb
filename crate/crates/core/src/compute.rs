//! Per-node FIFO computation queue and the payload reduction transform.

use alloc::collections::VecDeque;

use thiserror::Error;

use crate::types::{Message, MessageError, MessageId, SimTime};

#[derive(Debug, Clone, Copy, PartialEq, Error)]
pub enum ComputeError {
    #[error("message {0:?} was already reduced")]
    AlreadyComputed(MessageId),
    #[error("compute queue is empty")]
    Empty,
    #[error("head message {0:?} is not finished until {1:?}")]
    NotFinished(MessageId, SimTime),
    #[error("reduction ratio must lie in (0, 1], got {0}")]
    Ratio(f64),
    #[error("minimum reduced size must be at least one bit")]
    MinOutput,
}

/// How long one reduction takes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ServiceModel {
    Constant(SimTime),
    /// Nanoseconds per input bit, rounded up per message.
    PerBit(f64),
}

impl ServiceModel {
    pub fn service_time(&self, payload_bits: u64) -> SimTime {
        match *self {
            ServiceModel::Constant(t) => t,
            ServiceModel::PerBit(ns) => SimTime(libm::ceil(ns * payload_bits as f64) as u64),
        }
    }
}

/// Size transform applied by in-place reduction.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReductionSpec {
    reduction_ratio: f64,
    min_output_bits: u64,
    service: ServiceModel,
}

impl ReductionSpec {
    pub fn new(reduction_ratio: f64, min_output_bits: u64, service: ServiceModel) -> Result<Self, ComputeError> {
        if !(reduction_ratio > 0.0 && reduction_ratio <= 1.0) {
            return Err(ComputeError::Ratio(reduction_ratio));
        }
        if min_output_bits == 0 {
            return Err(ComputeError::MinOutput);
        }
        Ok(ReductionSpec { reduction_ratio, min_output_bits, service })
    }

    pub fn ratio(&self) -> f64 {
        self.reduction_ratio
    }

    pub fn min_output_bits(&self) -> u64 {
        self.min_output_bits
    }

    pub fn service(&self) -> ServiceModel {
        self.service
    }

    /// `max(min_output, ceil(bits · ratio))`, never larger than the input.
    pub fn reduced_bits(&self, input_bits: u64) -> u64 {
        let scaled = libm::ceil(input_bits as f64 * self.reduction_ratio) as u64;
        scaled.max(self.min_output_bits).min(input_bits)
    }
}

/// Returns the reduced copy of `msg`.
pub fn reduce(msg: &Message, spec: &ReductionSpec) -> Result<Message, ComputeError> {
    let mut out = msg.clone();
    out.mark_computed(spec.reduced_bits(msg.payload_bits())).map_err(|e| match e {
        MessageError::AlreadyComputed(id) => ComputeError::AlreadyComputed(id),
        MessageError::EmptyPayload => ComputeError::MinOutput,
    })?;
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Enqueued {
    pub completion: SimTime,
    /// Queue wait plus service, the sample fed back into the compute estimate.
    pub observed: SimTime,
    pub wait: SimTime,
    pub service: SimTime,
}

#[derive(Debug, Clone)]
struct Pending {
    message: Message,
    enqueued_at: SimTime,
    completion: SimTime,
}

/// Single-server FIFO: a message starts service when it arrives or when the
/// previous one finishes, whichever is later.
#[derive(Debug, Clone)]
pub struct ComputeQueue {
    pending: VecDeque<Pending>,
    service: ServiceModel,
    busy_until: SimTime,
}

impl ComputeQueue {
    pub fn new(service: ServiceModel) -> Self {
        ComputeQueue { pending: VecDeque::new(), service, busy_until: SimTime::ZERO }
    }

    pub fn len(&self) -> usize {
        self.pending.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pending.is_empty()
    }

    pub fn busy_until(&self) -> SimTime {
        self.busy_until
    }

    pub fn enqueue(&mut self, msg: Message, now: SimTime) -> Result<Enqueued, ComputeError> {
        if msg.is_computed() {
            return Err(ComputeError::AlreadyComputed(msg.id()));
        }
        let start = now.max(self.busy_until);
        let service = self.service.service_time(msg.payload_bits());
        let completion = start + service;
        self.busy_until = completion;
        self.pending.push_back(Pending { message: msg, enqueued_at: now, completion });
        Ok(Enqueued { completion, observed: completion - now, wait: start - now, service })
    }

    pub fn head(&self) -> Option<(&Message, SimTime)> {
        self.pending.front().map(|p| (&p.message, p.completion))
    }

    /// Pops the head once its service has finished and returns the reduced
    /// message along with the time it was enqueued.
    pub fn complete(&mut self, now: SimTime, spec: &ReductionSpec) -> Result<(Message, SimTime), ComputeError> {
        let head = self.pending.front().ok_or(ComputeError::Empty)?;
        if head.completion > now {
            return Err(ComputeError::NotFinished(head.message.id(), head.completion));
        }
        let head = self.pending.pop_front().ok_or(ComputeError::Empty)?;
        Ok((reduce(&head.message, spec)?, head.enqueued_at))
    }

    /// Messages still queued, oldest first.
    pub fn messages(&self) -> impl Iterator<Item = &Message> + '_ {
        self.pending.iter().map(|p| &p.message)
    }
}
