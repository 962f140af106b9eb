//! Trace records collected by a run and their aggregation across trials.

use alloc::vec::Vec;

use thiserror::Error;

use crate::types::{Action, MessageId, NodeId, SimTime};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
pub enum MetricsError {
    #[error("no trials to aggregate")]
    EmptyInput,
}

/// One delivered message of the measured stream.
#[derive(Debug, Clone, PartialEq)]
pub struct DeliveryRecord {
    pub message: MessageId,
    pub created_at: SimTime,
    pub delivered_at: SimTime,
    pub hops: u32,
    pub origin_bits: u64,
    pub delivered_bits: u64,
    pub compute_nodes: Vec<NodeId>,
}

impl DeliveryRecord {
    pub fn processing_time(&self) -> SimTime {
        self.delivered_at - self.created_at
    }
}

/// Snapshot of the instrumented node's action space at a routing decision.
#[derive(Debug, Clone, PartialEq)]
pub struct QTraceSample {
    pub time: SimTime,
    pub node: NodeId,
    pub destination: NodeId,
    pub message: MessageId,
    /// Every forward action, then compute (always present, even when not
    /// eligible for this message).
    pub values: Vec<(Action, f64)>,
    pub chosen: Action,
    pub compute_eligible: bool,
    pub batt_used: f64,
    pub energy_factor: f64,
}

impl QTraceSample {
    pub fn value(&self, action: Action) -> Option<f64> {
        self.values.iter().find(|(a, _)| *a == action).map(|&(_, v)| v)
    }

    pub fn min_forward(&self) -> Option<f64> {
        self.values
            .iter()
            .filter(|(a, _)| matches!(a, Action::Forward(_)))
            .map(|&(_, v)| v)
            .reduce(f64::min)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ActionRecord {
    pub time: SimTime,
    pub node: NodeId,
    pub message: MessageId,
    pub destination: NodeId,
    pub action: Action,
    pub measured: bool,
}

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct StreamTotals {
    pub messages: u64,
    pub transmissions: u64,
    /// Σ message size at each hop.
    pub bits_hops: u64,
    pub joules: f64,
}

impl StreamTotals {
    pub fn record(&mut self, bits: u64, joules: f64) {
        self.transmissions += 1;
        self.bits_hops += bits;
        self.joules += joules;
    }

    pub fn bytes_hops(&self) -> f64 {
        self.bits_hops as f64 / 8.0
    }
}

/// Transmission cost per traffic class. Only `measured` feeds `E_total`.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct EnergyLedger {
    pub measured: StreamTotals,
    pub background: StreamTotals,
    pub control: StreamTotals,
}

/// `E_total = s · h · p` for a fixed route.
pub fn e_total_static(size: u64, hops: u64, messages: u64) -> u64 {
    size * hops * messages
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum DropReason {
    Depleted,
    UnknownDestination,
    HopLimit,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct Conservation {
    pub originated: u64,
    pub delivered: u64,
    pub dropped_depleted: u64,
    pub dropped_unknown: u64,
    pub dropped_hop_limit: u64,
    /// Still queued or in flight when the run stopped.
    pub residual: u64,
}

impl Conservation {
    pub fn dropped(&self) -> u64 {
        self.dropped_depleted + self.dropped_unknown + self.dropped_hop_limit
    }

    pub fn record_drop(&mut self, reason: DropReason) {
        match reason {
            DropReason::Depleted => self.dropped_depleted += 1,
            DropReason::UnknownDestination => self.dropped_unknown += 1,
            DropReason::HopLimit => self.dropped_hop_limit += 1,
        }
    }

    pub fn balances(&self) -> bool {
        self.originated == self.delivered + self.dropped() + self.residual
    }
}

/// Cross-checks evaluated while a run executes. A clean run has every
/// counter at zero and both agreement flags set.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct AuditReport {
    /// Deliveries whose latency differs from the sum of their recorded
    /// waits, serializations, propagations and compute times.
    pub time_mismatches: u64,
    /// Deliveries whose hop count differs from their transmit count.
    pub hop_mismatches: u64,
    /// Per-message hop sizes summed after the run equal the ledger.
    pub energy_bits_agree: bool,
    pub energy_joules_agree: bool,
    pub battery_violations: u64,
    pub q_violations: u64,
    pub conservation_ok: bool,
}

impl AuditReport {
    pub fn is_clean(&self) -> bool {
        self.time_mismatches == 0
            && self.hop_mismatches == 0
            && self.energy_bits_agree
            && self.energy_joules_agree
            && self.battery_violations == 0
            && self.q_violations == 0
            && self.conservation_ok
    }
}

/// Everything one trial produces.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceSet {
    pub seed: u64,
    pub end_time: SimTime,
    pub deliveries: Vec<DeliveryRecord>,
    pub qtrace: Vec<QTraceSample>,
    pub actions: Vec<ActionRecord>,
    pub ledger: EnergyLedger,
    /// Data messages of both streams.
    pub conservation: Conservation,
    /// Measured stream only.
    pub measured: Conservation,
    pub audit: AuditReport,
    pub final_batt_used: Vec<f64>,
    pub events_processed: u64,
}

impl TraceSet {
    pub fn summary(&self) -> TrialSummary {
        let times: Vec<f64> = self.deliveries.iter().map(|d| d.processing_time().as_secs_f64()).collect();
        TrialSummary {
            seed: self.seed,
            delivered: self.measured.delivered,
            dropped: self.measured.dropped(),
            mean_processing_time: mean(&times).unwrap_or(0.0),
            e_total_bytes: self.ledger.measured.bytes_hops(),
            e_total_joules: self.ledger.measured.joules,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrialSummary {
    pub seed: u64,
    pub delivered: u64,
    pub dropped: u64,
    pub mean_processing_time: f64,
    pub e_total_bytes: f64,
    pub e_total_joules: f64,
}

/// Mean and population standard deviation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Stat {
    pub mean: f64,
    pub std: f64,
}

impl Stat {
    pub fn of(values: &[f64]) -> Option<Stat> {
        let m = mean(values)?;
        let var = values.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / values.len() as f64;
        Some(Stat { mean: m, std: libm::sqrt(var) })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Aggregate {
    pub trials: Vec<TrialSummary>,
    pub processing_time: Stat,
    pub e_total_bytes: Stat,
    pub e_total_joules: Stat,
}

pub fn aggregate_trials(trials: &[TrialSummary]) -> Result<Aggregate, MetricsError> {
    let column = |f: fn(&TrialSummary) -> f64| -> Result<Stat, MetricsError> {
        let v: Vec<f64> = trials.iter().map(f).collect();
        Stat::of(&v).ok_or(MetricsError::EmptyInput)
    };
    Ok(Aggregate {
        processing_time: column(|t| t.mean_processing_time)?,
        e_total_bytes: column(|t| t.e_total_bytes)?,
        e_total_joules: column(|t| t.e_total_joules)?,
        trials: trials.to_vec(),
    })
}

pub fn mean(values: &[f64]) -> Option<f64> {
    if values.is_empty() {
        None
    } else {
        Some(values.iter().sum::<f64>() / values.len() as f64)
    }
}

/// Unbiased sample variance; `None` below two samples.
pub fn sample_variance(values: &[f64]) -> Option<f64> {
    if values.len() < 2 {
        return None;
    }
    let m = mean(values)?;
    Some(values.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / (values.len() - 1) as f64)
}

/// Least-squares slope of `y` on `x`.
pub fn regression_slope(points: &[(f64, f64)]) -> Option<f64> {
    if points.len() < 2 {
        return None;
    }
    let n = points.len() as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / n;
    let my = points.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = points.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
    if sxx == 0.0 {
        None
    } else {
        Some(sxy / sxx)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn trial(t: f64, e: f64) -> TrialSummary {
        TrialSummary { seed: 0, delivered: 1, dropped: 0, mean_processing_time: t, e_total_bytes: e, e_total_joules: e }
    }

    #[test]
    fn aggregate_single_and_pair() {
        let a = aggregate_trials(&[trial(1.5, 10.0)]).unwrap();
        assert_eq!(a.processing_time, Stat { mean: 1.5, std: 0.0 });
        let a = aggregate_trials(&[trial(1.0, 10.0), trial(3.0, 10.0)]).unwrap();
        assert_eq!(a.processing_time.mean, 2.0);
        assert_eq!(a.processing_time.std, 1.0);
        assert_eq!(a.e_total_bytes.std, 0.0);
        assert_eq!(aggregate_trials(&[]), Err(MetricsError::EmptyInput));
    }

    #[test]
    fn e_total_cases() {
        assert_eq!(e_total_static(2360, 3, 750), 5_310_000);
        assert_eq!(e_total_static(2360, 3, 0), 0);
        assert_eq!(e_total_static(2360, 1, 1), 2360);
    }

    #[test]
    fn stats_helpers() {
        assert_eq!(sample_variance(&[1.0, 3.0]), Some(2.0));
        assert_eq!(sample_variance(&[1.0]), None);
        let slope = regression_slope(&[(0.0, 1.0), (1.0, 3.0), (2.0, 5.0)]).unwrap();
        assert!((slope - 2.0).abs() < 1e-12);
        assert_eq!(regression_slope(&[(1.0, 1.0), (1.0, 2.0)]), None);
    }

    #[test]
    fn conservation_balance() {
        let mut c = Conservation { originated: 5, delivered: 3, residual: 1, ..Default::default() };
        assert!(!c.balances());
        c.record_drop(DropReason::HopLimit);
        assert!(c.balances());
    }
}
