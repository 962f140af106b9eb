//! Trace files written for each trial and the experiment summary.
//!
//! All times are seconds with nine decimals (exact nanoseconds). Sizes are
//! bits unless the column name ends in `_bytes`. Nodes are written by label.

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use eaqco_core::metrics::{Aggregate, Conservation, Stat, StreamTotals, TraceSet};
use eaqco_core::types::{Action, SimTime, Topology};
use serde::Serialize;
use thiserror::Error;

use crate::config::ScenarioConfig;

#[derive(Debug, Error)]
pub enum ExportError {
    #[error("cannot write {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("cannot write {path}: {source}")]
    Csv { path: PathBuf, source: csv::Error },
}

pub const DELIVERIES_HEADER: [&str; 8] =
    ["msg_id", "created_at", "delivered_at", "processing_time", "hops", "origin_bits", "delivered_bits", "compute_nodes"];

pub fn format_time(t: SimTime) -> String {
    format!("{}.{:09}", t.0 / SimTime::NANOS_PER_SEC, t.0 % SimTime::NANOS_PER_SEC)
}

pub fn action_label(topology: &Topology, action: Action) -> String {
    match action {
        Action::Forward(n) => format!("forward_{}", topology.label(n)),
        Action::ComputeLocally => "compute".into(),
    }
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> ExportError + '_ {
    move |source| ExportError::Io { path: path.into(), source }
}

fn csv_writer(path: &Path) -> Result<csv::Writer<File>, ExportError> {
    csv::Writer::from_path(path).map_err(|source| ExportError::Csv { path: path.into(), source })
}

fn write_rows(path: &Path, header: &[String], rows: impl Iterator<Item = Vec<String>>) -> Result<(), ExportError> {
    let csv_err = |source| ExportError::Csv { path: path.into(), source };
    let mut w = csv_writer(path)?;
    w.write_record(header).map_err(csv_err)?;
    for row in rows {
        w.write_record(&row).map_err(csv_err)?;
    }
    w.flush().map_err(io_err(path))
}

fn strings(items: &[&str]) -> Vec<String> {
    items.iter().map(|s| s.to_string()).collect()
}

/// Columns of `qtrace.csv` that hold action values: one per neighbor of
/// the instrumented node, then compute.
pub fn qtrace_actions(topology: &Topology, instrumented: Option<eaqco_core::NodeId>) -> Vec<Action> {
    let mut actions: Vec<Action> = match instrumented {
        Some(n) => topology.neighbors(n).map(Action::Forward).collect(),
        None => Vec::new(),
    };
    actions.push(Action::ComputeLocally);
    actions
}

/// Writes the four per-trial CSV files into `dir`.
pub fn write_trial(
    dir: &Path,
    topology: &Topology,
    instrumented: Option<eaqco_core::NodeId>,
    trace: &TraceSet,
) -> Result<(), ExportError> {
    fs::create_dir_all(dir).map_err(io_err(dir))?;
    let label = |n| topology.label(n).to_string();

    write_rows(
        &dir.join("deliveries.csv"),
        &strings(&DELIVERIES_HEADER),
        trace.deliveries.iter().map(|d| {
            vec![
                d.message.0.to_string(),
                format_time(d.created_at),
                format_time(d.delivered_at),
                format_time(d.processing_time()),
                d.hops.to_string(),
                d.origin_bits.to_string(),
                d.delivered_bits.to_string(),
                d.compute_nodes.iter().map(|&n| label(n)).collect::<Vec<_>>().join(";"),
            ]
        }),
    )?;

    let actions = qtrace_actions(topology, instrumented);
    let mut header = strings(&["time", "node", "destination", "msg_id"]);
    header.extend(actions.iter().map(|&a| format!("q_{}", action_label(topology, a))));
    header.extend(strings(&["chosen", "compute_eligible", "batt_used", "energy_factor"]));
    write_rows(
        &dir.join("qtrace.csv"),
        &header,
        trace.qtrace.iter().map(|s| {
            let mut row = vec![format_time(s.time), label(s.node), label(s.destination), s.message.0.to_string()];
            row.extend(actions.iter().map(|&a| s.value(a).map(|v| format!("{v:.9}")).unwrap_or_default()));
            row.push(action_label(topology, s.chosen));
            row.push(s.compute_eligible.to_string());
            row.push(format!("{:.9}", s.batt_used));
            row.push(format!("{:.9}", s.energy_factor));
            row
        }),
    )?;

    let ledger = &trace.ledger;
    let energy_row = |name: &str, t: &StreamTotals| {
        vec![
            name.to_string(),
            t.messages.to_string(),
            t.transmissions.to_string(),
            t.bits_hops.to_string(),
            format!("{:.3}", t.bytes_hops()),
            format!("{:.9}", t.joules),
        ]
    };
    write_rows(
        &dir.join("energy.csv"),
        &strings(&["stream", "messages", "transmissions", "bits_hops", "e_total_bytes", "joules"]),
        [
            energy_row("measured", &ledger.measured),
            energy_row("background", &ledger.background),
            energy_row("control", &ledger.control),
        ]
        .into_iter(),
    )?;

    write_rows(
        &dir.join("actions.csv"),
        &strings(&["time", "node", "msg_id", "destination", "action", "measured"]),
        trace.actions.iter().map(|a| {
            vec![
                format_time(a.time),
                label(a.node),
                a.message.0.to_string(),
                label(a.destination),
                action_label(topology, a.action),
                a.measured.to_string(),
            ]
        }),
    )
}

#[derive(Debug, Clone, Serialize)]
pub struct StatJson {
    pub mean: f64,
    pub std: f64,
}

impl From<Stat> for StatJson {
    fn from(s: Stat) -> Self {
        StatJson { mean: s.mean, std: s.std }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ConservationJson {
    pub originated: u64,
    pub delivered: u64,
    pub dropped_depleted: u64,
    pub dropped_unknown_destination: u64,
    pub dropped_hop_limit: u64,
    pub residual: u64,
}

impl From<Conservation> for ConservationJson {
    fn from(c: Conservation) -> Self {
        ConservationJson {
            originated: c.originated,
            delivered: c.delivered,
            dropped_depleted: c.dropped_depleted,
            dropped_unknown_destination: c.dropped_unknown,
            dropped_hop_limit: c.dropped_hop_limit,
            residual: c.residual,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct TrialJson {
    pub seed: u64,
    pub directory: String,
    pub delivered: u64,
    pub dropped: u64,
    pub mean_processing_time_s: f64,
    pub e_total_bytes: f64,
    pub e_total_joules: f64,
    pub end_time_s: String,
    pub events: u64,
    pub audit_clean: bool,
    pub measured: ConservationJson,
    pub all_data: ConservationJson,
    /// Fraction of battery used at the end of the run, by node label.
    pub final_batt_used: std::collections::BTreeMap<u32, f64>,
}

impl TrialJson {
    pub fn new(directory: String, topology: &Topology, trace: &TraceSet) -> Self {
        let s = trace.summary();
        TrialJson {
            seed: trace.seed,
            directory,
            delivered: s.delivered,
            dropped: s.dropped,
            mean_processing_time_s: s.mean_processing_time,
            e_total_bytes: s.e_total_bytes,
            e_total_joules: s.e_total_joules,
            end_time_s: format_time(trace.end_time),
            events: trace.events_processed,
            audit_clean: trace.audit.is_clean(),
            measured: trace.measured.into(),
            all_data: trace.conservation.into(),
            final_batt_used: topology
                .nodes()
                .map(|n| (topology.label(n), trace.final_batt_used[n.index()]))
                .collect(),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct AggregateJson {
    /// Standard deviations use the population formula over trials.
    pub std_formula: &'static str,
    pub processing_time_s: StatJson,
    pub e_total_bytes: StatJson,
    pub e_total_joules: StatJson,
}

impl From<&Aggregate> for AggregateJson {
    fn from(a: &Aggregate) -> Self {
        AggregateJson {
            std_formula: "population",
            processing_time_s: a.processing_time.into(),
            e_total_bytes: a.e_total_bytes.into(),
            e_total_joules: a.e_total_joules.into(),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SummaryJson {
    pub name: String,
    pub policy: String,
    pub seeds: Vec<u64>,
    pub aggregate: AggregateJson,
    pub trials: Vec<TrialJson>,
    /// Fully resolved config; running it again reproduces this experiment.
    pub config: ScenarioConfig,
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), ExportError> {
    let file = File::create(path).map_err(io_err(path))?;
    let mut w = BufWriter::new(file);
    serde_json::to_writer_pretty(&mut w, value)
        .map_err(|e| ExportError::Io { path: path.into(), source: e.into() })?;
    w.write_all(b"\n").map_err(io_err(path))?;
    w.flush().map_err(io_err(path))
}

/// Writes a comparison table with one row per swept value.
pub fn write_table(path: &Path, header: &[String], rows: Vec<Vec<String>>) -> Result<(), ExportError> {
    write_rows(path, header, rows.into_iter())
}
