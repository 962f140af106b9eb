//! Multi-trial runs and parameter sweeps.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use eaqco_core::metrics::{aggregate_trials, mean, sample_variance, Aggregate, MetricsError, TraceSet};
use eaqco_core::{run, Action, NodeId, Scenario};
use rayon::prelude::*;
use thiserror::Error;

use crate::config::{ConfigError, ScenarioConfig};
use crate::export::{self, ExportError, SummaryJson, TrialJson};

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Export(#[from] ExportError),
    #[error("cannot aggregate trials: {0}")]
    Metrics(#[from] MetricsError),
    #[error("cannot start worker pool: {0}")]
    Pool(#[from] rayon::ThreadPoolBuildError),
}

impl ExperimentError {
    /// True when the problem is in the input config rather than the run.
    pub fn is_config(&self) -> bool {
        matches!(self, ExperimentError::Config(_))
    }
}

/// Parameter that a sweep varies.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepParam {
    Eta,
    Epsilon,
}

impl SweepParam {
    pub fn name(self) -> &'static str {
        match self {
            SweepParam::Eta => "eta",
            SweepParam::Epsilon => "epsilon",
        }
    }

    fn apply(self, cfg: &mut ScenarioConfig, value: f64) {
        match self {
            SweepParam::Eta => cfg.eta = value,
            SweepParam::Epsilon => cfg.epsilon = value,
        }
    }
}

/// Runs one trial per seed. `threads` of `None` uses every core; the
/// result order always follows `seeds`.
pub fn run_trials(scenario: &Scenario, seeds: &[u64], threads: Option<usize>) -> Result<Vec<TraceSet>, ExperimentError> {
    let work = || seeds.par_iter().map(|&s| run(scenario, s)).collect();
    match threads {
        None => Ok(work()),
        Some(n) => Ok(rayon::ThreadPoolBuilder::new().num_threads(n.max(1)).build()?.install(work)),
    }
}

#[derive(Debug)]
pub struct ExperimentReport {
    pub config: ScenarioConfig,
    pub scenario: Scenario,
    pub traces: Vec<TraceSet>,
    pub aggregate: Aggregate,
    pub out_dir: PathBuf,
}

pub fn trial_dir_name(index: usize, seed: u64) -> String {
    format!("trial_{index:03}_seed_{seed}")
}

/// Runs every trial of `cfg` and writes per-trial traces plus
/// `summary.json` under `out`.
pub fn run_experiment(cfg: &ScenarioConfig, out: &Path, threads: Option<usize>) -> Result<ExperimentReport, ExperimentError> {
    let scenario = cfg.to_scenario()?;
    let seeds = cfg.trial_seeds();
    let traces = run_trials(&scenario, &seeds, threads)?;

    let mut trials = Vec::with_capacity(traces.len());
    for (i, trace) in traces.iter().enumerate() {
        let name = trial_dir_name(i, trace.seed);
        export::write_trial(&out.join(&name), &scenario.topology, scenario.instrumented, trace)?;
        trials.push(TrialJson::new(name, &scenario.topology, trace));
    }
    let summaries: Vec<_> = traces.iter().map(TraceSet::summary).collect();
    let aggregate = aggregate_trials(&summaries)?;

    let mut echo = cfg.clone();
    echo.seeds = Some(seeds.clone());
    echo.trials = seeds.len() as u32;
    let summary = SummaryJson {
        name: cfg.name.clone(),
        policy: scenario.policy.name().to_string(),
        seeds,
        aggregate: (&aggregate).into(),
        trials,
        config: echo,
    };
    export::write_json(&out.join("summary.json"), &summary)?;

    Ok(ExperimentReport { config: cfg.clone(), scenario, traces, aggregate, out_dir: out.to_path_buf() })
}

/// Sample variance of each action's Q value at `node` toward `destination`
/// over one trial. Actions with fewer than two samples are left out.
pub fn q_variance_by_action(trace: &TraceSet, node: NodeId, destination: NodeId) -> BTreeMap<Action, f64> {
    let mut series: BTreeMap<Action, Vec<f64>> = BTreeMap::new();
    for s in trace.qtrace.iter().filter(|s| s.node == node && s.destination == destination) {
        for &(a, v) in &s.values {
            series.entry(a).or_default().push(v);
        }
    }
    series.into_iter().filter_map(|(a, v)| sample_variance(&v).map(|var| (a, var))).collect()
}

/// Mean over trials of [`q_variance_by_action`].
pub fn mean_q_variance(traces: &[TraceSet], node: NodeId, destination: NodeId) -> BTreeMap<Action, f64> {
    let mut pooled: BTreeMap<Action, Vec<f64>> = BTreeMap::new();
    for t in traces {
        for (a, v) in q_variance_by_action(t, node, destination) {
            pooled.entry(a).or_default().push(v);
        }
    }
    pooled.into_iter().filter_map(|(a, v)| mean(&v).map(|m| (a, m))).collect()
}

#[derive(Debug)]
pub struct SweepReport {
    pub param: SweepParam,
    pub values: Vec<f64>,
    pub runs: Vec<ExperimentReport>,
}

/// Runs the experiment once per value with shared seeds, then writes
/// `comparison.csv` under `out`.
pub fn sweep(
    cfg: &ScenarioConfig,
    param: SweepParam,
    values: &[f64],
    out: &Path,
    threads: Option<usize>,
) -> Result<SweepReport, ExperimentError> {
    if values.is_empty() {
        return Err(ConfigError::Invalid { field: "values".into(), reason: "need at least one value".into() }.into());
    }
    if cfg.policy == crate::config::PolicyName::Static {
        return Err(ConfigError::Invalid {
            field: "param".into(),
            reason: format!("static routing does not use {}", param.name()),
        }
        .into());
    }
    // Validate every variant before running any of them.
    let variants: Vec<ScenarioConfig> = values
        .iter()
        .map(|&v| {
            let mut c = cfg.clone();
            param.apply(&mut c, v);
            c.to_scenario().map(|_| c)
        })
        .collect::<Result<_, _>>()?;

    let mut runs = Vec::with_capacity(values.len());
    for (c, v) in variants.iter().zip(values) {
        runs.push(run_experiment(c, &out.join(format!("{}_{}", param.name(), v)), threads)?);
    }

    let base = &runs[0].scenario;
    let probe = base.instrumented.zip(base.workload.measured.map(|m| m.destination));
    let forwards: Vec<Action> = match probe {
        Some((n, _)) => base.topology.neighbors(n).map(Action::Forward).collect(),
        None => Vec::new(),
    };

    let mut header: Vec<String> = [
        param.name(),
        "processing_time_mean_s",
        "processing_time_std_s",
        "e_total_bytes_mean",
        "e_total_bytes_std",
        "e_total_joules_mean",
        "e_total_joules_std",
    ]
    .iter()
    .map(|s| s.to_string())
    .collect();
    header.extend(forwards.iter().map(|&a| format!("q_variance_{}", export::action_label(&base.topology, a))));

    let rows = runs
        .iter()
        .zip(values)
        .map(|(r, v)| {
            let a = &r.aggregate;
            let mut row = vec![
                v.to_string(),
                format!("{:.9}", a.processing_time.mean),
                format!("{:.9}", a.processing_time.std),
                format!("{:.3}", a.e_total_bytes.mean),
                format!("{:.3}", a.e_total_bytes.std),
                format!("{:.9}", a.e_total_joules.mean),
                format!("{:.9}", a.e_total_joules.std),
            ];
            if let Some((node, dest)) = probe {
                let var = mean_q_variance(&r.traces, node, dest);
                row.extend(forwards.iter().map(|a| var.get(a).map(|v| format!("{v:.12e}")).unwrap_or_default()));
            }
            row
        })
        .collect();
    export::write_table(&out.join("comparison.csv"), &header, rows)?;

    Ok(SweepReport { param, values: values.to_vec(), runs })
}
