//! Evaluation quantities, baselines and parameter sweeps.

use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::demand::OdDistribution;
use crate::engine::{simulate, Assignment, SimConfig, SimReport, WaitPolicy};
use crate::error::{Error, Result};
use crate::matching::{max_weight_matching, SavingsGraph};
use crate::roadnet::GridNetwork;
use crate::sharing::Passenger;

/// Histogram bin width in minutes (30 seconds).
pub const DEFAULT_BIN_WIDTH: f64 = 0.5;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Histogram {
    pub bin_width: f64,
    /// `counts[k]` holds values in `[k * bin_width, (k + 1) * bin_width)`.
    pub counts: Vec<usize>,
}

impl Histogram {
    pub fn new(values: impl IntoIterator<Item = f64>, bin_width: f64) -> Self {
        let mut counts = Vec::new();
        for v in values {
            let k = (v.max(0.0) / bin_width).floor() as usize;
            if k >= counts.len() {
                counts.resize(k + 1, 0);
            }
            counts[k] += 1;
        }
        Self { bin_width, counts }
    }

    pub fn total(&self) -> usize {
        self.counts.iter().sum()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WaitStats {
    pub mean_wait: f64,
    pub histogram: Histogram,
    pub mean_travel_increase: f64,
}

/// Aggregates attached to every simulation report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub passengers: usize,
    pub pairs: usize,
    pub solos: usize,
    pub total_solo_distance: f64,
    pub total_vehicle_distance: f64,
    pub cost_reduction: f64,
    pub mean_wait: f64,
    pub mean_travel_increase: f64,
    pub wait_histogram: Histogram,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentParams {
    pub epsilon: Option<f64>,
    pub lambda: Option<f64>,
    /// `optimal`, `constant` or `offline`.
    pub policy: String,
    pub tau_const: Option<f64>,
    pub seed: Option<u64>,
    pub passengers: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentResult {
    pub experiment: String,
    pub cost_reduction: f64,
    pub mean_wait: f64,
    pub mean_travel_increase: f64,
    pub wait_histogram: Histogram,
    pub params: ExperimentParams,
}

fn reduction(vehicle: f64, solo: f64) -> f64 {
    if solo > 0.0 {
        1.0 - vehicle / solo
    } else {
        0.0
    }
}

pub(crate) fn summarize(assignments: &[Assignment], passengers: &[Passenger], bin_width: f64) -> Summary {
    let mut pi_of = std::collections::HashMap::with_capacity(passengers.len());
    for p in passengers {
        pi_of.insert(p.id, p.pi);
    }
    let total_solo_distance: f64 = passengers.iter().map(|p| p.pi).sum();
    let total_vehicle_distance: f64 = assignments.iter().map(|a| a.vehicle_distance).sum();
    let riders = || assignments.iter().flat_map(|a| a.riders.iter());
    let n = passengers.len().max(1) as f64;
    let pairs = assignments.iter().filter(|a| a.riders.len() == 2).count();
    Summary {
        passengers: passengers.len(),
        pairs,
        solos: assignments.len() - pairs,
        total_solo_distance,
        total_vehicle_distance,
        cost_reduction: reduction(total_vehicle_distance, total_solo_distance),
        mean_wait: riders().map(|r| r.wait).sum::<f64>() / n,
        mean_travel_increase: riders().map(|r| r.omega - pi_of[&r.id]).sum::<f64>() / n,
        wait_histogram: Histogram::new(riders().map(|r| r.wait), bin_width),
    }
}

/// `1 - (vehicle distance driven) / (sum of direct trips)`, recomputed from
/// the report's assignment log.
pub fn cost_reduction(report: &SimReport) -> f64 {
    let solo: f64 = report.passengers.iter().map(|p| p.pi).sum();
    let vehicle: f64 = report.assignments.iter().map(|a| a.vehicle_distance).sum();
    reduction(vehicle, solo)
}

pub fn wait_stats(report: &SimReport, bin_width: f64) -> WaitStats {
    let n = report.passengers.len().max(1) as f64;
    WaitStats {
        mean_wait: report.passengers.iter().map(|p| p.wait).sum::<f64>() / n,
        histogram: Histogram::new(report.passengers.iter().map(|p| p.wait), bin_width),
        mean_travel_increase: report.passengers.iter().map(|p| p.omega - p.pi).sum::<f64>() / n,
    }
}

fn policy_name(policy: WaitPolicy) -> (&'static str, Option<f64>) {
    match policy {
        WaitPolicy::Optimal => ("optimal", None),
        WaitPolicy::Constant { tau } => ("constant", Some(tau)),
    }
}

fn common_epsilon(stream: &[Passenger]) -> Option<f64> {
    let first = stream.first()?.epsilon;
    stream.iter().all(|p| p.epsilon == first).then_some(first)
}

/// Packages a finished run as one experiment row.
pub fn experiment_result(experiment: &str, report: &SimReport, stream: &[Passenger]) -> ExperimentResult {
    let (policy, tau_const) = policy_name(report.config.policy);
    ExperimentResult {
        experiment: experiment.to_string(),
        cost_reduction: report.summary.cost_reduction,
        mean_wait: report.summary.mean_wait,
        mean_travel_increase: report.summary.mean_travel_increase,
        wait_histogram: report.summary.wait_histogram.clone(),
        params: ExperimentParams {
            epsilon: common_epsilon(stream),
            lambda: Some(report.config.wait.lambda),
            policy: policy.to_string(),
            tau_const,
            seed: report.seed,
            passengers: stream.len(),
        },
    }
}

/// Online run where everyone is told the same window, clamped to `epsilon * pi`.
pub fn constant_wait_run(
    tau_const: f64,
    stream: &[Passenger],
    net: &GridNetwork,
    dist: &OdDistribution,
    config: &SimConfig,
) -> Result<ExperimentResult> {
    if !(tau_const.is_finite() && tau_const >= 0.0) {
        return Err(Error::NegativeWindow(tau_const));
    }
    let config = SimConfig { policy: WaitPolicy::Constant { tau: tau_const }, ..*config };
    let report = simulate(net, dist, stream, &config)?;
    Ok(experiment_result("baseline_constant", &report, stream))
}

/// Runs every constant window on the same stream, in parallel.
pub fn constant_wait_sweep(
    taus: &[f64],
    stream: &[Passenger],
    net: &GridNetwork,
    dist: &OdDistribution,
    config: &SimConfig,
) -> Result<Vec<ExperimentResult>> {
    taus.par_iter().map(|&tau| constant_wait_run(tau, stream, net, dist, config)).collect()
}

/// Outcome of the hindsight matching, kept alongside the aggregate row.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OfflineOutcome {
    pub result: ExperimentResult,
    pub pairs: Vec<(u32, u32)>,
    pub total_saving: f64,
}

/// One maximum-savings matching over the whole stream with hindsight waits.
pub fn offline_greedy(passengers: &[Passenger], net: &GridNetwork, bin_width: f64) -> Result<OfflineOutcome> {
    if passengers.is_empty() {
        return Err(Error::BadParameter("offline baseline needs at least one passenger".into()));
    }
    let graph = SavingsGraph::offline(passengers, net);
    let matching = max_weight_matching(&graph);
    let by_id: std::collections::HashMap<u32, &Passenger> = passengers.iter().map(|p| (p.id, p)).collect();

    let mut waits = Vec::with_capacity(passengers.len());
    let mut increase = 0.0;
    let mut vehicle = 0.0;
    for &(a, b) in &matching.pairs {
        let e = graph.edge(a, b).expect("matched pair is an edge");
        let (pa, pb) = (by_id[&a], by_id[&b]);
        waits.push((pa.t - pb.t).max(0.0));
        waits.push((pb.t - pa.t).max(0.0));
        increase += e.quote.ride_i - pa.pi + e.quote.ride_j - pb.pi;
        vehicle += e.quote.total;
    }
    for id in &matching.unmatched {
        waits.push(0.0);
        vehicle += by_id[id].pi;
    }
    let solo: f64 = passengers.iter().map(|p| p.pi).sum();
    let n = passengers.len() as f64;
    Ok(OfflineOutcome {
        result: ExperimentResult {
            experiment: "baseline_offline".into(),
            cost_reduction: reduction(vehicle, solo),
            mean_wait: waits.iter().sum::<f64>() / n,
            mean_travel_increase: increase / n,
            wait_histogram: Histogram::new(waits, bin_width),
            params: ExperimentParams {
                epsilon: common_epsilon(passengers),
                lambda: None,
                policy: "offline".into(),
                tau_const: None,
                seed: None,
                passengers: passengers.len(),
            },
        },
        total_saving: matching.total_saving(&graph),
        pairs: matching.pairs,
    })
}

/// The same stream with every passenger's flexibility replaced.
pub fn with_epsilon(stream: &[Passenger], epsilon: f64) -> Result<Vec<Passenger>> {
    if !(0.0..=1.0).contains(&epsilon) {
        return Err(Error::BadParameter(format!("epsilon must lie in [0, 1], got {epsilon}")));
    }
    Ok(stream.iter().map(|p| Passenger { epsilon, ..*p }).collect())
}

/// One online run per flexibility value, all on the same arrivals.
pub fn epsilon_sweep(
    values: &[f64],
    stream: &[Passenger],
    net: &GridNetwork,
    dist: &OdDistribution,
    config: &SimConfig,
) -> Result<Vec<ExperimentResult>> {
    values
        .par_iter()
        .map(|&eps| {
            let s = with_epsilon(stream, eps)?;
            let report = simulate(net, dist, &s, config)?;
            Ok(experiment_result("sweep_epsilon", &report, &s))
        })
        .collect()
}

/// Flat CSV, one row per experiment; the histogram is `;`-separated counts.
pub fn write_results_csv(path: &Path, results: &[ExperimentResult]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record([
        "experiment",
        "policy",
        "epsilon",
        "lambda",
        "tau_const",
        "seed",
        "passengers",
        "cost_reduction",
        "mean_wait",
        "mean_travel_increase",
        "bin_width",
        "wait_histogram",
    ])?;
    let opt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
    for r in results {
        let hist: Vec<String> = r.wait_histogram.counts.iter().map(|c| c.to_string()).collect();
        w.write_record([
            r.experiment.clone(),
            r.params.policy.clone(),
            opt(r.params.epsilon),
            opt(r.params.lambda),
            opt(r.params.tau_const),
            r.params.seed.map(|s| s.to_string()).unwrap_or_default(),
            r.params.passengers.to_string(),
            r.cost_reduction.to_string(),
            r.mean_wait.to_string(),
            r.mean_travel_increase.to_string(),
            r.wait_histogram.bin_width.to_string(),
            hist.join(";"),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_results_json(path: &Path, results: &[ExperimentResult]) -> Result<()> {
    std::fs::write(path, serde_json::to_string_pretty(results)?)?;
    Ok(())
}
