use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use rideshare_core::demand::{
    estimate_kde, generate_stream, ingest_records, read_stream, synthetic_records, write_stream, write_trip_records,
};
use rideshare_core::engine::simulate as simulate_stream;
use rideshare_core::metrics::{
    constant_wait_sweep, epsilon_sweep, offline_greedy, write_results_csv, ExperimentResult,
};
use rideshare_core::{
    ArrivalProcess, Bbox, GridNetwork, OdDistribution, Passenger, SimConfig, SimReport, WaitSettings, WeightSpec,
};
use serde::Serialize;

use crate::config::RunConfig;

/// Wrapper written around every JSON output so each file carries its inputs.
#[derive(Serialize)]
struct Envelope<'a, T: Serialize> {
    command: &'a str,
    config: &'a RunConfig,
    seed: u64,
    distribution_checksum: String,
    stream: String,
    result: T,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum BaselineKind {
    Constant,
    Offline,
}

fn network(cfg: &RunConfig) -> Result<GridNetwork> {
    let spec = match &cfg.grid_edge_weights {
        Some(path) => WeightSpec::from_file(path, cfg.grid_weight)
            .with_context(|| format!("reading edge weights {}", path.display()))?,
        None => WeightSpec::Uniform(cfg.grid_weight),
    };
    Ok(GridNetwork::build(cfg.grid_q, &spec)?)
}

fn distribution(cfg: &RunConfig) -> Result<OdDistribution> {
    let Some(path) = &cfg.distribution else {
        bail!("input.distribution is required (write one with `rideshare estimate`)");
    };
    let dist = OdDistribution::load(path).with_context(|| format!("loading distribution {}", path.display()))?;
    if dist.q() != cfg.grid_q {
        bail!("distribution {} is for q = {}, config has grid.q = {}", path.display(), dist.q(), cfg.grid_q);
    }
    Ok(dist)
}

fn sim_config(cfg: &RunConfig) -> SimConfig {
    let mut wait = WaitSettings::new(cfg.lambda, cfg.cdf_mode, cfg.grid_q);
    wait.delta_u_fraction = cfg.delta_u_fraction;
    wait.mode = cfg.waiting_mode;
    wait.samples = cfg.waiting_samples;
    wait.seed = cfg.waiting_seed;
    let mut sim = SimConfig::new(wait);
    sim.bin_width = cfg.bin_width;
    sim
}

/// A saved stream when given, otherwise one generated from the config seed.
fn passengers(
    cfg: &RunConfig,
    net: &GridNetwork,
    dist: &OdDistribution,
    stream: Option<&Path>,
) -> Result<(Vec<Passenger>, String)> {
    match stream {
        Some(path) => {
            let s = read_stream(path, net).with_context(|| format!("reading stream {}", path.display()))?;
            if s.is_empty() {
                bail!("stream {} holds no passengers", path.display());
            }
            Ok((s, path.display().to_string()))
        }
        None => {
            let proc = ArrivalProcess::new(cfg.lambda, cfg.seed)?;
            let s = generate_stream(net, &dist.sampler()?, &proc, cfg.passengers_n, cfg.passengers_epsilon)?;
            Ok((s, "generated".into()))
        }
    }
}

fn out_dir(cfg: &RunConfig) -> Result<&Path> {
    fs::create_dir_all(&cfg.output_dir).with_context(|| format!("creating {}", cfg.output_dir.display()))?;
    Ok(&cfg.output_dir)
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut body = serde_json::to_string_pretty(value)?;
    body.push('\n');
    fs::write(path, body).with_context(|| format!("writing {}", path.display()))
}

pub fn estimate(cfg: &RunConfig, records: Option<PathBuf>, output: &Path) -> Result<()> {
    let Some(records) = records.or_else(|| cfg.records.clone()) else {
        bail!("no trip records given (use --records or input.records)");
    };
    let ingested = ingest_records(&records, &cfg.bbox, cfg.records_limit.unwrap_or(usize::MAX))
        .with_context(|| format!("ingesting {}", records.display()))?;
    let dist = estimate_kde(&ingested.records, cfg.grid_q, &cfg.bbox, cfg.kde_bandwidth)?;
    if let Some(dir) = output.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir)?;
    }
    dist.save(output).with_context(|| format!("writing {}", output.display()))?;
    println!(
        "estimated q={} from {} records ({} malformed, {} outside bbox) -> {} [sha256 {}]",
        cfg.grid_q,
        ingested.records.len(),
        ingested.malformed,
        ingested.outside_bbox,
        output.display(),
        dist.checksum()
    );
    Ok(())
}

pub fn synth(bbox: &Bbox, n: usize, seed: u64, output: &Path) -> Result<()> {
    if n == 0 {
        bail!("--n must be positive");
    }
    if let Some(dir) = output.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir)?;
    }
    write_trip_records(output, &synthetic_records(n, bbox, seed))?;
    println!("wrote {n} synthetic trip records -> {}", output.display());
    Ok(())
}

fn write_report(
    cfg: &RunConfig,
    command: &str,
    stem: &str,
    stream: String,
    checksum: String,
    report: &SimReport,
) -> Result<()> {
    let dir = out_dir(cfg)?;
    write_json(
        &dir.join(format!("{stem}report.json")),
        &Envelope { command, config: cfg, seed: cfg.seed, distribution_checksum: checksum, stream, result: report },
    )?;
    let csv_path = dir.join(format!("{stem}passengers.csv"));
    fs::write(&csv_path, report.passengers_csv()?).with_context(|| format!("writing {}", csv_path.display()))?;
    let s = &report.summary;
    println!(
        "{command}: {} passengers, {} pairs, {} solo, cost reduction {:.4}, mean wait {:.3}, mean travel increase {:.3} -> {}",
        s.passengers,
        s.pairs,
        s.solos,
        s.cost_reduction,
        s.mean_wait,
        s.mean_travel_increase,
        dir.display()
    );
    Ok(())
}

pub fn simulate(cfg: &RunConfig) -> Result<()> {
    let net = network(cfg)?;
    let dist = distribution(cfg)?;
    let (stream, source) = passengers(cfg, &net, &dist, None)?;
    let mut report = simulate_stream(&net, &dist, &stream, &sim_config(cfg))?;
    report.seed = Some(cfg.seed);
    let dir = out_dir(cfg)?;
    write_stream(&dir.join("stream.csv"), &stream)?;
    write_report(cfg, "simulate", "", source, dist.checksum(), &report)
}

pub fn replay(cfg: &RunConfig, stream: &Path) -> Result<()> {
    let net = network(cfg)?;
    let dist = distribution(cfg)?;
    let (stream, source) = passengers(cfg, &net, &dist, Some(stream))?;
    let report = simulate_stream(&net, &dist, &stream, &sim_config(cfg))?;
    write_report(cfg, "replay", "replay_", source, dist.checksum(), &report)
}

fn write_results(
    cfg: &RunConfig,
    command: &str,
    stem: &str,
    stream: String,
    checksum: String,
    results: &[ExperimentResult],
) -> Result<()> {
    let dir = out_dir(cfg)?;
    let csv_path = dir.join(format!("{stem}.csv"));
    write_results_csv(&csv_path, results).with_context(|| format!("writing {}", csv_path.display()))?;
    write_json(
        &dir.join(format!("{stem}.json")),
        &Envelope { command, config: cfg, seed: cfg.seed, distribution_checksum: checksum, stream, result: results },
    )?;
    for r in results {
        println!(
            "{stem}: eps={} tau_const={} reduction {:.4} mean wait {:.3}",
            r.params.epsilon.map(|e| e.to_string()).unwrap_or_else(|| "mixed".into()),
            r.params.tau_const.map(|t| t.to_string()).unwrap_or_else(|| "-".into()),
            r.cost_reduction,
            r.mean_wait
        );
    }
    Ok(())
}

fn seeded(mut results: Vec<ExperimentResult>, cfg: &RunConfig, generated: bool) -> Vec<ExperimentResult> {
    for r in &mut results {
        r.params.seed = generated.then_some(cfg.seed);
        r.params.lambda.get_or_insert(cfg.lambda);
    }
    results
}

pub fn baseline(cfg: &RunConfig, kind: BaselineKind, stream: Option<&Path>) -> Result<()> {
    let net = network(cfg)?;
    let dist = distribution(cfg)?;
    let (passengers, source) = passengers(cfg, &net, &dist, stream)?;
    let generated = stream.is_none();
    let (stem, results) = match kind {
        BaselineKind::Constant => {
            ("baseline_constant", constant_wait_sweep(&cfg.baseline_taus, &passengers, &net, &dist, &sim_config(cfg))?)
        }
        BaselineKind::Offline => ("baseline_offline", vec![offline_greedy(&passengers, &net, cfg.bin_width)?.result]),
    };
    write_results(cfg, "baseline", stem, source, dist.checksum(), &seeded(results, cfg, generated))
}

pub fn sweep(cfg: &RunConfig, epsilons: Option<Vec<f64>>, stream: Option<&Path>) -> Result<()> {
    let net = network(cfg)?;
    let dist = distribution(cfg)?;
    let (passengers, source) = passengers(cfg, &net, &dist, stream)?;
    let values = epsilons.unwrap_or_else(|| cfg.sweep_epsilons.clone());
    let results = epsilon_sweep(&values, &passengers, &net, &dist, &sim_config(cfg))?;
    write_results(cfg, "sweep", "sweep_epsilon", source, dist.checksum(), &seeded(results, cfg, stream.is_none()))
}
