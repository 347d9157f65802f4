//! The event loop replayed by a straight-line reimplementation.

mod common;

use rand::Rng;
use rideshare_core::demand::rng_from_seed;
use rideshare_core::engine::{simulate, AssignmentKind, Event, SimConfig};
use rideshare_core::waiting::{optimal_wait, DEFAULT_DELTA_U_FRACTION};
use rideshare_core::{CdfMode, GridNetwork, NodeId, OdDistribution, Passenger, WaitSettings, WeightSpec};

/// Random edge weights make savings ties (and so ambiguous matchings) vanishingly rare.
fn jittered_grid(q: usize, seed: u64) -> GridNetwork {
    let mut rng = rng_from_seed(seed);
    let mut edges = Vec::new();
    for r in 0..q {
        for c in 0..q {
            if c + 1 < q {
                edges.push((NodeId::new(r, c), NodeId::new(r, c + 1), rng.random_range(0.6..1.4)));
            }
            if r + 1 < q {
                edges.push((NodeId::new(r, c), NodeId::new(r + 1, c), rng.random_range(0.6..1.4)));
            }
        }
    }
    GridNetwork::build(q, &WeightSpec::PerEdge { default: 1.0, edges }).unwrap()
}

/// Hand simulation: arrivals first on ties, the earliest deadline (smallest id
/// on ties) triggers a full-pool matching found by exhaustive search.
fn oracle_trace(net: &GridNetwork, dist: &OdDistribution, stream: &[Passenger], lambda: f64) -> Vec<Event> {
    let mut events = Vec::new();
    let mut pool: Vec<(Passenger, f64)> = Vec::new();
    let mut next = 0;
    while next < stream.len() || !pool.is_empty() {
        let deadline =
            pool.iter().map(|(p, tau)| (p.t + tau, p.id)).min_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        if next < stream.len() && deadline.is_none_or(|(theta, _)| stream[next].t <= theta) {
            let p = stream[next];
            let tau = optimal_wait(net, dist, &p, lambda, CdfMode::Paper, p.max_wait() * DEFAULT_DELTA_U_FRACTION)
                .unwrap()
                .tau;
            pool.push((p, tau));
            events.push(Event::Arrival { t: p.t, id: p.id, tau });
            next += 1;
            continue;
        }
        let (theta, k) = deadline.unwrap();
        pool.sort_by_key(|(p, _)| p.id);
        let ids: Vec<u32> = pool.iter().map(|(p, _)| p.id).collect();
        let mut edges = Vec::new();
        for (x, (a, _)) in pool.iter().enumerate() {
            for (b, _) in &pool[x + 1..] {
                if let Some(s) = common::saving(net, a, b, theta - a.t, theta - b.t) {
                    edges.push((a.id, b.id, s));
                }
            }
        }
        let (_, pairs) = common::brute_force_matching(&ids, &edges);
        let matched = |id: u32| pairs.iter().any(|&(a, b)| a == id || b == id);
        let solo = (!matched(k)).then_some(k);
        pool.retain(|(p, _)| !matched(p.id) && Some(p.id) != solo);
        events.push(Event::Departure { t: theta, candidate: k, pool: ids, pairs, solo });
    }
    events
}

fn sorted_pairs(events: &[Event]) -> Vec<Event> {
    events
        .iter()
        .cloned()
        .map(|e| match e {
            Event::Departure { t, candidate, pool, mut pairs, solo } => {
                pairs.sort_unstable();
                Event::Departure { t, candidate, pool, pairs, solo }
            }
            other => other,
        })
        .collect()
}

#[test]
fn twenty_passengers_match_hand_simulation() {
    for seed in 0..6u64 {
        let net = jittered_grid(5, 50 + seed);
        let dist = common::kde_demand(5);
        let lambda = 1.5;
        let stream = common::stream(&net, &dist, lambda, seed, 20, 0.7);
        let mut config = SimConfig::new(WaitSettings::new(lambda, CdfMode::Paper, 5));
        config.bin_width = 0.5;
        let report = simulate(&net, &dist, &stream, &config).unwrap();
        let expected = oracle_trace(&net, &dist, &stream, lambda);
        assert_eq!(sorted_pairs(&report.events), expected, "seed {seed}");
        let departures = expected.iter().filter(|e| matches!(e, Event::Departure { .. })).count();
        assert!(departures < 20, "seed {seed}: nobody shared");
    }
}

#[test]
fn every_passenger_departs_once_within_window() {
    let q = 8;
    let net = GridNetwork::uniform(q, 1.0).unwrap();
    let dist = common::kde_demand(q);
    for seed in 0..5 {
        let stream = common::stream(&net, &dist, 3.0, seed, 400, 0.6);
        let report =
            simulate(&net, &dist, &stream, &SimConfig::new(WaitSettings::new(3.0, CdfMode::Paper, q))).unwrap();
        let mut ids: Vec<u32> = report.assignments.iter().flat_map(|a| a.riders.iter().map(|r| r.id)).collect();
        ids.sort_unstable();
        assert_eq!(ids, (0..400).collect::<Vec<u32>>());
        for log in &report.passengers {
            assert!(log.departure >= log.t);
            assert!(log.departure <= log.t + log.tau + 1e-9, "left after its own deadline");
        }
        // conservation of distance
        let solo: f64 = stream.iter().map(|p| p.pi).sum();
        let saved: f64 = report
            .assignments
            .iter()
            .filter(|a| a.kind == AssignmentKind::Pair)
            .map(|a| {
                let i = &stream[a.riders[0].id as usize];
                let j = &stream[a.riders[1].id as usize];
                i.pi + j.pi - a.vehicle_distance
            })
            .sum();
        assert!((report.summary.total_vehicle_distance - (solo - saved)).abs() < 1e-6);
        // steady-state pool bound
        let mean_pi = solo / stream.len() as f64;
        assert!((report.max_pool as f64) <= 10.0 * 3.0 * 0.6 * mean_pi);
    }
}

#[test]
fn candidate_departs_exactly_at_deadline() {
    let q = 6;
    let net = GridNetwork::uniform(q, 1.0).unwrap();
    let dist = OdDistribution::uniform(q);
    let stream = common::stream(&net, &dist, 2.0, 77, 300, 0.6);
    let report = simulate(&net, &dist, &stream, &SimConfig::new(WaitSettings::new(2.0, CdfMode::Paper, q))).unwrap();
    for e in &report.events {
        if let Event::Departure { t, candidate, .. } = e {
            let log = &report.passengers[*candidate as usize];
            assert_eq!(log.departure, *t);
            assert_eq!(*t, log.t + log.tau);
        }
    }
}
