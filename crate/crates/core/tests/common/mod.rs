//! Independent reference implementations used by the integration suites.
//!
//! Nothing here calls into the sharing, waiting or matching modules; routes,
//! feasibility and matchings are recomputed from the distance table alone.

#![allow(dead_code)]

use rideshare_core::demand::{estimate_kde, generate_stream, synthetic_records};
use rideshare_core::{ArrivalProcess, Bbox, GridNetwork, NodeId, OdDistribution, Passenger};

pub const TOL: f64 = 1e-9;

/// Order names in tie-break order.
pub const ORDERS: [&str; 4] = ["IJ", "II", "JI", "JJ"];

/// Total, ride of `i`, ride of `j` for the named pickup/drop-off order.
pub fn route(net: &GridNetwork, i: &Passenger, j: &Passenger, order: &str) -> (f64, f64, f64) {
    let d = |a: NodeId, b: NodeId| net.shortest_len(a, b);
    match order {
        // s_i s_j d_j d_i
        "IJ" => {
            let (a, b, c) = (d(i.s, j.s), d(j.s, j.d), d(j.d, i.d));
            (a + b + c, a + b + c, b)
        }
        // s_i s_j d_i d_j
        "II" => {
            let (a, b, c) = (d(i.s, j.s), d(j.s, i.d), d(i.d, j.d));
            (a + b + c, a + b, b + c)
        }
        // s_j s_i d_i d_j
        "JI" => {
            let (a, b, c) = (d(j.s, i.s), d(i.s, i.d), d(i.d, j.d));
            (a + b + c, b, a + b + c)
        }
        // s_j s_i d_j d_i
        "JJ" => {
            let (a, b, c) = (d(j.s, i.s), d(i.s, j.d), d(j.d, i.d));
            (a + b + c, b + c, a + b)
        }
        other => panic!("unknown order {other}"),
    }
}

pub fn within_budget(p: &Passenger, wait: f64, ride: f64) -> bool {
    wait + ride <= (1.0 + p.epsilon) * p.pi + TOL
}

/// Cheapest order keeping both passengers within budget.
pub fn best_feasible(
    net: &GridNetwork,
    i: &Passenger,
    j: &Passenger,
    wait_i: f64,
    wait_j: f64,
) -> Option<(&'static str, f64, f64, f64)> {
    let mut best: Option<(&'static str, f64, f64, f64)> = None;
    for order in ORDERS {
        let (total, ri, rj) = route(net, i, j, order);
        if within_budget(i, wait_i, ri) && within_budget(j, wait_j, rj) && best.is_none_or(|b| total < b.1) {
            best = Some((order, total, ri, rj));
        }
    }
    best
}

/// Saving of the pair at the given waits, when it is positive and feasible.
pub fn saving(net: &GridNetwork, i: &Passenger, j: &Passenger, wait_i: f64, wait_j: f64) -> Option<f64> {
    let (_, total, _, _) = best_feasible(net, i, j, wait_i, wait_j)?;
    let s = i.pi + j.pi - total;
    (s > TOL).then_some(s)
}

/// Maximum total weight over all matchings, with one optimal pair set.
/// Only strictly better totals replace the incumbent.
pub fn brute_force_matching(nodes: &[u32], edges: &[(u32, u32, f64)]) -> (f64, Vec<(u32, u32)>) {
    fn go(
        free: &mut Vec<u32>,
        edges: &[(u32, u32, f64)],
        acc: f64,
        pairs: &mut Vec<(u32, u32)>,
        best: &mut (f64, Vec<(u32, u32)>),
    ) {
        let Some(&first) = free.first() else {
            if acc > best.0 {
                *best = (acc, pairs.clone());
            }
            return;
        };
        free.remove(0);
        go(free, edges, acc, pairs, best);
        for &(a, b, w) in edges {
            let other = if a == first {
                b
            } else if b == first {
                a
            } else {
                continue;
            };
            if let Some(pos) = free.iter().position(|&x| x == other) {
                free.remove(pos);
                pairs.push((first.min(other), first.max(other)));
                go(free, edges, acc + w, pairs, best);
                pairs.pop();
                free.insert(pos, other);
            }
        }
        free.insert(0, first);
    }
    let mut free = nodes.to_vec();
    free.sort_unstable();
    let mut best = (0.0, Vec::new());
    go(&mut free, edges, 0.0, &mut Vec::new(), &mut best);
    best.1.sort_unstable();
    best
}

/// Demand estimated from a synthetic trip-record sample.
pub fn kde_demand(q: usize) -> OdDistribution {
    let records = synthetic_records(20_000, &Bbox::NYC, 7);
    estimate_kde(&records, q, &Bbox::NYC, None).expect("kde")
}

pub fn stream(
    net: &GridNetwork,
    dist: &OdDistribution,
    lambda: f64,
    seed: u64,
    n: usize,
    epsilon: f64,
) -> Vec<Passenger> {
    let proc = ArrivalProcess::new(lambda, seed).expect("rate");
    generate_stream(net, &dist.sampler().expect("sampler"), &proc, n, epsilon).expect("stream")
}
