//! Pool matching on the savings graph.
//!
//! Minimizing total vehicle distance, where a passenger left alone pays the
//! direct trip, is the same as maximizing the total savings
//! `pi_i + pi_j - shared_total` over the matched pairs. Only pairs that are
//! feasible at the decision time and save a positive amount get an edge, so
//! unmatched nodes simply stay in the pool.

pub mod blossom;

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::roadnet::GridNetwork;
use crate::sharing::{best_feasible, Passenger, SharedQuote};

/// Savings below this are treated as zero.
pub const MIN_SAVING: f64 = 1e-9;

/// Savings are matched as fixed-point integers with this many units per grid-length.
pub const WEIGHT_SCALE: f64 = 1e6;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SavingsEdge {
    pub a: u32,
    pub b: u32,
    pub saving: f64,
    /// Cheapest feasible route, with `a` in the role of passenger `i`.
    pub quote: SharedQuote,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SavingsGraph {
    /// Passenger ids, ascending.
    pub nodes: Vec<u32>,
    /// Edges with `a < b`, in lexicographic order.
    pub edges: Vec<SavingsEdge>,
}

fn edge_for(net: &GridNetwork, a: &Passenger, b: &Passenger, wait_a: f64, wait_b: f64) -> Option<SavingsEdge> {
    let quote = best_feasible(net, a, b, wait_a, wait_b)?;
    let saving = a.pi + b.pi - quote.total;
    (saving > MIN_SAVING).then_some(SavingsEdge { a: a.id, b: b.id, saving, quote })
}

fn sorted_by_id(pool: &[Passenger]) -> Vec<&Passenger> {
    let mut v: Vec<&Passenger> = pool.iter().collect();
    v.sort_by_key(|p| p.id);
    v
}

impl SavingsGraph {
    /// Edges between pool members that are feasible with waits measured at `now`.
    pub fn build(pool: &[Passenger], now: f64, net: &GridNetwork) -> Self {
        let members = sorted_by_id(pool);
        let mut edges = Vec::new();
        for (x, a) in members.iter().enumerate() {
            for b in &members[x + 1..] {
                if let Some(e) = edge_for(net, a, b, now - a.t, now - b.t) {
                    edges.push(e);
                }
            }
        }
        Self { nodes: members.iter().map(|p| p.id).collect(), edges }
    }

    /// Hindsight graph over a whole stream: the earlier passenger waits
    /// exactly until the later one arrives, the later one not at all.
    pub fn offline(passengers: &[Passenger], net: &GridNetwork) -> Self {
        let mut by_time: Vec<&Passenger> = passengers.iter().collect();
        by_time.sort_by(|x, y| x.t.total_cmp(&y.t).then(x.id.cmp(&y.id)));
        let mut edges = Vec::new();
        for (x, early) in by_time.iter().enumerate() {
            for late in &by_time[x + 1..] {
                let gap = late.t - early.t;
                if gap > early.max_wait() + crate::sharing::FEASIBILITY_TOL {
                    break;
                }
                let (a, b, wa, wb) = if early.id < late.id { (early, late, gap, 0.0) } else { (late, early, 0.0, gap) };
                if let Some(e) = edge_for(net, a, b, wa, wb) {
                    edges.push(e);
                }
            }
        }
        edges.sort_by_key(|e| (e.a, e.b));
        let mut nodes: Vec<u32> = passengers.iter().map(|p| p.id).collect();
        nodes.sort_unstable();
        Self { nodes, edges }
    }

    pub fn edge(&self, a: u32, b: u32) -> Option<&SavingsEdge> {
        let (a, b) = if a < b { (a, b) } else { (b, a) };
        self.edges.binary_search_by_key(&(a, b), |e| (e.a, e.b)).ok().map(|i| &self.edges[i])
    }
}

/// Disjoint pairs plus everyone left over.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Matching {
    /// `(a, b)` with `a < b`, sorted.
    pub pairs: Vec<(u32, u32)>,
    pub unmatched: Vec<u32>,
}

impl Matching {
    pub fn total_saving(&self, g: &SavingsGraph) -> f64 {
        self.pairs.iter().map(|&(a, b)| g.edge(a, b).expect("matched pair is an edge").saving).sum()
    }

    pub fn partner_of(&self, id: u32) -> Option<u32> {
        self.pairs.iter().find_map(|&(a, b)| {
            if a == id {
                Some(b)
            } else if b == id {
                Some(a)
            } else {
                None
            }
        })
    }
}

/// Maximum total saving over node-disjoint edges of `g`.
pub fn max_weight_matching(g: &SavingsGraph) -> Matching {
    let index: HashMap<u32, usize> = g.nodes.iter().enumerate().map(|(i, &id)| (id, i)).collect();
    let edges: Vec<(usize, usize, i64)> =
        g.edges.iter().map(|e| (index[&e.a], index[&e.b], (e.saving * WEIGHT_SCALE).round() as i64)).collect();
    let mate = blossom::max_weight_matching(g.nodes.len(), &edges);
    let mut pairs = Vec::new();
    let mut unmatched = Vec::new();
    for (i, m) in mate.iter().enumerate() {
        match *m {
            Some(j) if i < j => pairs.push((g.nodes[i], g.nodes[j])),
            Some(_) => {}
            None => unmatched.push(g.nodes[i]),
        }
    }
    Matching { pairs, unmatched }
}
