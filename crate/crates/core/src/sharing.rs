//! Shared-ride cost model for at most two passengers per vehicle.
//!
//! A shared route is fixed by who is picked up first and who is dropped off
//! first. With passengers `i` and `j` the four routes are
//!
//! | order | route                     |
//! |-------|---------------------------|
//! | `IJ`  | s_i → s_j → d_j → d_i     |
//! | `II`  | s_i → s_j → d_i → d_j     |
//! | `JI`  | s_j → s_i → d_i → d_j     |
//! | `JJ`  | s_j → s_i → d_j → d_i     |
//!
//! and every leg follows a shortest path. Ride time is measured from a
//! passenger's own pickup to their own drop-off.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::roadnet::{GridNetwork, NodeId};

/// Slack allowed when comparing a trip against its detour budget.
pub const FEASIBILITY_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Passenger {
    pub id: u32,
    pub s: NodeId,
    pub d: NodeId,
    /// Tolerated fraction above the shortest path, shared between waiting and detour.
    pub epsilon: f64,
    /// Arrival time.
    pub t: f64,
    /// Shortest-path length from `s` to `d`.
    pub pi: f64,
}

impl Passenger {
    pub fn new(net: &GridNetwork, id: u32, s: NodeId, d: NodeId, epsilon: f64, t: f64) -> Result<Self> {
        let bad = |msg: &str| Error::BadPassenger { id, msg: msg.into() };
        if !net.contains(s) || !net.contains(d) {
            return Err(bad("origin or destination outside the grid"));
        }
        if s == d {
            return Err(bad("origin equals destination"));
        }
        if !(epsilon.is_finite() && epsilon >= 0.0) {
            return Err(bad("flexibility must be finite and non-negative"));
        }
        if !t.is_finite() {
            return Err(bad("arrival time must be finite"));
        }
        Ok(Self { id, s, d, epsilon, t, pi: net.shortest_len(s, d) })
    }

    /// Longest total of waiting plus riding this passenger accepts.
    pub fn budget(&self) -> f64 {
        (1.0 + self.epsilon) * self.pi
    }

    /// Longest wait that still leaves room for the direct trip.
    pub fn max_wait(&self) -> f64 {
        self.epsilon * self.pi
    }
}

/// First letter: who is picked up first. Second letter: who is dropped off first.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum RideOrder {
    IJ,
    II,
    JI,
    JJ,
    #[serde(rename = "SOLO")]
    Solo,
}

impl RideOrder {
    /// Shared orders in tie-break order.
    pub const SHARED: [RideOrder; 4] = [RideOrder::IJ, RideOrder::II, RideOrder::JI, RideOrder::JJ];

    /// The same route with the roles of the two passengers exchanged.
    pub fn swapped(self) -> Self {
        match self {
            RideOrder::IJ => RideOrder::JI,
            RideOrder::JI => RideOrder::IJ,
            RideOrder::II => RideOrder::JJ,
            RideOrder::JJ => RideOrder::II,
            RideOrder::Solo => RideOrder::Solo,
        }
    }
}

impl fmt::Display for RideOrder {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            RideOrder::IJ => "IJ",
            RideOrder::II => "II",
            RideOrder::JI => "JI",
            RideOrder::JJ => "JJ",
            RideOrder::Solo => "SOLO",
        })
    }
}

/// Route cost of one ride order.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SharedQuote {
    pub order: RideOrder,
    /// Vehicle distance of the full route.
    pub total: f64,
    pub ride_i: f64,
    pub ride_j: f64,
}

impl SharedQuote {
    pub fn solo(p: &Passenger) -> Self {
        Self { order: RideOrder::Solo, total: p.pi, ride_i: p.pi, ride_j: 0.0 }
    }

    /// The quote seen from the other passenger's side.
    pub fn swapped(self) -> Self {
        Self { order: self.order.swapped(), total: self.total, ride_i: self.ride_j, ride_j: self.ride_i }
    }
}

/// Route cost from flat node indices; the hot path of the waiting objective.
#[inline]
pub(crate) fn quote_indices(
    net: &GridNetwork,
    si: usize,
    di: usize,
    sj: usize,
    dj: usize,
    order: RideOrder,
) -> SharedQuote {
    let d = |a, b| net.dist_by_index(a, b);
    let (total, ride_i, ride_j) = match order {
        RideOrder::IJ => {
            let (a, b, c) = (d(si, sj), d(sj, dj), d(dj, di));
            (a + b + c, a + b + c, b)
        }
        RideOrder::II => {
            let (a, b, c) = (d(si, sj), d(sj, di), d(di, dj));
            (a + b + c, a + b, b + c)
        }
        RideOrder::JI => {
            let (a, b, c) = (d(sj, si), d(si, di), d(di, dj));
            (a + b + c, b, a + b + c)
        }
        RideOrder::JJ => {
            let (a, b, c) = (d(sj, si), d(si, dj), d(dj, di));
            (a + b + c, b + c, a + b)
        }
        RideOrder::Solo => unreachable!("solo has no shared route"),
    };
    SharedQuote { order, total, ride_i, ride_j }
}

fn check_distinct(pi: &Passenger, pj: &Passenger) -> Result<()> {
    if pi.id == pj.id {
        return Err(Error::BadParameter(format!("passenger {} cannot share a ride with itself", pi.id)));
    }
    Ok(())
}

pub fn order_cost(net: &GridNetwork, pi: &Passenger, pj: &Passenger, order: RideOrder) -> Result<SharedQuote> {
    if order == RideOrder::Solo {
        return Err(Error::SoloForPair);
    }
    check_distinct(pi, pj)?;
    Ok(quote_indices(net, net.index(pi.s), net.index(pi.d), net.index(pj.s), net.index(pj.d), order))
}

pub fn solo_cost(p: &Passenger) -> f64 {
    p.pi
}

fn all_quotes(net: &GridNetwork, pi: &Passenger, pj: &Passenger) -> [SharedQuote; 4] {
    let (si, di, sj, dj) = (net.index(pi.s), net.index(pi.d), net.index(pj.s), net.index(pj.d));
    RideOrder::SHARED.map(|o| quote_indices(net, si, di, sj, dj, o))
}

/// Cheapest of the four shared orders; ties go to the earlier of IJ, II, JI, JJ.
pub fn best_shared(net: &GridNetwork, pi: &Passenger, pj: &Passenger) -> Result<SharedQuote> {
    check_distinct(pi, pj)?;
    Ok(all_quotes(net, pi, pj)
        .into_iter()
        .reduce(|best, q| if q.total < best.total { q } else { best })
        .expect("four orders"))
}

/// Per-passenger cost: half the route when shared, the direct trip when alone.
pub fn pair_cost(quote: &SharedQuote) -> f64 {
    match quote.order {
        RideOrder::Solo => quote.total,
        _ => quote.total / 2.0,
    }
}

/// Both passengers stay within their detour budget: wait + ride <= (1 + epsilon) * pi.
pub fn is_feasible_pair(quote: &SharedQuote, pi: &Passenger, pj: &Passenger, wait_i: f64, wait_j: f64) -> bool {
    wait_i + quote.ride_i <= pi.budget() + FEASIBILITY_TOL && wait_j + quote.ride_j <= pj.budget() + FEASIBILITY_TOL
}

/// Cheapest order that is feasible at the given waits, if any.
pub fn best_feasible(
    net: &GridNetwork,
    pi: &Passenger,
    pj: &Passenger,
    wait_i: f64,
    wait_j: f64,
) -> Option<SharedQuote> {
    if pi.id == pj.id {
        return None;
    }
    all_quotes(net, pi, pj).into_iter().filter(|q| is_feasible_pair(q, pi, pj, wait_i, wait_j)).reduce(|best, q| {
        if q.total < best.total {
            q
        } else {
            best
        }
    })
}

/// Some shared order keeps both passengers within budget at the given waits.
pub fn compatible(net: &GridNetwork, pi: &Passenger, pj: &Passenger, wait_i: f64, wait_j: f64) -> bool {
    best_feasible(net, pi, pj, wait_i, wait_j).is_some()
}
