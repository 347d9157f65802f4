//! Event-driven simulation of the waiting pool.
//!
//! Each arriving passenger is told a waiting time `tau` and joins the pool.
//! The leaving candidate is the pool member with the earliest deadline
//! `t + tau`. When that deadline comes up, the whole pool is matched on the
//! savings graph with waits measured at that instant; every matched pair
//! departs, and the candidate departs alone if it was left unmatched.
//! Arrivals at the same instant as a deadline are processed first, and equal
//! deadlines are handled in id order.

use serde::{Deserialize, Serialize};

use crate::demand::{generate_stream, ArrivalProcess, OdDistribution};
use crate::error::{Error, Result};
use crate::matching::{max_weight_matching, SavingsGraph};
use crate::metrics::{self, Summary};
use crate::roadnet::{GridNetwork, NodeId};
use crate::sharing::{best_feasible, Passenger, RideOrder, FEASIBILITY_TOL};
use crate::waiting::{WaitOptimizer, WaitSettings};

/// How waiting times are assigned on arrival.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum WaitPolicy {
    /// Minimize the expected-overhead objective.
    Optimal,
    /// The same window for everyone, clamped to `epsilon * pi`.
    Constant { tau: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub wait: WaitSettings,
    pub policy: WaitPolicy,
    /// Width of the waiting-time histogram bins.
    pub bin_width: f64,
}

impl SimConfig {
    pub fn new(wait: WaitSettings) -> Self {
        Self { wait, policy: WaitPolicy::Optimal, bin_width: metrics::DEFAULT_BIN_WIDTH }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PoolEntry {
    pub passenger: Passenger,
    pub tau: f64,
}

impl PoolEntry {
    pub fn deadline(&self) -> f64 {
        self.passenger.t + self.tau
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LeavingCandidate {
    pub k_star: u32,
    pub theta: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AssignmentKind {
    Pair,
    Solo,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Rider {
    pub id: u32,
    /// Realized wait: departure minus arrival.
    pub wait: f64,
    /// In-vehicle time from own pickup to own drop-off.
    pub omega: f64,
}

/// One committed departure. For a pair, `riders[0]` plays role `i` in `order`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Assignment {
    pub kind: AssignmentKind,
    pub riders: Vec<Rider>,
    pub order: RideOrder,
    pub vehicle_distance: f64,
    pub departure: f64,
}

/// Waiting passengers and the simulation clock.
#[derive(Debug, Clone, Default)]
pub struct PoolState {
    pub now: f64,
    waiting: Vec<PoolEntry>,
}

impl PoolState {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.waiting.len()
    }

    pub fn is_empty(&self) -> bool {
        self.waiting.is_empty()
    }

    pub fn members(&self) -> &[PoolEntry] {
        &self.waiting
    }

    pub fn insert(&mut self, passenger: Passenger, tau: f64) {
        let at = self.waiting.partition_point(|e| e.passenger.id < passenger.id);
        self.waiting.insert(at, PoolEntry { passenger, tau });
    }

    /// Earliest deadline, ties to the smaller id.
    pub fn leaving_candidate(&self) -> Option<LeavingCandidate> {
        self.waiting
            .iter()
            .min_by(|a, b| a.deadline().total_cmp(&b.deadline()).then(a.passenger.id.cmp(&b.passenger.id)))
            .map(|e| LeavingCandidate { k_star: e.passenger.id, theta: e.deadline() })
    }

    fn take(&mut self, id: u32) -> Result<PoolEntry> {
        let at = self.waiting.iter().position(|e| e.passenger.id == id).ok_or(Error::NotInPool(id))?;
        Ok(self.waiting.remove(at))
    }

    fn get(&self, id: u32) -> Result<&PoolEntry> {
        self.waiting.iter().find(|e| e.passenger.id == id).ok_or(Error::NotInPool(id))
    }

    /// Removes a pair and dispatches them together at `now` on the cheapest
    /// order that keeps both within budget.
    pub fn commit_pair(&mut self, net: &GridNetwork, i: u32, j: u32, now: f64) -> Result<Assignment> {
        let pi = self.get(i)?.passenger;
        let pj = self.get(j)?.passenger;
        let (wait_i, wait_j) = (now - pi.t, now - pj.t);
        if wait_i < -FEASIBILITY_TOL || wait_j < -FEASIBILITY_TOL {
            return Err(Error::InfeasibleCommit(i, j, now));
        }
        let quote = best_feasible(net, &pi, &pj, wait_i, wait_j).ok_or(Error::InfeasibleCommit(i, j, now))?;
        self.take(i)?;
        self.take(j)?;
        Ok(Assignment {
            kind: AssignmentKind::Pair,
            riders: vec![
                Rider { id: i, wait: wait_i, omega: quote.ride_i },
                Rider { id: j, wait: wait_j, omega: quote.ride_j },
            ],
            order: quote.order,
            vehicle_distance: quote.total,
            departure: now,
        })
    }

    pub fn commit_solo(&mut self, id: u32, now: f64) -> Result<Assignment> {
        let entry = self.take(id)?;
        let p = entry.passenger;
        Ok(Assignment {
            kind: AssignmentKind::Solo,
            riders: vec![Rider { id, wait: now - p.t, omega: p.pi }],
            order: RideOrder::Solo,
            vehicle_distance: p.pi,
            departure: now,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "event", rename_all = "lowercase")]
pub enum Event {
    Arrival { t: f64, id: u32, tau: f64 },
    Departure { t: f64, candidate: u32, pool: Vec<u32>, pairs: Vec<(u32, u32)>, solo: Option<u32> },
}

/// Per-passenger outcome, one row of the passenger CSV.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PassengerLog {
    pub id: u32,
    pub s: NodeId,
    pub d: NodeId,
    pub epsilon: f64,
    pub t: f64,
    pub pi: f64,
    pub tau: f64,
    pub wait: f64,
    pub omega: f64,
    pub partner_id: Option<u32>,
    pub order: RideOrder,
    /// Half the shared route, or the direct trip when alone.
    pub vehicle_share: f64,
    pub departure: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimReport {
    pub config: SimConfig,
    /// Seed of the passenger stream, when generated.
    pub seed: Option<u64>,
    pub summary: Summary,
    pub max_pool: usize,
    pub assignments: Vec<Assignment>,
    pub passengers: Vec<PassengerLog>,
    pub events: Vec<Event>,
}

fn check_stream(passengers: &[Passenger]) -> Result<()> {
    let mut ids: Vec<u32> = passengers.iter().map(|p| p.id).collect();
    ids.sort_unstable();
    if ids.windows(2).any(|w| w[0] == w[1]) {
        return Err(Error::BadParameter("duplicate passenger id in stream".into()));
    }
    if passengers.windows(2).any(|w| w[1].t < w[0].t) {
        return Err(Error::BadParameter("arrival times must be non-decreasing".into()));
    }
    Ok(())
}

/// Generates a passenger stream from `proc` and simulates it.
pub fn run(
    net: &GridNetwork,
    dist: &OdDistribution,
    proc: &ArrivalProcess,
    n_passengers: usize,
    epsilon: f64,
    config: &SimConfig,
) -> Result<SimReport> {
    if n_passengers == 0 {
        return Err(Error::BadParameter("need at least one passenger".into()));
    }
    let stream = generate_stream(net, &dist.sampler()?, proc, n_passengers, epsilon)?;
    let mut report = simulate(net, dist, &stream, config)?;
    report.seed = Some(proc.seed);
    Ok(report)
}

/// Runs the pool over a fixed passenger stream (sorted by arrival time).
pub fn simulate(
    net: &GridNetwork,
    dist: &OdDistribution,
    passengers: &[Passenger],
    config: &SimConfig,
) -> Result<SimReport> {
    check_stream(passengers)?;
    let mut optimizer = match config.policy {
        WaitPolicy::Optimal => Some(WaitOptimizer::new(net, dist, config.wait)?),
        WaitPolicy::Constant { tau } => {
            if !(tau.is_finite() && tau >= 0.0) {
                return Err(Error::BadParameter(format!("constant waiting time must be >= 0, got {tau}")));
            }
            None
        }
    };

    let mut pool = PoolState::new();
    let mut taus = vec![0.0; passengers.len()];
    let position: std::collections::HashMap<u32, usize> =
        passengers.iter().enumerate().map(|(k, p)| (p.id, k)).collect();
    let mut assignments = Vec::with_capacity(passengers.len());
    let mut events = Vec::with_capacity(2 * passengers.len());
    let mut next = 0;
    let mut max_pool = 0;

    while next < passengers.len() || !pool.is_empty() {
        let candidate = pool.leaving_candidate();
        let arrival_first = match (passengers.get(next), candidate) {
            (Some(p), Some(c)) => p.t <= c.theta,
            (Some(_), None) => true,
            (None, _) => false,
        };
        if arrival_first {
            let p = passengers[next];
            let tau = match (&mut optimizer, config.policy) {
                (Some(opt), _) => opt.tau(&p)?,
                (None, WaitPolicy::Constant { tau }) => tau.min(p.max_wait()),
                (None, WaitPolicy::Optimal) => unreachable!("optimizer built for optimal policy"),
            };
            pool.now = p.t;
            pool.insert(p, tau);
            taus[next] = tau;
            max_pool = max_pool.max(pool.len());
            events.push(Event::Arrival { t: p.t, id: p.id, tau });
            next += 1;
            continue;
        }

        let LeavingCandidate { k_star, theta } = candidate.expect("pool non-empty");
        pool.now = theta;
        let members: Vec<Passenger> = pool.members().iter().map(|e| e.passenger).collect();
        let graph = SavingsGraph::build(&members, theta, net);
        let matching = max_weight_matching(&graph);
        for &(a, b) in &matching.pairs {
            assignments.push(pool.commit_pair(net, a, b, theta)?);
        }
        let solo = if matching.partner_of(k_star).is_none() {
            assignments.push(pool.commit_solo(k_star, theta)?);
            Some(k_star)
        } else {
            None
        };
        events.push(Event::Departure {
            t: theta,
            candidate: k_star,
            pool: members.iter().map(|p| p.id).collect(),
            pairs: matching.pairs,
            solo,
        });
    }

    let passengers_log = build_log(passengers, &taus, &assignments, &position);
    let summary = metrics::summarize(&assignments, passengers, config.bin_width);
    Ok(SimReport { config: *config, seed: None, summary, max_pool, assignments, passengers: passengers_log, events })
}

fn build_log(
    passengers: &[Passenger],
    taus: &[f64],
    assignments: &[Assignment],
    position: &std::collections::HashMap<u32, usize>,
) -> Vec<PassengerLog> {
    let mut log: Vec<Option<PassengerLog>> = vec![None; passengers.len()];
    for a in assignments {
        for (r, rider) in a.riders.iter().enumerate() {
            let k = position[&rider.id];
            let p = &passengers[k];
            let partner_id = (a.kind == AssignmentKind::Pair).then(|| a.riders[1 - r].id);
            let order = if r == 0 { a.order } else { a.order.swapped() };
            let vehicle_share = match a.kind {
                AssignmentKind::Pair => a.vehicle_distance / 2.0,
                AssignmentKind::Solo => a.vehicle_distance,
            };
            log[k] = Some(PassengerLog {
                id: p.id,
                s: p.s,
                d: p.d,
                epsilon: p.epsilon,
                t: p.t,
                pi: p.pi,
                tau: taus[k],
                wait: rider.wait,
                omega: rider.omega,
                partner_id,
                order,
                vehicle_share,
                departure: a.departure,
            });
        }
    }
    log.into_iter().map(|row| row.expect("every passenger assigned")).collect()
}

impl SimReport {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    /// Per-passenger CSV, one row per passenger in arrival order.
    pub fn passengers_csv(&self) -> Result<Vec<u8>> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record([
            "id",
            "s",
            "d",
            "epsilon",
            "t",
            "pi",
            "tau",
            "wait",
            "omega",
            "partner_id",
            "order",
            "vehicle_share",
            "departure",
        ])?;
        for p in &self.passengers {
            w.write_record([
                p.id.to_string(),
                p.s.to_string(),
                p.d.to_string(),
                p.epsilon.to_string(),
                p.t.to_string(),
                p.pi.to_string(),
                p.tau.to_string(),
                p.wait.to_string(),
                p.omega.to_string(),
                p.partner_id.map(|id| id.to_string()).unwrap_or_default(),
                p.order.to_string(),
                p.vehicle_share.to_string(),
                p.departure.to_string(),
            ])?;
        }
        w.into_inner().map_err(|e| Error::Io(e.into_error()))
    }

    /// Number of passengers whose wait plus ride exceeds their budget.
    pub fn budget_violations(&self) -> usize {
        self.passengers.iter().filter(|p| p.wait + p.omega > (1.0 + p.epsilon) * p.pi + FEASIBILITY_TOL).count()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::demand::CdfMode;
    use crate::sharing::best_shared;

    fn n(r: usize, c: usize) -> NodeId {
        NodeId::new(r, c)
    }

    fn config(q: usize, lambda: f64) -> SimConfig {
        SimConfig::new(WaitSettings::new(lambda, CdfMode::Paper, q))
    }

    #[test]
    fn single_passenger_rides_alone() {
        let net = GridNetwork::uniform(5, 1.0).unwrap();
        let dist = OdDistribution::uniform(5);
        let p = Passenger::new(&net, 0, n(0, 0), n(4, 4), 0.6, 1.0).unwrap();
        let report = simulate(&net, &dist, &[p], &config(5, 1.0)).unwrap();
        assert_eq!(report.assignments.len(), 1);
        let a = &report.assignments[0];
        assert_eq!(a.kind, AssignmentKind::Solo);
        let log = &report.passengers[0];
        assert_eq!(log.wait, log.tau);
        assert_eq!(log.omega, p.pi);
        assert_eq!(report.summary.cost_reduction, 0.0);
    }

    #[test]
    fn identical_trips_share() {
        let net = GridNetwork::uniform(5, 1.0).unwrap();
        let dist = OdDistribution::uniform(5);
        let a = Passenger::new(&net, 0, n(0, 0), n(4, 4), 0.6, 0.0).unwrap();
        let mut cfg = config(5, 1.0);
        cfg.policy = WaitPolicy::Constant { tau: 2.0 };
        let b = Passenger::new(&net, 1, n(0, 0), n(4, 4), 0.6, 1.0).unwrap();
        let report = simulate(&net, &dist, &[a, b], &cfg).unwrap();
        assert_eq!(report.assignments.len(), 1);
        let asg = &report.assignments[0];
        assert_eq!(asg.kind, AssignmentKind::Pair);
        assert_eq!(asg.vehicle_distance, a.pi);
        // departs at the first deadline, t = 2
        assert_eq!(asg.departure, 2.0);
        assert_eq!(report.passengers[0].wait, 2.0);
        assert_eq!(report.passengers[1].wait, 1.0);
        assert_eq!(report.summary.cost_reduction, 0.5);
    }

    #[test]
    fn commit_pair_contract() {
        let net = GridNetwork::uniform(5, 1.0).unwrap();
        let i = Passenger::new(&net, 0, n(0, 0), n(0, 4), 0.6, 0.0).unwrap();
        let j = Passenger::new(&net, 1, n(0, 1), n(0, 3), 0.6, 1.0).unwrap();
        let mut pool = PoolState::new();
        pool.insert(i, 2.4);
        pool.insert(j, 1.2);
        let asg = pool.commit_pair(&net, 0, 1, 2.0).unwrap();
        assert_eq!(asg.order, RideOrder::IJ);
        assert_eq!((asg.riders[0].omega, asg.riders[1].omega), (4.0, 2.0));
        assert_eq!((asg.riders[0].wait, asg.riders[1].wait), (2.0, 1.0));
        assert!(pool.is_empty());

        // i waits 3 > 2.4: every order breaks i's budget
        let mut pool = PoolState::new();
        pool.insert(i, 2.4);
        pool.insert(j, 1.2);
        assert!(matches!(pool.commit_pair(&net, 0, 1, 3.0), Err(Error::InfeasibleCommit(0, 1, _))));
        assert_eq!(pool.len(), 2);

        // identical trips committed at the second arrival
        let a = Passenger::new(&net, 5, n(1, 1), n(3, 3), 0.5, 0.5).unwrap();
        let b = Passenger::new(&net, 6, n(1, 1), n(3, 3), 0.5, 1.5).unwrap();
        let mut pool = PoolState::new();
        pool.insert(a, 2.0);
        pool.insert(b, 2.0);
        let asg = pool.commit_pair(&net, 5, 6, 1.5).unwrap();
        assert_eq!((asg.riders[0].wait, asg.riders[1].wait), (1.0, 0.0));
        assert_eq!((asg.riders[0].omega, asg.riders[1].omega), (a.pi, a.pi));
        assert_eq!(best_shared(&net, &a, &b).unwrap().total, asg.vehicle_distance);
    }

    #[test]
    fn candidate_is_earliest_deadline() {
        let net = GridNetwork::uniform(4, 1.0).unwrap();
        let mut pool = PoolState::new();
        assert!(pool.leaving_candidate().is_none());
        pool.insert(Passenger::new(&net, 3, n(0, 0), n(3, 3), 0.5, 0.0).unwrap(), 2.0);
        pool.insert(Passenger::new(&net, 1, n(0, 0), n(3, 3), 0.5, 1.0).unwrap(), 1.0);
        pool.insert(Passenger::new(&net, 2, n(0, 0), n(3, 3), 0.5, 1.5).unwrap(), 1.5);
        // deadlines: 3 -> 2.0, 1 -> 2.0, 2 -> 3.0; tie goes to id 1
        assert_eq!(pool.leaving_candidate(), Some(LeavingCandidate { k_star: 1, theta: 2.0 }));
    }

    #[test]
    fn rejects_bad_streams() {
        let net = GridNetwork::uniform(4, 1.0).unwrap();
        let dist = OdDistribution::uniform(4);
        let a = Passenger::new(&net, 0, n(0, 0), n(3, 3), 0.5, 2.0).unwrap();
        let b = Passenger::new(&net, 1, n(0, 0), n(3, 3), 0.5, 1.0).unwrap();
        assert!(simulate(&net, &dist, &[a, b], &config(4, 1.0)).is_err());
        assert!(simulate(&net, &dist, &[a, a], &config(4, 1.0)).is_err());
        let proc = ArrivalProcess::new(1.0, 0).unwrap();
        assert!(run(&net, &dist, &proc, 0, 0.5, &config(4, 1.0)).is_err());
    }

    #[test]
    fn csv_has_documented_columns() {
        let net = GridNetwork::uniform(5, 1.0).unwrap();
        let dist = OdDistribution::uniform(5);
        let proc = ArrivalProcess::new(1.0, 3).unwrap();
        let report = run(&net, &dist, &proc, 20, 0.6, &config(5, 1.0)).unwrap();
        let csv = String::from_utf8(report.passengers_csv().unwrap()).unwrap();
        let mut lines = csv.lines();
        assert_eq!(
            lines.next().unwrap(),
            "id,s,d,epsilon,t,pi,tau,wait,omega,partner_id,order,vehicle_share,departure"
        );
        assert_eq!(lines.count(), 20);
    }
}
