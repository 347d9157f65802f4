//! Optimal waiting time for an arriving passenger.
//!
//! For a candidate window `u` the expected overhead splits into
//!
//! - `psi(u)`: partner types that cannot be matched (incompatible with the
//!   budget left after waiting `u`, or compatible but not arriving within
//!   the window) leave the passenger paying the solo fare;
//! - `gamma(u)`: compatible partner types that arrive within the window
//!   contribute the shared per-passenger cost.
//!
//! The waiting time is the `u` on a uniform grid over `[0, epsilon * pi]`
//! that minimizes `psi + gamma`. Partner types are (origin, destination)
//! node pairs with `s != d`, weighted by `pickup(s) * dropoff(d)` and
//! renormalized over the `s != d` support; a partner is assumed to have the
//! arriving passenger's flexibility and no wait of its own.

use std::collections::HashMap;
use std::sync::Arc;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::demand::{rng_from_seed, window_arrival_prob, CdfMode, OdDistribution};
use crate::error::{Error, Result};
use crate::roadnet::{GridNetwork, NodeId};
use crate::sharing::{best_feasible, pair_cost, quote_indices, Passenger, RideOrder, FEASIBILITY_TOL};

/// Largest grid for which the partner-type sum is exact by default.
pub const EXACT_MAX_Q: usize = 15;
pub const DEFAULT_SAMPLES: usize = 20_000;
pub const DEFAULT_DELTA_U_FRACTION: f64 = 1.0 / 50.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum WaitMode {
    /// Sum over every (s, d) partner type.
    Exact,
    /// Monte-Carlo sample of partner types.
    Sampled,
}

impl WaitMode {
    pub fn for_grid(q: usize) -> Self {
        if q <= EXACT_MAX_Q {
            WaitMode::Exact
        } else {
            WaitMode::Sampled
        }
    }
}

impl std::str::FromStr for WaitMode {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "exact" => Ok(Self::Exact),
            "sampled" => Ok(Self::Sampled),
            other => Err(format!("unknown waiting mode `{other}` (expected exact or sampled)")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WaitSettings {
    pub lambda: f64,
    pub cdf: CdfMode,
    /// Grid step as a fraction of `epsilon * pi`.
    pub delta_u_fraction: f64,
    pub mode: WaitMode,
    pub samples: usize,
    /// Seeds the partner-type sample in sampled mode.
    pub seed: u64,
}

impl WaitSettings {
    pub fn new(lambda: f64, cdf: CdfMode, q: usize) -> Self {
        Self {
            lambda,
            cdf,
            delta_u_fraction: DEFAULT_DELTA_U_FRACTION,
            mode: WaitMode::for_grid(q),
            samples: DEFAULT_SAMPLES,
            seed: 0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.lambda.is_finite() && self.lambda > 0.0) {
            return Err(Error::BadRate(self.lambda));
        }
        if !(self.delta_u_fraction.is_finite() && self.delta_u_fraction > 0.0 && self.delta_u_fraction <= 1.0) {
            return Err(Error::BadParameter(format!(
                "waiting.delta_u_fraction must lie in (0, 1], got {}",
                self.delta_u_fraction
            )));
        }
        if self.mode == WaitMode::Sampled && self.samples == 0 {
            return Err(Error::BadParameter("waiting.samples must be positive".into()));
        }
        Ok(())
    }
}

/// `psi + gamma` evaluated on the window grid, with its minimizer.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WaitObjectiveCurve {
    pub u_grid: Vec<f64>,
    pub psi: Vec<f64>,
    pub gamma: Vec<f64>,
    pub tau: f64,
    pub tau_index: usize,
}

impl WaitObjectiveCurve {
    pub fn objective(&self, k: usize) -> f64 {
        self.psi[k] + self.gamma[k]
    }

    fn from_parts(u_grid: Vec<f64>, psi: Vec<f64>, gamma: Vec<f64>) -> Self {
        let mut tau_index = 0;
        for k in 1..u_grid.len() {
            if psi[k] + gamma[k] < psi[tau_index] + gamma[tau_index] {
                tau_index = k;
            }
        }
        Self { tau: u_grid[tau_index], tau_index, u_grid, psi, gamma }
    }
}

/// `{0, step, 2 step, ...}` up to `max`, always ending exactly at `max`.
pub fn u_grid(max: f64, step: f64) -> Result<Vec<f64>> {
    if !(step.is_finite() && step > 0.0) {
        return Err(Error::BadStep(step));
    }
    let mut grid = vec![0.0];
    if max <= 0.0 {
        return Ok(grid);
    }
    let slack = 1e-9 * max;
    let mut k = 1usize;
    loop {
        let u = k as f64 * step;
        if u >= max - slack {
            break;
        }
        grid.push(u);
        k += 1;
    }
    grid.push(max);
    Ok(grid)
}

/// Partner types as flat (origin, destination, weight) triples.
#[derive(Debug, Clone)]
pub struct PartnerTypes {
    types: Vec<(u32, u32, f64)>,
}

impl PartnerTypes {
    /// Every `s != d` type with positive mass, renormalized.
    pub fn exact(dist: &OdDistribution) -> Self {
        let pick = dist.pickup_pmf();
        let drop = dist.dropoff_pmf();
        let mut types = Vec::new();
        for (s, &ps) in pick.iter().enumerate() {
            if ps == 0.0 {
                continue;
            }
            for (d, &pd) in drop.iter().enumerate() {
                if s != d && pd > 0.0 {
                    types.push((s as u32, d as u32, ps * pd));
                }
            }
        }
        let total: f64 = types.iter().map(|t| t.2).sum();
        types.iter_mut().for_each(|t| t.2 /= total);
        Self { types }
    }

    /// `samples` types drawn from the distribution (s = d redrawn), each of weight `1 / samples`.
    pub fn sampled<R: Rng + ?Sized>(dist: &OdDistribution, samples: usize, rng: &mut R) -> Result<Self> {
        let sampler = dist.sampler()?;
        let q = dist.q();
        let w = 1.0 / samples as f64;
        let types = (0..samples)
            .map(|_| {
                let (s, d) = sampler.sample_passenger(rng)?;
                Ok(((s.row * q + s.col) as u32, (d.row * q + d.col) as u32, w))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { types })
    }

    pub fn len(&self) -> usize {
        self.types.len()
    }

    pub fn is_empty(&self) -> bool {
        self.types.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        self.types.iter().map(|&(s, d, w)| (s as usize, d as usize, w))
    }
}

fn check_window(p: &Passenger, u: f64) -> Result<()> {
    let max = p.max_wait();
    if !(u >= 0.0 && u <= max + FEASIBILITY_TOL) {
        return Err(Error::WindowOutOfRange { u, max });
    }
    Ok(())
}

fn partner(net: &GridNetwork, p: &Passenger, s: usize, d: usize) -> Passenger {
    Passenger {
        id: p.id.wrapping_add(1),
        s: net.node(s),
        d: net.node(d),
        epsilon: p.epsilon,
        t: p.t,
        pi: net.dist_by_index(s, d),
    }
}

/// Expected solo cost at window `u`, by direct evaluation of every partner type.
pub fn psi(net: &GridNetwork, dist: &OdDistribution, p: &Passenger, u: f64, lambda: f64, cdf: CdfMode) -> Result<f64> {
    check_window(p, u)?;
    let arrive = window_arrival_prob(lambda, u, cdf)?;
    let solo = p.pi;
    Ok(PartnerTypes::exact(dist)
        .iter()
        .map(|(s, d, w)| {
            let j = partner(net, p, s, d);
            match best_feasible(net, p, &j, u, 0.0) {
                Some(_) => w * (1.0 - arrive) * solo,
                None => w * solo,
            }
        })
        .sum())
}

/// Expected shared cost at window `u`, by direct evaluation of every partner type.
pub fn gamma(
    net: &GridNetwork,
    dist: &OdDistribution,
    p: &Passenger,
    u: f64,
    lambda: f64,
    cdf: CdfMode,
) -> Result<f64> {
    check_window(p, u)?;
    let arrive = window_arrival_prob(lambda, u, cdf)?;
    Ok(PartnerTypes::exact(dist)
        .iter()
        .filter_map(|(s, d, w)| {
            let j = partner(net, p, s, d);
            best_feasible(net, p, &j, u, 0.0).map(|q| w * arrive * pair_cost(&q))
        })
        .sum())
}

/// Exact objective curve with an absolute grid step `delta_u`.
pub fn optimal_wait(
    net: &GridNetwork,
    dist: &OdDistribution,
    p: &Passenger,
    lambda: f64,
    cdf: CdfMode,
    delta_u: f64,
) -> Result<WaitObjectiveCurve> {
    let grid = u_grid(p.max_wait(), delta_u)?;
    objective_curve(net, &PartnerTypes::exact(dist), p, grid, lambda, cdf)
}

/// Evaluates `psi` and `gamma` on the whole grid in one pass over partner types.
///
/// Each shared order stays feasible while `u <= budget_i - ride_i`, so the
/// cheapest feasible order is a step function of `u` with at most four
/// breakpoints. Contributions are accumulated per grid range with
/// difference arrays.
pub fn objective_curve(
    net: &GridNetwork,
    types: &PartnerTypes,
    p: &Passenger,
    grid: Vec<f64>,
    lambda: f64,
    cdf: CdfMode,
) -> Result<WaitObjectiveCurve> {
    let k_len = grid.len();
    let mut compat = vec![0.0; k_len + 1];
    let mut shared = vec![0.0; k_len + 1];
    let (si, di) = (net.index(p.s), net.index(p.d));
    let budget_i = p.budget();
    // last grid index with u <= limit
    let last_at = |limit: f64| grid.partition_point(|&u| u <= limit + FEASIBILITY_TOL) as isize - 1;

    let mut open: Vec<(isize, f64)> = Vec::with_capacity(4);
    for (sj, dj, w) in types.iter() {
        let budget_j = (1.0 + p.epsilon) * net.dist_by_index(sj, dj);
        open.clear();
        for order in RideOrder::SHARED {
            let quote = quote_indices(net, si, di, sj, dj, order);
            if quote.ride_j <= budget_j + FEASIBILITY_TOL {
                let last = last_at(budget_i - quote.ride_i);
                if last >= 0 {
                    open.push((last, quote.total));
                }
            }
        }
        if open.is_empty() {
            continue;
        }
        // Longest-lived order first; walking down, the feasible set only shrinks.
        open.sort_by_key(|a| std::cmp::Reverse(a.0));
        let top = open[0].0 as usize;
        compat[0] += w;
        compat[top + 1] -= w;
        let mut cheapest = f64::INFINITY;
        for r in 0..open.len() {
            cheapest = cheapest.min(open[r].1);
            let hi = open[r].0;
            let lo = open.get(r + 1).map_or(-1, |next| next.0);
            if hi > lo {
                let val = w * cheapest / 2.0;
                shared[(lo + 1) as usize] += val;
                shared[hi as usize + 1] -= val;
            }
        }
    }

    let solo = p.pi;
    let mut psi = Vec::with_capacity(k_len);
    let mut gamma = Vec::with_capacity(k_len);
    let (mut a, mut g) = (0.0, 0.0);
    for (k, &u) in grid.iter().enumerate() {
        a += compat[k];
        g += shared[k];
        let arrive = window_arrival_prob(lambda, u, cdf)?;
        psi.push(solo * (1.0 - a) + solo * a * (1.0 - arrive));
        gamma.push(arrive * g);
    }
    Ok(WaitObjectiveCurve::from_parts(grid, psi, gamma))
}

fn mix(mut x: u64) -> u64 {
    // splitmix64 finalizer
    x = (x ^ (x >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    x ^ (x >> 31)
}

/// Computes waiting-time curves for a fixed network, demand and settings,
/// caching by passenger type (origin, destination, flexibility).
#[derive(Debug)]
pub struct WaitOptimizer<'a> {
    net: &'a GridNetwork,
    dist: &'a OdDistribution,
    settings: WaitSettings,
    exact_types: Option<PartnerTypes>,
    cache: HashMap<(NodeId, NodeId, u64), Arc<WaitObjectiveCurve>>,
}

impl<'a> WaitOptimizer<'a> {
    pub fn new(net: &'a GridNetwork, dist: &'a OdDistribution, settings: WaitSettings) -> Result<Self> {
        settings.validate()?;
        if dist.q() != net.q() {
            return Err(Error::BadParameter(format!(
                "distribution grid q = {} does not match network q = {}",
                dist.q(),
                net.q()
            )));
        }
        let exact_types = (settings.mode == WaitMode::Exact).then(|| PartnerTypes::exact(dist));
        Ok(Self { net, dist, settings, exact_types, cache: HashMap::new() })
    }

    pub fn settings(&self) -> &WaitSettings {
        &self.settings
    }

    pub fn curve(&mut self, p: &Passenger) -> Result<Arc<WaitObjectiveCurve>> {
        let key = (p.s, p.d, p.epsilon.to_bits());
        if let Some(c) = self.cache.get(&key) {
            return Ok(Arc::clone(c));
        }
        let max = p.max_wait();
        let grid = u_grid(max, (self.settings.delta_u_fraction * max).max(f64::MIN_POSITIVE))?;
        let curve = match &self.exact_types {
            Some(types) => objective_curve(self.net, types, p, grid, self.settings.lambda, self.settings.cdf)?,
            None => {
                let (si, di) = (self.net.index(p.s) as u64, self.net.index(p.d) as u64);
                let seed = mix(self.settings.seed ^ mix(si << 32 | di) ^ mix(p.epsilon.to_bits()));
                let types = PartnerTypes::sampled(self.dist, self.settings.samples, &mut rng_from_seed(seed))?;
                objective_curve(self.net, &types, p, grid, self.settings.lambda, self.settings.cdf)?
            }
        };
        let curve = Arc::new(curve);
        self.cache.insert(key, Arc::clone(&curve));
        Ok(curve)
    }

    pub fn tau(&mut self, p: &Passenger) -> Result<f64> {
        Ok(self.curve(p)?.tau)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn n(r: usize, c: usize) -> NodeId {
        NodeId::new(r, c)
    }

    fn point_mass(q: usize, at: NodeId) -> Vec<f64> {
        let mut v = vec![0.0; q * q];
        v[at.row * q + at.col] = 1.0;
        v
    }

    #[test]
    fn grid_shape() {
        assert_eq!(u_grid(0.0, 0.1).unwrap(), vec![0.0]);
        let g = u_grid(2.4, 0.048).unwrap();
        assert_eq!(g.len(), 51);
        assert_eq!(*g.last().unwrap(), 2.4);
        let g = u_grid(1.0, 0.3).unwrap();
        assert_eq!(g, vec![0.0, 0.3, 0.6, 0.8999999999999999, 1.0]);
        assert!(u_grid(1.0, 0.0).is_err());
    }

    #[test]
    fn zero_flexibility_forces_zero_wait() {
        let net = GridNetwork::uniform(4, 1.0).unwrap();
        let dist = OdDistribution::uniform(4);
        let p = Passenger::new(&net, 0, n(0, 0), n(3, 3), 0.0, 0.0).unwrap();
        let curve = optimal_wait(&net, &dist, &p, 1.0, CdfMode::Paper, 0.1).unwrap();
        assert_eq!(curve.u_grid, vec![0.0]);
        assert_eq!(curve.tau, 0.0);
    }

    #[test]
    fn window_outside_budget_is_rejected() {
        let net = GridNetwork::uniform(3, 1.0).unwrap();
        let dist = OdDistribution::uniform(3);
        let p = Passenger::new(&net, 0, n(0, 0), n(0, 2), 0.5, 0.0).unwrap();
        assert!(matches!(psi(&net, &dist, &p, 1.5, 1.0, CdfMode::Paper), Err(Error::WindowOutOfRange { .. })));
        assert!(gamma(&net, &dist, &p, -0.1, 1.0, CdfMode::Paper).is_err());
    }

    #[test]
    fn own_type_point_mass() {
        let net = GridNetwork::uniform(5, 1.0).unwrap();
        let (s, d) = (n(1, 0), n(3, 4));
        let dist = OdDistribution::new(5, point_mass(5, s), point_mass(5, d)).unwrap();
        let p = Passenger::new(&net, 0, s, d, 0.6, 0.0).unwrap();
        let pi = p.pi;
        // every partner is an identical trip: compatible, pair cost pi / 2
        let g0 = gamma(&net, &dist, &p, 0.0, 2.0, CdfMode::Paper).unwrap();
        assert!((g0 - 0.5 * pi / 2.0).abs() < 1e-12);
        let p0 = psi(&net, &dist, &p, 0.0, 2.0, CdfMode::Paper).unwrap();
        assert!((p0 - 0.5 * pi).abs() < 1e-12);

        // Identical trips stay compatible up to u = epsilon * pi, so the
        // objective is pi - (pi / 2) P(u), decreasing in u: tau = epsilon * pi.
        let curve = optimal_wait(&net, &dist, &p, 5.0, CdfMode::Paper, 0.01 * p.max_wait()).unwrap();
        assert!(curve.tau > 0.0);
        assert_eq!(curve.tau, p.max_wait());
        let expect = pi - pi / 2.0 * (1.0 - 0.5 * (-5.0 * p.max_wait()).exp());
        assert!((curve.objective(curve.tau_index) - expect).abs() < 1e-12);
        assert!(curve.objective(curve.tau_index) < pi);
    }

    #[test]
    fn no_compatible_mass_means_solo_cost() {
        let net = GridNetwork::uniform(6, 1.0).unwrap();
        // partners travel the far corner; passenger has a short trip
        let dist = OdDistribution::new(6, point_mass(6, n(5, 5)), point_mass(6, n(5, 4))).unwrap();
        let p = Passenger::new(&net, 0, n(0, 0), n(0, 1), 0.5, 0.0).unwrap();
        for u in [0.0, 0.25, 0.5] {
            assert_eq!(psi(&net, &dist, &p, u, 1.0, CdfMode::Paper).unwrap(), p.pi);
            assert_eq!(gamma(&net, &dist, &p, u, 1.0, CdfMode::Paper).unwrap(), 0.0);
        }
    }

    #[test]
    fn sweep_matches_direct_evaluation() {
        let net = GridNetwork::uniform(4, 1.0).unwrap();
        let weights: Vec<f64> = (0..16).map(|i| 1.0 + (i * 7 % 5) as f64).collect();
        let dist = OdDistribution::from_weights(4, weights.clone(), weights.iter().rev().cloned().collect()).unwrap();
        for (s, d, eps) in [(n(0, 0), n(3, 3), 0.6), (n(1, 2), n(2, 0), 1.0), (n(3, 1), n(0, 1), 0.3)] {
            let p = Passenger::new(&net, 7, s, d, eps, 0.0).unwrap();
            for cdf in [CdfMode::Paper, CdfMode::Standard] {
                let curve = optimal_wait(&net, &dist, &p, 1.3, cdf, p.max_wait() / 20.0).unwrap();
                for (k, &u) in curve.u_grid.iter().enumerate() {
                    let ps = psi(&net, &dist, &p, u, 1.3, cdf).unwrap();
                    let gm = gamma(&net, &dist, &p, u, 1.3, cdf).unwrap();
                    assert!((curve.psi[k] - ps).abs() < 1e-9, "psi at u={u}");
                    assert!((curve.gamma[k] - gm).abs() < 1e-9, "gamma at u={u}");
                }
            }
        }
    }

    #[test]
    fn tau_is_first_minimizer() {
        let net = GridNetwork::uniform(5, 1.0).unwrap();
        let dist = OdDistribution::uniform(5);
        for (s, d) in [(n(0, 0), n(4, 4)), (n(2, 2), n(2, 3)), (n(4, 0), n(0, 3))] {
            let p = Passenger::new(&net, 0, s, d, 0.8, 0.0).unwrap();
            let curve = optimal_wait(&net, &dist, &p, 0.5, CdfMode::Paper, p.max_wait() / 50.0).unwrap();
            let min = (0..curve.u_grid.len()).map(|k| curve.objective(k)).fold(f64::INFINITY, f64::min);
            let first = (0..curve.u_grid.len()).find(|&k| curve.objective(k) == min).unwrap();
            assert_eq!(curve.tau_index, first);
            assert!(curve.tau >= 0.0 && curve.tau <= p.max_wait());
        }
    }

    #[test]
    fn optimizer_caches_by_type() {
        let net = GridNetwork::uniform(4, 1.0).unwrap();
        let dist = OdDistribution::uniform(4);
        let mut opt = WaitOptimizer::new(&net, &dist, WaitSettings::new(1.0, CdfMode::Paper, 4)).unwrap();
        let a = Passenger::new(&net, 0, n(0, 0), n(2, 3), 0.6, 0.0).unwrap();
        let b = Passenger::new(&net, 9, n(0, 0), n(2, 3), 0.6, 17.0).unwrap();
        let ca = opt.curve(&a).unwrap();
        let cb = opt.curve(&b).unwrap();
        assert!(Arc::ptr_eq(&ca, &cb));
        assert_eq!(ca.u_grid.len(), 51);
    }

    #[test]
    fn sampled_mode_is_deterministic() {
        let net = GridNetwork::uniform(4, 1.0).unwrap();
        let dist = OdDistribution::uniform(4);
        let mut settings = WaitSettings::new(1.0, CdfMode::Paper, 4);
        settings.mode = WaitMode::Sampled;
        settings.samples = 500;
        let p = Passenger::new(&net, 0, n(0, 0), n(2, 3), 0.6, 0.0).unwrap();
        let a = WaitOptimizer::new(&net, &dist, settings).unwrap().curve(&p).unwrap();
        let b = WaitOptimizer::new(&net, &dist, settings).unwrap().curve(&p).unwrap();
        assert_eq!(a, b);
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        type Instance = (Vec<f64>, Vec<f64>, (usize, usize, usize, usize), f64);

        fn setup() -> impl Strategy<Value = Instance> {
            (
                proptest::collection::vec(0u32..5, 9),
                proptest::collection::vec(0u32..5, 9),
                (0usize..3, 0usize..3, 0usize..3, 0usize..3),
                0.1f64..1.0,
            )
                .prop_filter("usable", |(a, b, (r1, c1, r2, c2), _)| {
                    (r1, c1) != (r2, c2) && a.iter().sum::<u32>() > 0 && b.iter().sum::<u32>() > 0
                })
                .prop_map(|(a, b, nodes, eps)| {
                    (a.into_iter().map(f64::from).collect(), b.into_iter().map(f64::from).collect(), nodes, eps)
                })
        }

        proptest! {
            #[test]
            fn objective_bounded_and_monotone_in_rate(
                (pick, drop, (r1, c1, r2, c2), eps) in setup(),
                lambda in 0.1f64..5.0,
                dl in 0.0f64..3.0,
            ) {
                let net = GridNetwork::uniform(3, 1.0).unwrap();
                let dist = OdDistribution::from_weights(3, pick, drop).unwrap();
                if PartnerTypes::exact(&dist).is_empty() {
                    return Ok(());
                }
                let p = Passenger::new(&net, 0, n(r1, c1), n(r2, c2), eps, 0.0).unwrap();
                let lo = optimal_wait(&net, &dist, &p, lambda, CdfMode::Paper, p.max_wait() / 10.0).unwrap();
                let hi = optimal_wait(&net, &dist, &p, lambda + dl, CdfMode::Paper, p.max_wait() / 10.0).unwrap();
                let types = PartnerTypes::exact(&dist);
                let all_cheap = types.iter().all(|(s, d, _)| {
                    let j = partner(&net, &p, s, d);
                    best_feasible(&net, &p, &j, 0.0, 0.0).is_none_or(|q| pair_cost(&q) <= p.pi)
                });
                for k in 0..lo.u_grid.len() {
                    if all_cheap {
                        prop_assert!(lo.objective(k) <= p.pi + 1e-9);
                    }
                    prop_assert!(hi.gamma[k] >= lo.gamma[k] - 1e-12);
                    prop_assert!(hi.psi[k] <= lo.psi[k] + 1e-12);
                }
                prop_assert!(lo.tau <= p.max_wait());
            }
        }
    }
}
