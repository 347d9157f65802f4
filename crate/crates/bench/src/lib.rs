//! Shared fixtures for the criterion benchmarks.

use rideshare_core::demand::generate_stream;
use rideshare_core::{ArrivalProcess, GridNetwork, OdDistribution, Passenger};

/// A uniform-demand stream on a unit-weight `q`-grid.
pub fn stream(
    q: usize,
    n: usize,
    lambda: f64,
    epsilon: f64,
    seed: u64,
) -> (GridNetwork, OdDistribution, Vec<Passenger>) {
    let net = GridNetwork::uniform(q, 1.0).expect("valid grid");
    let dist = OdDistribution::uniform(q);
    let proc = ArrivalProcess::new(lambda, seed).expect("positive rate");
    let passengers = generate_stream(&net, &dist.sampler().expect("sampler"), &proc, n, epsilon).expect("stream");
    (net, dist, passengers)
}

/// `n` passengers that all arrive within a short burst, so a savings graph
/// built at the last arrival is dense.
pub fn dense_pool(q: usize, n: usize, seed: u64) -> (GridNetwork, Vec<Passenger>, f64) {
    let (net, _, passengers) = stream(q, n, 50.0, 0.8, seed);
    let now = passengers.last().map(|p| p.t).unwrap_or(0.0);
    (net, passengers, now)
}
