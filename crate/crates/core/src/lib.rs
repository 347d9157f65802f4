//! Online ridesharing on a grid road network.
//!
//! Passengers arrive over time, each is told how long to wait for a partner,
//! and when the earliest deadline in the waiting pool elapses the pool is
//! matched by maximum-weight matching on the graph of pairwise savings.
//!
//! Module map:
//! - [`roadnet`]: grid network and all-pairs shortest paths
//! - [`demand`]: trip-record ingestion, KDE demand estimation, passenger streams
//! - [`sharing`]: pickup/drop-off orders, pair cost, detour feasibility
//! - [`waiting`]: expected-overhead objective and optimal waiting time
//! - [`matching`]: savings graph and the blossom maximum-weight matcher
//! - [`engine`]: event-driven simulation of the waiting pool
//! - [`metrics`]: cost reduction, waiting statistics, baselines and sweeps

pub mod demand;
pub mod engine;
pub mod error;
pub mod matching;
pub mod metrics;
pub mod roadnet;
pub mod sharing;
pub mod waiting;

pub use demand::{ArrivalProcess, Bbox, CdfMode, OdDistribution, TripRecord};
pub use engine::{Assignment, PassengerLog, SimConfig, SimReport, WaitPolicy};
pub use error::{Error, Result};
pub use matching::{Matching, SavingsGraph};
pub use metrics::ExperimentResult;
pub use roadnet::{GridNetwork, NodeId, WeightSpec};
pub use sharing::{Passenger, RideOrder, SharedQuote};
pub use waiting::{WaitMode, WaitObjectiveCurve, WaitSettings};
