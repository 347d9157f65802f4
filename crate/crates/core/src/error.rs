use std::path::PathBuf;

use thiserror::Error;

/// Errors produced by the simulator library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("grid dimension must be at least 2, got {0}")]
    GridTooSmall(usize),

    #[error("edge weight must be positive and finite, got {weight} on {edge}")]
    BadEdgeWeight { edge: String, weight: f64 },

    #[error("edge {0} is not an edge of the grid")]
    NotAnEdge(String),

    #[error("edge weight file {path}, line {line}: {msg}")]
    EdgeFile { path: PathBuf, line: usize, msg: String },

    #[error("no trip records survived ingestion of {path} ({malformed} malformed, {outside} outside bbox)")]
    NoRecords { path: PathBuf, malformed: usize, outside: usize },

    #[error("trip record file {path} is missing column `{column}`")]
    MissingColumn { path: PathBuf, column: String },

    #[error("kde bandwidth must be positive and finite, got {0}")]
    BadBandwidth(f64),

    #[error("invalid bounding box: {0}")]
    BadBbox(String),

    #[error("invalid distribution: {0}")]
    BadDistribution(String),

    #[error("distribution checksum mismatch (stored {stored}, computed {computed})")]
    ChecksumMismatch { stored: String, computed: String },

    #[error("origin/destination sampling rejected {0} consecutive draws with s = d")]
    DegenerateDistribution(usize),

    #[error("arrival rate must be positive and finite, got {0}")]
    BadRate(f64),

    #[error("window length must be non-negative, got {0}")]
    NegativeWindow(f64),

    #[error("waiting window {u} outside [0, {max}]")]
    WindowOutOfRange { u: f64, max: f64 },

    #[error("wait step must be positive, got {0}")]
    BadStep(f64),

    #[error("invalid passenger {id}: {msg}")]
    BadPassenger { id: u32, msg: String },

    #[error("solo order requested for a pair of passengers")]
    SoloForPair,

    #[error("pair ({0}, {1}) is not feasible at t = {2}")]
    InfeasibleCommit(u32, u32, f64),

    #[error("passenger {0} is not in the waiting pool")]
    NotInPool(u32),

    #[error("invalid parameter: {0}")]
    BadParameter(String),

    #[error("stream file {path}: {msg}")]
    Stream { path: PathBuf, msg: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
