use thiserror::Error;

/// Errors raised while loading graphs or evaluating random-walk quantities.
///
/// Node references are internal indices; front ends map them back to labels
/// through [`Error::nodes`].
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("empty input")]
    EmptyInput,

    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("line {line}: edge {src} -> {dst} listed twice with different weights")]
    ConflictingEdge {
        line: usize,
        src: String,
        dst: String,
    },

    #[error("node {label} has no outgoing edges")]
    ZeroOutDegree { node: usize, label: String },

    #[error("unknown node label {0:?}")]
    UnknownNode(String),

    #[error("node index {index} out of range for a graph with {n} nodes")]
    IndexOutOfRange { index: usize, n: usize },

    #[error("matrix shape mismatch: {0}")]
    Shape(String),

    #[error("row {row} is not a probability distribution: {message}")]
    NotStochastic { row: usize, message: String },

    #[error("graph is not strongly connected: no path from node {from} to node {to}")]
    NotStronglyConnected { from: usize, to: usize },

    #[error("matrix is numerically singular (pivot {pivot:e} at step {step})")]
    Singular { step: usize, pivot: f64 },

    #[error("stationary probability of node {node} is {value:e}; chain is near-reducible")]
    NonPositiveStationary { node: usize, value: f64 },

    #[error("invalid partition: {0}")]
    InvalidPartition(String),

    #[error("avoidance set disconnects target")]
    AvoidanceDisconnects,

    #[error("target {target} is unreachable from node {from} without visiting the avoided nodes")]
    Unreachable { from: usize, target: usize },

    #[error("{0}")]
    Domain(String),

    #[error("evaporation rate {0} outside (0, 1)")]
    InvalidRate(f64),

    #[error("no walks accepted out of {attempted} (acceptance rate {acceptance_rate})")]
    Estimation {
        attempted: usize,
        acceptance_rate: f64,
    },
}

impl Error {
    /// Stable machine-readable identifier.
    pub fn code(&self) -> &'static str {
        match self {
            Error::EmptyInput => "empty_input",
            Error::Parse { .. } => "parse",
            Error::ConflictingEdge { .. } => "conflicting_edge",
            Error::ZeroOutDegree { .. } => "zero_out_degree",
            Error::UnknownNode(_) => "unknown_node",
            Error::IndexOutOfRange { .. } => "index_out_of_range",
            Error::Shape(_) => "shape",
            Error::NotStochastic { .. } => "not_stochastic",
            Error::NotStronglyConnected { .. } => "not_strongly_connected",
            Error::Singular { .. } => "singular",
            Error::NonPositiveStationary { .. } => "non_positive_stationary",
            Error::InvalidPartition(_) => "invalid_partition",
            Error::AvoidanceDisconnects => "avoidance_disconnects",
            Error::Unreachable { .. } => "unreachable",
            Error::Domain(_) => "domain",
            Error::InvalidRate(_) => "invalid_rate",
            Error::Estimation { .. } => "estimation",
        }
    }

    /// Node indices the error refers to.
    pub fn nodes(&self) -> Vec<usize> {
        match *self {
            Error::ZeroOutDegree { node, .. } => vec![node],
            Error::IndexOutOfRange { index, .. } => vec![index],
            Error::NotStochastic { row, .. } => vec![row],
            Error::NotStronglyConnected { from, to } => vec![from, to],
            Error::NonPositiveStationary { node, .. } => vec![node],
            Error::Unreachable { from, target } => vec![from, target],
            _ => Vec::new(),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
