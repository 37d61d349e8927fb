use thiserror::Error;

use crate::graph::Edge;

/// Errors raised while reading the edge-list or perturbation formats.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ParseError {
    #[error("line {line}: malformed input: {reason}")]
    Malformed { line: usize, reason: String },
    #[error("line {line}: vertex {vertex} out of range for n = {n}")]
    VertexOutOfRange { line: usize, vertex: usize, n: usize },
    #[error("line {line}: duplicate edge {{{u}, {v}}}")]
    DuplicateEdge { line: usize, u: usize, v: usize },
    #[error("line {line}: self-loop on vertex {vertex}")]
    SelfLoop { line: usize, vertex: usize },
    #[error("header declares {declared} edges but {found} were listed")]
    EdgeCountMismatch { declared: usize, found: usize },
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error(transparent)]
    Parse(#[from] ParseError),
    #[error("vertex {vertex} out of range for n = {n}")]
    VertexOutOfRange { vertex: usize, n: usize },
    #[error("edge {0} is not an edge of the graph")]
    NotAnEdge(Edge),
    #[error("shortest-path tie detected at vertex {vertex} (source {source_vertex})")]
    TieDetected { source_vertex: usize, vertex: usize },
    #[error("perturbation still produces ties after {attempts} attempts; increase the perturbation bound")]
    TieUnresolved { attempts: u32 },
    #[error("invalid perturbation bound {0}")]
    InvalidBound(i64),
    #[error("supplied path is not a shortest path: {hops} hops, distance is {distance}")]
    PathNotShortest { hops: usize, distance: String },
    #[error("fault-set enumeration exceeded the work limit of {limit} fault sets")]
    BudgetExceeded { limit: usize },
    #[error("query uses {given} faults but the labels only support {supported}")]
    BudgetViolation { given: usize, supported: usize },
    #[error("recursion for f = {f}, d = {d} is not integral")]
    NonIntegralRecursion { f: usize, d: usize },
    #[error("cannot reach {target} vertices: {reason}")]
    SizeInfeasible { target: usize, reason: String },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub fn is_tie(&self) -> bool {
        matches!(self, Error::TieDetected { .. })
    }
}
