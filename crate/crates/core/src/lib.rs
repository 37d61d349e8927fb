//! Restorable shortest-path tiebreaking and the fault-tolerant structures
//! built on it: replacement paths, distance preservers, additive spanners,
//! distance labels, and a lower-bound family for consistent schemes.

pub mod error;
pub mod ftnet;
pub mod generators;
pub mod graph;
pub mod labels;
pub mod lowerbound;
pub mod path;
pub mod scheme;
pub mod srp;
pub mod sssp;
pub mod tiebreak;
pub mod verify;

pub use error::{Error, ParseError, Result};
pub use graph::{load_graph, Distance, Edge, FaultSet, UndirectedGraph};
pub use path::{Path, PathWeight};
pub use scheme::{SourcePaths, TiebreakingScheme};
pub use tiebreak::{perturb, perturb_tie_free, with_resampling, PerturbConfig, PerturbedDigraph, Rpts};
