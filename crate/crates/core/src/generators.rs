//! Deterministic graph generators.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::UndirectedGraph;

fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidParameter(msg.into())
}

pub fn cycle(n: usize) -> Result<UndirectedGraph> {
    if n < 3 {
        return Err(invalid(format!("cycle needs n >= 3, got {n}")));
    }
    UndirectedGraph::from_edges(n, (0..n).map(|i| (i, (i + 1) % n)))
}

pub fn path(n: usize) -> Result<UndirectedGraph> {
    if n == 0 {
        return Err(invalid("path needs n >= 1"));
    }
    UndirectedGraph::from_edges(n, (1..n).map(|i| (i - 1, i)))
}

/// `K_{1, n-1}` centered at vertex 0.
pub fn star(n: usize) -> Result<UndirectedGraph> {
    if n == 0 {
        return Err(invalid("star needs n >= 1"));
    }
    UndirectedGraph::from_edges(n, (1..n).map(|i| (0, i)))
}

pub fn complete(n: usize) -> Result<UndirectedGraph> {
    UndirectedGraph::from_edges(n, (0..n).flat_map(|u| (u + 1..n).map(move |v| (u, v))))
}

/// `K_{a,b}` with sides `0..a` and `a..a+b`.
pub fn complete_bipartite(a: usize, b: usize) -> Result<UndirectedGraph> {
    UndirectedGraph::from_edges(a + b, (0..a).flat_map(|u| (a..a + b).map(move |v| (u, v))))
}

/// `rows x cols` grid, vertex `(r, c)` is `r * cols + c`.
pub fn grid(rows: usize, cols: usize) -> Result<UndirectedGraph> {
    if rows == 0 || cols == 0 {
        return Err(invalid("grid needs positive dimensions"));
    }
    let id = |r: usize, c: usize| r * cols + c;
    let mut edges = Vec::new();
    for r in 0..rows {
        for c in 0..cols {
            if c + 1 < cols {
                edges.push((id(r, c), id(r, c + 1)));
            }
            if r + 1 < rows {
                edges.push((id(r, c), id(r + 1, c)));
            }
        }
    }
    UndirectedGraph::from_edges(rows * cols, edges)
}

/// Erdős–Rényi `G(n, p)`.
pub fn gnp(n: usize, p: f64, seed: u64) -> Result<UndirectedGraph> {
    if !(0.0..=1.0).contains(&p) {
        return Err(invalid(format!("probability {p} outside [0, 1]")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut edges = Vec::new();
    for u in 0..n {
        for v in u + 1..n {
            if rng.gen_bool(p) {
                edges.push((u, v));
            }
        }
    }
    UndirectedGraph::from_edges(n, edges)
}

/// Uniform random recursive tree: vertex `i` attaches to a uniform earlier vertex
/// of a random relabeling.
pub fn random_tree(n: usize, seed: u64) -> Result<UndirectedGraph> {
    if n == 0 {
        return Err(invalid("tree needs n >= 1"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut label: Vec<usize> = (0..n).collect();
    label.shuffle(&mut rng);
    let edges = (1..n).map(|i| (label[rng.gen_range(0..i)], label[i])).collect::<Vec<_>>();
    UndirectedGraph::from_edges(n, edges)
}

/// Generator selection for the CLI and experiment configs.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum GeneratorSpec {
    Gnp { n: usize, p: f64 },
    Cycle { n: usize },
    Path { n: usize },
    Star { n: usize },
    Complete { n: usize },
    Grid { rows: usize, cols: usize },
    Tree { n: usize },
    LbFamily { f: usize, d: usize },
}

/// Builds the graph for a generator spec; `seed` only matters for random kinds.
pub fn generate(spec: &GeneratorSpec, seed: u64) -> Result<UndirectedGraph> {
    match *spec {
        GeneratorSpec::Gnp { n, p } => gnp(n, p, seed),
        GeneratorSpec::Cycle { n } => cycle(n),
        GeneratorSpec::Path { n } => path(n),
        GeneratorSpec::Star { n } => star(n),
        GeneratorSpec::Complete { n } => complete(n),
        GeneratorSpec::Grid { rows, cols } => grid(rows, cols),
        GeneratorSpec::Tree { n } => random_tree(n, seed),
        GeneratorSpec::LbFamily { f, d } => {
            Ok(crate::lowerbound::build_gfd(f, d)?.graph().clone())
        }
    }
}
