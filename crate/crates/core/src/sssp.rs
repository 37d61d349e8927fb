//! Dijkstra over exact, totally ordered arc weights with tie detection.

use std::cmp::Reverse;
use std::collections::BinaryHeap;
use std::ops::Add;

use crate::error::{Error, Result};
use crate::graph::{Distance, Edge, FaultSet, UndirectedGraph};

/// A shortest-path tree rooted at `source`, with the weight of each root path.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ShortestPathTree<W> {
    source: usize,
    parent: Vec<Option<usize>>,
    weight: Vec<Option<W>>,
    hops: Vec<Distance>,
}

impl<W: Copy> ShortestPathTree<W> {
    pub fn source(&self) -> usize {
        self.source
    }

    pub fn n(&self) -> usize {
        self.parent.len()
    }

    pub fn parent(&self, v: usize) -> Option<usize> {
        self.parent[v]
    }

    pub fn parents(&self) -> &[Option<usize>] {
        &self.parent
    }

    pub fn weight(&self, v: usize) -> Option<W> {
        self.weight[v]
    }

    pub fn hops(&self, v: usize) -> Distance {
        self.hops[v]
    }

    pub fn is_reachable(&self, v: usize) -> bool {
        self.hops[v].is_reachable()
    }

    /// The root-to-`t` vertex sequence, or `None` if `t` is unreachable.
    pub fn path_to(&self, t: usize) -> Option<Vec<usize>> {
        let len = self.hops[t].finite()? as usize;
        let mut path = vec![0; len + 1];
        let mut cur = t;
        for slot in path.iter_mut().rev() {
            *slot = cur;
            if let Some(p) = self.parent[cur] {
                cur = p;
            }
        }
        debug_assert_eq!(path[0], self.source);
        Some(path)
    }

    /// Tree edges, one per reached non-root vertex.
    pub fn edges(&self) -> impl Iterator<Item = Edge> + '_ {
        self.parent
            .iter()
            .enumerate()
            .filter_map(|(v, p)| p.map(|p| Edge::new(p, v)))
    }

    pub fn edge_count(&self) -> usize {
        self.parent.iter().filter(|p| p.is_some()).count()
    }
}

/// Single-source shortest paths in `G \ F` where arc `(u, adj[u][i])` has
/// weight `arc_weight(u, i)`. Weights must be strictly positive.
///
/// Fails with [`Error::TieDetected`] when some reached vertex has two
/// distinct shortest paths.
pub fn dijkstra<W, F>(
    g: &UndirectedGraph,
    source: usize,
    faults: &FaultSet,
    zero: W,
    arc_weight: F,
) -> Result<ShortestPathTree<W>>
where
    W: Ord + Copy + Add<Output = W>,
    F: Fn(usize, usize) -> W,
{
    g.check_vertex(source)?;
    let n = g.n();
    let mut best: Vec<Option<W>> = vec![None; n];
    let mut parent: Vec<Option<usize>> = vec![None; n];
    let mut tied = vec![false; n];
    let mut settled = vec![false; n];
    let mut hops: Vec<Distance> = vec![Distance::Unreachable; n];
    let mut heap = BinaryHeap::new();

    best[source] = Some(zero);
    heap.push(Reverse((zero, source)));
    while let Some(Reverse((w, u))) = heap.pop() {
        if settled[u] || best[u] != Some(w) {
            continue;
        }
        if tied[u] {
            return Err(Error::TieDetected {
                source_vertex: source,
                vertex: u,
            });
        }
        settled[u] = true;
        hops[u] = match parent[u] {
            Some(p) => hops[p].plus(1),
            None => Distance::Finite(0),
        };
        for (i, &v) in g.neighbors(u).iter().enumerate() {
            if faults.contains(u, v) {
                continue;
            }
            let cand = w + arc_weight(u, i);
            match best[v] {
                Some(b) if cand > b => {}
                Some(b) if cand == b => {
                    if parent[v] != Some(u) {
                        if settled[v] {
                            return Err(Error::TieDetected {
                                source_vertex: source,
                                vertex: v,
                            });
                        }
                        tied[v] = true;
                    }
                }
                _ => {
                    if settled[v] {
                        // Only possible with non-positive arc weights.
                        continue;
                    }
                    best[v] = Some(cand);
                    parent[v] = Some(u);
                    tied[v] = false;
                    heap.push(Reverse((cand, v)));
                }
            }
        }
    }

    Ok(ShortestPathTree {
        source,
        parent,
        weight: best,
        hops,
    })
}
