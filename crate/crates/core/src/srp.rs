//! Subset replacement paths: for every pair of sources and every edge on
//! their selected path, the distance after that edge fails.

use std::cmp::Reverse;
use std::collections::{BTreeSet, BinaryHeap, VecDeque};
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{bfs_distances, Distance, Edge, FaultSet, UndirectedGraph};
use crate::tiebreak::{with_resampling, PerturbConfig};

fn check_path(h: &UndirectedGraph, s: usize, t: usize, p: &[usize]) -> Result<Vec<Distance>> {
    h.check_vertex(s)?;
    h.check_vertex(t)?;
    let d_s = bfs_distances(h, s, &FaultSet::empty());
    let ok = p.first() == Some(&s)
        && p.last() == Some(&t)
        && h.is_simple_path(p)
        && d_s[t] == Distance::Finite(p.len() as u32 - 1);
    if !ok {
        return Err(Error::PathNotShortest {
            hops: p.len().saturating_sub(1),
            distance: d_s[t].to_string(),
        });
    }
    Ok(d_s)
}

/// BFS tree from `root` that contains `p` (where `p` starts at `root`),
/// returning distances and, per vertex, the index on `p` where its tree
/// path leaves `p`.
fn anchored_bfs(h: &UndirectedGraph, root: usize, p: &[usize]) -> (Vec<Distance>, Vec<usize>) {
    let n = h.n();
    let mut pos = vec![usize::MAX; n];
    for (i, &v) in p.iter().enumerate() {
        pos[v] = i;
    }
    let mut dist = vec![Distance::Unreachable; n];
    let mut anchor = vec![usize::MAX; n];
    let mut queue = VecDeque::new();
    dist[root] = Distance::Finite(0);
    anchor[root] = 0;
    queue.push_back(root);
    // Path vertices are shortest from the root, so fixing their anchors up
    // front keeps the tree on `p`.
    for (i, &v) in p.iter().enumerate() {
        dist[v] = Distance::Finite(i as u32);
        anchor[v] = i;
    }
    let mut seen = vec![false; n];
    seen[root] = true;
    while let Some(u) = queue.pop_front() {
        let du = dist[u].finite().expect("queued vertices are reached");
        for &v in h.neighbors(u) {
            if seen[v] {
                continue;
            }
            if pos[v] != usize::MAX {
                // Reach path vertices only from their predecessor on `p`.
                if pos[v] == 0 || p[pos[v] - 1] != u {
                    continue;
                }
            } else {
                dist[v] = Distance::Finite(du + 1);
                anchor[v] = anchor[u];
            }
            seen[v] = true;
            queue.push_back(v);
        }
    }
    (dist, anchor)
}

/// Replacement distances `dist_{h \ e}(s, t)` for every edge `e` of the
/// shortest path `p`, in path order.
///
/// Every non-path arc `(u, v)` yields the detour `d_s(u) + 1 + d_t(v)`,
/// valid exactly for the path edges between where `u`'s tree path leaves
/// `p` and where `v`'s tree path joins it; per-edge minima come from one
/// sweep over those intervals.
pub fn single_pair_rp(
    h: &UndirectedGraph,
    s: usize,
    t: usize,
    p: &[usize],
) -> Result<Vec<(Edge, Distance)>> {
    check_path(h, s, t, p)?;
    let len = p.len() - 1;
    let on_path: BTreeSet<Edge> = crate::graph::path_edges(p).collect();
    let (d_s, pre) = anchored_bfs(h, s, p);
    let rev: Vec<usize> = p.iter().rev().copied().collect();
    let (d_t, suf_rev) = anchored_bfs(h, t, &rev);

    // (lo, hi, value): path edges lo..=hi are bypassed at cost `value`.
    let mut intervals = Vec::new();
    for e in h.edges().iter().filter(|e| !on_path.contains(e)) {
        for (u, v) in [(e.u, e.v), (e.v, e.u)] {
            let (Some(a), Some(b)) = (d_s[u].finite(), d_t[v].finite()) else {
                continue;
            };
            let lo = pre[u];
            let suf = len - suf_rev[v];
            if lo < suf {
                intervals.push((lo, suf - 1, a + 1 + b));
            }
        }
    }
    intervals.sort_unstable();

    let mut out = Vec::with_capacity(len);
    let mut heap = BinaryHeap::new();
    let mut next = 0;
    for i in 0..len {
        while next < intervals.len() && intervals[next].0 <= i {
            let (_, hi, value) = intervals[next];
            heap.push(Reverse((value, hi)));
            next += 1;
        }
        while heap.peek().is_some_and(|Reverse((_, hi))| *hi < i) {
            heap.pop();
        }
        let best = heap
            .peek()
            .map_or(Distance::Unreachable, |Reverse((v, _))| Distance::Finite(*v));
        out.push((Edge::new(p[i], p[i + 1]), best));
    }
    Ok(out)
}

/// One BFS per path edge; the reference for [`single_pair_rp`].
pub fn single_pair_rp_naive(
    h: &UndirectedGraph,
    s: usize,
    t: usize,
    p: &[usize],
) -> Result<Vec<(Edge, Distance)>> {
    check_path(h, s, t, p)?;
    Ok(crate::graph::path_edges(p)
        .map(|e| (e, bfs_distances(h, s, &FaultSet::single(e))[t]))
        .collect())
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Failure {
    pub u: usize,
    pub v: usize,
    pub dist: Distance,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PairResult {
    pub s: usize,
    pub t: usize,
    pub base: Distance,
    pub failures: Vec<Failure>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SrpOutput {
    pub pairs: Vec<PairResult>,
}

/// Subset replacement paths over the sources `sources`.
///
/// Each unordered pair `s < t` is solved on the union of the two
/// fault-free shortest-path trees of the perturbed scheme, using
/// `pi(s, t)` as the path.
pub fn srp(g: Arc<UndirectedGraph>, sources: &[usize], seed: u64) -> Result<SrpOutput> {
    srp_with(g, sources, PerturbConfig::new(seed))
}

pub fn srp_with(g: Arc<UndirectedGraph>, sources: &[usize], cfg: PerturbConfig) -> Result<SrpOutput> {
    if sources.is_empty() {
        return Err(Error::InvalidParameter("source set is empty".into()));
    }
    for &s in sources {
        g.check_vertex(s)?;
    }
    let mut sorted: Vec<usize> = sources.to_vec();
    sorted.sort_unstable();
    sorted.dedup();
    let n = g.n();
    let run = with_resampling(Arc::clone(&g), cfg, |rpts| {
        let empty = FaultSet::empty();
        let trees = sorted
            .iter()
            .map(|&s| rpts.spt(s, &empty))
            .collect::<Result<Vec<_>>>()?;
        let pairs: Vec<(usize, usize)> = (0..sorted.len())
            .flat_map(|i| (i + 1..sorted.len()).map(move |j| (i, j)))
            .collect();
        pairs
            .par_iter()
            .map(|&(i, j)| {
                let (s, t) = (sorted[i], sorted[j]);
                let Some(p) = trees[i].path_to(t) else {
                    return Ok(PairResult {
                        s,
                        t,
                        base: Distance::Unreachable,
                        failures: Vec::new(),
                    });
                };
                let union = UndirectedGraph::from_edge_set(
                    n,
                    trees[i].edges().chain(trees[j].edges()),
                );
                let failures = single_pair_rp(&union, s, t, &p)?
                    .into_iter()
                    .map(|(e, dist)| Failure {
                        u: e.u,
                        v: e.v,
                        dist,
                    })
                    .collect();
                Ok(PairResult {
                    s,
                    t,
                    base: Distance::Finite(p.len() as u32 - 1),
                    failures,
                })
            })
            .collect::<Result<Vec<_>>>()
    })?;
    Ok(SrpOutput { pairs: run.value })
}
