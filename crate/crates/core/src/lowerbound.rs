//! The recursive tree family `G_f(d)`, its leaf labels, and the weighted
//! graph `G*` on which a consistent and stable (but not restorable)
//! scheme forces every bipartite edge into the overlay preserver.

use std::cmp::Reverse;
use std::collections::{BTreeSet, BinaryHeap};
use std::ops::Add;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::ftnet::{build_sxv_preserver, OverlayConfig, Preserver};
use crate::graph::{bfs_distances, path_edges, Distance, Edge, FaultSet, UndirectedGraph};
use crate::scheme::{SourcePaths, TiebreakingScheme};
use crate::sssp::{dijkstra, ShortestPathTree};
use crate::verify::{Counterexample, PropertyReport};

/// One copy of `G_f(d)` inside a larger graph.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LbCopy {
    pub root: usize,
    /// Top-level spine `u_1..u_d`.
    pub spine: Vec<usize>,
    /// Roots of the sub-copies `G'_1..G'_d` (empty for `f = 1`).
    pub inner_roots: Vec<usize>,
    /// Leaves from left to right.
    pub leaves: Vec<usize>,
    /// `Label_f(z)` per leaf, outermost spine edge first.
    pub labels: Vec<Vec<Edge>>,
    /// `P(z)` from the root to each leaf.
    pub leaf_paths: Vec<Vec<usize>>,
    /// 1-based index of the top-level spine vertex each leaf hangs off.
    pub top_index: Vec<usize>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LbGraph {
    pub graph: UndirectedGraph,
    pub f: usize,
    pub d: usize,
    pub copies: Vec<LbCopy>,
    /// `v*`, present in `G*` only.
    pub hub: Option<usize>,
    pub x: Vec<usize>,
    pub bipartite: Vec<Edge>,
    /// Edge weights over `denominator`, aligned with `graph.edges()`.
    pub weights: Option<Vec<u128>>,
    pub denominator: u128,
}

impl LbGraph {
    pub fn graph(&self) -> &UndirectedGraph {
        &self.graph
    }

    pub fn n_leaf(&self) -> usize {
        self.copies[0].leaves.len()
    }

    /// Largest root-to-leaf distance in the first copy.
    pub fn depth(&self) -> usize {
        let c = &self.copies[0];
        let d = bfs_distances(&self.graph, c.root, &FaultSet::empty());
        c.leaves
            .iter()
            .filter_map(|&z| d[z].finite())
            .max()
            .unwrap_or(0) as usize
    }

    /// Vertices of one copy of `G_f(d)`.
    pub fn copy_size(&self) -> usize {
        construction_n(self.f, self.d).expect("built graphs are integral")
    }

    /// `num / den` weight of an edge, if this graph carries weights.
    pub fn weight(&self, e: Edge) -> Option<(u128, u128)> {
        let w = self.weights.as_ref()?;
        Some((w[self.graph.edge_index(e)?], self.denominator))
    }

    /// Lines `u v num den`, one per edge.
    pub fn weights_file(&self) -> Option<String> {
        let w = self.weights.as_ref()?;
        let mut out = String::new();
        for (e, num) in self.graph.edges().iter().zip(w) {
            out.push_str(&format!("{} {} {} {}\n", e.u, e.v, num, self.denominator));
        }
        Some(out)
    }
}

fn isqrt_exact(f: usize, d: usize) -> Result<usize> {
    let r = (d as f64).sqrt().round() as usize;
    (r * r == d)
        .then_some(r)
        .ok_or(Error::NonIntegralRecursion { f, d })
}

/// Vertices of `G_f(d)` as built: `d` spine vertices, `d - j` interior
/// vertices on the `j`-th connector, and `d` copies of `G_{f-1}(sqrt d)`
/// (or `d` leaves when `f = 1`).
pub fn construction_n(f: usize, d: usize) -> Result<usize> {
    let connectors = d + d * (d.saturating_sub(1)) / 2;
    if f == 1 {
        return Ok(connectors + d);
    }
    Ok(connectors + d * construction_n(f - 1, isqrt_exact(f, d)?)?)
}

/// `depth(f, d) = d + depth(f - 1, sqrt d)`, `depth(1, d) = d`.
pub fn formula_depth(f: usize, d: usize) -> Result<usize> {
    if f == 1 {
        return Ok(d);
    }
    Ok(d + formula_depth(f - 1, isqrt_exact(f, d)?)?)
}

/// `nLeaf(f, d) = d^(2 - 1/2^(f-1))`, computed through the exact recurrence
/// `nLeaf(f, d) = d * nLeaf(f - 1, sqrt d)`.
pub fn formula_n_leaf(f: usize, d: usize) -> Result<usize> {
    if f == 1 {
        return Ok(d);
    }
    Ok(d * formula_n_leaf(f - 1, isqrt_exact(f, d)?)?)
}

/// The recurrence `N(f, d) = d * N(f - 1, sqrt d) + d^2` with
/// `N(1, d) = 2d + d^2`. An upper bound on [`construction_n`].
pub fn recurrence_n(f: usize, d: usize) -> Result<usize> {
    if f == 1 {
        return Ok(2 * d + d * d);
    }
    Ok(d * recurrence_n(f - 1, isqrt_exact(f, d)?)? + d * d)
}

/// `2 f d^2`.
pub fn n_upper_bound(f: usize, d: usize) -> usize {
    2 * f * d * d
}

struct Builder {
    n: usize,
    edges: Vec<(usize, usize)>,
}

impl Builder {
    fn vertex(&mut self) -> usize {
        self.n += 1;
        self.n - 1
    }

    fn build(&mut self, f: usize, d: usize) -> Result<LbCopy> {
        if f == 0 || d == 0 {
            return Err(Error::InvalidParameter(format!(
                "lower-bound family needs f >= 1 and d >= 1, got f = {f}, d = {d}"
            )));
        }
        let inner_d = if f > 1 { Some(isqrt_exact(f, d)?) } else { None };
        let spine: Vec<usize> = (0..d).map(|_| self.vertex()).collect();
        for w in spine.windows(2) {
            self.edges.push((w[0], w[1]));
        }
        let mut copy = LbCopy {
            root: spine[0],
            spine: spine.clone(),
            inner_roots: Vec::new(),
            leaves: Vec::new(),
            labels: Vec::new(),
            leaf_paths: Vec::new(),
            top_index: Vec::new(),
        };
        for j in 1..=d {
            // Connector of d - j + 1 edges from u_j.
            let mut connector = vec![spine[j - 1]];
            for _ in 0..d - j {
                let v = self.vertex();
                self.edges.push((*connector.last().expect("nonempty"), v));
                connector.push(v);
            }
            let spine_edge = (j < d).then(|| Edge::new(spine[j - 1], spine[j]));
            let mut prefix = spine[..j].to_vec();
            prefix.extend(&connector[1..]);
            match inner_d {
                None => {
                    let z = self.vertex();
                    self.edges.push((*connector.last().expect("nonempty"), z));
                    prefix.push(z);
                    copy.leaves.push(z);
                    copy.labels.push(spine_edge.into_iter().collect());
                    copy.leaf_paths.push(prefix);
                    copy.top_index.push(j);
                }
                Some(sd) => {
                    let sub = self.build(f - 1, sd)?;
                    self.edges.push((*connector.last().expect("nonempty"), sub.root));
                    copy.inner_roots.push(sub.root);
                    for (k, &z) in sub.leaves.iter().enumerate() {
                        let mut label: Vec<Edge> = spine_edge.into_iter().collect();
                        label.extend(&sub.labels[k]);
                        let mut path = prefix.clone();
                        path.extend(&sub.leaf_paths[k]);
                        copy.leaves.push(z);
                        copy.labels.push(label);
                        copy.leaf_paths.push(path);
                        copy.top_index.push(j);
                    }
                }
            }
        }
        Ok(copy)
    }
}

/// Builds `G_f(d)`; `d` must be `k^(2^(f-1))` so every square root is exact.
pub fn build_gfd(f: usize, d: usize) -> Result<LbGraph> {
    let mut b = Builder {
        n: 0,
        edges: Vec::new(),
    };
    let copy = b.build(f, d)?;
    Ok(LbGraph {
        graph: UndirectedGraph::from_edges(b.n, b.edges)?,
        f,
        d,
        copies: vec![copy],
        hub: None,
        x: Vec::new(),
        bipartite: Vec::new(),
        weights: None,
        denominator: 1,
    })
}

fn lemma_violation(lb: &LbGraph, copy: &LbCopy, j: usize) -> Option<String> {
    let g = &lb.graph;
    let (root, z) = (copy.root, copy.leaves[j]);
    let p = &copy.leaf_paths[j];
    if p.first() != Some(&root) || p.last() != Some(&z) || !g.is_simple_path(p) {
        return Some("clause 1: P(z) is not a root-to-leaf path".into());
    }
    // Another simple path would avoid some edge of P(z).
    for e in path_edges(p) {
        if bfs_distances(g, root, &FaultSet::single(e))[z].is_reachable() {
            return Some(format!("clause 1: a second path avoids {e}"));
        }
    }
    let right: BTreeSet<Edge> = copy.labels[j..].iter().flatten().copied().collect();
    if let Some(e) = path_edges(p).find(|e| right.contains(e)) {
        return Some(format!("clause 2: P(z) uses label edge {e}"));
    }
    for k in 0..j {
        let label = FaultSet::from_edges(copy.labels[k].iter().copied());
        if label.avoided_by(p) {
            return Some(format!("clause 3: label of leaf {k} leaves P(z) intact"));
        }
    }
    if p.len() != copy.leaf_paths[0].len() {
        return Some(format!(
            "clause 4: |P(z)| = {} but |P(z_1)| = {}",
            p.len() - 1,
            copy.leaf_paths[0].len() - 1
        ));
    }
    None
}

/// Checks, per leaf of the first copy: (1) `P(z)` is the only root-to-`z`
/// path; (2) it avoids the labels of `z` and every leaf to its right;
/// (3) the label of every leaf to its left cuts it; (4) all `P(z)` have
/// equal length.
pub fn check_path_lemma(lb: &LbGraph) -> PropertyReport {
    const NAME: &str = "path-lemma";
    let copy = &lb.copies[0];
    for j in 0..copy.leaves.len() {
        if let Some(detail) = lemma_violation(lb, copy, j) {
            return PropertyReport::failed(
                NAME,
                j as u64 + 1,
                Counterexample {
                    s: copy.root,
                    t: copy.leaves[j],
                    faults: copy.labels[j].clone(),
                    extra: None,
                    detail,
                },
            );
        }
    }
    PropertyReport::passed(NAME, copy.leaves.len() as u64)
}

/// Size of the terminal set `X` in [`build_gstar`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum GStarSize {
    XCount(usize),
    /// Total vertex count; `X` takes whatever the copies and hub leave.
    TargetN(usize),
}

/// `G*`: `sigma` copies of `G_f(d)`, a hub `v*` adjacent to the last spine
/// vertex of every copy and to all of `X`, and the complete bipartite graph
/// between all leaves and `X`.
///
/// The hub plays the role of `u_{d+1}`: leaves hanging off `u_d` get the
/// label edge `(u_d, v*)`, which cuts the direct route to `X`.
///
/// Weights are over `n^4`: `n^4` on every non-bipartite edge and
/// `n^4 + (lambda - j)` on `(z_j, x)` for the `j`-th leaf of its copy.
pub fn build_gstar(f: usize, d: usize, sigma: usize, size: GStarSize) -> Result<LbGraph> {
    if sigma == 0 {
        return Err(Error::InvalidParameter("sigma must be at least 1".into()));
    }
    let per_copy = construction_n(f, d)?;
    let fixed = sigma * per_copy + 1;
    let chi = match size {
        GStarSize::XCount(c) => c,
        GStarSize::TargetN(n) => n.checked_sub(fixed).unwrap_or(0),
    };
    if chi == 0 {
        let target = match size {
            GStarSize::TargetN(n) => n,
            GStarSize::XCount(_) => fixed,
        };
        return Err(Error::SizeInfeasible {
            target,
            reason: format!("{sigma} copies of G_{f}({d}) plus the hub already use {fixed} vertices"),
        });
    }
    let mut b = Builder {
        n: 0,
        edges: Vec::new(),
    };
    let mut copies = (0..sigma)
        .map(|_| b.build(f, d))
        .collect::<Result<Vec<_>>>()?;
    let hub = b.vertex();
    let x: Vec<usize> = (0..chi).map(|_| b.vertex()).collect();
    for c in &mut copies {
        let y = *c.spine.last().expect("d >= 1");
        b.edges.push((y, hub));
        let hub_edge = Edge::new(y, hub);
        for (label, &j) in c.labels.iter_mut().zip(&c.top_index) {
            if j == d {
                label.insert(0, hub_edge);
            }
        }
    }
    for &xi in &x {
        b.edges.push((hub, xi));
    }
    let mut bipartite = Vec::new();
    for c in &copies {
        for &z in &c.leaves {
            for &xi in &x {
                b.edges.push((z, xi));
                bipartite.push(Edge::new(z, xi));
            }
        }
    }
    let graph = UndirectedGraph::from_edges(b.n, b.edges)?;
    let n4 = (graph.n() as u128).pow(4);
    let mut weights = vec![n4; graph.m()];
    for c in &copies {
        let lambda = c.leaves.len() as u128;
        for (j, &z) in c.leaves.iter().enumerate() {
            for &xi in &x {
                let idx = graph.edge_index(Edge::new(z, xi)).expect("bipartite edge");
                weights[idx] = n4 + (lambda - (j as u128 + 1));
            }
        }
    }
    bipartite.sort_unstable();
    Ok(LbGraph {
        graph,
        f,
        d,
        copies,
        hub: Some(hub),
        x,
        bipartite,
        weights: Some(weights),
        denominator: n4,
    })
}

/// Admissible `d = k^(2^(f-1))`, `k >= 2`, leaving at least one vertex
/// for `X` when `sigma` copies and the hub share `n` vertices.
pub fn admissible_d(f: usize, n: usize, sigma: usize) -> Vec<usize> {
    let mut out = Vec::new();
    let exp = 1u32 << (f.max(1) - 1);
    for k in 2usize.. {
        let Some(d) = k.checked_pow(exp) else { break };
        let Ok(size) = construction_n(f, d) else { break };
        if sigma * size + 2 > n {
            break;
        }
        out.push(d);
    }
    out
}

/// `W` first, then a symmetric random secondary key.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub struct LbWeight {
    pub primary: u128,
    pub secondary: u64,
}

impl Add for LbWeight {
    type Output = LbWeight;

    fn add(self, rhs: LbWeight) -> LbWeight {
        LbWeight {
            primary: self.primary + rhs.primary,
            secondary: self.secondary + rhs.secondary,
        }
    }
}

const ZERO: LbWeight = LbWeight {
    primary: 0,
    secondary: 0,
};

/// The tiebreaking scheme of `G*`: unique `W`-shortest paths, with ties
/// that `W` leaves open (outside the label fault sets) broken by a
/// symmetric random secondary weight. Consistent and stable because it
/// selects unique shortest paths of a fixed undirected weighting.
pub struct LbScheme {
    graph: Arc<UndirectedGraph>,
    /// Aligned with the adjacency lists.
    arc: Vec<Vec<LbWeight>>,
}

impl LbScheme {
    pub fn new(lb: &LbGraph, seed: u64) -> Result<Self> {
        let weights = lb
            .weights
            .as_ref()
            .ok_or_else(|| Error::InvalidParameter("graph carries no weights".into()))?;
        let g = &lb.graph;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let secondary: Vec<u64> = (0..g.m()).map(|_| rng.gen_range(1..=1u64 << 40)).collect();
        let arc = (0..g.n())
            .map(|u| {
                g.neighbors(u)
                    .iter()
                    .map(|&v| {
                        let i = g.edge_index(Edge::new(u, v)).expect("adjacent");
                        LbWeight {
                            primary: weights[i],
                            secondary: secondary[i],
                        }
                    })
                    .collect()
            })
            .collect();
        Ok(LbScheme {
            graph: Arc::new(g.clone()),
            arc,
        })
    }

    pub fn tree(&self, s: usize, faults: &FaultSet) -> Result<ShortestPathTree<LbWeight>> {
        dijkstra(&self.graph, s, faults, ZERO, |u, i| self.arc[u][i])
    }
}

impl TiebreakingScheme for LbScheme {
    fn graph(&self) -> &UndirectedGraph {
        &self.graph
    }

    fn paths_from(&self, source: usize, faults: &FaultSet) -> Result<SourcePaths> {
        Ok(SourcePaths::Tree(Arc::new(self.tree(source, faults)?)))
    }
}

/// `W`-distances from `s` together with the number of `W`-shortest paths
/// (capped at 2) and the hop count of the shortest paths, which is `None`
/// when two tight paths disagree on length.
struct WSearch {
    dist: Vec<Option<u128>>,
    paths: Vec<u8>,
    hops: Vec<Option<u64>>,
    /// Smallest tight predecessor.
    pred: Vec<Option<usize>>,
}

fn w_search(lb: &LbGraph, s: usize, faults: &FaultSet) -> WSearch {
    let g = &lb.graph;
    let w = lb.weights.as_ref().expect("checked by caller");
    let weight = |u: usize, v: usize| w[g.edge_index(Edge::new(u, v)).expect("adjacent")];
    let n = g.n();
    let mut dist: Vec<Option<u128>> = vec![None; n];
    let mut heap = BinaryHeap::new();
    dist[s] = Some(0);
    heap.push(Reverse((0u128, s)));
    let mut order = Vec::with_capacity(n);
    let mut done = vec![false; n];
    while let Some(Reverse((d, u))) = heap.pop() {
        if done[u] {
            continue;
        }
        done[u] = true;
        order.push(u);
        for &v in g.neighbors(u) {
            if faults.contains(u, v) {
                continue;
            }
            let nd = d + weight(u, v);
            if dist[v].is_none_or(|old| nd < old) {
                dist[v] = Some(nd);
                heap.push(Reverse((nd, v)));
            }
        }
    }
    let mut paths = vec![0u8; n];
    let mut hops: Vec<Option<u64>> = vec![None; n];
    let mut pred = vec![None; n];
    paths[s] = 1;
    hops[s] = Some(0);
    let mut hop_clash = vec![false; n];
    for &v in order.iter().skip(1) {
        let dv = dist[v].expect("settled");
        for &u in g.neighbors(v) {
            if faults.contains(u, v) {
                continue;
            }
            let Some(du) = dist[u] else { continue };
            if du + weight(u, v) != dv {
                continue;
            }
            paths[v] = (paths[v] + paths[u]).min(2);
            if pred[v].is_none_or(|p| u < p) {
                pred[v] = Some(u);
            }
            let h = hops[u].map(|h| h + 1);
            if hop_clash[u] || (hops[v].is_some() && hops[v] != h) {
                hop_clash[v] = true;
            }
            hops[v] = hops[v].or(h);
        }
        if hop_clash[v] {
            hops[v] = None;
        }
    }
    WSearch {
        dist,
        paths,
        hops,
        pred,
    }
}

/// For every copy, leaf `z_j` and terminal `x`, checks that the
/// `W`-shortest path from the copy's root to `x` in `G* \ Label(z_j)` is
/// unique and ends with the edge `(z_j, x)`. Passing means every bipartite
/// edge lies in the overlay of any scheme that selects `W`-shortest paths.
/// Ties elsewhere in the graph are irrelevant and tolerated.
pub fn certify_blowup(lb: &LbGraph) -> Result<PropertyReport> {
    const NAME: &str = "blowup";
    if lb.weights.is_none() || lb.x.is_empty() {
        return Err(Error::InvalidParameter("certify_blowup needs a G* graph".into()));
    }
    let jobs: Vec<(usize, usize)> = (0..lb.copies.len())
        .flat_map(|c| (0..lb.copies[c].leaves.len()).map(move |j| (c, j)))
        .collect();
    let outcomes = jobs
        .par_iter()
        .map(|&(c, j)| {
            let copy = &lb.copies[c];
            let (s, z) = (copy.root, copy.leaves[j]);
            let faults = FaultSet::new(&lb.graph, copy.labels[j].iter().copied())?;
            let cex = |t: usize, detail: String| Counterexample {
                s,
                t,
                faults: faults.edges().to_vec(),
                extra: None,
                detail,
            };
            let search = w_search(lb, s, &faults);
            let mut count = 0;
            for &xi in &lb.x {
                count += 1;
                let detail = if search.dist[xi].is_none() {
                    Some(format!("{xi} unreachable"))
                } else if search.paths[xi] != 1 {
                    Some(format!("W leaves a tie on the path to {xi}"))
                } else if search.pred[xi] != Some(z) {
                    Some(format!(
                        "last edge of the path to {xi} comes from {:?}, not leaf {z}",
                        search.pred[xi]
                    ))
                } else {
                    None
                };
                if let Some(detail) = detail {
                    return Ok((count, Some(cex(xi, detail))));
                }
            }
            Ok((count, None))
        })
        .collect::<Result<Vec<(u64, Option<Counterexample>)>>>()?;
    let mut total = 0;
    for (count, cex) in outcomes {
        total += count;
        if let Some(cex) = cex {
            return Ok(PropertyReport::failed(NAME, total, cex));
        }
    }
    Ok(PropertyReport::passed(NAME, total))
}

/// The `f`-fault overlay of the bad scheme from all copy roots, and whether
/// it contains every bipartite edge.
pub fn bad_scheme_overlay(lb: &LbGraph, seed: u64, cfg: &OverlayConfig) -> Result<(Preserver, bool)> {
    let scheme = LbScheme::new(lb, seed)?;
    let sources: Vec<usize> = lb.copies.iter().map(|c| c.root).collect();
    let p = build_sxv_preserver(&scheme, &sources, lb.f, cfg)?;
    let covered = lb.bipartite.iter().all(|e| p.subgraph.has_edge(e.u, e.v));
    Ok((p, covered))
}

/// Whether every `W`-shortest path from each copy root is also a
/// hop-shortest path, i.e. `W` only breaks ties between equally long paths.
pub fn hop_consistent(lb: &LbGraph, faults: &FaultSet) -> Result<bool> {
    if lb.weights.is_none() {
        return Err(Error::InvalidParameter("graph carries no weights".into()));
    }
    for c in &lb.copies {
        let hops = bfs_distances(&lb.graph, c.root, faults);
        let search = w_search(lb, c.root, faults);
        for v in 0..lb.graph.n() {
            let ok = match (search.hops[v], hops[v]) {
                (Some(h), Distance::Finite(b)) => h == b as u64,
                (None, Distance::Unreachable) => search.dist[v].is_none(),
                _ => false,
            };
            if !ok {
                return Ok(false);
            }
        }
    }
    Ok(true)
}
