//! Antisymmetric perturbation of the arc weights and the replacement-path
//! tiebreaking scheme it induces.
//!
//! Every undirected edge `{u, v}` becomes two arcs. Arc `(u, v)` gets weight
//! `(1, r(u, v))` and arc `(v, u)` gets `(1, -r(u, v))`, compared
//! lexicographically. `pi(s, t | F)` is the unique lightest `s -> t` path
//! once the arcs of `F` are removed.

use std::num::NonZeroUsize;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Arc;

use lru::LruCache;
use parking_lot::Mutex;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, ParseError, Result};
use crate::graph::{Edge, FaultSet, UndirectedGraph};
use crate::path::{Path, PathWeight};
use crate::sssp::{dijkstra, ShortestPathTree};

pub type Spt = ShortestPathTree<PathWeight>;

/// Default per-arc bound `n^3`.
pub fn default_bound(n: usize) -> i64 {
    let n = n.max(2) as i64;
    n.saturating_mul(n).saturating_mul(n)
}

/// The graph together with its antisymmetric arc perturbation.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PerturbedDigraph {
    base: Arc<UndirectedGraph>,
    bound: i64,
    seed: u64,
    // r[u][i] = r(u, base.neighbors(u)[i])
    r: Vec<Vec<i64>>,
}

impl PerturbedDigraph {
    /// Builds the perturbation from the values `r(u, v)` of the arcs with `u < v`.
    pub fn from_arc_values(
        base: Arc<UndirectedGraph>,
        bound: i64,
        seed: u64,
        mut value: impl FnMut(Edge) -> i64,
    ) -> Result<Self> {
        check_bound(&base, bound)?;
        let mut r: Vec<Vec<i64>> = (0..base.n())
            .map(|u| vec![0; base.degree(u)])
            .collect();
        for &e in base.edges() {
            let x = value(e);
            if x.abs() > bound {
                return Err(Error::InvalidParameter(format!(
                    "r({}, {}) = {x} exceeds the bound {bound}",
                    e.u, e.v
                )));
            }
            let iu = base.neighbors(e.u).binary_search(&e.v).expect("edge endpoint");
            let iv = base.neighbors(e.v).binary_search(&e.u).expect("edge endpoint");
            r[e.u][iu] = x;
            r[e.v][iv] = -x;
        }
        Ok(PerturbedDigraph {
            base,
            bound,
            seed,
            r,
        })
    }

    pub fn base(&self) -> &UndirectedGraph {
        &self.base
    }

    pub fn base_arc(&self) -> Arc<UndirectedGraph> {
        Arc::clone(&self.base)
    }

    pub fn bound(&self) -> i64 {
        self.bound
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// `r(u, v)` for the arc `u -> v`, if `{u, v}` is an edge.
    pub fn r(&self, u: usize, v: usize) -> Option<i64> {
        let i = self.base.neighbors(u).binary_search(&v).ok()?;
        Some(self.r[u][i])
    }

    #[inline]
    pub fn r_slot(&self, u: usize, slot: usize) -> i64 {
        self.r[u][slot]
    }

    pub fn arc_weight(&self, u: usize, v: usize) -> Option<PathWeight> {
        self.r(u, v).map(PathWeight::arc)
    }

    /// Weight of a walk given as a vertex sequence.
    pub fn path_weight(&self, path: &[usize]) -> Option<PathWeight> {
        path.windows(2)
            .try_fold(PathWeight::ZERO, |acc, w| Some(acc + self.arc_weight(w[0], w[1])?))
    }

    /// One line `u v r` per arc with `r(u, v) >= 0`; the reverse arc is implied.
    pub fn dump(&self) -> String {
        let mut out = String::new();
        for e in self.base.edges() {
            let x = self.r(e.u, e.v).expect("edge");
            if x >= 0 {
                out.push_str(&format!("{} {} {}\n", e.u, e.v, x));
            } else {
                out.push_str(&format!("{} {} {}\n", e.v, e.u, -x));
            }
        }
        out
    }
}

fn check_bound(g: &UndirectedGraph, bound: i64) -> Result<()> {
    if bound < 1 {
        return Err(Error::InvalidBound(bound));
    }
    // Path sums must not overflow.
    if (g.n() as i64).checked_mul(bound).is_none() {
        return Err(Error::InvalidBound(bound));
    }
    Ok(())
}

/// Samples `r(u, v)` uniformly from `[-bound, bound]` for every edge.
pub fn perturb(g: Arc<UndirectedGraph>, seed: u64, bound: i64) -> Result<PerturbedDigraph> {
    check_bound(&g, bound)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    PerturbedDigraph::from_arc_values(g, bound, seed, |_| rng.gen_range(-bound..=bound))
}

/// Reads the dump format back into a perturbation of `g`.
pub fn load_perturbation(
    g: Arc<UndirectedGraph>,
    bound: i64,
    text: &str,
) -> Result<PerturbedDigraph> {
    let mut values = std::collections::BTreeMap::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let raw = raw.trim();
        if raw.is_empty() || raw.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = raw.split_whitespace().collect();
        let bad = || ParseError::Malformed {
            line,
            reason: format!("expected `u v r`, got `{raw}`"),
        };
        if fields.len() != 3 {
            return Err(bad().into());
        }
        let u: usize = fields[0].parse().map_err(|_| bad())?;
        let v: usize = fields[1].parse().map_err(|_| bad())?;
        let x: i64 = fields[2].parse().map_err(|_| bad())?;
        if x < 0 || u == v || !g.has_edge(u, v) {
            return Err(bad().into());
        }
        let e = Edge::new(u, v);
        let oriented = if u < v { x } else { -x };
        if values.insert(e, oriented).is_some() {
            return Err(ParseError::DuplicateEdge { line, u, v }.into());
        }
    }
    if values.len() != g.m() {
        return Err(ParseError::EdgeCountMismatch {
            declared: g.m(),
            found: values.len(),
        }
        .into());
    }
    PerturbedDigraph::from_arc_values(g, bound, 0, |e| values[&e])
}

/// Shortest-path tree of the perturbed digraph from `s` with `F` removed.
pub fn dijkstra_sssp(pd: &PerturbedDigraph, s: usize, faults: &FaultSet) -> Result<Spt> {
    dijkstra(pd.base(), s, faults, PathWeight::ZERO, |u, i| {
        PathWeight::arc(pd.r_slot(u, i))
    })
}

/// Checks that the fault-free perturbed digraph has unique shortest paths.
pub fn certify_tie_free(pd: &PerturbedDigraph) -> Result<()> {
    let empty = FaultSet::empty();
    for s in 0..pd.base().n() {
        dijkstra_sssp(pd, s, &empty)?;
    }
    Ok(())
}

pub const DEFAULT_CACHE_CAPACITY: usize = 4096;

/// Evaluator for `pi(s, t | F)` with an LRU cache of shortest-path trees
/// keyed by `(source, F)`.
pub struct Rpts {
    pd: Arc<PerturbedDigraph>,
    cache: Mutex<LruCache<(usize, FaultSet), Arc<Spt>>>,
    hits: AtomicU64,
    misses: AtomicU64,
}

impl std::fmt::Debug for Rpts {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Rpts")
            .field("n", &self.pd.base().n())
            .field("seed", &self.pd.seed())
            .field("bound", &self.pd.bound())
            .finish()
    }
}

impl Rpts {
    pub fn new(pd: PerturbedDigraph) -> Self {
        Self::with_capacity(pd, DEFAULT_CACHE_CAPACITY)
    }

    pub fn with_capacity(pd: PerturbedDigraph, capacity: usize) -> Self {
        let cap = NonZeroUsize::new(capacity.max(1)).expect("nonzero");
        Rpts {
            pd: Arc::new(pd),
            cache: Mutex::new(LruCache::new(cap)),
            hits: AtomicU64::new(0),
            misses: AtomicU64::new(0),
        }
    }

    pub fn graph(&self) -> &UndirectedGraph {
        self.pd.base()
    }

    pub fn perturbed(&self) -> &PerturbedDigraph {
        &self.pd
    }

    /// `(hits, misses)` of the tree cache.
    pub fn cache_stats(&self) -> (u64, u64) {
        (
            self.hits.load(Ordering::Relaxed),
            self.misses.load(Ordering::Relaxed),
        )
    }

    /// Canonical shortest-path tree from `s` in `G \ F`.
    pub fn spt(&self, s: usize, faults: &FaultSet) -> Result<Arc<Spt>> {
        self.graph().check_vertex(s)?;
        let key = (s, faults.clone());
        if let Some(tree) = self.cache.lock().get(&key) {
            self.hits.fetch_add(1, Ordering::Relaxed);
            return Ok(Arc::clone(tree));
        }
        self.misses.fetch_add(1, Ordering::Relaxed);
        let tree = Arc::new(dijkstra_sssp(&self.pd, s, faults)?);
        // A concurrent caller may have filled the slot; both trees are equal.
        let mut cache = self.cache.lock();
        Ok(Arc::clone(cache.get_or_insert(key, || tree)))
    }

    /// `pi(s, t | F)`, or `None` if `t` is unreachable from `s` in `G \ F`.
    pub fn pi(&self, s: usize, t: usize, faults: &FaultSet) -> Result<Option<Path>> {
        self.graph().check_vertex(t)?;
        let tree = self.spt(s, faults)?;
        Ok(tree.path_to(t).map(|vertices| Path {
            weight: tree.weight(t).expect("reached"),
            vertices,
        }))
    }

    /// `dist*(s, t)` in the fault-free perturbed digraph.
    pub fn dist_star(&self, s: usize, t: usize) -> Result<Option<PathWeight>> {
        Ok(self.spt(s, &FaultSet::empty())?.weight(t))
    }
}

/// Parameters for drawing a perturbation and retrying on ties.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct PerturbConfig {
    pub seed: u64,
    /// Per-arc bound; `None` means `n^3`.
    pub bound: Option<i64>,
    /// Total number of seeds tried (`seed`, `seed + 1`, ...).
    pub max_attempts: u32,
    pub cache_capacity: usize,
}

impl PerturbConfig {
    pub fn new(seed: u64) -> Self {
        PerturbConfig {
            seed,
            bound: None,
            max_attempts: 16,
            cache_capacity: DEFAULT_CACHE_CAPACITY,
        }
    }

    pub fn with_bound(mut self, bound: i64) -> Self {
        self.bound = Some(bound);
        self
    }

    pub fn with_max_attempts(mut self, attempts: u32) -> Self {
        self.max_attempts = attempts;
        self
    }
}

/// Outcome of [`with_resampling`].
#[derive(Debug)]
pub struct Resampled<T> {
    pub value: T,
    pub rpts: Rpts,
    /// Number of perturbations drawn, including the successful one.
    pub attempts: u32,
}

/// Draws perturbations with seeds `seed, seed + 1, ...` until the fault-free
/// digraph is tie-free and `job` finishes without reporting a tie.
pub fn with_resampling<T>(
    g: Arc<UndirectedGraph>,
    cfg: PerturbConfig,
    mut job: impl FnMut(&Rpts) -> Result<T>,
) -> Result<Resampled<T>> {
    let bound = cfg.bound.unwrap_or_else(|| default_bound(g.n()));
    for attempt in 0..cfg.max_attempts {
        let pd = perturb(Arc::clone(&g), cfg.seed.wrapping_add(attempt as u64), bound)?;
        match certify_tie_free(&pd) {
            Ok(()) => {}
            Err(e) if e.is_tie() => continue,
            Err(e) => return Err(e),
        }
        let rpts = Rpts::with_capacity(pd, cfg.cache_capacity);
        match job(&rpts) {
            Ok(value) => {
                return Ok(Resampled {
                    value,
                    rpts,
                    attempts: attempt + 1,
                })
            }
            Err(e) if e.is_tie() => continue,
            Err(e) => return Err(e),
        }
    }
    Err(Error::TieUnresolved {
        attempts: cfg.max_attempts,
    })
}

/// A perturbation whose fault-free shortest paths are unique.
pub fn perturb_tie_free(g: Arc<UndirectedGraph>, cfg: PerturbConfig) -> Result<Rpts> {
    with_resampling(g, cfg, |_| Ok(())).map(|r| r.rpts)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generators;
    use crate::graph::{bfs_distances, fault_sets};

    fn c4() -> Arc<UndirectedGraph> {
        Arc::new(generators::cycle(4).unwrap())
    }

    /// r(0,1)=+3, r(1,2)=-1, r(2,3)=+2, r(3,0)=-2.
    fn c4_example() -> PerturbedDigraph {
        let oriented = [((0, 1), 3), ((1, 2), -1), ((2, 3), 2), ((3, 0), -2)];
        PerturbedDigraph::from_arc_values(c4(), 64, 0, |e| {
            oriented
                .iter()
                .find_map(|&((a, b), x)| {
                    if Edge::new(a, b) == e {
                        Some(if a < b { x } else { -x })
                    } else {
                        None
                    }
                })
                .unwrap()
        })
        .unwrap()
    }

    #[test]
    fn c4_example_prefers_the_lighter_route() {
        let pd = c4_example();
        assert_eq!(pd.r(0, 3), Some(2));
        assert_eq!(pd.r(3, 2), Some(-2));
        // Both 2-hop routes, enumerated by hand.
        let via1 = pd.path_weight(&[0, 1, 2]).unwrap();
        let via3 = pd.path_weight(&[0, 3, 2]).unwrap();
        assert_eq!(via1, PathWeight::new(2, 2));
        assert_eq!(via3, PathWeight::new(2, 0));
        let tree = dijkstra_sssp(&pd, 0, &FaultSet::empty()).unwrap();
        assert_eq!(tree.parent(2), Some(3));
        assert_eq!(tree.weight(2), Some(via3));

        let rpts = Rpts::new(pd);
        let p = rpts.pi(0, 2, &FaultSet::empty()).unwrap().unwrap();
        assert_eq!(p.vertices, vec![0, 3, 2]);
        assert_eq!(p.weight, via3);
    }

    #[test]
    fn identity_path_is_trivial() {
        let rpts = Rpts::new(c4_example());
        let p = rpts.pi(1, 1, &FaultSet::empty()).unwrap().unwrap();
        assert_eq!(p, Path::trivial(1));
    }

    #[test]
    fn perturbation_is_antisymmetric() {
        let g = Arc::new(generators::gnp(20, 0.4, 3).unwrap());
        let pd = perturb(Arc::clone(&g), 11, default_bound(20)).unwrap();
        for e in g.edges() {
            let a = pd.r(e.u, e.v).unwrap();
            let b = pd.r(e.v, e.u).unwrap();
            assert_eq!(a + b, 0);
            assert!(a.abs() <= pd.bound());
        }
        assert_eq!(pd.bound(), 8000);
    }

    #[test]
    fn rejects_bad_bounds() {
        assert_eq!(perturb(c4(), 0, 0).unwrap_err(), Error::InvalidBound(0));
        assert!(perturb(c4(), 0, i64::MAX).is_err());
    }

    #[test]
    fn trees_need_no_resampling() {
        let g = Arc::new(generators::random_tree(30, 5).unwrap());
        let out = with_resampling(g, PerturbConfig::new(9), |_| Ok(())).unwrap();
        assert_eq!(out.attempts, 1);
    }

    #[test]
    fn tiny_bound_on_dense_bipartite_graph_is_unresolved() {
        // K_{4,4} with r in {-1, 0, 1}: each same-side pair has four 2-hop
        // routes whose weights take only five values, so some pair ties on
        // almost every draw. Frozen: all eight draws tie.
        let g = Arc::new(generators::complete_bipartite(4, 4).unwrap());
        let cfg = PerturbConfig::new(1).with_bound(1).with_max_attempts(8);
        let err = perturb_tie_free(g, cfg).unwrap_err();
        assert_eq!(err, Error::TieUnresolved { attempts: 8 });
    }

    #[test]
    fn hop_counts_match_bfs_under_faults() {
        let g = Arc::new(generators::gnp(12, 0.35, 4).unwrap());
        let rpts = perturb_tie_free(Arc::clone(&g), PerturbConfig::new(2)).unwrap();
        for f in fault_sets(g.edges(), 0, 1) {
            for s in 0..g.n() {
                let bfs = bfs_distances(&g, s, &f);
                let tree = match rpts.spt(s, &f) {
                    Ok(t) => t,
                    Err(e) if e.is_tie() => continue,
                    Err(e) => panic!("{e}"),
                };
                for t in 0..g.n() {
                    assert_eq!(tree.hops(t), bfs[t]);
                }
            }
        }
    }

    #[test]
    fn cache_reuses_trees() {
        let rpts = Rpts::with_capacity(c4_example(), 2);
        let f = FaultSet::single(Edge::new(0, 1));
        let a = rpts.spt(0, &f).unwrap();
        let b = rpts.spt(0, &f).unwrap();
        assert!(Arc::ptr_eq(&a, &b));
        assert_eq!(rpts.cache_stats(), (1, 1));
        rpts.spt(1, &f).unwrap();
        rpts.spt(2, &f).unwrap();
        // Capacity 2: the tree for source 0 was evicted and is rebuilt equal.
        let c = rpts.spt(0, &f).unwrap();
        assert!(!Arc::ptr_eq(&a, &c));
        assert_eq!(*a, *c);
    }

    #[test]
    fn dump_round_trips() {
        let g = Arc::new(generators::gnp(15, 0.3, 8).unwrap());
        let pd = perturb(Arc::clone(&g), 5, default_bound(15)).unwrap();
        let text = pd.dump();
        assert_eq!(text.lines().count(), g.m());
        for line in text.lines() {
            let r: i64 = line.split_whitespace().nth(2).unwrap().parse().unwrap();
            assert!(r >= 0);
        }
        let back = load_perturbation(g, pd.bound(), &text).unwrap();
        for e in pd.base().edges() {
            assert_eq!(back.r(e.u, e.v), pd.r(e.u, e.v));
        }
    }
}
