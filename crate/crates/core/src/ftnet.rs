//! Fault-tolerant preservers by overlaying replacement paths, and additive
//! spanners built from them.

use std::collections::BTreeSet;
use std::sync::Arc;

use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{bfs_distances, bfs_tree, fault_sets, Distance, Edge, FaultSet, UndirectedGraph};
use crate::scheme::TiebreakingScheme;
use crate::tiebreak::{with_resampling, PerturbConfig};
use crate::verify::{CheckMode, Counterexample, PropertyReport};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PreserverKind {
    Sxv,
    Sxs,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PreserverStats {
    pub edges: usize,
    /// `n^(2 - 1/2^k) * |S|^(1/2^k)` for the overlay budget `k`.
    pub bound_value: f64,
    pub enumerated_fault_sets: u64,
}

#[derive(Clone, Debug)]
pub struct Preserver {
    pub subgraph: UndirectedGraph,
    pub sources: Vec<usize>,
    pub f: usize,
    pub kind: PreserverKind,
    pub stats: PreserverStats,
}

impl Preserver {
    pub fn edges(&self) -> &[Edge] {
        self.subgraph.edges()
    }
}

/// Which fault sets the overlay visits.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Enumeration {
    /// Grow `F` only by edges of the current shortest-path tree. Faults off
    /// the tree cannot change any selected path of a stable scheme.
    Frontier,
    /// Every `F` with `|F| <= f`.
    Naive,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct OverlayConfig {
    pub enumeration: Enumeration,
    /// Maximum number of `(source, F)` trees computed.
    pub work_limit: u64,
}

pub const DEFAULT_WORK_LIMIT: u64 = 2_000_000;

impl Default for OverlayConfig {
    fn default() -> Self {
        OverlayConfig {
            enumeration: Enumeration::Frontier,
            work_limit: DEFAULT_WORK_LIMIT,
        }
    }
}

pub fn size_bound(n: usize, sigma: usize, budget: usize) -> f64 {
    let e = 1.0 / 2f64.powi(budget as i32);
    (n as f64).powf(2.0 - e) * (sigma as f64).powf(e)
}

fn overlay_source<S: TiebreakingScheme + ?Sized>(
    scheme: &S,
    s: usize,
    f: usize,
    cfg: &OverlayConfig,
) -> Result<(BTreeSet<Edge>, u64)> {
    let n = scheme.graph().n();
    let mut edges = BTreeSet::new();
    let mut visited = 0u64;
    match cfg.enumeration {
        Enumeration::Naive => {
            let all = fault_sets(scheme.graph().edges(), 0, f);
            if all.len() as u64 > cfg.work_limit {
                return Err(Error::BudgetExceeded {
                    limit: cfg.work_limit as usize,
                });
            }
            let parts = all
                .par_iter()
                .map(|faults| Ok(scheme.paths_from(s, faults)?.edges(n)))
                .collect::<Result<Vec<_>>>()?;
            visited = all.len() as u64;
            edges.extend(parts.into_iter().flatten());
        }
        Enumeration::Frontier => {
            let mut level: Vec<FaultSet> = vec![FaultSet::empty()];
            for depth in 0..=f {
                visited += level.len() as u64;
                if visited > cfg.work_limit {
                    return Err(Error::BudgetExceeded {
                        limit: cfg.work_limit as usize,
                    });
                }
                let trees = level
                    .par_iter()
                    .map(|faults| Ok(scheme.paths_from(s, faults)?.edges(n)))
                    .collect::<Result<Vec<_>>>()?;
                let mut next = BTreeSet::new();
                for (faults, tree) in level.iter().zip(&trees) {
                    edges.extend(tree.iter().copied());
                    if depth < f {
                        next.extend(tree.iter().map(|&e| faults.with(e)));
                    }
                }
                level = next.into_iter().collect();
            }
        }
    }
    Ok((edges, visited))
}

/// Union of `pi(s, v | F)` over `s` in `sources`, all `v` and `|F| <= f`.
pub fn build_sxv_preserver<S: TiebreakingScheme + ?Sized>(
    scheme: &S,
    sources: &[usize],
    f: usize,
    cfg: &OverlayConfig,
) -> Result<Preserver> {
    let g = scheme.graph();
    let mut srcs = sources.to_vec();
    srcs.sort_unstable();
    srcs.dedup();
    for &s in &srcs {
        g.check_vertex(s)?;
    }
    let mut edges = BTreeSet::new();
    let mut visited = 0;
    for &s in &srcs {
        let (e, v) = overlay_source(scheme, s, f, cfg)?;
        edges.extend(e);
        visited += v;
        if visited > cfg.work_limit {
            return Err(Error::BudgetExceeded {
                limit: cfg.work_limit as usize,
            });
        }
    }
    let subgraph = UndirectedGraph::from_edge_set(g.n(), edges);
    Ok(Preserver {
        stats: PreserverStats {
            edges: subgraph.m(),
            bound_value: size_bound(g.n(), srcs.len(), f),
            enumerated_fault_sets: visited,
        },
        subgraph,
        sources: srcs,
        f,
        kind: PreserverKind::Sxv,
    })
}

/// An `f_plus_1`-fault `S x S` preserver: the `S x V` overlay with one
/// fewer fault, which suffices for restorable schemes.
pub fn build_sxs_preserver<S: TiebreakingScheme + ?Sized>(
    scheme: &S,
    sources: &[usize],
    f_plus_1: usize,
    cfg: &OverlayConfig,
) -> Result<Preserver> {
    if f_plus_1 == 0 {
        return Err(Error::InvalidParameter(
            "S x S preservers need a fault budget of at least 1".into(),
        ));
    }
    let mut p = build_sxv_preserver(scheme, sources, f_plus_1 - 1, cfg)?;
    p.kind = PreserverKind::Sxs;
    p.f = f_plus_1;
    Ok(p)
}

/// Checks `dist_{H \ F}(s, v) = dist_{G \ F}(s, v)` over the pairs the
/// preserver covers and every `|F| <= f`.
pub fn verify_preserver(g: &UndirectedGraph, p: &Preserver, mode: CheckMode) -> Result<PropertyReport> {
    const NAME: &str = "preserver";
    if !p.subgraph.is_subgraph_of(g) {
        return Err(Error::InvalidParameter("preserver is not a subgraph".into()));
    }
    let targets: Vec<usize> = match p.kind {
        PreserverKind::Sxv => (0..g.n()).collect(),
        PreserverKind::Sxs => p.sources.clone(),
    };
    let sets = fault_set_space(g, p.f, mode);
    let outcomes: Vec<(u64, Option<Counterexample>)> = sets
        .par_iter()
        .map(|faults| {
            let mut count = 0;
            for &s in &p.sources {
                let dg = bfs_distances(g, s, faults);
                let dh = bfs_distances(&p.subgraph, s, faults);
                for &t in &targets {
                    count += 1;
                    if dg[t] != dh[t] {
                        return (
                            count,
                            Some(Counterexample {
                                s,
                                t,
                                faults: faults.edges().to_vec(),
                                extra: None,
                                detail: format!("dist in H is {}, in G is {}", dh[t], dg[t]),
                            }),
                        );
                    }
                }
            }
            (count, None)
        })
        .collect();
    Ok(merge(NAME, outcomes))
}

fn merge(name: &str, outcomes: Vec<(u64, Option<Counterexample>)>) -> PropertyReport {
    let mut total = 0;
    for (count, cex) in outcomes {
        total += count;
        if let Some(cex) = cex {
            return PropertyReport::failed(name, total, cex);
        }
    }
    PropertyReport::passed(name, total)
}

fn fault_set_space(g: &UndirectedGraph, f: usize, mode: CheckMode) -> Vec<FaultSet> {
    match mode.resolve(g, f) {
        CheckMode::Sampled { samples, seed } => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let edges = g.edges();
            (0..samples)
                .map(|i| {
                    let size = (i % (f + 1)).min(edges.len());
                    FaultSet::from_edges(
                        sample(&mut rng, edges.len(), size)
                            .into_iter()
                            .map(|j| edges[j]),
                    )
                })
                .collect()
        }
        _ => fault_sets(g.edges(), 0, f),
    }
}

#[derive(Clone, Debug)]
pub struct Spanner {
    pub subgraph: UndirectedGraph,
    pub f: usize,
    pub additive_error: u32,
    pub centers: Vec<usize>,
    pub clustered: Vec<bool>,
    /// Center edges stored for each clustered vertex.
    pub center_edges: Vec<Vec<usize>>,
    pub sigma: usize,
    pub repetitions: usize,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SpannerConfig {
    /// Number of centers; `None` picks `ceil(c * n^(1 / (2^(f-1) + 1)))`.
    pub sigma: Option<usize>,
    pub sigma_constant: f64,
    /// Independent center samples; `None` means `ceil(log2 n)`.
    pub repetitions: Option<usize>,
    pub overlay: OverlayConfig,
    pub max_attempts: u32,
}

impl Default for SpannerConfig {
    fn default() -> Self {
        SpannerConfig {
            sigma: None,
            sigma_constant: 1.0,
            repetitions: None,
            overlay: OverlayConfig::default(),
            max_attempts: 16,
        }
    }
}

pub fn default_sigma(n: usize, f: usize, c: f64) -> usize {
    let e = 1.0 / (2f64.powi(f as i32 - 1) + 1.0);
    ((c * (n as f64).powf(e)).ceil() as usize).clamp(1, n)
}

/// An `f`-fault `+4` spanner: random centers, clustering with `f + 1`
/// center edges per clustered vertex, plus an `f`-fault preserver on the
/// centers. The sparsest of several samples is kept.
pub fn build_spanner(g: Arc<UndirectedGraph>, f: usize, seed: u64, cfg: &SpannerConfig) -> Result<Spanner> {
    if f == 0 {
        return Err(Error::InvalidParameter("spanner fault budget must be at least 1".into()));
    }
    let n = g.n();
    if n < 2 {
        return Err(Error::InvalidParameter("spanner needs n >= 2".into()));
    }
    let sigma = cfg
        .sigma
        .unwrap_or_else(|| default_sigma(n, f, cfg.sigma_constant))
        .clamp(1, n);
    let reps = cfg
        .repetitions
        .unwrap_or_else(|| (n as f64).log2().ceil() as usize)
        .max(1);
    let perturb = PerturbConfig::new(seed).with_max_attempts(cfg.max_attempts);
    let run = with_resampling(Arc::clone(&g), perturb, |rpts| {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut best: Option<Spanner> = None;
        for _ in 0..reps {
            let mut centers = sample(&mut rng, n, sigma).into_vec();
            centers.sort_unstable();
            let candidate = assemble_spanner(rpts, &centers, f, &cfg.overlay, reps)?;
            if best.as_ref().map_or(true, |b| candidate.subgraph.m() < b.subgraph.m()) {
                best = Some(candidate);
            }
        }
        Ok(best.expect("at least one repetition"))
    })?;
    Ok(run.value)
}

/// Clustering plus the center preserver for a fixed center set.
pub fn assemble_spanner<S: TiebreakingScheme + ?Sized>(
    scheme: &S,
    centers: &[usize],
    f: usize,
    overlay: &OverlayConfig,
    repetitions: usize,
) -> Result<Spanner> {
    let g = scheme.graph();
    let n = g.n();
    let mut is_center = vec![false; n];
    for &c in centers {
        g.check_vertex(c)?;
        is_center[c] = true;
    }
    let mut edges = BTreeSet::new();
    let mut clustered = vec![false; n];
    let mut center_edges = vec![Vec::new(); n];
    for v in 0..n {
        let near: Vec<usize> = g.neighbors(v).iter().copied().filter(|&w| is_center[w]).collect();
        if near.len() > f {
            clustered[v] = true;
            center_edges[v] = near[..=f].to_vec();
            edges.extend(center_edges[v].iter().map(|&c| Edge::new(v, c)));
        } else {
            edges.extend(g.neighbors(v).iter().map(|&w| Edge::new(v, w)));
        }
    }
    let preserver = build_sxs_preserver(scheme, centers, f, overlay)?;
    edges.extend(preserver.edges().iter().copied());
    Ok(Spanner {
        subgraph: UndirectedGraph::from_edge_set(n, edges),
        f,
        additive_error: 4,
        centers: centers.to_vec(),
        clustered,
        center_edges,
        sigma: centers.len(),
        repetitions,
    })
}

/// Checks `dist_{H \ F}(s, t) <= dist_{G \ F}(s, t) + 4` for every pair
/// and every `|F| <= f`. The counterexample detail carries the stepwise
/// chain evaluation.
pub fn verify_spanner(g: &UndirectedGraph, sp: &Spanner, mode: CheckMode) -> Result<PropertyReport> {
    const NAME: &str = "spanner-stretch";
    let h = &sp.subgraph;
    if !h.is_subgraph_of(g) {
        return Err(Error::InvalidParameter("spanner is not a subgraph".into()));
    }
    let sets = fault_set_space(g, sp.f, mode);
    let k = sp.additive_error;
    let outcomes: Vec<(u64, Option<Counterexample>)> = sets
        .par_iter()
        .map(|faults| {
            let mut count = 0;
            for s in 0..g.n() {
                let dg = bfs_distances(g, s, faults);
                let dh = bfs_distances(h, s, faults);
                for t in s + 1..g.n() {
                    count += 1;
                    let Some(base) = dg[t].finite() else { continue };
                    if dh[t].finite().map_or(true, |d| d > base + k) {
                        let chain = stretch_chain(g, sp, s, t, faults);
                        return (
                            count,
                            Some(Counterexample {
                                s,
                                t,
                                faults: faults.edges().to_vec(),
                                extra: None,
                                detail: format!(
                                    "dist in H is {}, in G is {base}; chain {:?}",
                                    dh[t], chain
                                ),
                            }),
                        );
                    }
                }
            }
            (count, None)
        })
        .collect();
    Ok(merge(NAME, outcomes))
}

/// The six-line stretch argument evaluated on one `(s, t, F)`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct StretchChain {
    /// `lines[0]` is `dist_{H\F}(s, t)`, `lines[6]` is `dist_{G\F}(s, t) + 4`.
    pub lines: Vec<Distance>,
    /// Relation between consecutive lines: `true` for `=`, `false` for `<=`.
    pub equalities: Vec<bool>,
    /// Index of the first step that does not hold, if any.
    pub broken_step: Option<usize>,
    /// No clustered vertex on the replacement path; then `H` keeps it whole.
    pub trivial: bool,
}

impl StretchChain {
    pub fn holds(&self) -> bool {
        self.broken_step.is_none()
    }
}

/// Evaluates the chain along a BFS replacement path `q` of `G \ F`, with
/// `x` and `y` the first and last clustered vertices on `q` and `c_x`, `c_y`
/// surviving center neighbors. Returns `None` if `t` is unreachable.
pub fn stretch_chain(
    g: &UndirectedGraph,
    sp: &Spanner,
    s: usize,
    t: usize,
    faults: &FaultSet,
) -> Option<StretchChain> {
    let h = &sp.subgraph;
    let (dist, parent) = bfs_tree(g, s, faults);
    dist[t].finite()?;
    let mut q = vec![t];
    while let Some(p) = parent[*q.last().expect("nonempty")] {
        q.push(p);
    }
    q.reverse();
    let dg = |a: usize, b: usize| bfs_distances(g, a, faults)[b];
    let dh = |a: usize, b: usize| bfs_distances(h, a, faults)[b];
    let add = |xs: &[Distance], k: u32| {
        xs.iter()
            .try_fold(k, |acc, d| d.finite().map(|d| acc + d))
            .map_or(Distance::Unreachable, Distance::Finite)
    };
    let l0 = dh(s, t);
    let l6 = add(&[dg(s, t)], sp.additive_error);
    let first = q.iter().position(|&v| sp.clustered[v]);
    let (Some(ix), Some(iy)) = (first, q.iter().rposition(|&v| sp.clustered[v])) else {
        let ok = l0 <= l6;
        return Some(StretchChain {
            lines: vec![l0, l6],
            equalities: vec![false],
            broken_step: (!ok).then_some(0),
            trivial: true,
        });
    };
    let (x, y) = (q[ix], q[iy]);
    let survivor = |v: usize| {
        sp.center_edges[v]
            .iter()
            .copied()
            .find(|&c| !faults.contains(v, c))
    };
    let (Some(cx), Some(cy)) = (survivor(x), survivor(y)) else {
        return Some(StretchChain {
            lines: vec![l0, l6],
            equalities: vec![false],
            broken_step: Some(0),
            trivial: false,
        });
    };
    let lines = vec![
        l0,
        add(&[dh(s, x), dh(x, y), dh(y, t)], 0),
        add(&[dg(s, x), dh(x, y), dg(y, t)], 0),
        add(&[dg(s, x), dh(cx, cy), dg(y, t)], 2),
        add(&[dg(s, x), dg(cx, cy), dg(y, t)], 2),
        add(&[dg(s, x), dg(x, y), dg(y, t)], 4),
        l6,
    ];
    let equalities = vec![false, true, false, true, false, true];
    let broken_step = (0..6).find(|&i| {
        if equalities[i] {
            lines[i] != lines[i + 1]
        } else {
            lines[i] > lines[i + 1]
        }
    });
    Some(StretchChain {
        lines,
        equalities,
        broken_step,
        trivial: false,
    })
}
