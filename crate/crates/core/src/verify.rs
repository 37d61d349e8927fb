//! Brute-force oracles and property checkers for tiebreaking schemes.

use std::collections::HashMap;
use std::sync::Arc;

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::generators;
use crate::graph::{bfs_distances, fault_sets, Distance, Edge, FaultSet, UndirectedGraph};
use crate::scheme::{ExplicitScheme, SourcePaths, TiebreakingScheme};
use crate::tiebreak::Rpts;

/// Exact `dist_{G \ F}(s, t)` by BFS.
pub fn oracle_replacement_distance(
    g: &UndirectedGraph,
    s: usize,
    t: usize,
    faults: &FaultSet,
) -> Result<Distance> {
    g.check_vertex(s)?;
    g.check_vertex(t)?;
    Ok(bfs_distances(g, s, faults)[t])
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Counterexample {
    pub s: usize,
    pub t: usize,
    pub faults: Vec<Edge>,
    /// The added fault of a stability violation.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub extra: Option<Edge>,
    pub detail: String,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PropertyReport {
    pub property: String,
    pub pass: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub counterexample: Option<Counterexample>,
    pub instances_checked: u64,
}

impl PropertyReport {
    pub fn passed(property: &str, instances_checked: u64) -> Self {
        PropertyReport {
            property: property.to_string(),
            pass: true,
            counterexample: None,
            instances_checked,
        }
    }

    pub fn failed(property: &str, instances_checked: u64, cex: Counterexample) -> Self {
        PropertyReport {
            property: property.to_string(),
            pass: false,
            counterexample: Some(cex),
            instances_checked,
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("reports serialize")
    }
}

/// How much of the `(s, t, F)` space a checker visits.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CheckMode {
    /// Exhaustive when `n <= AUTO_MAX_N` and `m^f_max <= AUTO_MAX_WORK`,
    /// otherwise sampled with `DEFAULT_SAMPLES` and seed 0.
    Auto,
    Exhaustive,
    Sampled { samples: usize, seed: u64 },
}

pub const AUTO_MAX_N: usize = 12;
pub const AUTO_MAX_WORK: f64 = 1e6;
pub const DEFAULT_SAMPLES: usize = 5000;

impl CheckMode {
    pub fn resolve(self, g: &UndirectedGraph, f_max: usize) -> CheckMode {
        match self {
            CheckMode::Auto => {
                let work = (g.m().max(1) as f64).powi(f_max as i32);
                if g.n() <= AUTO_MAX_N && work <= AUTO_MAX_WORK {
                    CheckMode::Exhaustive
                } else {
                    CheckMode::Sampled {
                        samples: DEFAULT_SAMPLES,
                        seed: 0,
                    }
                }
            }
            other => other,
        }
    }
}

/// Memoized scheme paths and BFS oracles for a single worker.
struct Lookup<'a, S: ?Sized> {
    scheme: &'a S,
    paths: HashMap<(usize, FaultSet), SourcePaths>,
    dists: HashMap<(usize, FaultSet), Arc<Vec<Distance>>>,
}

impl<'a, S: TiebreakingScheme + ?Sized> Lookup<'a, S> {
    fn new(scheme: &'a S) -> Self {
        Lookup {
            scheme,
            paths: HashMap::new(),
            dists: HashMap::new(),
        }
    }

    fn paths(&mut self, s: usize, faults: &FaultSet) -> Result<SourcePaths> {
        let key = (s, faults.clone());
        if let Some(p) = self.paths.get(&key) {
            return Ok(p.clone());
        }
        let p = self.scheme.paths_from(s, faults)?;
        self.paths.insert(key, p.clone());
        Ok(p)
    }

    fn path(&mut self, s: usize, t: usize, faults: &FaultSet) -> Result<Option<Vec<usize>>> {
        Ok(self.paths(s, faults)?.path_to(t))
    }

    fn dist(&mut self, s: usize, t: usize, faults: &FaultSet) -> Distance {
        let g = self.scheme.graph();
        self.dists
            .entry((s, faults.clone()))
            .or_insert_with(|| Arc::new(bfs_distances(g, s, faults)))[t]
    }
}

/// A decomposition `pi(s, x | F') o reverse(pi(t, x | F'))` witnessing
/// restorability of `(s, t, F)`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Restoration {
    pub x: usize,
    pub sub_faults: Vec<Edge>,
    pub path: Vec<usize>,
}

fn find_restoration_in<S: TiebreakingScheme + ?Sized>(
    lookup: &mut Lookup<'_, S>,
    s: usize,
    t: usize,
    faults: &FaultSet,
) -> Result<Option<Restoration>> {
    let Some(d) = lookup.dist(s, t, faults).finite() else {
        return Ok(None);
    };
    let subsets = faults.proper_subsets();
    for x in 0..lookup.scheme.graph().n() {
        for sub in &subsets {
            let Some(a) = lookup.path(s, x, sub)? else {
                continue;
            };
            if a.len() as u32 - 1 > d || !faults.avoided_by(&a) {
                continue;
            }
            let Some(b) = lookup.path(t, x, sub)? else {
                continue;
            };
            if (a.len() + b.len()) as u32 - 2 != d || !faults.avoided_by(&b) {
                continue;
            }
            let mut path = a;
            path.extend(b.iter().rev().skip(1));
            return Ok(Some(Restoration {
                x,
                sub_faults: sub.edges().to_vec(),
                path,
            }));
        }
    }
    Ok(None)
}

/// Searches `x` in increasing order and `F'` from the largest proper subset
/// down. Returns `None` when no decomposition exists or `t` is unreachable.
pub fn find_restoration<S: TiebreakingScheme + ?Sized>(
    scheme: &S,
    s: usize,
    t: usize,
    faults: &FaultSet,
) -> Result<Option<Restoration>> {
    find_restoration_in(&mut Lookup::new(scheme), s, t, faults)
}

fn restorable_violation<S: TiebreakingScheme + ?Sized>(
    lookup: &mut Lookup<'_, S>,
    s: usize,
    t: usize,
    faults: &FaultSet,
) -> Result<Option<String>> {
    let d = lookup.dist(s, t, faults);
    if !d.is_reachable() || find_restoration_in(lookup, s, t, faults)?.is_some() {
        return Ok(None);
    }
    Ok(Some(format!(
        "no vertex x and proper subset F' give a replacement path of length {d}"
    )))
}

fn consistent_violation<S: TiebreakingScheme + ?Sized>(
    lookup: &mut Lookup<'_, S>,
    s: usize,
    t: usize,
    faults: &FaultSet,
) -> Result<Option<String>> {
    let Some(p) = lookup.path(s, t, faults)? else {
        return Ok(None);
    };
    for i in 0..p.len() {
        for j in i + 1..p.len() {
            if i == 0 && j == p.len() - 1 {
                continue;
            }
            let sub = lookup.path(p[i], p[j], faults)?;
            if sub.as_deref() != Some(&p[i..=j]) {
                return Ok(Some(format!(
                    "pi(s,t|F) = {p:?} but pi({},{}|F) = {sub:?}",
                    p[i], p[j]
                )));
            }
        }
    }
    Ok(None)
}

fn stable_violation<S: TiebreakingScheme + ?Sized>(
    lookup: &mut Lookup<'_, S>,
    s: usize,
    t: usize,
    faults: &FaultSet,
    extra: Edge,
) -> Result<Option<String>> {
    let Some(p) = lookup.path(s, t, faults)? else {
        return Ok(None);
    };
    if !FaultSet::single(extra).avoided_by(&p) {
        return Ok(None);
    }
    let q = lookup.path(s, t, &faults.with(extra))?;
    if q.as_deref() == Some(&p[..]) {
        Ok(None)
    } else {
        Ok(Some(format!(
            "pi(s,t|F) = {p:?} avoids {extra} but pi(s,t|F+{extra}) = {q:?}"
        )))
    }
}

type UnitOutcome = (u64, Option<Counterexample>);

/// Runs independent units in parallel and merges them as a sequential run
/// that stops at the first counterexample would.
fn run_units<U, F>(property: &str, units: Vec<U>, eval: F) -> Result<PropertyReport>
where
    U: Sync,
    F: Fn(&U) -> Result<UnitOutcome> + Sync,
{
    let outcomes: Vec<Result<UnitOutcome>> = units.par_iter().map(&eval).collect();
    let mut total = 0;
    for outcome in outcomes {
        let (count, cex) = outcome?;
        total += count;
        if let Some(cex) = cex {
            return Ok(PropertyReport::failed(property, total, cex));
        }
    }
    Ok(PropertyReport::passed(property, total))
}

fn cex(s: usize, t: usize, faults: &FaultSet, extra: Option<Edge>, detail: String) -> Counterexample {
    Counterexample {
        s,
        t,
        faults: faults.edges().to_vec(),
        extra,
        detail,
    }
}

fn all_pairs(n: usize) -> Vec<(usize, usize)> {
    (0..n)
        .flat_map(|s| (0..n).filter(move |&t| t != s).map(move |t| (s, t)))
        .collect()
}

fn random_faults(rng: &mut ChaCha8Rng, edges: &[Edge], size: usize) -> FaultSet {
    let size = size.min(edges.len());
    FaultSet::from_edges(sample(rng, edges.len(), size).into_iter().map(|i| edges[i]))
}

struct Sample {
    s: usize,
    t: usize,
    faults: FaultSet,
    extra: Option<Edge>,
}

fn samples(
    g: &UndirectedGraph,
    pairs: &[(usize, usize)],
    count: usize,
    seed: u64,
    fault_sizes: std::ops::RangeInclusive<usize>,
    with_extra: bool,
) -> Vec<Sample> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let edges = g.edges();
    let mut out = Vec::with_capacity(count);
    if pairs.is_empty() || edges.is_empty() {
        return out;
    }
    while out.len() < count {
        let (s, t) = pairs[rng.gen_range(0..pairs.len())];
        let size = rng.gen_range(fault_sizes.clone());
        let faults = random_faults(&mut rng, edges, size);
        let extra = if with_extra {
            let free: Vec<Edge> = edges
                .iter()
                .copied()
                .filter(|e| !faults.contains_edge(*e))
                .collect();
            if free.is_empty() {
                continue;
            }
            Some(free[rng.gen_range(0..free.len())])
        } else {
            None
        };
        out.push(Sample {
            s,
            t,
            faults,
            extra,
        });
    }
    out
}

/// Checks restorability for every pair (or the given pairs) and every
/// nonempty `F` with `|F| <= f_max`.
pub fn check_restorable<S: TiebreakingScheme + ?Sized>(
    scheme: &S,
    f_max: usize,
    pairs: Option<&[(usize, usize)]>,
    mode: CheckMode,
) -> Result<PropertyReport> {
    const NAME: &str = "restorable";
    let g = scheme.graph();
    let pairs = pairs.map_or_else(|| all_pairs(g.n()), <[_]>::to_vec);
    for &(s, t) in &pairs {
        g.check_vertex(s)?;
        g.check_vertex(t)?;
    }
    if f_max == 0 {
        return Ok(PropertyReport::passed(NAME, 0));
    }
    match mode.resolve(g, f_max) {
        CheckMode::Sampled { samples: k, seed } => {
            let units = samples(g, &pairs, k, seed, 1..=f_max, false);
            run_units(NAME, units, |u| {
                let mut lookup = Lookup::new(scheme);
                let bad = restorable_violation(&mut lookup, u.s, u.t, &u.faults)?;
                Ok((1, bad.map(|d| cex(u.s, u.t, &u.faults, None, d))))
            })
        }
        _ => run_units(NAME, fault_sets(g.edges(), 1, f_max), |faults| {
            let mut lookup = Lookup::new(scheme);
            let mut count = 0;
            for &(s, t) in pairs.iter().filter(|(s, t)| s != t) {
                count += 1;
                if let Some(d) = restorable_violation(&mut lookup, s, t, faults)? {
                    return Ok((count, Some(cex(s, t, faults, None, d))));
                }
            }
            Ok((count, None))
        }),
    }
}

/// Checks that every subpath of `pi(s, t | F)` is the selected path between
/// its endpoints, for all `|F| <= f_max`.
pub fn check_consistent<S: TiebreakingScheme + ?Sized>(
    scheme: &S,
    f_max: usize,
    mode: CheckMode,
) -> Result<PropertyReport> {
    const NAME: &str = "consistent";
    let g = scheme.graph();
    let pairs = all_pairs(g.n());
    match mode.resolve(g, f_max) {
        CheckMode::Sampled { samples: k, seed } => {
            let units = samples(g, &pairs, k, seed, 0..=f_max, false);
            run_units(NAME, units, |u| {
                let mut lookup = Lookup::new(scheme);
                let bad = consistent_violation(&mut lookup, u.s, u.t, &u.faults)?;
                Ok((1, bad.map(|d| cex(u.s, u.t, &u.faults, None, d))))
            })
        }
        _ => run_units(NAME, fault_sets(g.edges(), 0, f_max), |faults| {
            let mut lookup = Lookup::new(scheme);
            let mut count = 0;
            for &(s, t) in &pairs {
                count += 1;
                if let Some(d) = consistent_violation(&mut lookup, s, t, faults)? {
                    return Ok((count, Some(cex(s, t, faults, None, d))));
                }
            }
            Ok((count, None))
        }),
    }
}

/// Checks `pi(s, t | F) = pi(s, t | F + e)` for every `e` off the path,
/// over all `|F + e| <= f_max`.
pub fn check_stable<S: TiebreakingScheme + ?Sized>(
    scheme: &S,
    f_max: usize,
    mode: CheckMode,
) -> Result<PropertyReport> {
    const NAME: &str = "stable";
    let g = scheme.graph();
    let pairs = all_pairs(g.n());
    if f_max == 0 {
        return Ok(PropertyReport::passed(NAME, 0));
    }
    match mode.resolve(g, f_max) {
        CheckMode::Sampled { samples: k, seed } => {
            let units = samples(g, &pairs, k, seed, 0..=f_max - 1, true);
            run_units(NAME, units, |u| {
                let mut lookup = Lookup::new(scheme);
                let extra = u.extra.expect("stability samples carry an extra fault");
                let bad = stable_violation(&mut lookup, u.s, u.t, &u.faults, extra)?;
                Ok((1, bad.map(|d| cex(u.s, u.t, &u.faults, Some(extra), d))))
            })
        }
        _ => run_units(NAME, fault_sets(g.edges(), 0, f_max - 1), |faults| {
            let mut lookup = Lookup::new(scheme);
            let mut count = 0;
            for &extra in g.edges().iter().filter(|e| !faults.contains_edge(**e)) {
                for &(s, t) in &pairs {
                    count += 1;
                    if let Some(d) = stable_violation(&mut lookup, s, t, faults, extra)? {
                        return Ok((count, Some(cex(s, t, faults, Some(extra), d))));
                    }
                }
            }
            Ok((count, None))
        }),
    }
}

/// Re-evaluates a reported counterexample in isolation. Returns `true` if
/// it still witnesses a violation of `property`.
pub fn recheck<S: TiebreakingScheme + ?Sized>(
    scheme: &S,
    property: &str,
    cex: &Counterexample,
) -> Result<bool> {
    let mut lookup = Lookup::new(scheme);
    let faults = FaultSet::new(scheme.graph(), cex.faults.iter().copied())?;
    let bad = match (property, cex.extra) {
        ("restorable", _) => restorable_violation(&mut lookup, cex.s, cex.t, &faults)?,
        ("consistent", _) => consistent_violation(&mut lookup, cex.s, cex.t, &faults)?,
        ("stable", Some(e)) => stable_violation(&mut lookup, cex.s, cex.t, &faults, e)?,
        _ => None,
    };
    Ok(bad.is_some())
}

/// One symmetric tiebreaking scheme on the 4-cycle and its fate.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct C4Scheme {
    pub pi_0_2: Vec<usize>,
    pub pi_1_3: Vec<usize>,
    pub symmetric: bool,
    pub all_shortest: bool,
    pub restorable: PropertyReport,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct C4Impossibility {
    pub report: PropertyReport,
    pub schemes: Vec<C4Scheme>,
}

/// Enumerates the four symmetric schemes of the 4-cycle (one choice per
/// antipodal pair) and confirms that none is restorable under one fault.
pub fn c4_symmetric_impossibility() -> Result<C4Impossibility> {
    const NAME: &str = "c4-symmetric-impossibility";
    let g = Arc::new(generators::cycle(4)?);
    let mut schemes = Vec::new();
    for pi_0_2 in [vec![0, 1, 2], vec![0, 3, 2]] {
        for pi_1_3 in [vec![1, 0, 3], vec![1, 2, 3]] {
            let mut scheme = ExplicitScheme::lexicographic(Arc::clone(&g));
            scheme.set_symmetric(pi_0_2.clone())?;
            scheme.set_symmetric(pi_1_3.clone())?;
            let empty = FaultSet::empty();
            let symmetric = crate::scheme::is_symmetric(&scheme, &empty)?;
            let mut all_shortest = true;
            for s in 0..4 {
                for t in 0..4 {
                    let hops = scheme.path(s, t, &empty)?.map(|p| p.len() as u32 - 1);
                    all_shortest &= hops == bfs_distances(&g, s, &empty)[t].finite();
                }
            }
            let restorable = check_restorable(&scheme, 1, None, CheckMode::Exhaustive)?;
            schemes.push(C4Scheme {
                pi_0_2: pi_0_2.clone(),
                pi_1_3,
                symmetric,
                all_shortest,
                restorable,
            });
        }
    }
    let pass = schemes.len() == 4
        && schemes
            .iter()
            .all(|c| c.symmetric && c.all_shortest && !c.restorable.pass);
    let report = if pass {
        PropertyReport::passed(NAME, schemes.len() as u64)
    } else {
        let culprit = schemes
            .iter()
            .position(|c| !c.symmetric || !c.all_shortest || c.restorable.pass)
            .unwrap_or(0);
        let detail = format!("symmetric scheme #{culprit} is restorable");
        PropertyReport::failed(
            NAME,
            schemes.len() as u64,
            Counterexample {
                s: 0,
                t: 2,
                faults: Vec::new(),
                extra: None,
                detail,
            },
        )
    };
    Ok(C4Impossibility { report, schemes })
}

/// Replays the exchange argument behind restorability of the perturbed
/// scheme under one fault `e = (u, v)` on `pi(s, t)`: with `x` the last
/// vertex of `pi(s, t | e)` whose fault-free path from `s` avoids `e` and
/// `y` its successor, it checks `(u, v)` lies on `pi(s, y)`, that
/// `dist*(v, y) + dist*(y, x) < dist*(v, u) + dist*(u, x)`, and that
/// `pi(t, x)` avoids `e` so the two halves concatenate.
pub fn check_exchange_argument(rpts: &Rpts) -> Result<PropertyReport> {
    const NAME: &str = "exchange-argument";
    let g = rpts.graph();
    let n = g.n();
    let empty = FaultSet::empty();
    let dist = |a: usize, b: usize| -> Result<_> {
        Ok(rpts.spt(a, &empty)?.weight(b).expect("reachable"))
    };
    let mut count = 0;
    for s in 0..n {
        let base = rpts.spt(s, &empty)?;
        for t in (0..n).filter(|&t| t != s) {
            let Some(p) = base.path_to(t) else { continue };
            for w in p.windows(2) {
                let (u, v) = (w[0], w[1]);
                let fault = FaultSet::single(Edge::new(u, v));
                let Some(q) = rpts.spt(s, &fault)?.path_to(t) else {
                    continue;
                };
                count += 1;
                let fail = |detail: String| {
                    Ok(PropertyReport::failed(
                        NAME,
                        count,
                        cex(s, t, &fault, None, detail),
                    ))
                };
                let Some(ix) = q
                    .iter()
                    .rposition(|&z| base.path_to(z).is_some_and(|pz| fault.avoided_by(&pz)))
                else {
                    return fail("no prefix vertex of the replacement path survives".into());
                };
                if ix + 1 >= q.len() {
                    return fail("pi(s,t) itself avoids the fault".into());
                }
                let (x, y) = (q[ix], q[ix + 1]);
                let py = base.path_to(y).expect("reachable");
                if !py.windows(2).any(|a| a == [u, v]) {
                    return fail(format!("arc ({u},{v}) not on pi(s,{y})"));
                }
                let lhs = dist(v, y)? + dist(y, x)?;
                let rhs = dist(v, u)? + dist(u, x)?;
                if lhs >= rhs {
                    return fail(format!("inequality fails: {lhs:?} >= {rhs:?}"));
                }
                let pt = rpts.spt(t, &empty)?.path_to(x).expect("reachable");
                if !fault.avoided_by(&pt) {
                    return fail(format!("pi(t,{x}) uses the fault"));
                }
                let restored = base.path_to(x).expect("reachable").len() + pt.len() - 2;
                if restored != q.len() - 1 {
                    return fail(format!(
                        "concatenation has {restored} hops, replacement distance is {}",
                        q.len() - 1
                    ));
                }
            }
        }
    }
    Ok(PropertyReport::passed(NAME, count))
}
