//! The pipelines behind the subcommands, shared with the experiment runner.
//! Each returns its artifact plus an [`Outcome`]: a JSON summary, the
//! verification verdict when requested, and a flat row for sweep tables.

use std::sync::Arc;

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use rpts_congest::{
    run_distributed_1ft_sxs, run_random_delay, run_spt, spt_inputs, DelayConfig, SimConfig, Spt,
    SxsConfig,
};
use rpts_core::ftnet::{
    build_spanner, build_sxs_preserver, build_sxv_preserver, size_bound, verify_preserver,
    verify_spanner, OverlayConfig, Preserver, PreserverKind, Spanner, SpannerConfig,
};
use rpts_core::graph::{bfs_distances, count_fault_sets, diameter, fault_sets};
use rpts_core::labels::{build_labels, query, DistanceLabel};
use rpts_core::lowerbound::{
    build_gfd, build_gstar, certify_blowup, check_path_lemma, construction_n, formula_depth,
    formula_n_leaf, n_upper_bound, recurrence_n, GStarSize, LbGraph,
};
use rpts_core::srp::{srp, SrpOutput};
use rpts_core::tiebreak::dijkstra_sssp;
use rpts_core::verify::{
    c4_symmetric_impossibility, check_consistent, check_exchange_argument, check_restorable,
    check_stable, oracle_replacement_distance, CheckMode, Counterexample, PropertyReport,
};
use rpts_core::{perturb_tie_free, with_resampling, Edge, FaultSet, PerturbConfig, UndirectedGraph};

use crate::error::{CliError, CliResult};
use crate::io::check_sources;

#[derive(Clone, Debug, PartialEq)]
pub struct Outcome {
    pub report: Value,
    /// `None` when verification was not requested.
    pub verified: Option<bool>,
    pub row: Vec<(&'static str, String)>,
}

fn graph_row(g: &UndirectedGraph, seed: u64) -> Vec<(&'static str, String)> {
    vec![
        ("n", g.n().to_string()),
        ("m", g.m().to_string()),
        ("seed", seed.to_string()),
    ]
}

fn verdict(v: Option<bool>) -> String {
    match v {
        Some(true) => "pass".into(),
        Some(false) => "fail".into(),
        None => "-".into(),
    }
}

pub fn srp_pipeline(
    g: Arc<UndirectedGraph>,
    sources: &[usize],
    seed: u64,
    verify: bool,
) -> CliResult<(SrpOutput, Outcome)> {
    check_sources(&g, sources)?;
    let out = srp(Arc::clone(&g), sources, seed)?;
    let verified = if verify { Some(srp_matches_oracle(&g, &out)?) } else { None };
    let failures: usize = out.pairs.iter().map(|p| p.failures.len()).sum();
    let mut row = graph_row(&g, seed);
    row.extend([
        ("sources", sources.len().to_string()),
        ("pairs", out.pairs.len().to_string()),
        ("failures", failures.to_string()),
        ("verified", verdict(verified)),
    ]);
    let report = json!({
        "command": "srp",
        "sources": sources,
        "output": out,
        "verified": verified,
    });
    Ok((
        out,
        Outcome {
            report,
            verified,
            row,
        },
    ))
}

/// Every reported distance, the fault-free base included, against BFS.
pub fn srp_matches_oracle(g: &UndirectedGraph, out: &SrpOutput) -> CliResult<bool> {
    for pair in &out.pairs {
        if oracle_replacement_distance(g, pair.s, pair.t, &FaultSet::empty())? != pair.base {
            return Ok(false);
        }
        for fail in &pair.failures {
            let faults = FaultSet::single(Edge::new(fail.u, fail.v));
            if oracle_replacement_distance(g, pair.s, pair.t, &faults)? != fail.dist {
                return Ok(false);
            }
        }
    }
    Ok(true)
}

pub fn preserver_pipeline(
    g: Arc<UndirectedGraph>,
    kind: PreserverKind,
    f: usize,
    sources: &[usize],
    seed: u64,
    verify: bool,
) -> CliResult<(Preserver, Outcome)> {
    check_sources(&g, sources)?;
    let overlay = OverlayConfig::default();
    let run = with_resampling(Arc::clone(&g), PerturbConfig::new(seed), |rpts| match kind {
        PreserverKind::Sxv => build_sxv_preserver(rpts, sources, f, &overlay),
        PreserverKind::Sxs => build_sxs_preserver(rpts, sources, f, &overlay),
    })?;
    let p = run.value;
    let check = if verify {
        Some(verify_preserver(&g, &p, CheckMode::Auto)?)
    } else {
        None
    };
    let verified = check.as_ref().map(|r| r.pass);
    let mut row = graph_row(&g, seed);
    row.extend([
        ("kind", format!("{kind:?}").to_lowercase()),
        ("f", f.to_string()),
        ("sources", sources.len().to_string()),
        ("edges", p.stats.edges.to_string()),
        ("bound_value", format!("{:.3}", p.stats.bound_value)),
        ("verified", verdict(verified)),
    ]);
    let report = json!({
        "command": "preserver",
        "kind": kind,
        "f": f,
        "sources": sources,
        "stats": p.stats,
        "perturbation_attempts": run.attempts,
        "verification": check,
    });
    Ok((
        p,
        Outcome {
            report,
            verified,
            row,
        },
    ))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpannerStats {
    pub edges: usize,
    /// `n^(1 + 2^(f-1) / (2^(f-1) + 1))`.
    pub bound_value: f64,
    pub sigma: usize,
    pub repetitions: usize,
    pub clustered: usize,
    pub additive_error: u32,
}

pub fn spanner_bound(n: usize, f: usize) -> f64 {
    let k = 2f64.powi(f.saturating_sub(1) as i32);
    (n as f64).powf(1.0 + k / (k + 1.0))
}

pub fn spanner_stats(sp: &Spanner) -> SpannerStats {
    SpannerStats {
        edges: sp.subgraph.m(),
        bound_value: spanner_bound(sp.subgraph.n(), sp.f),
        sigma: sp.sigma,
        repetitions: sp.repetitions,
        clustered: sp.clustered.iter().filter(|&&c| c).count(),
        additive_error: sp.additive_error,
    }
}

pub fn spanner_pipeline(
    g: Arc<UndirectedGraph>,
    f: usize,
    sigma: Option<usize>,
    seed: u64,
    verify: bool,
) -> CliResult<(Spanner, Outcome)> {
    let cfg = SpannerConfig {
        sigma,
        ..SpannerConfig::default()
    };
    let sp = build_spanner(Arc::clone(&g), f, seed, &cfg)?;
    let check = if verify {
        Some(verify_spanner(&g, &sp, CheckMode::Auto)?)
    } else {
        None
    };
    let verified = check.as_ref().map(|r| r.pass);
    let stats = spanner_stats(&sp);
    let mut row = graph_row(&g, seed);
    row.extend([
        ("f", f.to_string()),
        ("sigma", stats.sigma.to_string()),
        ("edges", stats.edges.to_string()),
        ("bound_value", format!("{:.3}", stats.bound_value)),
        ("verified", verdict(verified)),
    ]);
    let report = json!({
        "command": "spanner",
        "f": f,
        "stats": stats,
        "verification": check,
    });
    Ok((
        sp,
        Outcome {
            report,
            verified,
            row,
        },
    ))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LabelStats {
    pub labels: usize,
    pub max_bits: u64,
    pub mean_bits: f64,
    pub max_nominal_bits: u64,
    /// Edge bound of one single-source overlay times `2 ceil(log2 n)`.
    pub bound_bits: f64,
}

pub fn label_stats(labels: &[DistanceLabel]) -> LabelStats {
    let n = labels.first().map_or(0, |l| l.n);
    let f = labels.first().map_or(0, |l| l.f);
    let bits: Vec<u64> = labels.iter().map(DistanceLabel::size_bits).collect();
    let logn = (n.max(2) as f64).log2().ceil();
    LabelStats {
        labels: labels.len(),
        max_bits: bits.iter().copied().max().unwrap_or(0),
        mean_bits: bits.iter().sum::<u64>() as f64 / bits.len().max(1) as f64,
        max_nominal_bits: labels.iter().map(DistanceLabel::nominal_bits).max().unwrap_or(0),
        bound_bits: size_bound(n, 1, f) * 2.0 * logn,
    }
}

pub fn labels_pipeline(
    g: Arc<UndirectedGraph>,
    f: usize,
    seed: u64,
    verify: bool,
) -> CliResult<(Vec<DistanceLabel>, Outcome)> {
    let overlay = OverlayConfig::default();
    let run = with_resampling(Arc::clone(&g), PerturbConfig::new(seed), |rpts| {
        build_labels(rpts, f, &overlay)
    })?;
    let labels = run.value;
    let check = if verify {
        Some(verify_labels(&g, &labels, f + 1, seed)?)
    } else {
        None
    };
    let verified = check.as_ref().map(|r| r.pass);
    let stats = label_stats(&labels);
    let mut row = graph_row(&g, seed);
    row.extend([
        ("f", f.to_string()),
        ("max_bits", stats.max_bits.to_string()),
        ("mean_bits", format!("{:.1}", stats.mean_bits)),
        ("bound_bits", format!("{:.1}", stats.bound_bits)),
        ("verified", verdict(verified)),
    ]);
    let report = json!({
        "command": "labels",
        "f": f,
        "stats": stats,
        "verification": check,
    });
    Ok((
        labels,
        Outcome {
            report,
            verified,
            row,
        },
    ))
}

/// Fault sets at which label queries are checked: all of them up to
/// `budget` when there are at most this many, otherwise a sample.
pub const LABEL_EXHAUSTIVE_LIMIT: u128 = 20_000;
pub const LABEL_SAMPLES: usize = 2_000;

/// Compares `query` with BFS for all pairs over the fault sets above.
pub fn verify_labels(
    g: &UndirectedGraph,
    labels: &[DistanceLabel],
    budget: usize,
    seed: u64,
) -> CliResult<PropertyReport> {
    const NAME: &str = "labels";
    let sets = if count_fault_sets(g.m(), 0, budget) <= LABEL_EXHAUSTIVE_LIMIT {
        fault_sets(g.edges(), 0, budget)
    } else {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..LABEL_SAMPLES)
            .map(|_| {
                let k = rng.gen_range(0..=budget.min(g.m()));
                FaultSet::from_edges(
                    sample(&mut rng, g.m(), k)
                        .into_iter()
                        .map(|i| g.edges()[i]),
                )
            })
            .collect()
    };
    let outcomes: Vec<CliResult<(u64, Option<Counterexample>)>> = sets
        .par_iter()
        .map(|faults| {
            let mut count = 0;
            for s in 0..g.n() {
                let truth = bfs_distances(g, s, faults);
                for t in 0..g.n() {
                    count += 1;
                    let got = query(&labels[s], &labels[t], faults)?;
                    if got != truth[t] {
                        return Ok((
                            count,
                            Some(Counterexample {
                                s,
                                t,
                                faults: faults.edges().to_vec(),
                                extra: None,
                                detail: format!("label query {got}, oracle {}", truth[t]),
                            }),
                        ));
                    }
                }
            }
            Ok((count, None))
        })
        .collect();
    let mut total = 0;
    for r in outcomes {
        let (count, cex) = r?;
        total += count;
        if let Some(cex) = cex {
            return Ok(PropertyReport::failed(NAME, total, cex));
        }
    }
    Ok(PropertyReport::passed(NAME, total))
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct LbParams {
    pub f: usize,
    pub d: usize,
    /// Copies in `G*`; `None` builds the plain tree `G_f(d)`.
    pub sigma: Option<usize>,
    pub x_count: Option<usize>,
    pub target_n: Option<usize>,
}

pub fn lb_pipeline(p: &LbParams, verify: bool) -> CliResult<(LbGraph, Outcome)> {
    let tree = build_gfd(p.f, p.d)?;
    let lb = match p.sigma {
        None => tree.clone(),
        Some(sigma) => {
            let size = match (p.x_count, p.target_n) {
                (Some(_), Some(_)) => {
                    return Err(CliError::Usage("give at most one of x-count and n".into()))
                }
                (_, Some(n)) => GStarSize::TargetN(n),
                (Some(x), None) => GStarSize::XCount(x),
                (None, None) => GStarSize::XCount(tree.n_leaf()),
            };
            build_gstar(p.f, p.d, sigma, size)?
        }
    };
    let mut checks = Vec::new();
    if verify {
        checks.push(check_path_lemma(&tree));
        if lb.weights.is_some() {
            checks.push(certify_blowup(&lb)?);
        }
    }
    let verified = verify.then(|| checks.iter().all(|r| r.pass));
    let row = vec![
        ("f", p.f.to_string()),
        ("d", p.d.to_string()),
        ("sigma", p.sigma.unwrap_or(0).to_string()),
        ("n", lb.graph.n().to_string()),
        ("m", lb.graph.m().to_string()),
        ("copy_n", tree.graph.n().to_string()),
        ("depth", tree.depth().to_string()),
        ("n_leaf", tree.n_leaf().to_string()),
        ("verified", verdict(verified)),
    ];
    let report = json!({
        "command": "lb",
        "f": p.f,
        "d": p.d,
        "sigma": p.sigma,
        "n": lb.graph.n(),
        "m": lb.graph.m(),
        "x": lb.x.len(),
        "bipartite_edges": lb.bipartite.len(),
        "copy": {
            "n": tree.graph.n(),
            "construction_n": construction_n(p.f, p.d)?,
            "recurrence_n": recurrence_n(p.f, p.d)?,
            "n_upper_bound": n_upper_bound(p.f, p.d),
            "depth": tree.depth(),
            "formula_depth": formula_depth(p.f, p.d)?,
            "n_leaf": tree.n_leaf(),
            "formula_n_leaf": formula_n_leaf(p.f, p.d)?,
        },
        "verification": checks,
    });
    Ok((
        lb,
        Outcome {
            report,
            verified,
            row,
        },
    ))
}

/// Distributed SPTs from `sources`: a solo run for one source, otherwise a
/// random-delay schedule of all of them.
pub fn congest_spt_pipeline(
    g: Arc<UndirectedGraph>,
    sources: &[usize],
    seed: u64,
    verify: bool,
) -> CliResult<(Value, Outcome)> {
    check_sources(&g, sources)?;
    let rpts = perturb_tie_free(Arc::clone(&g), PerturbConfig::new(seed))?;
    let pd = rpts.perturbed();
    let sigma = sources.len() as u64;
    let (metrics, trees, rounds, rounds_executed, max_edge) = if let [s] = sources {
        let run = run_spt(pd, *s, seed, SimConfig::default())?;
        let m = run.metrics.clone();
        (
            serde_json::to_value(&run.metrics).expect("metrics serialize"),
            vec![run.parent],
            m.rounds,
            m.rounds_executed,
            m.max_edge_msgs,
        )
    } else {
        let d = u64::from(diameter(&g));
        let cfg = DelayConfig::new(2 * sigma, 2 * (d + 1), seed);
        let inputs: Vec<_> = sources.iter().map(|&s| spt_inputs(pd, s)).collect();
        let run = run_random_delay::<Spt>(Arc::clone(&g), &inputs, &cfg)?;
        let trees = run
            .outputs
            .iter()
            .map(|o| o.iter().map(|v| v.parent).collect())
            .collect();
        let b = &run.metrics.base;
        (
            serde_json::to_value(&run.metrics).expect("metrics serialize"),
            trees,
            b.rounds,
            b.rounds_executed,
            b.max_edge_msgs,
        )
    };
    let verified = if verify {
        let mut ok = max_edge <= 2 * sigma;
        for (tree, &s) in trees.iter().zip(sources) {
            ok &= dijkstra_sssp(pd, s, &FaultSet::empty())?.parents() == tree.as_slice();
        }
        Some(ok)
    } else {
        None
    };
    let mut row = graph_row(&g, seed);
    row.extend([
        ("sources", sources.len().to_string()),
        ("D", diameter(&g).to_string()),
        ("rounds", rounds.to_string()),
        ("rounds_executed", rounds_executed.to_string()),
        ("max_edge_msgs", max_edge.to_string()),
        ("verified", verdict(verified)),
    ]);
    let report = json!({
        "command": "congest-spt",
        "sources": sources,
        "metrics": metrics,
        "parents": trees,
        "verified": verified,
    });
    Ok((
        metrics,
        Outcome {
            report,
            verified,
            row,
        },
    ))
}

pub fn congest_sxs_pipeline(
    g: Arc<UndirectedGraph>,
    sources: &[usize],
    seed: u64,
    verify: bool,
) -> CliResult<(Preserver, Value, Outcome)> {
    check_sources(&g, sources)?;
    let run = run_distributed_1ft_sxs(Arc::clone(&g), sources, seed, &SxsConfig::default())?;
    let check = if verify {
        Some(verify_preserver(&g, &run.preserver, CheckMode::Auto)?)
    } else {
        None
    };
    let verified = check.as_ref().map(|r| r.pass);
    let metrics = serde_json::to_value(&run.metrics).expect("metrics serialize");
    let mut row = graph_row(&g, seed);
    row.extend([
        ("sources", sources.len().to_string()),
        ("D", run.metrics.diameter.to_string()),
        ("rounds", run.metrics.rounds.to_string()),
        ("total_msgs", run.metrics.total_msgs.to_string()),
        ("edges", run.preserver.stats.edges.to_string()),
        ("verified", verdict(verified)),
    ]);
    let report = json!({
        "command": "congest-sxs",
        "sources": sources,
        "metrics": metrics,
        "stats": run.preserver.stats,
        "verification": check,
    });
    Ok((
        run.preserver,
        metrics,
        Outcome {
            report,
            verified,
            row,
        },
    ))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Property {
    Restorable,
    Consistent,
    Stable,
    Exchange,
    C4,
    All,
}

impl Property {
    /// `All` stands for the four graph properties; `C4` must be named.
    pub fn expand(props: &[Property]) -> Vec<Property> {
        let mut out = Vec::new();
        for &p in props {
            if p == Property::All {
                out.extend([
                    Property::Restorable,
                    Property::Consistent,
                    Property::Stable,
                    Property::Exchange,
                ]);
            } else {
                out.push(p);
            }
        }
        out.sort();
        out.dedup();
        out
    }
}

/// The property checkers on the perturbed scheme of `g`. `C4` needs no
/// graph.
pub fn verify_pipeline(
    g: Option<Arc<UndirectedGraph>>,
    props: &[Property],
    f_max: usize,
    mode: CheckMode,
    seed: u64,
) -> CliResult<(Vec<PropertyReport>, Outcome)> {
    let props = Property::expand(props);
    if props.is_empty() {
        return Err(CliError::Usage("no properties selected".into()));
    }
    let needs_graph = props.iter().any(|p| *p != Property::C4);
    let mut reports = Vec::new();
    if props.contains(&Property::C4) {
        reports.push(c4_symmetric_impossibility()?.report);
    }
    if needs_graph {
        let g = g
            .clone()
            .ok_or_else(|| CliError::Usage("this property needs --graph".into()))?;
        // A tie under some fault set discards the weights and starts over.
        let run = with_resampling(g, PerturbConfig::new(seed), |r| {
            props
                .iter()
                .filter(|p| **p != Property::C4)
                .map(|p| match p {
                    Property::Restorable => check_restorable(r, f_max, None, mode),
                    Property::Consistent => check_consistent(r, f_max, mode),
                    Property::Stable => check_stable(r, f_max, mode),
                    _ => check_exchange_argument(r),
                })
                .collect::<rpts_core::Result<Vec<_>>>()
        })?;
        reports.extend(run.value);
    }
    let verified = Some(reports.iter().all(|r| r.pass));
    let mut row = match &g {
        Some(g) => graph_row(g, seed),
        None => vec![("seed", seed.to_string())],
    };
    row.extend([
        ("f_max", f_max.to_string()),
        (
            "instances",
            reports.iter().map(|r| r.instances_checked).sum::<u64>().to_string(),
        ),
        ("verified", verdict(verified)),
    ]);
    let report = json!({
        "command": "verify",
        "f_max": f_max,
        "reports": reports,
    });
    Ok((
        reports,
        Outcome {
            report,
            verified,
            row,
        },
    ))
}
