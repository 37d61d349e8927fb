//! Acceptance suite, run without the libtest harness so every criterion
//! prints its `PASS`/`FAIL` line. Exits nonzero if any criterion fails.
//! Pass criterion numbers as arguments to run a subset.

use std::sync::Arc;

use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use rpts_congest::{run_random_delay, run_spt, spt_inputs, DelayConfig, SimConfig, Spt};
use rpts_core::ftnet::{
    build_spanner, build_sxs_preserver, verify_preserver, verify_spanner, OverlayConfig,
    SpannerConfig,
};
use rpts_core::generators::gnp;
use rpts_core::graph::{bfs_distances, diameter, fault_sets};
use rpts_core::labels::{build_labels, query};
use rpts_core::lowerbound::{
    build_gfd, build_gstar, certify_blowup, check_path_lemma, construction_n, formula_depth,
    formula_n_leaf, n_upper_bound, recurrence_n, GStarSize,
};
use rpts_core::srp::{single_pair_rp, single_pair_rp_naive, srp};
use rpts_core::tiebreak::dijkstra_sssp;
use rpts_core::verify::{
    c4_symmetric_impossibility, check_consistent, check_restorable, check_stable,
    oracle_replacement_distance, CheckMode,
};
use rpts_core::{perturb_tie_free, with_resampling, Edge, FaultSet, PerturbConfig, UndirectedGraph};

fn report(id: u32, name: &str, pass: bool, detail: String) -> bool {
    let verdict = if pass { "PASS" } else { "FAIL" };
    println!("acceptance {id} {verdict}: {name}: {detail}");
    pass
}

fn sources(n: usize, k: usize, seed: u64) -> Vec<usize> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed);
    let mut s = sample(&mut rng, n, k.min(n)).into_vec();
    s.sort_unstable();
    s
}

fn ceil_log2(n: usize) -> u32 {
    n.max(2).next_power_of_two().trailing_zeros()
}

/// Least-squares slope of `ln y` against `ln x`.
fn loglog_slope(points: &[(f64, f64)]) -> f64 {
    let xs: Vec<f64> = points.iter().map(|p| p.0.ln()).collect();
    let ys: Vec<f64> = points.iter().map(|p| p.1.ln()).collect();
    let k = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / k;
    let my = ys.iter().sum::<f64>() / k;
    let cov: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let var: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    cov / var
}

fn acceptance_1_restorable_consistent_stable() -> bool {
    let cases: Vec<(usize, f64, u64)> = (0..210u64)
        .map(|i| (3 + (i as usize % 7), [0.2, 0.4, 0.7][i as usize % 3], i))
        .collect();
    let failures: Vec<String> = cases
        .par_iter()
        .filter_map(|&(n, p, seed)| {
            let g = Arc::new(gnp(n, p, seed).unwrap());
            // Ties under some F are possible; fresh weights are drawn then.
            let reports = with_resampling(g, PerturbConfig::new(seed), |r| {
                Ok([
                    check_restorable(r, 2, None, CheckMode::Exhaustive)?,
                    check_consistent(r, 2, CheckMode::Exhaustive)?,
                    check_stable(r, 2, CheckMode::Exhaustive)?,
                ])
            })
            .unwrap()
            .value;
            reports
                .iter()
                .find(|r| !r.pass)
                .map(|r| format!("n={n} p={p} seed={seed}: {}", r.to_json()))
        })
        .collect();
    report(
        1,
        "restorable, consistent and stable with f_max = 2",
        failures.is_empty(),
        format!(
            "{} graphs (n 3..=9, p 0.2/0.4/0.7), {} failures{}",
            cases.len(),
            failures.len(),
            failures.first().map(|f| format!("; first {f}")).unwrap_or_default()
        ),
    )
}

fn acceptance_2_c4_impossibility() -> bool {
    let c4 = c4_symmetric_impossibility().unwrap();
    let all_fail = c4.schemes.iter().all(|s| s.symmetric && !s.restorable.pass);
    let pass = c4.schemes.len() == 4 && all_fail && c4.report.pass;
    report(
        2,
        "C4 symmetric impossibility",
        pass,
        format!(
            "{} symmetric schemes, {} non-restorable",
            c4.schemes.len(),
            c4.schemes.iter().filter(|s| !s.restorable.pass).count()
        ),
    )
}

fn acceptance_3_srp_oracle() -> bool {
    let cases: Vec<(usize, usize, u64)> = (0..60u64)
        .map(|i| (10 + (i as usize * 7) % 31, 2 + i as usize % 5, 100 + i))
        .collect();
    let results: Vec<(usize, usize, Option<String>)> = cases
        .par_iter()
        .map(|&(n, k, seed)| {
            let g = Arc::new(gnp(n, 4.0 / n as f64, seed).unwrap());
            let s = sources(n, k, seed);
            let out = srp(Arc::clone(&g), &s, seed).unwrap();
            let mut checked = 0;
            for pair in &out.pairs {
                let base = oracle_replacement_distance(&g, pair.s, pair.t, &FaultSet::empty()).unwrap();
                if base != pair.base {
                    return (checked, 0, Some(format!("seed {seed}: base ({}, {})", pair.s, pair.t)));
                }
                for fail in &pair.failures {
                    let faults = FaultSet::single(Edge::new(fail.u, fail.v));
                    checked += 1;
                    if oracle_replacement_distance(&g, pair.s, pair.t, &faults).unwrap() != fail.dist {
                        return (checked, 0, Some(format!("seed {seed}: ({}, {}) minus {}-{}", pair.s, pair.t, fail.u, fail.v)));
                    }
                }
            }
            // Fast against quadratic reference on scheme paths of G itself.
            let rpts = perturb_tie_free(Arc::clone(&g), PerturbConfig::new(seed)).unwrap();
            let mut compared = 0;
            for (i, &a) in s.iter().enumerate() {
                for &b in &s[i + 1..] {
                    if let Some(path) = rpts.pi(a, b, &FaultSet::empty()).unwrap() {
                        let fast = single_pair_rp(&g, a, b, &path.vertices).unwrap();
                        let naive = single_pair_rp_naive(&g, a, b, &path.vertices).unwrap();
                        compared += 1;
                        if fast != naive {
                            return (checked, compared, Some(format!("seed {seed}: fast != naive on ({a}, {b})")));
                        }
                    }
                }
            }
            (checked, compared, None)
        })
        .collect();
    let distances: usize = results.iter().map(|r| r.0).sum();
    let paths: usize = results.iter().map(|r| r.1).sum();
    let bad: Vec<&String> = results.iter().filter_map(|r| r.2.as_ref()).collect();
    report(
        3,
        "SRP matches the BFS oracle",
        bad.is_empty(),
        format!(
            "{} instances (n 10..=40, |S| 2..=6), {distances} replacement distances, {paths} fast/naive path comparisons{}",
            cases.len(),
            bad.first().map(|b| format!("; {b}")).unwrap_or_default()
        ),
    )
}

fn acceptance_4_preservers() -> bool {
    let overlay = OverlayConfig::default();
    let exhaustive: Vec<(usize, usize, usize, u64)> = (0..24u64)
        .map(|i| (8 + i as usize % 7, 1 + i as usize % 2, 2 + i as usize % 3, 200 + i))
        .collect();
    let failures: Vec<String> = exhaustive
        .par_iter()
        .filter_map(|&(n, f, k, seed)| {
            let g = Arc::new(gnp(n, 0.4, seed).unwrap());
            let s = sources(n, k, seed);
            let p = with_resampling(Arc::clone(&g), PerturbConfig::new(seed), |r| {
                build_sxs_preserver(r, &s, f, &overlay)
            })
            .unwrap()
            .value;
            let r = verify_preserver(&g, &p, CheckMode::Exhaustive).unwrap();
            (!r.pass).then(|| format!("n={n} f={f} seed={seed}: {}", r.to_json()))
        })
        .collect();

    let mut sweep = Vec::new();
    for &n in &[20usize, 40, 60, 80] {
        for &k in &[2usize, 4, 6] {
            for seed in 0..2u64 {
                sweep.push((n, k, 300 + seed + n as u64));
            }
        }
    }
    let sizes: Vec<(f64, f64)> = sweep
        .par_iter()
        .map(|&(n, k, seed)| {
            let g = Arc::new(gnp(n, 6.0 / n as f64, seed).unwrap());
            let s = sources(n, k, seed);
            let p = with_resampling(Arc::clone(&g), PerturbConfig::new(seed), |r| {
                build_sxs_preserver(r, &s, 1, &overlay)
            })
            .unwrap()
            .value;
            ((k * n) as f64, p.subgraph.m() as f64)
        })
        .collect();
    // Least squares through the origin for edges = C |S| n.
    let c_fit = sizes.iter().map(|(x, y)| x * y).sum::<f64>() / sizes.iter().map(|(x, _)| x * x).sum::<f64>();
    let c_max = sizes.iter().map(|(x, y)| y / x).fold(0.0, f64::max);
    report(
        4,
        "S x S preservers",
        failures.is_empty() && c_fit <= 2.0,
        format!(
            "{} exhaustive sweeps (n 8..=14, f 1 and 2), {} failures; 1-FT edges = C |S| n over {} G(n, 6/n) graphs: fitted C {c_fit:.3}, max {c_max:.3}{}",
            exhaustive.len(),
            failures.len(),
            sizes.len(),
            failures.first().map(|f| format!("; first {f}")).unwrap_or_default()
        ),
    )
}

fn acceptance_5_spanner() -> bool {
    let cases: Vec<(usize, u64)> = (0..32u64).map(|i| (12 + (i as usize * 5) % 29, 400 + i)).collect();
    let failures: Vec<String> = cases
        .par_iter()
        .filter_map(|&(n, seed)| {
            let g = Arc::new(gnp(n, 0.3, seed).unwrap());
            let sp = build_spanner(Arc::clone(&g), 1, seed, &SpannerConfig::default()).unwrap();
            let r = verify_spanner(&g, &sp, CheckMode::Exhaustive).unwrap();
            (!r.pass).then(|| format!("n={n} seed={seed}: {}", r.to_json()))
        })
        .collect();

    let size_points = |density: &(dyn Fn(usize) -> f64 + Sync)| -> Vec<(f64, f64)> {
        let ns = [50usize, 100, 200, 400];
        ns.par_iter()
            .map(|&n| {
                let mean = (0..3u64)
                    .map(|seed| {
                        let g = Arc::new(gnp(n, density(n), 500 + seed).unwrap());
                        build_spanner(g, 1, seed, &SpannerConfig::default()).unwrap().subgraph.m() as f64
                    })
                    .sum::<f64>()
                    / 3.0;
                (n as f64, mean)
            })
            .collect()
    };
    let sparse = size_points(&|n| 10.0 / n as f64);
    let slope = loglog_slope(&sparse);
    // Not part of the verdict: a family dense enough for the bound to bind.
    let dense = size_points(&|n| (n as f64).powf(-0.25));
    let dense_slope = loglog_slope(&dense);
    report(
        5,
        "+4 spanner stretch and size trend",
        failures.is_empty() && (1.3..=1.7).contains(&slope),
        format!(
            "{} exhaustive stretch checks (n 12..=40), {} failures; edge slope on G(n, 10/n), n 50..400: {slope:.3} (required [1.3, 1.7]); sizes {:?}; informational slope on G(n, n^-1/4): {dense_slope:.3}{}",
            cases.len(),
            failures.len(),
            sparse.iter().map(|p| p.1.round() as u64).collect::<Vec<_>>(),
            failures.first().map(|f| format!("; first {f}")).unwrap_or_default()
        ),
    )
}

fn label_failures(g: Arc<UndirectedGraph>, f: usize, seed: u64) -> (u64, Option<String>) {
    let labels = with_resampling(Arc::clone(&g), PerturbConfig::new(seed), |r| {
        build_labels(r, f, &OverlayConfig::default())
    })
    .unwrap()
    .value;
    let mut checked = 0;
    for faults in fault_sets(g.edges(), 0, f + 1) {
        for s in 0..g.n() {
            let truth = bfs_distances(&g, s, &faults);
            for t in 0..g.n() {
                checked += 1;
                let got = query(&labels[s], &labels[t], &faults).unwrap();
                if got != truth[t] {
                    return (checked, Some(format!("f={f} seed={seed} s={s} t={t} F={faults:?}")));
                }
            }
        }
    }
    (checked, None)
}

fn acceptance_6_labels() -> bool {
    let cases: Vec<(usize, usize, u64)> = (0..24u64)
        .map(|i| (6 + i as usize % 7, i as usize % 2, 600 + i))
        .collect();
    let results: Vec<(u64, Option<String>)> = cases
        .par_iter()
        .map(|&(n, f, seed)| label_failures(Arc::new(gnp(n, 0.45, seed).unwrap()), f, seed))
        .collect();
    let queries: u64 = results.iter().map(|r| r.0).sum();
    let bad: Vec<&String> = results.iter().filter_map(|r| r.1.as_ref()).collect();
    report(
        6,
        "distance labels answer budget + 1 faults exactly",
        bad.is_empty(),
        format!(
            "{} label sets (n 6..=12, f 0 and 1), {queries} queries{}",
            cases.len(),
            bad.first().map(|b| format!("; first mismatch {b}")).unwrap_or_default()
        ),
    )
}

fn acceptance_7_lower_bound_family() -> bool {
    let mut lines = Vec::new();
    let mut pass = true;
    for (f, d) in [(1usize, 3usize), (1, 4), (2, 4)] {
        let tree = build_gfd(f, d).unwrap();
        let n = tree.graph.n();
        let depth = tree.depth();
        let leaves = tree.n_leaf();
        let closed_leaves = (d as f64).powf(2.0 - 1.0 / 2f64.powi(f as i32 - 1)).round() as usize;
        let shape = n == construction_n(f, d).unwrap()
            && n <= recurrence_n(f, d).unwrap()
            && n <= n_upper_bound(f, d)
            && depth == formula_depth(f, d).unwrap()
            && depth <= 2 * d
            && leaves == formula_n_leaf(f, d).unwrap()
            && leaves == closed_leaves;
        let lemma = check_path_lemma(&tree);
        let gstar = build_gstar(f, d, 2, GStarSize::XCount(leaves)).unwrap();
        let blowup = certify_blowup(&gstar).unwrap();
        pass &= shape && lemma.pass && blowup.pass;
        lines.push(format!(
            "(f={f}, d={d}) N={n} (<= {}, 2fd^2 = {}) depth={depth} nLeaf={leaves} shape {} lemma {} blowup {} over {} bipartite edges",
            recurrence_n(f, d).unwrap(),
            n_upper_bound(f, d),
            if shape { "ok" } else { "bad" },
            if lemma.pass { "ok" } else { "bad" },
            if blowup.pass { "ok" } else { "bad" },
            gstar.bipartite.len(),
        ));
    }
    report(7, "lower-bound family", pass, lines.join("; "))
}

fn acceptance_8_congest() -> bool {
    let solo_cases: Vec<(usize, u64)> = (0..60u64).map(|i| (10 + (i as usize * 3) % 50, 800 + i)).collect();
    let solo: Vec<Option<String>> = solo_cases
        .par_iter()
        .map(|&(n, seed)| {
            let g = Arc::new(gnp(n, 5.0 / n as f64, seed).unwrap());
            let rpts = perturb_tie_free(g, PerturbConfig::new(seed)).unwrap();
            let s = seed as usize % n;
            let run = run_spt(rpts.perturbed(), s, seed, SimConfig::default()).unwrap();
            let central = dijkstra_sssp(rpts.perturbed(), s, &FaultSet::empty()).unwrap();
            if run.parent != central.parents() {
                return Some(format!("n={n} seed={seed}: trees differ"));
            }
            let worst = run.edge_msgs.iter().copied().max().unwrap_or(0);
            (worst > 2).then(|| format!("n={n} seed={seed}: {worst} messages on one edge"))
        })
        .collect();
    let solo_bad: Vec<&String> = solo.iter().flatten().collect();

    let delay_cases: Vec<(usize, usize, u64)> = (0..24u64)
        .map(|i| (20 + (i as usize * 7) % 41, 2 + i as usize % 7, 900 + i))
        .collect();
    let composite: Vec<(f64, Option<String>)> = delay_cases
        .par_iter()
        .map(|&(n, k, seed)| {
            let g = Arc::new(gnp(n, 5.0 / n as f64, seed).unwrap());
            let rpts = perturb_tie_free(Arc::clone(&g), PerturbConfig::new(seed)).unwrap();
            let pd = rpts.perturbed();
            let s = sources(n, k, seed);
            let d = u64::from(diameter(&g));
            let inputs: Vec<_> = s.iter().map(|&v| spt_inputs(pd, v)).collect();
            let cfg = DelayConfig::new(2 * k as u64, 2 * (d + 1), seed);
            let run = run_random_delay::<Spt>(Arc::clone(&g), &inputs, &cfg).unwrap();
            for (out, &v) in run.outputs.iter().zip(&s) {
                let solo = run_spt(pd, v, seed, SimConfig::default()).unwrap();
                let parents: Vec<Option<usize>> = out.iter().map(|o| o.parent).collect();
                if parents != solo.parent {
                    return (0.0, Some(format!("n={n} seed={seed}: source {v} differs from its solo run")));
                }
            }
            let budget = k as f64 + d as f64 * f64::from(ceil_log2(n));
            (run.metrics.base.rounds_executed as f64 / budget, None)
        })
        .collect();
    let a = composite.iter().map(|c| c.0).fold(0.0, f64::max);
    let composite_bad: Vec<&String> = composite.iter().filter_map(|c| c.1.as_ref()).collect();
    report(
        8,
        "CONGEST shortest-path trees",
        solo_bad.is_empty() && composite_bad.is_empty() && a <= 4.0,
        format!(
            "{} solo runs equal centralized with <= 2 messages per edge ({} bad); {} random-delay schedules reproduce solo trees ({} bad); rounds <= a (|S| + D log n) with a = {a:.3}{}",
            solo_cases.len(),
            solo_bad.len(),
            delay_cases.len(),
            composite_bad.len(),
            solo_bad.iter().chain(&composite_bad).next().map(|b| format!("; first {b}")).unwrap_or_default()
        ),
    )
}

fn main() {
    let criteria: [(u32, fn() -> bool); 8] = [
        (1, acceptance_1_restorable_consistent_stable),
        (2, acceptance_2_c4_impossibility),
        (3, acceptance_3_srp_oracle),
        (4, acceptance_4_preservers),
        (5, acceptance_5_spanner),
        (6, acceptance_6_labels),
        (7, acceptance_7_lower_bound_family),
        (8, acceptance_8_congest),
    ];
    let only: Vec<u32> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let mut failed = Vec::new();
    for (id, run) in criteria {
        if !only.is_empty() && !only.contains(&id) {
            continue;
        }
        let pass = std::panic::catch_unwind(run).unwrap_or_else(|_| {
            println!("acceptance {id} FAIL: panicked");
            false
        });
        if !pass {
            failed.push(id);
        }
    }
    if failed.is_empty() {
        println!("acceptance: all criteria pass");
    } else {
        println!("acceptance: failing criteria {failed:?}");
        std::process::exit(1);
    }
}
