use std::sync::Arc;

use proptest::prelude::*;

use rpts_core::ftnet::{build_spanner, build_sxv_preserver, OverlayConfig, SpannerConfig};
use rpts_core::generators::gnp;
use rpts_core::graph::{bfs_distances, fault_sets};
use rpts_core::labels::{build_labels, query};
use rpts_core::lowerbound::build_gstar;
use rpts_core::lowerbound::GStarSize;
use rpts_core::tiebreak::dijkstra_sssp;
use rpts_core::verify::oracle_replacement_distance;
use rpts_core::{load_graph, perturb_tie_free, with_resampling, FaultSet, PerturbConfig, UndirectedGraph};

fn graph() -> impl Strategy<Value = (UndirectedGraph, u64)> {
    (4usize..10, 0.2f64..0.8, any::<u64>()).prop_map(|(n, p, seed)| (gnp(n, p, seed).unwrap(), seed))
}

/// Edges of `g` chosen by index (duplicates collapse).
fn faults_of(g: &UndirectedGraph, picks: &[usize]) -> FaultSet {
    if g.m() == 0 {
        return FaultSet::empty();
    }
    FaultSet::from_edges(picks.iter().map(|&i| g.edges()[i % g.m()]))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn edge_list_round_trips((g, _) in graph()) {
        prop_assert_eq!(load_graph(&g.to_edge_list()).unwrap(), g);
    }

    #[test]
    fn perturbation_keeps_hop_distances((g, seed) in graph(), picks in prop::collection::vec(any::<usize>(), 0..3)) {
        let rpts = perturb_tie_free(Arc::new(g.clone()), PerturbConfig::new(seed)).unwrap();
        let faults = faults_of(&g, &picks);
        for s in 0..g.n() {
            // A tie under F is legal; it only means this draw is not tie-free there.
            let Ok(tree) = dijkstra_sssp(rpts.perturbed(), s, &faults) else { continue };
            let bfs = bfs_distances(&g, s, &faults);
            for v in 0..g.n() {
                prop_assert_eq!(tree.hops(v), bfs[v]);
            }
        }
    }

    #[test]
    fn reversal_negates_the_perturbation((g, seed) in graph()) {
        let rpts = perturb_tie_free(Arc::new(g.clone()), PerturbConfig::new(seed)).unwrap();
        let pd = rpts.perturbed();
        for s in 0..g.n() {
            for t in 0..g.n() {
                let Some(p) = rpts.pi(s, t, &FaultSet::empty()).unwrap() else { continue };
                let mut rev = p.vertices.clone();
                rev.reverse();
                let fwd = pd.path_weight(&p.vertices).unwrap();
                let back = pd.path_weight(&rev).unwrap();
                prop_assert_eq!(fwd.perturbation + back.perturbation, 0);
                prop_assert_eq!(fwd.hops, back.hops);
                // The reverse is a candidate for pi(t, s), so the round trip
                // never costs more than 2 dist, with equality iff it is chosen.
                let ts = rpts.pi(t, s, &FaultSet::empty()).unwrap().unwrap();
                let sum = fwd.perturbation + ts.weight.perturbation;
                prop_assert!(sum <= 0);
                prop_assert_eq!(sum == 0, ts.vertices == rev);
            }
        }
    }

    #[test]
    fn oracle_is_symmetric_and_monotone((g, _) in graph(), a in any::<usize>(), b in any::<usize>()) {
        let f1 = faults_of(&g, &[a]);
        let f2 = faults_of(&g, &[a, b]);
        for s in 0..g.n() {
            for t in 0..g.n() {
                let d1 = oracle_replacement_distance(&g, s, t, &f1).unwrap();
                prop_assert_eq!(d1, oracle_replacement_distance(&g, t, s, &f1).unwrap());
                prop_assert!(oracle_replacement_distance(&g, s, t, &f2).unwrap() >= d1);
                prop_assert!(d1 >= oracle_replacement_distance(&g, s, t, &FaultSet::empty()).unwrap());
            }
        }
    }

    #[test]
    fn two_trees_have_at_most_two_n_minus_two_edges((g, seed) in graph(), a in 0usize..4, b in 4usize..9) {
        let rpts = perturb_tie_free(Arc::new(g.clone()), PerturbConfig::new(seed)).unwrap();
        let b = b % g.n();
        let union = UndirectedGraph::from_edge_set(
            g.n(),
            rpts.spt(a, &FaultSet::empty()).unwrap().edges()
                .chain(rpts.spt(b, &FaultSet::empty()).unwrap().edges()),
        );
        prop_assert!(union.m() <= 2 * (g.n() - 1));
        prop_assert!(union.is_subgraph_of(&g));
    }

    #[test]
    fn overlays_grow_with_the_budget((g, seed) in graph(), s in 0usize..4) {
        let overlay = OverlayConfig::default();
        let run = with_resampling(Arc::new(g.clone()), PerturbConfig::new(seed), |r| {
            let small = build_sxv_preserver(r, &[s], 1, &overlay)?;
            let large = build_sxv_preserver(r, &[s], 2, &overlay)?;
            Ok((small, large))
        }).unwrap();
        let (small, large) = run.value;
        prop_assert!(small.subgraph.is_subgraph_of(&large.subgraph));
        prop_assert!(large.subgraph.is_subgraph_of(&g));
        for faults in fault_sets(g.edges(), 0, 2) {
            let h = bfs_distances(&large.subgraph, s, &faults);
            let truth = bfs_distances(&g, s, &faults);
            for v in 0..g.n() {
                prop_assert!(h[v] >= truth[v]);
            }
        }
    }

    #[test]
    fn label_queries_are_symmetric_and_never_undershoot((g, seed) in graph(), picks in prop::collection::vec(any::<usize>(), 0..3)) {
        let labels = with_resampling(Arc::new(g.clone()), PerturbConfig::new(seed), |r| {
            build_labels(r, 1, &OverlayConfig::default())
        }).unwrap().value;
        let faults = faults_of(&g, &picks);
        for s in 0..g.n() {
            let truth = bfs_distances(&g, s, &faults);
            for t in 0..g.n() {
                let q = query(&labels[s], &labels[t], &faults).unwrap();
                prop_assert_eq!(q, query(&labels[t], &labels[s], &faults).unwrap());
                prop_assert!(q >= truth[t]);
            }
        }
    }

    #[test]
    fn clustered_vertices_survive_the_budget(n in 12usize..30, seed in any::<u64>()) {
        let g = gnp(n, 0.5, seed).unwrap();
        let sp = build_spanner(Arc::new(g), 1, seed, &SpannerConfig::default()).unwrap();
        for (v, kept) in sp.center_edges.iter().enumerate() {
            if sp.clustered[v] {
                prop_assert!(kept.len() > sp.f, "vertex {} keeps {} center edges", v, kept.len());
                for &c in kept {
                    prop_assert!(sp.subgraph.has_edge(v, c));
                }
            }
        }
    }
}

#[test]
fn bipartite_weights_fall_with_the_leaf_index() {
    for (f, d) in [(1, 3), (1, 4), (2, 4)] {
        let lb = build_gstar(f, d, 2, GStarSize::XCount(3)).unwrap();
        for copy in &lb.copies {
            for &x in &lb.x {
                let w: Vec<u128> = copy
                    .leaves
                    .iter()
                    .map(|&z| lb.weight(rpts_core::Edge::new(z, x)).unwrap().0)
                    .collect();
                assert!(w.windows(2).all(|p| p[0] > p[1]), "(f={f}, d={d}) {w:?}");
            }
        }
    }
}
