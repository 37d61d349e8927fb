use std::sync::Arc;

use proptest::prelude::*;
use rpts_congest::{run_spt, SimConfig, SimError};
use rpts_core::generators;
use rpts_core::graph::diameter;
use rpts_core::tiebreak::{dijkstra_sssp, perturb_tie_free, PerturbConfig, PerturbedDigraph};
use rpts_core::{FaultSet, UndirectedGraph};

fn tie_free(g: UndirectedGraph, seed: u64) -> PerturbedDigraph {
    perturb_tie_free(Arc::new(g), PerturbConfig::new(seed))
        .unwrap()
        .perturbed()
        .clone()
}

fn centralized_parents(pd: &PerturbedDigraph, s: usize) -> Vec<Option<usize>> {
    dijkstra_sssp(pd, s, &FaultSet::empty()).unwrap().parents().to_vec()
}

#[test]
fn c4_matches_centralized() {
    let pd = tie_free(generators::cycle(4).unwrap(), 3);
    let run = run_spt(&pd, 0, 0, SimConfig::default()).unwrap();
    assert_eq!(run.parent, centralized_parents(&pd, 0));
    assert!(run.metrics.rounds <= 2 * 2);
    assert!(run.metrics.max_edge_msgs <= 2);
    assert!(run.metrics.max_edge_msgs_per_round <= 2);
    assert_eq!(run.metrics.diameter, 2);
}

#[test]
fn star_takes_one_phase() {
    let pd = tie_free(generators::star(9).unwrap(), 1);
    let run = run_spt(&pd, 0, 0, SimConfig::default()).unwrap();
    assert!((1..9).all(|v| run.parent[v] == Some(0)));
    assert_eq!(run.metrics.rounds, 1);
    assert_eq!(run.metrics.total_msgs, 8 + 8);
}

#[test]
fn path_rounds_are_linear_in_depth() {
    let pd = tie_free(generators::path(10).unwrap(), 1);
    let run = run_spt(&pd, 0, 0, SimConfig::default()).unwrap();
    // Adoption of layer i happens in round 2i - 1.
    assert_eq!(run.metrics.rounds, 2 * 9 - 1);
    // Plus the last layer's announcement and one silent round.
    assert_eq!(run.metrics.rounds_executed, 2 * 9 + 2);
    assert!((1..10).all(|v| run.parent[v] == Some(v - 1)));
}

#[test]
fn zero_weights_report_nondeterminism() {
    let g = Arc::new(generators::cycle(4).unwrap());
    let pd = PerturbedDigraph::from_arc_values(g, 1, 0, |_| 0).unwrap();
    assert_eq!(
        run_spt(&pd, 0, 0, SimConfig::default()).unwrap_err(),
        SimError::Nondeterminism { vertex: 2, round: 3 }
    );
}

#[test]
fn oversized_messages_are_rejected() {
    let pd = tie_free(generators::cycle(8).unwrap(), 2);
    let cfg = SimConfig {
        cap_factor: 1,
        ..SimConfig::default()
    };
    assert!(matches!(
        run_spt(&pd, 0, 0, cfg),
        Err(SimError::MessageTooLarge { .. })
    ));
}

#[test]
fn transcripts_are_deterministic() {
    let pd = tie_free(generators::gnp(30, 0.15, 4).unwrap(), 4);
    let cfg = SimConfig {
        transcript: true,
        ..SimConfig::default()
    };
    let a = run_spt(&pd, 5, 9, cfg).unwrap();
    let b = run_spt(&pd, 5, 9, cfg).unwrap();
    assert!(!a.transcript.is_empty());
    assert_eq!(a.transcript, b.transcript);
    assert_eq!(a.transcript.len() as u64, a.metrics.total_msgs);
}

#[test]
fn disconnected_vertices_stay_unparented() {
    let g = UndirectedGraph::from_edges(5, [(0, 1), (1, 2), (3, 4)]).unwrap();
    let pd = tie_free(g, 0);
    let run = run_spt(&pd, 0, 0, SimConfig::default()).unwrap();
    assert_eq!(run.parent, vec![None, Some(0), Some(1), None, None]);
    assert_eq!(run.dist[3], None);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(60))]

    #[test]
    fn distributed_tree_equals_centralized(n in 2usize..40, p in 0.05f64..0.6, seed in any::<u64>()) {
        let g = generators::gnp(n, p, seed).unwrap();
        let pd = tie_free(g, seed);
        let s = (seed % n as u64) as usize;
        let run = run_spt(&pd, s, seed, SimConfig::default()).unwrap();
        prop_assert_eq!(&run.parent, &centralized_parents(&pd, s));
        prop_assert!(run.metrics.max_edge_msgs <= 2);
        let d = u64::from(diameter(pd.base()));
        prop_assert!(run.metrics.rounds <= 2 * d.max(1));
    }
}
