use std::sync::Arc;

use rpts_congest::{run_distributed_1ft_sxs, run_spt, SimConfig, SimError, SxsConfig};
use rpts_core::ftnet::verify_preserver;
use rpts_core::generators;
use rpts_core::tiebreak::dijkstra_sssp;
use rpts_core::verify::CheckMode;
use rpts_core::FaultSet;

#[test]
fn c4_pair_preserver_passes_every_single_fault() {
    let g = Arc::new(generators::cycle(4).unwrap());
    let run = run_distributed_1ft_sxs(Arc::clone(&g), &[0, 2], 1, &SxsConfig::default()).unwrap();
    let report = verify_preserver(&g, &run.preserver, CheckMode::Exhaustive).unwrap();
    assert!(report.pass, "{}", report.to_json());
    assert!(run.preserver.edges().len() <= 2 * 3);
}

#[test]
fn single_source_is_a_tree() {
    let g = Arc::new(generators::gnp(20, 0.3, 2).unwrap());
    let run = run_distributed_1ft_sxs(Arc::clone(&g), &[7], 2, &SxsConfig::default()).unwrap();
    assert!(run.preserver.edges().len() <= 19);
    assert_eq!(run.trees.len(), 1);
    let solo = run_spt(&run.perturbation, 7, 0, SimConfig::default()).unwrap();
    assert_eq!(run.trees[0], solo.parent);
}

#[test]
fn trees_follow_the_sampled_weights() {
    for seed in 0..5 {
        let g = Arc::new(generators::gnp(14, 0.3, seed).unwrap());
        let sources = [0, 3, 6, 9];
        let run = run_distributed_1ft_sxs(Arc::clone(&g), &sources, seed, &SxsConfig::default()).unwrap();
        assert!(run.preserver.edges().len() <= sources.len() * 13);
        for (k, &s) in sources.iter().enumerate() {
            let central = dijkstra_sssp(&run.perturbation, s, &FaultSet::empty()).unwrap();
            assert_eq!(run.trees[k], central.parents());
        }
        let report = verify_preserver(&g, &run.preserver, CheckMode::Exhaustive).unwrap();
        assert!(report.pass, "{}", report.to_json());
        assert_eq!(run.metrics.sampling.rounds, 1);
        assert_eq!(
            run.metrics.rounds,
            run.metrics.sampling.rounds_executed + run.metrics.schedule.base.rounds_executed
        );
    }
}

#[test]
fn metrics_serialize_with_the_documented_keys() {
    let g = Arc::new(generators::cycle(6).unwrap());
    let run = run_distributed_1ft_sxs(g, &[0, 3], 0, &SxsConfig::default()).unwrap();
    let json = serde_json::to_value(&run.metrics).unwrap();
    for key in ["rounds", "max_edge_msgs_per_round", "total_msgs", "D"] {
        assert!(json.get(key).is_some(), "missing {key}");
    }
    assert_eq!(json["D"], 3);
}

#[test]
fn bad_source_sets_are_rejected() {
    let g = Arc::new(generators::cycle(4).unwrap());
    let cfg = SxsConfig::default();
    assert!(matches!(
        run_distributed_1ft_sxs(Arc::clone(&g), &[], 0, &cfg),
        Err(SimError::InvalidInput(_))
    ));
    assert!(matches!(
        run_distributed_1ft_sxs(Arc::clone(&g), &[1, 1], 0, &cfg),
        Err(SimError::InvalidInput(_))
    ));
    assert!(matches!(
        run_distributed_1ft_sxs(g, &[9], 0, &cfg),
        Err(SimError::Core(_))
    ));
}
