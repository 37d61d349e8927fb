use std::sync::Arc;

use rpts_congest::{run_random_delay, run_spt, spt_inputs, DelayConfig, SimConfig, SimError, Spt};
use rpts_core::generators;
use rpts_core::tiebreak::{perturb_tie_free, PerturbConfig, PerturbedDigraph};
use rpts_core::UndirectedGraph;

fn tie_free(g: UndirectedGraph, seed: u64) -> PerturbedDigraph {
    perturb_tie_free(Arc::new(g), PerturbConfig::new(seed))
        .unwrap()
        .perturbed()
        .clone()
}

#[test]
fn single_algorithm_is_the_solo_run_shifted() {
    let pd = tie_free(generators::gnp(20, 0.3, 1).unwrap(), 1);
    let solo = run_spt(&pd, 3, 0, SimConfig::default()).unwrap();
    let cfg = DelayConfig::new(6, 20, 77);
    let run = run_random_delay::<Spt>(pd.base_arc(), &[spt_inputs(&pd, 3)], &cfg).unwrap();
    let delay = run.metrics.delays[0];
    let parents: Vec<_> = run.outputs[0].iter().map(|o| o.parent).collect();
    assert_eq!(parents, solo.parent);
    assert_eq!(run.metrics.base.rounds, solo.metrics.rounds + delay);
    assert_eq!(run.metrics.base.rounds_executed, solo.metrics.rounds_executed + delay);
    assert_eq!(run.metrics.base.total_msgs, solo.metrics.total_msgs);
}

#[test]
fn many_trees_reproduce_their_solo_runs() {
    let g = generators::gnp(50, 0.1, 5).unwrap();
    let pd = tie_free(g, 5);
    let sources: Vec<usize> = (0..50).step_by(5).collect();
    let inputs: Vec<_> = sources.iter().map(|&s| spt_inputs(&pd, s)).collect();
    let sigma = sources.len() as u64;
    for seed in 0..10 {
        let cfg = DelayConfig::new(2 * sigma, 40, seed);
        let run = run_random_delay::<Spt>(pd.base_arc(), &inputs, &cfg).unwrap();
        for (k, &s) in sources.iter().enumerate() {
            let solo = run_spt(&pd, s, 0, SimConfig::default()).unwrap();
            let parents: Vec<_> = run.outputs[k].iter().map(|o| o.parent).collect();
            assert_eq!(parents, solo.parent, "source {s}, seed {seed}");
        }
        assert!(run.metrics.max_queue <= 2 * sigma as usize);
        assert!(run.metrics.base.max_edge_msgs <= 2 * sigma);
        assert!(run.metrics.base.max_edge_msgs_per_round <= 2);
    }
}

#[test]
fn undeclared_congestion_trips_the_queue_bound() {
    let pd = tie_free(generators::complete(8).unwrap(), 2);
    let inputs: Vec<_> = (0..8).map(|s| spt_inputs(&pd, s)).collect();
    let cfg = DelayConfig {
        queue_bound: Some(1),
        ..DelayConfig::new(0, 10, 0)
    };
    assert!(matches!(
        run_random_delay::<Spt>(pd.base_arc(), &inputs, &cfg),
        Err(SimError::CapExceeded { bound: 1, .. })
    ));
}

#[test]
fn schedules_are_deterministic() {
    let pd = tie_free(generators::gnp(25, 0.2, 8).unwrap(), 8);
    let inputs: Vec<_> = [0, 4, 9].iter().map(|&s| spt_inputs(&pd, s)).collect();
    let mut cfg = DelayConfig::new(6, 20, 3);
    cfg.sim.transcript = true;
    let a = run_random_delay::<Spt>(pd.base_arc(), &inputs, &cfg).unwrap();
    let b = run_random_delay::<Spt>(pd.base_arc(), &inputs, &cfg).unwrap();
    assert_eq!(a.transcript, b.transcript);
    assert_eq!(a.metrics, b.metrics);
    assert!(a.transcript.iter().all(|d| d.alg < 3));
}

#[test]
fn precompute_cost_is_reported_separately() {
    let pd = tie_free(generators::cycle(16).unwrap(), 0);
    let cfg = DelayConfig::new(2, 18, 0);
    let run = run_random_delay::<Spt>(pd.base_arc(), &[spt_inputs(&pd, 0)], &cfg).unwrap();
    assert_eq!(run.metrics.precompute_rounds, 18 * 4 * 4);
    let solo = run_spt(&pd, 0, 0, SimConfig::default()).unwrap();
    assert!(run.metrics.base.rounds_executed <= solo.metrics.rounds_executed + 2);
}

#[test]
fn empty_schedule_is_rejected() {
    let g = Arc::new(generators::cycle(4).unwrap());
    assert!(matches!(
        run_random_delay::<Spt>(g, &[], &DelayConfig::new(1, 1, 0)),
        Err(SimError::InvalidInput(_))
    ));
}
