//! Distributed 1-FT `S x S` preserver: one round in which the lower
//! endpoint of every edge samples its perturbation and sends it across,
//! then one tiebreaking SPT per source under random delay. The preserver
//! is the union of the trees.

use std::sync::Arc;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use rpts_core::ftnet::{Preserver, PreserverKind, PreserverStats};
use rpts_core::graph::diameter;
use rpts_core::tiebreak::{default_bound, PerturbedDigraph};
use rpts_core::{Edge, UndirectedGraph};

use crate::delay::{run_random_delay, DelayConfig, DelayMetrics};
use crate::engine::{bits_for, mix, LocalView, Metrics, Outbox, Payload, Protocol, SimConfig, Simulation};
use crate::error::{SimError, SimResult};
use crate::spt::{spt_inputs, Spt};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SampleState {
    bound: i64,
    width: u32,
    /// `r(v, w)` per neighbor slot once known.
    pub r: Vec<Option<i64>>,
    sent: bool,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SampleMsg {
    pub r: i64,
    width: u32,
}

impl Payload for SampleMsg {
    fn bits(&self) -> u32 {
        self.width
    }
}

/// Every vertex samples `r(v, w)` uniformly in `[-bound, bound]` for its
/// higher-id neighbors and tells them; they store `-r`.
pub struct Sampling;

impl Protocol for Sampling {
    type Input = i64;
    type State = SampleState;
    type Msg = SampleMsg;
    type Output = Vec<Option<i64>>;

    fn init(view: &LocalView<'_>, bound: &i64) -> SampleState {
        SampleState {
            bound: *bound,
            width: 1 + bits_for(bound.unsigned_abs()),
            r: vec![None; view.neighbors.len()],
            sent: false,
        }
    }

    fn step(
        _round: u64,
        view: &LocalView<'_>,
        state: &mut SampleState,
        inbox: &[(usize, SampleMsg)],
        rng: &mut ChaCha8Rng,
    ) -> SimResult<Outbox<SampleMsg>> {
        for (w, msg) in inbox {
            let slot = view.slot(*w).expect("engine delivers from neighbors only");
            state.r[slot] = Some(-msg.r);
        }
        if state.sent {
            return Ok(Vec::new());
        }
        state.sent = true;
        let mut out = Vec::new();
        for (slot, &w) in view.neighbors.iter().enumerate() {
            if view.id < w {
                let r = rng.gen_range(-state.bound..=state.bound);
                state.r[slot] = Some(r);
                out.push((
                    w,
                    SampleMsg {
                        r,
                        width: state.width,
                    },
                ));
            }
        }
        Ok(out)
    }

    fn idle(state: &SampleState) -> bool {
        state.sent
    }

    fn output(state: &SampleState) -> Vec<Option<i64>> {
        state.r.clone()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SxsConfig {
    /// Per-arc perturbation bound; defaults to `n^3`.
    pub bound: Option<i64>,
    /// Fresh samplings tried when the weights leave a tie.
    pub max_attempts: u32,
    pub queue_bound: Option<usize>,
    pub precompute_rounds: Option<u64>,
    pub sim: SimConfig,
}

impl Default for SxsConfig {
    fn default() -> Self {
        SxsConfig {
            bound: None,
            max_attempts: 16,
            queue_bound: None,
            precompute_rounds: None,
            sim: SimConfig::default(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SxsMetrics {
    /// Sampling plus scheduled rounds.
    pub rounds: u64,
    pub max_edge_msgs_per_round: u64,
    pub total_msgs: u64,
    #[serde(rename = "D")]
    pub diameter: u32,
    pub rounds_executed: u64,
    pub sampling: Metrics,
    pub schedule: DelayMetrics,
    pub attempts: u32,
}

pub struct SxsRun {
    pub preserver: Preserver,
    /// The weights the vertices sampled.
    pub perturbation: PerturbedDigraph,
    /// Parent vectors, one per source.
    pub trees: Vec<Vec<Option<usize>>>,
    pub metrics: SxsMetrics,
}

/// Samples the perturbation in the network and returns it with the metrics
/// of the sampling round.
pub fn distributed_perturbation(
    graph: Arc<UndirectedGraph>,
    bound: i64,
    seed: u64,
    cfg: SimConfig,
) -> SimResult<(PerturbedDigraph, Metrics)> {
    let inputs = vec![bound; graph.n()];
    let run = Simulation::<Sampling>::new(Arc::clone(&graph), &inputs, seed, cfg)?.run()?;
    let outputs = run.outputs;
    let g = Arc::clone(&graph);
    let pd = PerturbedDigraph::from_arc_values(graph, bound, seed, |e: Edge| {
        let slot = g.neighbors(e.u).binary_search(&e.v).expect("edge");
        outputs[e.u][slot].expect("sampled in round 0")
    })?;
    Ok((pd, run.metrics))
}

pub fn run_distributed_1ft_sxs(
    graph: Arc<UndirectedGraph>,
    sources: &[usize],
    seed: u64,
    cfg: &SxsConfig,
) -> SimResult<SxsRun> {
    if sources.is_empty() {
        return Err(SimError::InvalidInput("source set is empty".into()));
    }
    let mut sorted = sources.to_vec();
    sorted.sort_unstable();
    sorted.dedup();
    if sorted.len() != sources.len() {
        return Err(SimError::InvalidInput("duplicate source".into()));
    }
    for &s in sources {
        graph.check_vertex(s)?;
    }
    let n = graph.n();
    let bound = cfg.bound.unwrap_or_else(|| default_bound(n));
    let d = diameter(&graph);
    let sigma = sources.len() as u64;
    let mut attempt = 0;
    loop {
        attempt += 1;
        let attempt_seed = mix(seed, u64::from(attempt));
        let (pd, sampling) = distributed_perturbation(Arc::clone(&graph), bound, attempt_seed, cfg.sim)?;
        let inputs: Vec<_> = sources.iter().map(|&s| spt_inputs(&pd, s)).collect();
        // Each tree sends at most one message per arc.
        let delay = DelayConfig {
            congestion: 2 * sigma,
            dilation: 2 * (u64::from(d) + 1),
            seed: attempt_seed,
            queue_bound: cfg.queue_bound,
            precompute_rounds: cfg.precompute_rounds,
            sim: cfg.sim,
        };
        let run = match run_random_delay::<Spt>(Arc::clone(&graph), &inputs, &delay) {
            Ok(run) => run,
            Err(SimError::Nondeterminism { .. }) if attempt < cfg.max_attempts => continue,
            Err(e) => return Err(e),
        };
        let trees: Vec<Vec<Option<usize>>> = run
            .outputs
            .iter()
            .map(|out| out.iter().map(|o| o.parent).collect())
            .collect();
        let edges = trees.iter().flat_map(|parents| {
            parents
                .iter()
                .enumerate()
                .filter_map(|(v, p)| p.map(|p| Edge::new(v, p)))
        });
        let subgraph = UndirectedGraph::from_edge_set(n, edges);
        let preserver = Preserver {
            stats: PreserverStats {
                edges: subgraph.m(),
                bound_value: (sources.len() * n.saturating_sub(1)) as f64,
                enumerated_fault_sets: 0,
            },
            subgraph,
            sources: sources.to_vec(),
            f: 1,
            kind: PreserverKind::Sxs,
        };
        let schedule = run.metrics;
        let metrics = SxsMetrics {
            rounds: sampling.rounds_executed + schedule.base.rounds_executed,
            max_edge_msgs_per_round: sampling
                .max_edge_msgs_per_round
                .max(schedule.base.max_edge_msgs_per_round),
            total_msgs: sampling.total_msgs + schedule.base.total_msgs,
            diameter: d,
            rounds_executed: sampling.rounds_executed + schedule.base.rounds_executed,
            sampling,
            schedule,
            attempts: attempt,
        };
        return Ok(SxsRun {
            preserver,
            perturbation: pd,
            trees,
            metrics,
        });
    }
}
