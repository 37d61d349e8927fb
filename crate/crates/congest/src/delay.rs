//! Random-delay scheduling of several protocols on one network.
//!
//! Algorithm `k` starts at a delay drawn from a shared seed, uniform in
//! `[0, c]`. Its logical round `r` runs only once every message of round
//! `r - 1` has been transmitted, so each algorithm sees exactly the inboxes
//! of its solo run. Each arc carries one message per round from a FIFO
//! queue; messages are tagged with the algorithm id.

use std::collections::{BTreeSet, VecDeque};
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use rpts_core::graph::diameter;
use rpts_core::UndirectedGraph;

use crate::engine::{
    cap_bits, ceil_log2, edge_id, validate, vertex_rng, view, Delivery, EdgeCounter, Metrics,
    Outbox, Payload, Protocol, SimConfig,
};
use crate::error::{SimError, SimResult};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DelayConfig {
    /// Declared total messages per edge over all algorithms.
    pub congestion: u64,
    /// Declared rounds per algorithm.
    pub dilation: u64,
    pub seed: u64,
    /// Longest allowed arc queue; defaults to `congestion`.
    pub queue_bound: Option<usize>,
    /// Flat charge for the schedule's pre-computation; defaults to
    /// `dilation * ceil(log2 n)^2`. Reported, never added to `rounds`.
    pub precompute_rounds: Option<u64>,
    pub sim: SimConfig,
}

impl DelayConfig {
    pub fn new(congestion: u64, dilation: u64, seed: u64) -> Self {
        DelayConfig {
            congestion,
            dilation,
            seed,
            queue_bound: None,
            precompute_rounds: None,
            sim: SimConfig::default(),
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct DelayMetrics {
    #[serde(flatten)]
    pub base: Metrics,
    pub algorithms: usize,
    pub congestion: u64,
    pub dilation: u64,
    pub delays: Vec<u64>,
    /// Global round in which each algorithm's outputs became final.
    pub completion: Vec<u64>,
    pub max_logical_rounds: u64,
    pub max_queue: usize,
    pub precompute_rounds: u64,
}

pub struct DelayRun<P: Protocol> {
    /// `outputs[k][v]`.
    pub outputs: Vec<Vec<P::Output>>,
    pub metrics: DelayMetrics,
    pub transcript: Vec<Delivery>,
}

struct Alg<P: Protocol> {
    states: Vec<P::State>,
    rngs: Vec<ChaCha8Rng>,
    delivered: Vec<Vec<(usize, P::Msg)>>,
    logical: u64,
    pending: usize,
    finished: bool,
    last_change: Option<u64>,
}

pub fn draw_delays(count: usize, congestion: u64, seed: u64) -> Vec<u64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count).map(|_| rng.gen_range(0..=congestion)).collect()
}

pub fn run_random_delay<P: Protocol>(
    graph: Arc<UndirectedGraph>,
    algs: &[Vec<P::Input>],
    cfg: &DelayConfig,
) -> SimResult<DelayRun<P>> {
    let n = graph.n();
    if algs.is_empty() {
        return Err(SimError::InvalidInput("no algorithms to schedule".into()));
    }
    if let Some(bad) = algs.iter().find(|a| a.len() != n) {
        return Err(SimError::InvalidInput(format!(
            "{} inputs for {n} vertices",
            bad.len()
        )));
    }
    let cap = cap_bits(n, cfg.sim.cap_factor);
    let tag_bits = ceil_log2(algs.len() as u64);
    let queue_bound = cfg.queue_bound.unwrap_or(cfg.congestion as usize);
    let delays = draw_delays(algs.len(), cfg.congestion, cfg.seed);
    let mut arc_offset = vec![0usize; n + 1];
    for v in 0..n {
        arc_offset[v + 1] = arc_offset[v] + graph.degree(v);
    }
    let arc_of = |from: usize, to: usize| arc_offset[from] + graph.neighbors(from).binary_search(&to).expect("neighbor");
    let arc_ends: Vec<(usize, usize)> = (0..n)
        .flat_map(|v| graph.neighbors(v).iter().map(move |&w| (v, w)))
        .collect();

    let mut state: Vec<Alg<P>> = algs
        .iter()
        .enumerate()
        .map(|(k, inputs)| Alg {
            states: (0..n).map(|v| P::init(&view(&graph, v), &inputs[v])).collect(),
            rngs: (0..n).map(|v| vertex_rng(cfg.seed, k, v)).collect(),
            delivered: vec![Vec::new(); n],
            logical: 0,
            pending: 0,
            finished: false,
            last_change: None,
        })
        .collect();
    let mut queues: Vec<VecDeque<(usize, P::Msg)>> = vec![VecDeque::new(); arc_ends.len()];
    let mut busy: BTreeSet<usize> = BTreeSet::new();
    let mut counter = EdgeCounter::new(graph.m());
    let mut transcript = Vec::new();
    let mut completion = vec![0u64; algs.len()];
    let mut max_queue = 0usize;
    let mut t = 0u64;

    while state.iter().any(|a| !a.finished) {
        if t >= cfg.sim.max_rounds {
            return Err(SimError::RoundLimit {
                limit: cfg.sim.max_rounds,
            });
        }
        for (k, alg) in state.iter_mut().enumerate() {
            if alg.finished || t < delays[k] || alg.pending > 0 {
                continue;
            }
            let round = alg.logical;
            let inboxes = std::mem::replace(&mut alg.delivered, vec![Vec::new(); n]);
            let results: Vec<SimResult<(Outbox<P::Msg>, bool)>> = alg
                .states
                .par_iter_mut()
                .zip(alg.rngs.par_iter_mut())
                .zip(inboxes.into_par_iter())
                .enumerate()
                .map(|(v, ((st, rng), mut inbox))| {
                    inbox.sort_by_key(|(from, _)| *from);
                    let view = view(&graph, v);
                    let before = P::output(st);
                    let mut out = P::step(round, &view, st, &inbox, rng)?;
                    validate(&view, &mut out, cap, tag_bits)?;
                    Ok((out, P::output(st) != before))
                })
                .collect();
            let mut sent = 0;
            for (v, r) in results.into_iter().enumerate() {
                let (out, changed) = r?;
                if changed {
                    alg.last_change = Some(t);
                }
                for (to, msg) in out {
                    let a = arc_of(v, to);
                    queues[a].push_back((k, msg));
                    busy.insert(a);
                    if queues[a].len() > queue_bound {
                        return Err(SimError::CapExceeded {
                            from: v,
                            to,
                            len: queues[a].len(),
                            bound: queue_bound,
                        });
                    }
                    max_queue = max_queue.max(queues[a].len());
                    sent += 1;
                }
            }
            alg.pending = sent;
            alg.logical += 1;
            if sent == 0 && alg.states.iter().all(P::idle) {
                alg.finished = true;
                completion[k] = alg.last_change.unwrap_or(delays[k]);
            }
        }
        for a in std::mem::take(&mut busy) {
            let (from, to) = arc_ends[a];
            let (k, msg) = queues[a].pop_front().expect("busy arcs are nonempty");
            if !queues[a].is_empty() {
                busy.insert(a);
            }
            let bits = msg.bits() + tag_bits;
            counter.record(edge_id(&graph, from, to), bits);
            if cfg.sim.transcript {
                transcript.push(Delivery {
                    round: t,
                    from,
                    to,
                    alg: k,
                    bits,
                    payload: format!("{msg:?}"),
                });
            }
            state[k].delivered[to].push((from, msg));
            state[k].pending -= 1;
        }
        counter.end_round();
        t += 1;
    }

    let d = diameter(&graph);
    let logn = u64::from(ceil_log2(n as u64));
    let metrics = DelayMetrics {
        base: Metrics {
            rounds: state.iter().filter_map(|a| a.last_change).max().unwrap_or(0),
            rounds_executed: t,
            max_edge_msgs_per_round: counter.max_per_round,
            max_edge_msgs: counter.max_total(),
            total_msgs: counter.messages,
            diameter: d,
            cap_bits: cap,
            max_msg_bits: counter.max_bits,
        },
        algorithms: algs.len(),
        congestion: cfg.congestion,
        dilation: cfg.dilation,
        delays,
        completion,
        max_logical_rounds: state.iter().map(|a| a.logical).max().unwrap_or(0),
        max_queue,
        precompute_rounds: cfg
            .precompute_rounds
            .unwrap_or(cfg.dilation * logn * logn),
    };
    Ok(DelayRun {
        outputs: state
            .iter()
            .map(|a| a.states.iter().map(P::output).collect())
            .collect(),
        metrics,
        transcript,
    })
}
