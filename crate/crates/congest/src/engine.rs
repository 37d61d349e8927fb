//! Synchronous CONGEST engine.
//!
//! A protocol is a set of associated functions with no receiver, so a step
//! can only see the vertex's own view, state, RNG stream and inbox. Every
//! round, all vertices step (concurrently), the engine validates the
//! outboxes and delivers them for the next round.

use std::fmt::Debug;
use std::sync::Arc;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use rpts_core::graph::{bfs_distances, diameter, Distance, FaultSet};
use rpts_core::UndirectedGraph;

use crate::error::{SimError, SimResult};

/// Message payload with a declared schema size.
pub trait Payload: Clone + Debug + Send + Sync {
    fn bits(&self) -> u32;
}

/// What a vertex knows about the network: its id, `n`, and its neighbors.
#[derive(Clone, Copy, Debug)]
pub struct LocalView<'a> {
    pub id: usize,
    pub n: usize,
    /// Sorted.
    pub neighbors: &'a [usize],
}

impl LocalView<'_> {
    pub fn slot(&self, w: usize) -> Option<usize> {
        self.neighbors.binary_search(&w).ok()
    }
}

pub type Outbox<M> = Vec<(usize, M)>;

pub trait Protocol {
    /// Per-vertex local input.
    type Input: Send + Sync;
    type State: Clone + Debug + PartialEq + Send + Sync;
    type Msg: Payload;
    type Output: Clone + Debug + PartialEq + Send + Sync;

    fn init(view: &LocalView<'_>, input: &Self::Input) -> Self::State;

    /// `inbox` holds the messages sent to this vertex in the previous
    /// round, sorted by sender.
    fn step(
        round: u64,
        view: &LocalView<'_>,
        state: &mut Self::State,
        inbox: &[(usize, Self::Msg)],
        rng: &mut ChaCha8Rng,
    ) -> SimResult<Outbox<Self::Msg>>;

    /// True when the vertex will send nothing unless it receives something.
    fn idle(state: &Self::State) -> bool;

    fn output(state: &Self::State) -> Self::Output;
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SimConfig {
    /// Messages may carry `cap_factor * max(ceil(log2 n), 1)` bits.
    pub cap_factor: u32,
    pub max_rounds: u64,
    pub transcript: bool,
}

impl Default for SimConfig {
    fn default() -> Self {
        SimConfig {
            cap_factor: 8,
            max_rounds: 1_000_000,
            transcript: false,
        }
    }
}

pub fn ceil_log2(x: u64) -> u32 {
    if x <= 1 {
        0
    } else {
        64 - (x - 1).leading_zeros()
    }
}

/// Bits needed to write any value in `0..=max`.
pub fn bits_for(max: u64) -> u32 {
    (64 - max.leading_zeros()).max(1)
}

pub fn cap_bits(n: usize, cap_factor: u32) -> u32 {
    cap_factor * ceil_log2(n as u64).max(1)
}

/// RNG stream of vertex `v` in algorithm `alg`.
pub fn vertex_rng(seed: u64, alg: usize, v: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(mix(seed, alg as u64));
    rng.set_stream(v as u64);
    rng
}

pub(crate) fn mix(seed: u64, k: u64) -> u64 {
    let mut z = seed ^ (k.wrapping_add(1)).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Metrics {
    /// Communication rounds until every output is final.
    pub rounds: u64,
    /// Rounds simulated until nothing was left to send.
    pub rounds_executed: u64,
    pub max_edge_msgs_per_round: u64,
    /// Largest total on one edge, both directions.
    pub max_edge_msgs: u64,
    pub total_msgs: u64,
    #[serde(rename = "D")]
    pub diameter: u32,
    pub cap_bits: u32,
    pub max_msg_bits: u32,
}

/// One transmitted message.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Delivery {
    pub round: u64,
    pub from: usize,
    pub to: usize,
    pub alg: usize,
    pub bits: u32,
    pub payload: String,
}

/// Per-edge message counters, reset per round.
pub(crate) struct EdgeCounter {
    total: Vec<u64>,
    this_round: Vec<u64>,
    touched: Vec<usize>,
    pub(crate) max_per_round: u64,
    pub(crate) messages: u64,
    pub(crate) max_bits: u32,
}

impl EdgeCounter {
    pub(crate) fn new(m: usize) -> Self {
        EdgeCounter {
            total: vec![0; m],
            this_round: vec![0; m],
            touched: Vec::new(),
            max_per_round: 0,
            messages: 0,
            max_bits: 0,
        }
    }

    pub(crate) fn record(&mut self, edge: usize, bits: u32) {
        if self.this_round[edge] == 0 {
            self.touched.push(edge);
        }
        self.this_round[edge] += 1;
        self.total[edge] += 1;
        self.max_per_round = self.max_per_round.max(self.this_round[edge]);
        self.messages += 1;
        self.max_bits = self.max_bits.max(bits);
    }

    pub(crate) fn end_round(&mut self) {
        for e in self.touched.drain(..) {
            self.this_round[e] = 0;
        }
    }

    pub(crate) fn max_total(&self) -> u64 {
        self.total.iter().copied().max().unwrap_or(0)
    }

    pub(crate) fn totals(&self) -> &[u64] {
        &self.total
    }
}

pub(crate) fn validate<M: Payload>(
    view: &LocalView<'_>,
    out: &mut Outbox<M>,
    cap: u32,
    tag_bits: u32,
) -> SimResult<()> {
    out.sort_by_key(|(to, _)| *to);
    for (i, (to, msg)) in out.iter().enumerate() {
        if view.slot(*to).is_none() {
            return Err(SimError::NotANeighbor {
                from: view.id,
                to: *to,
            });
        }
        if i > 0 && out[i - 1].0 == *to {
            return Err(SimError::DuplicateMessage {
                from: view.id,
                to: *to,
            });
        }
        let bits = msg.bits() + tag_bits;
        if bits > cap {
            return Err(SimError::MessageTooLarge {
                from: view.id,
                to: *to,
                bits,
                cap,
            });
        }
    }
    Ok(())
}

pub(crate) fn edge_id(g: &UndirectedGraph, a: usize, b: usize) -> usize {
    g.edge_index(rpts_core::Edge::new(a, b)).expect("validated neighbor")
}

pub struct SimRun<P: Protocol> {
    pub outputs: Vec<P::Output>,
    pub states: Vec<P::State>,
    pub metrics: Metrics,
    /// Per-edge message totals aligned with `graph.edges()`.
    pub edge_msgs: Vec<u64>,
    pub transcript: Vec<Delivery>,
}

/// A single protocol running alone on the network.
pub struct Simulation<P: Protocol> {
    graph: Arc<UndirectedGraph>,
    cfg: SimConfig,
    cap: u32,
    states: Vec<P::State>,
    rngs: Vec<ChaCha8Rng>,
    inboxes: Vec<Vec<(usize, P::Msg)>>,
    round: u64,
    last_change: Option<u64>,
    quiescent: bool,
    counter: EdgeCounter,
    transcript: Vec<Delivery>,
}

impl<P: Protocol> Simulation<P> {
    pub fn new(
        graph: Arc<UndirectedGraph>,
        inputs: &[P::Input],
        seed: u64,
        cfg: SimConfig,
    ) -> SimResult<Self> {
        let n = graph.n();
        if inputs.len() != n {
            return Err(SimError::InvalidInput(format!(
                "{} inputs for {n} vertices",
                inputs.len()
            )));
        }
        let states = (0..n)
            .map(|v| P::init(&view(&graph, v), &inputs[v]))
            .collect();
        let m = graph.m();
        Ok(Simulation {
            cap: cap_bits(n, cfg.cap_factor),
            rngs: (0..n).map(|v| vertex_rng(seed, 0, v)).collect(),
            inboxes: vec![Vec::new(); n],
            states,
            graph,
            cfg,
            round: 0,
            last_change: None,
            quiescent: false,
            counter: EdgeCounter::new(m),
            transcript: Vec::new(),
        })
    }

    /// Rounds executed so far.
    pub fn round(&self) -> u64 {
        self.round
    }

    pub fn state(&self, v: usize) -> &P::State {
        &self.states[v]
    }

    pub fn is_quiescent(&self) -> bool {
        self.quiescent
    }

    pub fn outputs(&self) -> Vec<P::Output> {
        self.states.iter().map(P::output).collect()
    }

    /// Executes one round.
    pub fn step(&mut self) -> SimResult<()> {
        let round = self.round;
        let graph = &self.graph;
        let cap = self.cap;
        let inboxes = std::mem::replace(&mut self.inboxes, vec![Vec::new(); graph.n()]);
        let results: Vec<SimResult<(Outbox<P::Msg>, bool)>> = self
            .states
            .par_iter_mut()
            .zip(self.rngs.par_iter_mut())
            .zip(inboxes.par_iter())
            .enumerate()
            .map(|(v, ((state, rng), inbox))| {
                let view = view(graph, v);
                let before = P::output(state);
                let mut out = P::step(round, &view, state, inbox, rng)?;
                validate(&view, &mut out, cap, 0)?;
                Ok((out, P::output(state) != before))
            })
            .collect();
        let mut sent = 0;
        for (v, r) in results.into_iter().enumerate() {
            let (out, changed) = r?;
            if changed {
                self.last_change = Some(round);
            }
            for (to, msg) in out {
                sent += 1;
                let bits = msg.bits();
                self.counter.record(edge_id(graph, v, to), bits);
                if self.cfg.transcript {
                    self.transcript.push(Delivery {
                        round,
                        from: v,
                        to,
                        alg: 0,
                        bits,
                        payload: format!("{msg:?}"),
                    });
                }
                self.inboxes[to].push((v, msg));
            }
        }
        // Senders were visited in increasing order, so inboxes are sorted.
        self.counter.end_round();
        self.round += 1;
        self.quiescent = sent == 0 && self.states.iter().all(P::idle);
        Ok(())
    }

    pub fn run(mut self) -> SimResult<SimRun<P>> {
        while !self.quiescent {
            if self.round >= self.cfg.max_rounds {
                return Err(SimError::RoundLimit {
                    limit: self.cfg.max_rounds,
                });
            }
            self.step()?;
        }
        let metrics = Metrics {
            rounds: self.last_change.unwrap_or(0),
            rounds_executed: self.round,
            max_edge_msgs_per_round: self.counter.max_per_round,
            max_edge_msgs: self.counter.max_total(),
            total_msgs: self.counter.messages,
            diameter: diameter(&self.graph),
            cap_bits: self.cap,
            max_msg_bits: self.counter.max_bits,
        };
        Ok(SimRun {
            outputs: self.outputs(),
            edge_msgs: self.counter.totals().to_vec(),
            states: self.states,
            metrics,
            transcript: self.transcript,
        })
    }
}

pub(crate) fn view(g: &UndirectedGraph, v: usize) -> LocalView<'_> {
    LocalView {
        id: v,
        n: g.n(),
        neighbors: g.neighbors(v),
    }
}

/// Neighborhood-swap experiment: runs `t` rounds on two input vectors that
/// may differ only at vertices farther than `t` from `v`, and reports
/// whether `v` ends in the same state.
pub fn neighborhood_swap<P: Protocol>(
    graph: Arc<UndirectedGraph>,
    a: &[P::Input],
    b: &[P::Input],
    differing: &[usize],
    v: usize,
    t: u64,
    seed: u64,
) -> SimResult<bool> {
    let dist = bfs_distances(&graph, v, &FaultSet::empty());
    for &u in differing {
        if let Distance::Finite(d) = dist[u] {
            if u64::from(d) <= t {
                return Err(SimError::InvalidInput(format!(
                    "vertex {u} is within distance {t} of {v}"
                )));
            }
        }
    }
    let cfg = SimConfig::default();
    let mut sa = Simulation::<P>::new(Arc::clone(&graph), a, seed, cfg)?;
    let mut sb = Simulation::<P>::new(graph, b, seed, cfg)?;
    for _ in 0..t {
        sa.step()?;
        sb.step()?;
    }
    Ok(sa.state(v) == sb.state(v))
}
