//! Layered distributed shortest-path tree under a tiebreaking weight
//! function. Phase `i` takes two rounds: layer `i` announces its `dist*`
//! (the hop part is implied by the phase), then every unsettled vertex that
//! heard something adopts the neighbor minimizing `dist*(s, w) + w(w, v)`.

use std::sync::Arc;

use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use rpts_core::tiebreak::PerturbedDigraph;
use rpts_core::PathWeight;

use crate::engine::{bits_for, Delivery, LocalView, Metrics, Outbox, Payload, Protocol, SimConfig, SimRun, Simulation};
use crate::error::{SimError, SimResult};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SptInput {
    pub source: bool,
    /// `r(v, w)` per neighbor slot.
    pub r: Vec<i64>,
    /// Per-arc perturbation bound, known to every vertex.
    pub bound: i64,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SptState {
    r: Vec<i64>,
    width: u32,
    pub dist: Option<PathWeight>,
    pub parent: Option<usize>,
    announced: bool,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SptMsg {
    /// Perturbation part of `dist*(s, sender)`.
    pub perturbation: i64,
    width: u32,
}

impl Payload for SptMsg {
    fn bits(&self) -> u32 {
        self.width
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SptVertex {
    pub parent: Option<usize>,
    pub dist: Option<PathWeight>,
}

pub struct Spt;

impl Protocol for Spt {
    type Input = SptInput;
    type State = SptState;
    type Msg = SptMsg;
    type Output = SptVertex;

    fn init(view: &LocalView<'_>, input: &SptInput) -> SptState {
        // Sign bit plus |perturbation| <= n * bound.
        let width = 1 + bits_for(view.n as u64 * input.bound.unsigned_abs());
        SptState {
            r: input.r.clone(),
            width,
            dist: input.source.then_some(PathWeight::ZERO),
            parent: None,
            announced: false,
        }
    }

    fn step(
        round: u64,
        view: &LocalView<'_>,
        state: &mut SptState,
        inbox: &[(usize, SptMsg)],
        _rng: &mut ChaCha8Rng,
    ) -> SimResult<Outbox<SptMsg>> {
        if round % 2 == 0 {
            let Some(d) = state.dist.filter(|_| !state.announced) else {
                return Ok(Vec::new());
            };
            state.announced = true;
            let msg = SptMsg {
                perturbation: d.perturbation,
                width: state.width,
            };
            return Ok(view.neighbors.iter().map(|&w| (w, msg.clone())).collect());
        }
        if state.dist.is_some() || inbox.is_empty() {
            return Ok(Vec::new());
        }
        let hops = (round / 2 + 1) as i64;
        let mut best: Option<(PathWeight, usize)> = None;
        let mut tied = false;
        for (w, msg) in inbox {
            let slot = view.slot(*w).expect("engine delivers from neighbors only");
            // w(w, v) = r(w, v) = -r(v, w)
            let cand = PathWeight::new(hops, msg.perturbation - state.r[slot]);
            match best {
                Some((b, _)) if cand == b => tied = true,
                Some((b, _)) if cand > b => {}
                _ => {
                    best = Some((cand, *w));
                    tied = false;
                }
            }
        }
        if tied {
            return Err(SimError::Nondeterminism {
                vertex: view.id,
                round,
            });
        }
        let (d, p) = best.expect("inbox is nonempty");
        state.dist = Some(d);
        state.parent = Some(p);
        Ok(Vec::new())
    }

    fn idle(state: &SptState) -> bool {
        state.dist.is_none() || state.announced
    }

    fn output(state: &SptState) -> SptVertex {
        SptVertex {
            parent: state.parent,
            dist: state.dist,
        }
    }
}

/// Local inputs for a tree rooted at `s` under the weights of `pd`.
pub fn spt_inputs(pd: &PerturbedDigraph, s: usize) -> Vec<SptInput> {
    let g = pd.base();
    (0..g.n())
        .map(|v| SptInput {
            source: v == s,
            r: (0..g.degree(v)).map(|i| pd.r_slot(v, i)).collect(),
            bound: pd.bound(),
        })
        .collect()
}

#[derive(Clone, Debug)]
pub struct SptRun {
    pub source: usize,
    pub parent: Vec<Option<usize>>,
    pub dist: Vec<Option<PathWeight>>,
    pub metrics: Metrics,
    pub edge_msgs: Vec<u64>,
    pub transcript: Vec<Delivery>,
}

pub(crate) fn split_outputs(outputs: &[SptVertex]) -> (Vec<Option<usize>>, Vec<Option<PathWeight>>) {
    (
        outputs.iter().map(|o| o.parent).collect(),
        outputs.iter().map(|o| o.dist).collect(),
    )
}

pub fn run_spt(pd: &PerturbedDigraph, s: usize, seed: u64, cfg: SimConfig) -> SimResult<SptRun> {
    let g = pd.base_arc();
    g.check_vertex(s)?;
    let inputs = spt_inputs(pd, s);
    let SimRun {
        outputs,
        metrics,
        edge_msgs,
        transcript,
        ..
    } = Simulation::<Spt>::new(Arc::clone(&g), &inputs, seed, cfg)?.run()?;
    let (parent, dist) = split_outputs(&outputs);
    Ok(SptRun {
        source: s,
        parent,
        dist,
        metrics,
        edge_msgs,
        transcript,
    })
}
