//! Synchronous CONGEST simulation of the distributed tiebreaking
//! shortest-path tree, random-delay scheduling, and the distributed 1-FT
//! `S x S` preserver.

pub mod delay;
pub mod engine;
pub mod error;
pub mod spt;
pub mod sxs;

pub use delay::{run_random_delay, DelayConfig, DelayMetrics, DelayRun};
pub use engine::{
    neighborhood_swap, Delivery, LocalView, Metrics, Payload, Protocol, SimConfig, SimRun,
    Simulation,
};
pub use error::{SimError, SimResult};
pub use spt::{run_spt, spt_inputs, Spt, SptRun, SptVertex};
pub use sxs::{distributed_perturbation, run_distributed_1ft_sxs, SxsConfig, SxsMetrics, SxsRun};
