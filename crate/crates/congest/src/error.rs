use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SimError {
    #[error("vertex {vertex} sees two parent candidates of equal weight in round {round}: the weights do not break ties")]
    Nondeterminism { vertex: usize, round: u64 },
    #[error("FIFO queue on arc {from}->{to} reached {len} messages, above the bound {bound}; the declared congestion is too small")]
    CapExceeded {
        from: usize,
        to: usize,
        len: usize,
        bound: usize,
    },
    #[error("message of {bits} bits from {from} to {to} exceeds the cap of {cap} bits")]
    MessageTooLarge {
        from: usize,
        to: usize,
        bits: u32,
        cap: u32,
    },
    #[error("vertex {from} tried to send to non-neighbor {to}")]
    NotANeighbor { from: usize, to: usize },
    #[error("vertex {from} sent two messages to {to} in one round")]
    DuplicateMessage { from: usize, to: usize },
    #[error("simulation did not quiesce within {limit} rounds")]
    RoundLimit { limit: u64 },
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error(transparent)]
    Core(#[from] rpts_core::Error),
}

pub type SimResult<T> = std::result::Result<T, SimError>;
