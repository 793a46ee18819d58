use crate::sim::NodeRef;

/// Which side of a machine's per-round budget was exceeded.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Side {
    Send,
    Receive,
}

/// A committed round broke the CLIQUE bandwidth rules.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ModelViolation {
    #[error("round {round}: {words} words on pair {src}->{dst} (budget 1)")]
    Pair {
        round: u64,
        src: usize,
        dst: usize,
        words: usize,
    },
    #[error("round {round}: machine {machine} {side:?} load {words} exceeds {budget}")]
    Machine {
        round: u64,
        machine: usize,
        side: Side,
        words: usize,
        budget: usize,
    },
}

/// Routing property P failed: some machine sends or receives more than X.
#[derive(Debug, Clone, Copy, PartialEq, Eq, thiserror::Error, serde::Serialize)]
#[error("routing bound X={x} violated at machine {machine} ({side:?} load {load})")]
pub struct PViolated {
    pub machine: usize,
    pub side: Side,
    pub load: u64,
    pub x: u64,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("model violation: {0}")]
    Model(#[from] ModelViolation),
    #[error("routing overflow (seed {seed}, phase {phase}): {violation}")]
    RoutingOverflow {
        seed: u64,
        phase: usize,
        violation: PViolated,
    },
    #[error("{node} sent to slot {dst} which is out of range")]
    BadDestination { node: NodeRef, dst: usize },
    #[error("{src} sent a word to {dst} after it finished")]
    SendToFinished { src: NodeRef, dst: NodeRef },
    #[error("{node} at round {round}: codec reports {declared} {side:?} words, actual {actual}")]
    CountMismatch {
        node: NodeRef,
        round: usize,
        side: Side,
        declared: usize,
        actual: usize,
    },
    #[error("{node}: encoded state has {words} words, memory bound is {limit}")]
    EncodingOverflow {
        node: NodeRef,
        words: usize,
        limit: usize,
    },
    #[error("{node}: {side:?} buffer has {words} words, I/O limit is {limit}")]
    IoViolation {
        node: NodeRef,
        side: Side,
        words: usize,
        limit: usize,
    },
    #[error("job {job} ({name}) is not memory efficient")]
    NotMemoryEfficient { job: usize, name: String },
    #[error("job {job} has {got} nodes, network has {n} machines")]
    SizeMismatch { job: usize, got: usize, n: usize },
    #[error("invariant violated: {0}")]
    Invariant(String),
    #[error("missing field for bound check: {0}")]
    MissingField(&'static str),
    #[error("config error: {0}")]
    Config(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
