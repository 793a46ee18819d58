//! Round-synchronous CONGESTED CLIQUE simulation primitives.

mod exec;
mod ledger;
mod protocol;
mod rng;

pub use exec::{from_inboxes, to_batch, JobTable};
pub use ledger::{
    Batch, Budget, Inboxes, LedgerConfig, LedgerEntry, RoundLedger, TraceRecord, C_ROUTE,
};
pub use protocol::{
    Efficient, Job, JobInstance, MemoryEfficient, Message, NodeCtx, NodeRef, NodeState, Plain,
    Protocol, RoundModel, StateCodec, Step, Word,
};
pub use rng::{RngStream, SchedulerDomain};
