use std::any::Any;
use std::fmt;
use std::sync::Arc;

use super::rng::RngStream;

/// One model message unit. The logical size is `O(log n)` bits; the
/// simulator stores it in a machine word and accounts for it as one unit.
pub type Word = u64;

/// Virtual node `v_{slot, job}`: the `slot`-th participant of job `job`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct NodeRef {
    pub slot: usize,
    pub job: usize,
}

impl NodeRef {
    pub fn new(slot: usize, job: usize) -> Self {
        NodeRef { slot, job }
    }
}

impl fmt::Display for NodeRef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "v[{},{}]", self.slot, self.job)
    }
}

/// A word travelling between two nodes of the same job.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Message {
    pub src: NodeRef,
    pub dst: NodeRef,
    pub payload: Word,
}

/// Per-round communication budget a protocol is written against.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RoundModel {
    /// Plain CLIQUE: at most one word per ordered pair of nodes per round.
    Clique,
    /// CLIQUE with routing as part of the model: every node sends at most
    /// `n` and receives at most `n` words per round, in any pattern.
    CliqueRouting,
}

/// What a node sees about itself at initialisation time.
#[derive(Debug, Clone, Copy)]
pub struct NodeCtx {
    pub node: NodeRef,
    pub n: usize,
}

/// Opaque per-node local memory.
pub struct NodeState(Box<dyn Any + Send>);

impl NodeState {
    pub fn new<S: Any + Send>(state: S) -> Self {
        NodeState(Box::new(state))
    }

    pub fn downcast_ref<S: Any>(&self) -> &S {
        self.0
            .downcast_ref::<S>()
            .expect("node state used with a foreign protocol")
    }

    pub fn downcast<S: Any>(self) -> S {
        *self
            .0
            .downcast::<S>()
            .expect("node state used with a foreign protocol")
    }
}

impl fmt::Debug for NodeState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("NodeState(..)")
    }
}

/// Result of a Receiving + Computation step.
#[derive(Debug)]
pub enum Step<S = NodeState> {
    Continue(S),
    /// The node writes its output buffer and stops.
    Done(Vec<Word>),
}

impl<S> Step<S> {
    pub fn map<T>(self, f: impl FnOnce(S) -> T) -> Step<T> {
        match self {
            Step::Continue(s) => Step::Continue(f(s)),
            Step::Done(out) => Step::Done(out),
        }
    }
}

/// A distributed protocol, written from the point of view of one node.
///
/// A round `r` is: `send(S_r, r)`, delivery, then `receive(S_r, r + 1, inbox)`
/// which performs the Receiving and Computation steps of round `r + 1`.
/// `init` performs the Receiving (from the input buffer) and Computation
/// steps of round 0. The inbox is ordered by source slot, and within one
/// source by the order the words were sent.
pub trait Protocol: Send + Sync + 'static {
    type State: Send + 'static;

    fn name(&self) -> &str;

    fn model(&self) -> RoundModel {
        RoundModel::Clique
    }

    fn init(&self, ctx: NodeCtx, input: &[Word], rng: &mut RngStream) -> Step<Self::State>;

    /// Sending Step. Must be a pure function of `(state, round)`.
    fn send(&self, state: &Self::State, round: usize) -> Vec<(usize, Word)>;

    fn receive(
        &self,
        state: Self::State,
        round: usize,
        inbox: &[(usize, Word)],
        rng: &mut RngStream,
    ) -> Step<Self::State>;
}

/// A protocol whose post-Computation state fits in `M` words and whose
/// per-round send/receive counts can be read off the state.
pub trait MemoryEfficient: Protocol {
    fn memory_bound(&self, n: usize) -> usize;
    fn encode(&self, state: &Self::State) -> Vec<Word>;
    fn decode(&self, ctx: NodeCtx, words: &[Word]) -> Self::State;
    fn send_count(&self, state: &Self::State, round: usize) -> usize;
    fn recv_count(&self, state: &Self::State, round: usize) -> usize;
}

/// Object-safe view of a protocol used by the schedulers.
pub trait Job: Send + Sync {
    fn name(&self) -> &str;
    fn model(&self) -> RoundModel;
    fn init(&self, ctx: NodeCtx, input: &[Word], rng: &mut RngStream) -> Step;
    fn send(&self, state: &NodeState, round: usize) -> Vec<(usize, Word)>;
    fn receive(
        &self,
        state: NodeState,
        round: usize,
        inbox: &[(usize, Word)],
        rng: &mut RngStream,
    ) -> Step;
    fn codec(&self) -> Option<&dyn StateCodec>;
}

/// Erased [`MemoryEfficient`] surface.
pub trait StateCodec {
    fn memory_bound(&self, n: usize) -> usize;
    fn encode(&self, state: &NodeState) -> Vec<Word>;
    fn decode(&self, ctx: NodeCtx, words: &[Word]) -> NodeState;
    fn send_count(&self, state: &NodeState, round: usize) -> usize;
    fn recv_count(&self, state: &NodeState, round: usize) -> usize;
}

/// Adapter for protocols without a state codec.
pub struct Plain<P>(pub P);

/// Adapter exposing a [`MemoryEfficient`] protocol's codec.
pub struct Efficient<P>(pub P);

macro_rules! erase_protocol {
    ($adapter:ident, $bound:path, |$s:ident| $codec:expr) => {
        impl<P: $bound> Job for $adapter<P> {
            fn name(&self) -> &str {
                self.0.name()
            }

            fn model(&self) -> RoundModel {
                self.0.model()
            }

            fn init(&self, ctx: NodeCtx, input: &[Word], rng: &mut RngStream) -> Step {
                self.0.init(ctx, input, rng).map(NodeState::new)
            }

            fn send(&self, state: &NodeState, round: usize) -> Vec<(usize, Word)> {
                self.0.send(state.downcast_ref::<P::State>(), round)
            }

            fn receive(
                &self,
                state: NodeState,
                round: usize,
                inbox: &[(usize, Word)],
                rng: &mut RngStream,
            ) -> Step {
                self.0
                    .receive(state.downcast::<P::State>(), round, inbox, rng)
                    .map(NodeState::new)
            }

            fn codec(&self) -> Option<&dyn StateCodec> {
                let $s = self;
                $codec
            }
        }
    };
}

erase_protocol!(Plain, Protocol, |_s| None);
erase_protocol!(Efficient, MemoryEfficient, |s| Some(s as &dyn StateCodec));

impl<P: MemoryEfficient> StateCodec for Efficient<P> {
    fn memory_bound(&self, n: usize) -> usize {
        self.0.memory_bound(n)
    }

    fn encode(&self, state: &NodeState) -> Vec<Word> {
        self.0.encode(state.downcast_ref::<P::State>())
    }

    fn decode(&self, ctx: NodeCtx, words: &[Word]) -> NodeState {
        NodeState::new(self.0.decode(ctx, words))
    }

    fn send_count(&self, state: &NodeState, round: usize) -> usize {
        self.0.send_count(state.downcast_ref::<P::State>(), round)
    }

    fn recv_count(&self, state: &NodeState, round: usize) -> usize {
        self.0.recv_count(state.downcast_ref::<P::State>(), round)
    }
}

/// A protocol together with the inputs of its `n` nodes.
#[derive(Clone)]
pub struct JobInstance {
    pub protocol: Arc<dyn Job>,
    pub inputs: Vec<Vec<Word>>,
}

impl JobInstance {
    pub fn plain<P: Protocol>(protocol: P, inputs: Vec<Vec<Word>>) -> Self {
        JobInstance {
            protocol: Arc::new(Plain(protocol)),
            inputs,
        }
    }

    pub fn memory_efficient<P: MemoryEfficient>(protocol: P, inputs: Vec<Vec<Word>>) -> Self {
        JobInstance {
            protocol: Arc::new(Efficient(protocol)),
            inputs,
        }
    }

    pub fn n(&self) -> usize {
        self.inputs.len()
    }
}

impl fmt::Debug for JobInstance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("JobInstance")
            .field("protocol", &self.protocol.name())
            .field("n", &self.inputs.len())
            .finish()
    }
}
