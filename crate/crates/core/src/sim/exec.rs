use crate::error::{Error, Result};
use crate::metrics::Profile;

use super::protocol::{JobInstance, Message, NodeCtx, NodeRef, NodeState, Step, Word};
use super::rng::RngStream;

/// Node states of every job, advanced one job round at a time.
///
/// The table does not know where a node is placed; schedulers decide which
/// machine executes which node and charge the communication accordingly.
/// All live nodes of a job are always in the same round.
pub struct JobTable<'a> {
    jobs: &'a [JobInstance],
    n: usize,
    seed: u64,
    states: Vec<Vec<Option<NodeState>>>,
    outputs: Vec<Vec<Option<Vec<Word>>>>,
    live: Vec<usize>,
    round: Vec<usize>,
    profile: Profile,
}

impl<'a> JobTable<'a> {
    pub fn new(jobs: &'a [JobInstance], n: usize, seed: u64) -> Result<Self> {
        if n == 0 {
            return Err(Error::Config("network needs at least one machine".into()));
        }
        for (j, job) in jobs.iter().enumerate() {
            if job.n() != n {
                return Err(Error::SizeMismatch {
                    job: j,
                    got: job.n(),
                    n,
                });
            }
        }
        let t = jobs.len();
        Ok(JobTable {
            jobs,
            n,
            seed,
            states: (0..t).map(|_| (0..n).map(|_| None).collect()).collect(),
            outputs: vec![vec![None; n]; t],
            live: vec![0; t],
            round: vec![0; t],
            profile: Profile::new(n, t),
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn t(&self) -> usize {
        self.jobs.len()
    }

    pub fn job(&self, j: usize) -> &JobInstance {
        &self.jobs[j]
    }

    pub fn ctx(&self, j: usize, slot: usize) -> NodeCtx {
        NodeCtx {
            node: NodeRef::new(slot, j),
            n: self.n,
        }
    }

    /// Round 0 for every node of job `j` from its own input.
    pub fn init_job(&mut self, j: usize) {
        let jobs = self.jobs;
        for slot in 0..self.n {
            self.init_node(j, slot, &jobs[j].inputs[slot]);
        }
    }

    pub fn init_all(&mut self) {
        (0..self.t()).for_each(|j| self.init_job(j));
    }

    /// Round 0 for one node, with the input as delivered to its machine.
    pub fn init_node(&mut self, j: usize, slot: usize, input: &[Word]) {
        let ctx = self.ctx(j, slot);
        let mut rng = RngStream::for_node(self.seed, ctx.node, 0);
        let step = self.jobs[j].protocol.init(ctx, input, &mut rng);
        self.store(j, slot, step);
    }

    fn store(&mut self, j: usize, slot: usize, step: Step) {
        match step {
            Step::Continue(s) => {
                if self.states[j][slot].replace(s).is_none() {
                    self.live[j] += 1;
                }
            }
            Step::Done(out) => {
                if self.states[j][slot].take().is_some() {
                    self.live[j] -= 1;
                }
                self.outputs[j][slot] = Some(out);
            }
        }
    }

    pub fn is_live(&self, j: usize) -> bool {
        self.live[j] > 0
    }

    pub fn node_live(&self, j: usize, slot: usize) -> bool {
        self.states[j][slot].is_some()
    }

    pub fn any_live(&self) -> bool {
        self.live.iter().any(|&l| l > 0)
    }

    pub fn live_jobs(&self) -> Vec<usize> {
        (0..self.t()).filter(|&j| self.is_live(j)).collect()
    }

    /// Round the live nodes of job `j` are about to execute.
    pub fn round(&self, j: usize) -> usize {
        self.round[j]
    }

    pub fn state(&self, j: usize, slot: usize) -> Option<&NodeState> {
        self.states[j][slot].as_ref()
    }

    pub fn take_state(&mut self, j: usize, slot: usize) -> Option<NodeState> {
        self.states[j][slot].take()
    }

    /// Put back a state removed with [`take_state`](Self::take_state).
    pub fn put_state(&mut self, j: usize, slot: usize, state: NodeState) {
        assert!(self.states[j][slot].is_none(), "slot already occupied");
        self.states[j][slot] = Some(state);
    }

    /// Sending Step of one node in the current round of its job.
    pub fn sends_of(&self, j: usize, slot: usize) -> Result<Vec<Message>> {
        let Some(state) = self.states[j][slot].as_ref() else {
            return Ok(Vec::new());
        };
        let src = NodeRef::new(slot, j);
        let out = self.jobs[j].protocol.send(state, self.round[j]);
        out.into_iter()
            .map(|(dst, payload)| {
                if dst >= self.n {
                    return Err(Error::BadDestination { node: src, dst });
                }
                let dst = NodeRef::new(dst, j);
                if self.states[j][dst.slot].is_none() {
                    return Err(Error::SendToFinished { src, dst });
                }
                Ok(Message { src, dst, payload })
            })
            .collect()
    }

    /// Sending Step of every live node of job `j`, in slot order.
    pub fn sends(&self, j: usize) -> Result<Vec<Message>> {
        let mut all = Vec::new();
        for slot in 0..self.n {
            all.extend(self.sends_of(j, slot)?);
        }
        Ok(all)
    }

    /// Complete the current round of job `j`: `msgs` are the words it sent,
    /// now delivered. Every live node runs its Receiving and Computation
    /// steps of the next round.
    pub fn finish_round(&mut self, j: usize, mut msgs: Vec<Message>) {
        let r = self.round[j];
        msgs.sort_by_key(|m| m.src.slot);
        self.profile.record_round(j, r, &msgs);
        let mut inboxes: Vec<Vec<(usize, Word)>> = vec![Vec::new(); self.n];
        for m in &msgs {
            inboxes[m.dst.slot].push((m.src.slot, m.payload));
        }
        for (slot, inbox) in inboxes.iter().enumerate() {
            let Some(state) = self.states[j][slot].take() else {
                continue;
            };
            self.live[j] -= 1;
            let node = NodeRef::new(slot, j);
            let mut rng = RngStream::for_node(self.seed, node, r + 1);
            let step = self.jobs[j].protocol.receive(state, r + 1, inbox, &mut rng);
            self.store(j, slot, step);
        }
        self.round[j] = r + 1;
    }

    pub fn profile(&self) -> &Profile {
        &self.profile
    }

    pub fn output(&self, j: usize, slot: usize) -> Option<&[Word]> {
        self.outputs[j][slot].as_deref()
    }

    /// Outputs of all nodes; fails if some node has not finished.
    pub fn into_outputs(self) -> Result<(Vec<Vec<Vec<Word>>>, Profile)> {
        let mut all = Vec::with_capacity(self.t());
        for (j, outs) in self.outputs.into_iter().enumerate() {
            let mut job = Vec::with_capacity(self.n);
            for (slot, o) in outs.into_iter().enumerate() {
                job.push(o.ok_or_else(|| {
                    Error::Invariant(format!("{} has no output", NodeRef::new(slot, j)))
                })?);
            }
            all.push(job);
        }
        Ok((all, self.profile))
    }
}

/// Group job messages by the machine hosting their source node.
pub fn to_batch(
    n: usize,
    msgs: Vec<Message>,
    place: impl Fn(NodeRef) -> usize,
) -> Vec<Vec<(usize, Message)>> {
    let mut batch = vec![Vec::new(); n];
    for m in msgs {
        batch[place(m.src)].push((place(m.dst), m));
    }
    batch
}

/// Flatten delivered inboxes back into a message list.
pub fn from_inboxes(inboxes: Vec<Vec<(usize, Message)>>) -> Vec<Message> {
    inboxes.into_iter().flatten().map(|(_, m)| m).collect()
}
