use rand::Rng;

use crate::sim::{MemoryEfficient, NodeCtx, Protocol, RngStream, Step, Word};

/// Two-round `ceil(sqrt n)`-bin histogram. Each node's input is a list of
/// bin indices; every node outputs all bin totals.
#[derive(Debug, Clone, Copy, Default)]
pub struct Histogram;

pub fn bins(n: usize) -> usize {
    let mut b = (n as f64).sqrt() as usize;
    while b * b < n {
        b += 1;
    }
    while b > 1 && (b - 1) * (b - 1) >= n {
        b -= 1;
    }
    b.max(1)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HistState {
    slot: usize,
    n: usize,
    /// Own counts per bin before round 1; the bin total after it.
    words: Vec<Word>,
    summed: bool,
}

impl Protocol for Histogram {
    type State = HistState;

    fn name(&self) -> &str {
        "histogram"
    }

    fn init(&self, ctx: NodeCtx, input: &[Word], _rng: &mut RngStream) -> Step<HistState> {
        let b = bins(ctx.n);
        let mut counts = vec![0; b];
        for &v in input {
            counts[v as usize % b] += 1;
        }
        Step::Continue(HistState {
            slot: ctx.node.slot,
            n: ctx.n,
            words: counts,
            summed: false,
        })
    }

    fn send(&self, s: &HistState, round: usize) -> Vec<(usize, Word)> {
        match round {
            0 => s.words.iter().copied().enumerate().collect(),
            1 if s.summed => (0..s.n).map(|dst| (dst, s.words[0])).collect(),
            _ => Vec::new(),
        }
    }

    fn receive(
        &self,
        mut s: HistState,
        round: usize,
        inbox: &[(usize, Word)],
        _rng: &mut RngStream,
    ) -> Step<HistState> {
        match round {
            1 => {
                s.summed = s.slot < bins(s.n);
                s.words = if s.summed {
                    vec![inbox.iter().map(|&(_, w)| w).sum()]
                } else {
                    Vec::new()
                };
                Step::Continue(s)
            }
            _ => Step::Done(inbox.iter().map(|&(_, w)| w).collect()),
        }
    }
}

impl MemoryEfficient for Histogram {
    fn memory_bound(&self, n: usize) -> usize {
        bins(n) + 3
    }

    fn encode(&self, s: &HistState) -> Vec<Word> {
        let mut w = vec![s.slot as Word, s.n as Word, s.summed as Word];
        w.extend(&s.words);
        w
    }

    fn decode(&self, _ctx: NodeCtx, w: &[Word]) -> HistState {
        HistState {
            slot: w[0] as usize,
            n: w[1] as usize,
            summed: w[2] != 0,
            words: w[3..].to_vec(),
        }
    }

    fn send_count(&self, s: &HistState, round: usize) -> usize {
        self.send(s, round).len()
    }

    fn recv_count(&self, s: &HistState, round: usize) -> usize {
        match round {
            0 if s.slot < bins(s.n) => s.n,
            1 => bins(s.n),
            _ => 0,
        }
    }
}

/// `items` random bin indices per node.
pub fn random_inputs(n: usize, items: usize, rng: &mut impl Rng) -> Vec<Vec<Word>> {
    let b = bins(n) as Word;
    (0..n)
        .map(|_| (0..items).map(|_| rng.gen_range(0..b)).collect())
        .collect()
}
