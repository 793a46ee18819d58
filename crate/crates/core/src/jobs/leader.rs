use rand::Rng;

use crate::sim::{MemoryEfficient, NodeCtx, Protocol, RngStream, Step, Word};

/// Every node streams its input words to slot 0, one word per round; the
/// leader outputs `[count, sum, xor]` of mixed words, which does not depend
/// on arrival order. Runs for `words` rounds; inputs are cut or
/// zero-padded to that length.
#[derive(Debug, Clone, Copy)]
pub struct LeaderAggregation {
    /// Input words per node; fixes the round complexity.
    pub words: usize,
}

pub fn mix(slot: usize, w: Word) -> Word {
    let mut z = w ^ (slot as Word).rotate_left(32) ^ 0x9e37_79b9_7f4a_7c15;
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Inputs are cut or zero-padded to exactly `words` words.
fn normalize(input: &[Word], words: usize) -> Vec<Word> {
    let mut v = input[..input.len().min(words)].to_vec();
    v.resize(words, 0);
    v
}

/// Leader output computed directly from the inputs.
pub fn oracle(inputs: &[Vec<Word>], words: usize) -> Vec<Word> {
    let mut acc = [0 as Word; 3];
    for (slot, input) in inputs.iter().enumerate() {
        for w in normalize(input, words) {
            let m = mix(slot, w);
            acc[0] += 1;
            acc[1] = acc[1].wrapping_add(m);
            acc[2] ^= m;
        }
    }
    acc.to_vec()
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum LeaderState {
    Leader { n: usize, acc: [Word; 3] },
    Member { pending: Vec<Word> },
}

impl LeaderAggregation {
    fn absorb(acc: &mut [Word; 3], slot: usize, w: Word) {
        let m = mix(slot, w);
        acc[0] += 1;
        acc[1] = acc[1].wrapping_add(m);
        acc[2] ^= m;
    }
}

impl Protocol for LeaderAggregation {
    type State = LeaderState;

    fn name(&self) -> &str {
        "leader-aggregation"
    }

    fn init(&self, ctx: NodeCtx, input: &[Word], _rng: &mut RngStream) -> Step<LeaderState> {
        if ctx.node.slot == 0 {
            let mut acc = [0; 3];
            for w in normalize(input, self.words) {
                Self::absorb(&mut acc, 0, w);
            }
            if self.words == 0 {
                return Step::Done(acc.to_vec());
            }
            Step::Continue(LeaderState::Leader { n: ctx.n, acc })
        } else if self.words == 0 {
            Step::Done(Vec::new())
        } else {
            Step::Continue(LeaderState::Member {
                pending: normalize(input, self.words),
            })
        }
    }

    fn send(&self, s: &LeaderState, round: usize) -> Vec<(usize, Word)> {
        match s {
            LeaderState::Member { pending } => {
                pending.get(round).map(|&w| (0, w)).into_iter().collect()
            }
            LeaderState::Leader { .. } => Vec::new(),
        }
    }

    fn receive(
        &self,
        s: LeaderState,
        round: usize,
        inbox: &[(usize, Word)],
        _rng: &mut RngStream,
    ) -> Step<LeaderState> {
        match s {
            LeaderState::Leader { n, mut acc } => {
                for &(src, w) in inbox {
                    Self::absorb(&mut acc, src, w);
                }
                if round >= self.words {
                    Step::Done(acc.to_vec())
                } else {
                    Step::Continue(LeaderState::Leader { n, acc })
                }
            }
            LeaderState::Member { pending } => {
                if round >= self.words {
                    Step::Done(Vec::new())
                } else {
                    Step::Continue(LeaderState::Member { pending })
                }
            }
        }
    }
}

impl MemoryEfficient for LeaderAggregation {
    fn memory_bound(&self, _n: usize) -> usize {
        self.words + 5
    }

    fn encode(&self, s: &LeaderState) -> Vec<Word> {
        match s {
            LeaderState::Leader { n, acc } => vec![0, *n as Word, acc[0], acc[1], acc[2]],
            LeaderState::Member { pending } => {
                let mut w = vec![1];
                w.extend(pending);
                w
            }
        }
    }

    fn decode(&self, _ctx: NodeCtx, w: &[Word]) -> LeaderState {
        if w[0] == 0 {
            LeaderState::Leader {
                n: w[1] as usize,
                acc: [w[2], w[3], w[4]],
            }
        } else {
            LeaderState::Member {
                pending: w[1..].to_vec(),
            }
        }
    }

    fn send_count(&self, s: &LeaderState, round: usize) -> usize {
        self.send(s, round).len()
    }

    fn recv_count(&self, s: &LeaderState, round: usize) -> usize {
        match s {
            LeaderState::Leader { n, .. } if round < self.words => n - 1,
            _ => 0,
        }
    }
}

pub fn random_inputs(n: usize, words: usize, rng: &mut impl Rng) -> Vec<Vec<Word>> {
    (0..n)
        .map(|_| (0..words).map(|_| rng.gen()).collect())
        .collect()
}
