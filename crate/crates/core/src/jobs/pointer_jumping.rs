use rand::seq::SliceRandom;
use rand::Rng;

use crate::metrics::ceil_log2;
use crate::sim::{MemoryEfficient, NodeCtx, Protocol, RngStream, RoundModel, Step, Word};

/// Pointer jumping over permutations of `[P]`: node `i` holds `pi_i`, one
/// node `i'` holds a pointer `p`, and `i'` outputs
/// `pi_{n-1}(...pi_0(p))`.
///
/// Node input layout: `[query, p, pi_i(0), .., pi_i(P-1)]` with `query`
/// set on exactly one node. Blocks are composed by doubling: in round `k` a
/// node with exactly `k` trailing zeros ships its composed block to
/// `i - 2^k`, so node 0 holds the full composition after `ceil(log2 n)`
/// levels. A level takes `ceil(P / n)` rounds, `n` words each. Two more
/// rounds serve the query.
#[derive(Debug, Clone, Copy)]
pub struct PointerJumping {
    /// `P`, the permutation size.
    pub elems: usize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PjState {
    slot: usize,
    n: usize,
    /// `comp[x]`: image of `x` under the composition of this node's block.
    comp: Vec<Word>,
    query: Option<Word>,
    /// Node 0 only: `(i', comp(p))` once the query arrived.
    reply: Option<(usize, Word)>,
    /// Words of the incoming block received so far in this level.
    upper: Vec<Word>,
}

fn levels(n: usize) -> usize {
    ceil_log2(n as u64) as usize
}

fn trailing(slot: usize) -> usize {
    if slot == 0 {
        usize::MAX
    } else {
        slot.trailing_zeros() as usize
    }
}

impl PjState {
    fn per_level(&self) -> usize {
        self.comp.len().div_ceil(self.n).max(1)
    }

    /// Rounds before the query.
    fn blocks_end(&self) -> usize {
        levels(self.n) * self.per_level()
    }

    /// Words `lo..hi` of the block go out in `round`, if any.
    fn part(&self, round: usize) -> (usize, usize) {
        let sub = round % self.per_level();
        let lo = (sub * self.n).min(self.comp.len());
        (lo, (lo + self.n).min(self.comp.len()))
    }

    fn last_part(&self, round: usize) -> bool {
        round % self.per_level() == self.per_level() - 1
    }

    fn sends_block(&self, round: usize) -> bool {
        round < self.blocks_end() && trailing(self.slot) == round / self.per_level()
    }

    fn receives_block(&self, round: usize) -> bool {
        let level = round / self.per_level();
        round < self.blocks_end()
            && trailing(self.slot) > level
            && self.slot + (1 << level) < self.n
    }
}

impl Protocol for PointerJumping {
    type State = PjState;

    fn name(&self) -> &str {
        "pointer-jumping"
    }

    fn model(&self) -> RoundModel {
        RoundModel::CliqueRouting
    }

    fn init(&self, ctx: NodeCtx, input: &[Word], _rng: &mut RngStream) -> Step<PjState> {
        Step::Continue(PjState {
            slot: ctx.node.slot,
            n: ctx.n,
            comp: input[2..].to_vec(),
            query: (input[0] != 0).then_some(input[1]),
            reply: None,
            upper: Vec::new(),
        })
    }

    fn send(&self, s: &PjState, round: usize) -> Vec<(usize, Word)> {
        let l = s.blocks_end();
        if s.sends_block(round) {
            let dst = s.slot - (1 << (round / s.per_level()));
            let (lo, hi) = s.part(round);
            return s.comp[lo..hi].iter().map(|&w| (dst, w)).collect();
        }
        match (round, s.query, s.reply) {
            (r, Some(p), _) if r == l => vec![(0, p)],
            (r, _, Some((dst, v))) if r == l + 1 => vec![(dst, v)],
            _ => Vec::new(),
        }
    }

    fn receive(
        &self,
        mut s: PjState,
        round: usize,
        inbox: &[(usize, Word)],
        _rng: &mut RngStream,
    ) -> Step<PjState> {
        let l = s.blocks_end();
        let sent = round - 1;
        if s.receives_block(sent) {
            s.upper.extend(inbox.iter().map(|&(_, w)| w));
            if s.last_part(sent) {
                let upper = std::mem::take(&mut s.upper);
                for x in s.comp.iter_mut() {
                    *x = upper[*x as usize];
                }
            }
        }
        if s.sends_block(sent) && s.last_part(sent) && s.query.is_none() {
            return Step::Done(Vec::new());
        }
        if sent == l && s.slot == 0 {
            if let Some(&(src, p)) = inbox.first() {
                s.reply = Some((src, s.comp[p as usize]));
            }
        }
        if sent == l + 1 {
            let out = match s.query {
                Some(_) => inbox.iter().map(|&(_, w)| w).collect(),
                None => Vec::new(),
            };
            return Step::Done(out);
        }
        Step::Continue(s)
    }
}

impl MemoryEfficient for PointerJumping {
    fn memory_bound(&self, _n: usize) -> usize {
        2 * self.elems + 4
    }

    fn encode(&self, s: &PjState) -> Vec<Word> {
        let mut w = vec![
            s.query.map_or(0, |p| p + 1),
            s.reply.map_or(0, |(dst, _)| dst as Word + 1),
            s.reply.map_or(0, |(_, v)| v),
            s.comp.len() as Word,
        ];
        w.extend(&s.comp);
        w.extend(&s.upper);
        w
    }

    fn decode(&self, ctx: NodeCtx, w: &[Word]) -> PjState {
        let p = w[3] as usize;
        PjState {
            slot: ctx.node.slot,
            n: ctx.n,
            query: w[0].checked_sub(1),
            reply: w[1].checked_sub(1).map(|dst| (dst as usize, w[2])),
            comp: w[4..4 + p].to_vec(),
            upper: w[4 + p..].to_vec(),
        }
    }

    fn send_count(&self, s: &PjState, round: usize) -> usize {
        self.send(s, round).len()
    }

    fn recv_count(&self, s: &PjState, round: usize) -> usize {
        let l = s.blocks_end();
        if s.receives_block(round) {
            let (lo, hi) = s.part(round);
            hi - lo
        } else if (round == l && s.slot == 0) || (round == l + 1 && s.query.is_some()) {
            1
        } else {
            0
        }
    }
}

/// A random instance with `p_elems` elements per permutation.
pub fn random_inputs(n: usize, p_elems: usize, rng: &mut impl Rng) -> Vec<Vec<Word>> {
    let query = rng.gen_range(0..n);
    let pointer = rng.gen_range(0..p_elems) as Word;
    (0..n)
        .map(|i| {
            let mut perm: Vec<Word> = (0..p_elems as Word).collect();
            perm.shuffle(rng);
            let mut input = vec![(i == query) as Word, if i == query { pointer } else { 0 }];
            input.extend(perm);
            input
        })
        .collect()
}

/// Composition applied sequentially: the expected output of the query node.
pub fn oracle(inputs: &[Vec<Word>]) -> (usize, Word) {
    let query = inputs
        .iter()
        .position(|i| i[0] != 0)
        .expect("no query node");
    let mut p = inputs[query][1];
    for input in inputs {
        p = input[2 + p as usize];
    }
    (query, p)
}
