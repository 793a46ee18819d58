//! Maximal independent set with a leader node (slot 0), in rounds where
//! every node may send and receive up to `n` words.
//!
//! 1. Degrees go to the leader, which draws a random ranking and returns
//!    each node its rank and the maximum degree; ranks are broadcast.
//! 2. Degree reduction: in iteration `k` active nodes report their active
//!    degree and how many of their edges fall under the rank threshold
//!    `n / Delta^(0.75^k)`. The leader stops the loop once the active
//!    degree drops below `Delta'`. Otherwise it collects those edges (at
//!    most `n` per round), runs greedy steps by rank, and informs the new
//!    members, which tell their neighbours, which tell theirs.
//! 3. On the remaining graph `H` every node draws one random word, learns
//!    its neighbourhood by ball doubling, and simulates a few rounds of the
//!    desire-level MIS algorithm locally.
//! 4. The leader collects whatever is still active and finishes greedily.
//!
//! Node output: `[1]` for members, `[0]` otherwise. The leader appends a
//! flag that is set when the final edge collection exceeded
//! `outlier_factor * n` edges.

use std::collections::{BTreeMap, BTreeSet};

use rand::seq::SliceRandom;
use rand::RngCore;

use super::graph::Graph;
use crate::metrics::ceil_log2;
use crate::sim::{NodeCtx, Protocol, RngStream, RoundModel, Step, Word};

const LEADER: usize = 0;
const ALPHA: f64 = 0.75;

#[derive(Debug, Clone, Copy)]
pub struct Mis {
    /// `Delta'`; defaults to `min(Delta, default_delta_prime(n))`.
    pub delta_prime: Option<usize>,
    pub outlier_factor: usize,
}

impl Default for Mis {
    fn default() -> Self {
        Mis {
            delta_prime: None,
            outlier_factor: 4,
        }
    }
}

/// `max(2, ceil(log2 ceil(log2 n)))`. Larger values leave most of a sparse
/// graph to ball doubling, whose message count grows with the size of the
/// remaining components rather than with `n`.
pub fn default_delta_prime(n: usize) -> usize {
    (ceil_log2(ceil_log2(n as u64)) as usize).max(2)
}

/// Rank threshold of degree-reduction iteration `k` (ranks are `1..=n`).
pub fn threshold(n: usize, delta: usize, k: usize) -> usize {
    if delta <= 1 || k >= 64 {
        return n;
    }
    let d = (delta as f64).powf(ALPHA.powi(k as i32));
    if d < 1.0 + 1.0 / n as f64 {
        return n;
    }
    ((n as f64 / d).floor() as usize).min(n)
}

/// Locally simulated desire-level rounds; each consumes 8 random bits.
pub fn sim_rounds(delta_prime: usize) -> usize {
    (ceil_log2(delta_prime as u64 + 1) as usize).clamp(1, 8)
}

/// Ball-doubling iterations: after `i` of them a node knows every node
/// within distance `2^i - 1`, which must cover `2 * rounds + 2`.
pub fn ball_iterations(delta_prime: usize) -> usize {
    ceil_log2(2 * sim_rounds(delta_prime) as u64 + 3) as usize
}

fn pack(hi: u64, lo: u64) -> Word {
    debug_assert!(lo < 1 << 32 && hi < 1 << 32);
    hi << 32 | lo
}

fn unpack(w: Word) -> (u64, u64) {
    (w >> 32, w & 0xffff_ffff)
}

/// Leader-to-node word: continue flag, edge offset and collection rounds.
fn pack_go(go: bool, offset: usize, rounds: usize) -> Word {
    pack(rounds as u64 | (go as u64) << 31, offset as u64)
}

fn unpack_go(w: Word) -> (bool, usize, usize) {
    let (hi, lo) = unpack(w);
    (hi >> 31 == 1, lo as usize, (hi & 0x7fff_ffff) as usize)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Status {
    Active,
    Member,
    Out,
}

/// What the job does in the round about to be sent.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Phase {
    Degree,
    Rank,
    RankBroadcast,
    Report,
    Go,
    Collect,
    Inform,
    Joined,
    Left,
    BallReport,
    BallGo,
    Stream,
    SimJoined,
    SimLeft,
    WrapReport,
    WrapGo,
    WrapCollect,
    WrapInform,
}

#[derive(Debug, Default)]
struct LeaderData {
    rank: Vec<u64>,
    degrees: Vec<usize>,
    reported: Vec<usize>,
    counts: Vec<usize>,
    active_degree: usize,
    edges: Vec<(usize, usize)>,
    members: Vec<usize>,
    longest: usize,
    grew: bool,
    dest_max: usize,
    outlier: bool,
}

#[derive(Debug)]
pub struct MisState {
    slot: usize,
    n: usize,
    nbrs: Vec<usize>,
    rank: Vec<u64>,
    delta: usize,
    delta_prime: usize,
    active_nbrs: BTreeSet<usize>,
    status: Status,
    /// Status changed in this iteration and neighbours are yet to be told.
    fresh: bool,
    phase: Phase,
    k: usize,
    /// First round of the current multi-round phase and its length.
    base: usize,
    rounds: usize,
    offset: usize,
    // ball doubling on H
    known: BTreeMap<usize, (Word, Vec<usize>)>,
    /// Every known record, for destinations new in this iteration.
    stream: Vec<Word>,
    /// Records learned since the last send, for the other destinations.
    fresh_records: Vec<Word>,
    dest: Vec<(usize, bool)>,
    sent_keys: BTreeSet<usize>,
    grew: bool,
    per_pair: usize,
    inflow: BTreeMap<usize, Vec<Word>>,
    ball_iter: usize,
    leader: Option<Box<LeaderData>>,
}

fn encode_record(out: &mut Vec<Word>, id: usize, rand: Word, nbrs: &[usize]) {
    out.push(pack(nbrs.len() as u64, id as u64));
    out.push(rand);
    for chunk in nbrs.chunks(4) {
        let mut w = 0;
        for (k, &u) in chunk.iter().enumerate() {
            w |= (u as Word) << (16 * k);
        }
        out.push(w);
    }
}

fn decode_records(words: &[Word]) -> Vec<(usize, Word, Vec<usize>)> {
    let mut out = Vec::new();
    let mut pos = 0;
    while pos + 1 < words.len() {
        let (deg, id) = unpack(words[pos]);
        let rand = words[pos + 1];
        pos += 2;
        let mut nbrs = Vec::with_capacity(deg as usize);
        for k in 0..deg as usize {
            nbrs.push((words[pos + k / 4] >> (16 * (k % 4)) & 0xffff) as usize);
        }
        pos += (deg as usize).div_ceil(4);
        out.push((id as usize, rand, nbrs));
    }
    out
}

/// Desire-level MIS for `rounds` rounds on the known subgraph: a node with
/// desire `2^-j` marks itself when its next random byte is below `256 >> j`
/// and joins when no live neighbour marked; `j` grows when the live
/// neighbourhood's total desire is at least 2 and shrinks (to 1) otherwise.
fn desire_level(known: &BTreeMap<usize, (Word, Vec<usize>)>, me: usize, rounds: usize) -> Status {
    let ids: Vec<usize> = known.keys().copied().collect();
    let index = |id: usize| ids.binary_search(&id).ok();
    let adj: Vec<Vec<usize>> = known
        .values()
        .map(|(_, nbrs)| nbrs.iter().filter_map(|&u| index(u)).collect())
        .collect();
    let rand: Vec<Word> = known.values().map(|&(r, _)| r).collect();
    let m = ids.len();
    let mut alive = vec![true; m];
    let mut joined = vec![false; m];
    let mut j = vec![1u32; m];
    for t in 0..rounds {
        let marked: Vec<bool> = (0..m)
            .map(|x| alive[x] && j[x] <= 8 && ((rand[x] >> (8 * t)) & 0xff) < (256 >> j[x]))
            .collect();
        let next_j: Vec<u32> = (0..m)
            .map(|x| {
                let desire: u64 = adj[x]
                    .iter()
                    .filter(|&&y| alive[y])
                    .map(|&y| (1u64 << 16) >> j[y].min(17))
                    .sum();
                if desire >= 2 << 16 {
                    j[x] + 1
                } else {
                    j[x].saturating_sub(1).max(1)
                }
            })
            .collect();
        let joins: Vec<usize> = (0..m)
            .filter(|&x| marked[x] && !adj[x].iter().any(|&y| marked[y]))
            .collect();
        for x in joins {
            joined[x] = true;
            alive[x] = false;
            for &y in &adj[x] {
                alive[y] = false;
            }
        }
        j = next_j;
    }
    let me = index(me).expect("node missing from its own ball");
    if joined[me] {
        Status::Member
    } else if !alive[me] {
        Status::Out
    } else {
        Status::Active
    }
}

/// Greedy by rank over `candidates`, using only the `edges` given.
fn greedy(candidates: &[usize], edges: &[(usize, usize)], rank: &[u64], n: usize) -> Vec<usize> {
    let mut adj = vec![Vec::new(); n];
    for &(a, b) in edges {
        adj[a].push(b);
        adj[b].push(a);
    }
    let mut order = candidates.to_vec();
    order.sort_by_key(|&v| rank[v]);
    let mut decided = vec![false; n];
    let mut members = Vec::new();
    for v in order {
        if decided[v] {
            continue;
        }
        decided[v] = true;
        members.push(v);
        for &u in &adj[v] {
            decided[u] = true;
        }
    }
    members.sort_unstable();
    members
}

impl MisState {
    fn is_leader(&self) -> bool {
        self.slot == LEADER
    }

    fn leader(&mut self) -> &mut LeaderData {
        self.leader.as_mut().expect("leader data on a non-leader")
    }

    fn threshold(&self) -> usize {
        threshold(self.n, self.delta, self.k)
    }

    /// Edges this node hands to the leader in the current phase.
    fn outgoing_edges(&self) -> Vec<usize> {
        if self.status != Status::Active {
            return Vec::new();
        }
        match self.phase {
            Phase::Report | Phase::Go | Phase::Collect => {
                let thr = self.threshold() as u64;
                let mine = self.rank[self.slot];
                self.active_nbrs
                    .iter()
                    .copied()
                    .filter(|&u| mine < self.rank[u] && self.rank[u] <= thr)
                    .collect()
            }
            _ => self.active_nbrs.range(self.slot + 1..).copied().collect(),
        }
    }

    fn collect_sends(&self, round: usize) -> Vec<(usize, Word)> {
        let q = round - self.base;
        let (lo, hi) = (q * self.n, (q + 1) * self.n);
        self.outgoing_edges()
            .into_iter()
            .enumerate()
            .filter(|&(e, _)| (lo..hi).contains(&(self.offset + e)))
            .map(|(_, u)| (LEADER, u as Word))
            .collect()
    }

    fn notify(&self) -> Vec<(usize, Word)> {
        let wanted = match self.phase {
            Phase::Joined | Phase::SimJoined => Status::Member,
            _ => Status::Out,
        };
        if self.fresh && self.status == wanted {
            self.active_nbrs.iter().map(|&u| (u, 1)).collect()
        } else {
            Vec::new()
        }
    }

    fn refresh_ball(&mut self) {
        self.stream.clear();
        self.fresh_records.clear();
        let old: BTreeSet<usize> = self.dest.iter().map(|&(d, _)| d).collect();
        let mut dest = BTreeSet::new();
        for (&id, (rand, nbrs)) in &self.known {
            encode_record(&mut self.stream, id, *rand, nbrs);
            if !self.sent_keys.contains(&id) {
                encode_record(&mut self.fresh_records, id, *rand, nbrs);
            }
            dest.insert(id);
            dest.extend(nbrs.iter().copied());
        }
        dest.remove(&self.slot);
        self.dest = dest.into_iter().map(|d| (d, !old.contains(&d))).collect();
    }

    fn remove_neighbors(&mut self, inbox: &[(usize, Word)]) -> bool {
        for &(src, _) in inbox {
            self.active_nbrs.remove(&src);
        }
        !inbox.is_empty()
    }
}

impl Protocol for Mis {
    type State = MisState;

    fn name(&self) -> &str {
        "mis"
    }

    fn model(&self) -> RoundModel {
        RoundModel::CliqueRouting
    }

    fn init(&self, ctx: NodeCtx, input: &[Word], _rng: &mut RngStream) -> Step<MisState> {
        assert!(ctx.n <= 1 << 16, "node ids are packed into 16 bits");
        let nbrs = Graph::row_neighbors(input, ctx.n, ctx.node.slot);
        let slot = ctx.node.slot;
        Step::Continue(MisState {
            slot,
            n: ctx.n,
            active_nbrs: nbrs.iter().copied().collect(),
            nbrs,
            rank: Vec::new(),
            delta: 0,
            delta_prime: 0,
            status: Status::Active,
            fresh: false,
            phase: Phase::Degree,
            k: 0,
            base: 0,
            rounds: 0,
            offset: 0,
            known: BTreeMap::new(),
            stream: Vec::new(),
            fresh_records: Vec::new(),
            dest: Vec::new(),
            sent_keys: BTreeSet::new(),
            grew: false,
            per_pair: 0,
            inflow: BTreeMap::new(),
            ball_iter: 0,
            leader: (slot == LEADER).then(Box::default),
        })
    }

    fn send(&self, s: &MisState, round: usize) -> Vec<(usize, Word)> {
        let active = s.status == Status::Active;
        match s.phase {
            Phase::Degree => vec![(LEADER, s.nbrs.len() as Word)],
            Phase::Rank if s.is_leader() => {
                let ld = s.leader.as_ref().expect("leader data");
                (0..s.n)
                    .map(|v| (v, pack(ld.rank[v], s.delta as u64)))
                    .collect()
            }
            Phase::RankBroadcast => (0..s.n).map(|v| (v, s.rank[s.slot])).collect(),
            Phase::Report | Phase::WrapReport if active => {
                let degree = s.active_nbrs.len() as u64;
                vec![(LEADER, pack(degree, s.outgoing_edges().len() as u64))]
            }
            Phase::Go | Phase::WrapGo if s.is_leader() => {
                let ld = s.leader.as_ref().expect("leader data");
                let go = s.phase == Phase::WrapGo || ld.active_degree >= s.delta_prime;
                let mut offset = 0;
                ld.reported
                    .iter()
                    .zip(&ld.counts)
                    .map(|(&v, &c)| {
                        let w = pack_go(go, offset, s.rounds);
                        offset += c;
                        (v, w)
                    })
                    .collect()
            }
            Phase::Collect | Phase::WrapCollect => s.collect_sends(round),
            Phase::Inform | Phase::WrapInform if s.is_leader() => {
                let ld = s.leader.as_ref().expect("leader data");
                ld.members.iter().map(|&v| (v, 1)).collect()
            }
            Phase::Joined | Phase::Left | Phase::SimJoined | Phase::SimLeft => s.notify(),
            Phase::BallReport if active => {
                let longest = if s.dest.iter().any(|&(_, new)| new) {
                    s.stream.len()
                } else {
                    s.fresh_records.len()
                };
                let hi = s.dest.len() as u64 | (s.grew as u64) << 31;
                vec![(LEADER, pack(hi, longest as u64))]
            }
            Phase::BallGo if s.is_leader() => {
                let w = s.ball_go_word();
                let ld = s.leader.as_ref().expect("leader data");
                ld.reported.iter().map(|&v| (v, w)).collect()
            }
            Phase::Stream if active => {
                let q = round - s.base;
                let window = |words: &[Word]| {
                    let lo = (q * s.per_pair).min(words.len());
                    let hi = ((q + 1) * s.per_pair).min(words.len());
                    (lo, hi)
                };
                let mut out = Vec::new();
                for &(d, new) in &s.dest {
                    let words = if new { &s.stream } else { &s.fresh_records };
                    let (lo, hi) = window(words);
                    out.extend(words[lo..hi].iter().map(|&w| (d, w)));
                }
                out
            }
            _ => Vec::new(),
        }
    }

    fn receive(
        &self,
        mut s: MisState,
        round: usize,
        inbox: &[(usize, Word)],
        rng: &mut RngStream,
    ) -> Step<MisState> {
        let sent = round - 1;
        let member_out = |s: &MisState| Step::Done(vec![(s.status == Status::Member) as Word]);
        match s.phase {
            Phase::Degree => {
                if s.is_leader() {
                    let n = s.n;
                    let mut perm: Vec<u64> = (1..=n as u64).collect();
                    perm.shuffle(rng);
                    let ld = s.leader();
                    ld.degrees = inbox.iter().map(|&(_, d)| d as usize).collect();
                    ld.rank = perm;
                    s.delta = s.leader().degrees.iter().copied().max().unwrap_or(0);
                }
                s.phase = Phase::Rank;
            }
            Phase::Rank => {
                let (rank, delta) = unpack(inbox[0].1);
                s.delta = delta as usize;
                s.rank = vec![0; s.n];
                s.rank[s.slot] = rank;
                s.phase = Phase::RankBroadcast;
            }
            Phase::RankBroadcast => {
                for &(src, r) in inbox {
                    s.rank[src] = r;
                }
                s.delta_prime = self
                    .delta_prime
                    .unwrap_or(default_delta_prime(s.n))
                    .min(s.delta);
                s.phase = Phase::Report;
            }
            Phase::Report | Phase::WrapReport => {
                if s.is_leader() {
                    let n = s.n;
                    let ld = s.leader();
                    ld.reported = inbox.iter().map(|&(src, _)| src).collect();
                    ld.counts = inbox.iter().map(|&(_, w)| unpack(w).1 as usize).collect();
                    ld.active_degree = inbox
                        .iter()
                        .map(|&(_, w)| unpack(w).0 as usize)
                        .max()
                        .unwrap_or(0);
                    let total: usize = ld.counts.iter().sum();
                    let nobody = ld.reported.is_empty();
                    s.rounds = total.div_ceil(n);
                    if nobody {
                        return s.finish_leader();
                    }
                }
                s.phase = if s.phase == Phase::Report {
                    Phase::Go
                } else {
                    Phase::WrapGo
                };
            }
            Phase::Go | Phase::WrapGo => {
                let wrap = s.phase == Phase::WrapGo;
                let go = if s.is_leader() {
                    wrap || s.leader.as_ref().unwrap().active_degree >= s.delta_prime
                } else {
                    let (go, offset, rounds) = unpack_go(inbox[0].1);
                    s.offset = offset;
                    s.rounds = rounds;
                    go
                };
                if s.is_leader() && s.status == Status::Active {
                    let (_, offset, _) = unpack_go(inbox[0].1);
                    s.offset = offset;
                }
                if go {
                    s.base = round;
                    if let Some(ld) = s.leader.as_mut() {
                        ld.edges.clear();
                    }
                    s.phase = if wrap {
                        Phase::WrapCollect
                    } else {
                        Phase::Collect
                    };
                    if s.rounds == 0 {
                        s.end_collection(self.outlier_factor);
                    }
                } else {
                    s.start_ball(rng);
                }
            }
            Phase::Collect | Phase::WrapCollect => {
                if let Some(ld) = s.leader.as_mut() {
                    ld.edges
                        .extend(inbox.iter().map(|&(src, u)| (src, u as usize)));
                }
                if sent + 1 == s.base + s.rounds {
                    s.end_collection(self.outlier_factor);
                }
            }
            Phase::Inform => {
                if !inbox.is_empty() {
                    s.status = Status::Member;
                    s.fresh = true;
                }
                s.phase = Phase::Joined;
            }
            Phase::Joined | Phase::SimJoined => {
                let told = s.remove_neighbors(inbox);
                if s.fresh && s.status == Status::Member {
                    s.fresh = false;
                    if !s.is_leader() {
                        return member_out(&s);
                    }
                } else if told && s.status == Status::Active {
                    s.status = Status::Out;
                    s.fresh = true;
                }
                s.phase = if s.phase == Phase::Joined {
                    Phase::Left
                } else {
                    Phase::SimLeft
                };
            }
            Phase::Left | Phase::SimLeft => {
                s.remove_neighbors(inbox);
                if s.fresh {
                    s.fresh = false;
                    if !s.is_leader() {
                        return member_out(&s);
                    }
                }
                if s.phase == Phase::Left {
                    s.k += 1;
                    s.phase = Phase::Report;
                } else {
                    s.phase = Phase::WrapReport;
                }
            }
            Phase::BallReport => {
                if let Some(ld) = s.leader.as_mut() {
                    ld.reported = inbox.iter().map(|&(src, _)| src).collect();
                    ld.longest = inbox
                        .iter()
                        .map(|&(_, w)| unpack(w).1 as usize)
                        .max()
                        .unwrap_or(0);
                    ld.grew = inbox.iter().any(|&(_, w)| unpack(w).0 >> 31 == 1);
                    ld.dest_max = inbox
                        .iter()
                        .map(|&(_, w)| (unpack(w).0 & 0x7fff_ffff) as usize)
                        .max()
                        .unwrap_or(0);
                }
                s.phase = Phase::BallGo;
            }
            Phase::BallGo => {
                let w = if s.is_leader() {
                    s.ball_go_word()
                } else {
                    inbox[0].1
                };
                let (hi, longest) = unpack(w);
                let stop = hi >> 31 == 1;
                let dest_max = (hi & 0x7fff_ffff) as usize;
                if stop {
                    if s.status == Status::Active {
                        s.status = desire_level(&s.known, s.slot, sim_rounds(s.delta_prime));
                        s.fresh = s.status != Status::Active;
                    }
                    s.phase = Phase::SimJoined;
                } else {
                    s.per_pair = (s.n / dest_max.max(1)).max(1);
                    s.rounds = (longest as usize).div_ceil(s.per_pair);
                    s.base = round;
                    s.phase = Phase::Stream;
                    if s.rounds == 0 {
                        s.end_stream();
                    }
                }
            }
            Phase::Stream => {
                for &(src, w) in inbox {
                    s.inflow.entry(src).or_default().push(w);
                }
                if sent + 1 == s.base + s.rounds {
                    s.end_stream();
                }
            }
            Phase::WrapInform => {
                if !inbox.is_empty() {
                    s.status = Status::Member;
                }
                if s.is_leader() {
                    return s.finish_leader();
                }
                return member_out(&s);
            }
        }
        Step::Continue(s)
    }
}

impl MisState {
    fn ball_go_word(&self) -> Word {
        let ld = self.leader.as_ref().expect("leader data");
        let stop =
            self.ball_iter >= ball_iterations(self.delta_prime) || (self.ball_iter > 0 && !ld.grew);
        pack((stop as u64) << 31 | ld.dest_max as u64, ld.longest as u64)
    }

    fn finish_leader(&self) -> Step<MisState> {
        let outlier = self.leader.as_ref().is_some_and(|ld| ld.outlier);
        Step::Done(vec![
            (self.status == Status::Member) as Word,
            outlier as Word,
        ])
    }

    /// Last collection round delivered: the leader decides, everyone moves
    /// on to the inform round.
    fn end_collection(&mut self, outlier_factor: usize) {
        let wrap = self.phase == Phase::WrapCollect;
        self.phase = if wrap {
            Phase::WrapInform
        } else {
            Phase::Inform
        };
        let thr = self.threshold() as u64;
        let n = self.n;
        let Some(ld) = self.leader.as_mut() else {
            return;
        };
        let candidates: Vec<usize> = if wrap {
            ld.outlier = ld.edges.len() > outlier_factor * n;
            ld.reported.clone()
        } else {
            ld.reported
                .iter()
                .copied()
                .filter(|&v| ld.rank[v] <= thr)
                .collect()
        };
        ld.members = greedy(&candidates, &ld.edges, &ld.rank, n);
    }

    fn start_ball(&mut self, rng: &mut RngStream) {
        if self.status == Status::Active {
            let own = (rng.next_u64(), self.active_nbrs.iter().copied().collect());
            self.known.insert(self.slot, own);
            self.refresh_ball();
        }
        self.ball_iter = 0;
        self.phase = Phase::BallReport;
    }

    fn end_stream(&mut self) {
        self.sent_keys = self.known.keys().copied().collect();
        self.grew = false;
        for (_, words) in std::mem::take(&mut self.inflow) {
            for (id, rand, nbrs) in decode_records(&words) {
                if let std::collections::btree_map::Entry::Vacant(e) = self.known.entry(id) {
                    e.insert((rand, nbrs));
                    self.grew = true;
                }
            }
        }
        if self.status == Status::Active {
            self.refresh_ball();
        }
        self.ball_iter += 1;
        self.phase = Phase::BallReport;
    }
}
