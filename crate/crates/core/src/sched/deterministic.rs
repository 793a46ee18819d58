use std::collections::BTreeMap;
use std::ops::Range;

use crate::collectives::{all_gather, multiple_broadcast, nary_search};
use crate::error::{Error, Result, Side};
use crate::sim::{to_batch, JobInstance, JobTable, NodeRef, RoundLedger, StateCodec, Word};

use super::{RunOptions, RunOutput};

/// Most buckets a machine hosts in one round, and the slack factor on the
/// migration bound.
pub const C_BAL: usize = 5;

/// Split items `0..s.len()` into at most `k` consecutive ranges.
///
/// A range is closed as soon as its `s`-sum exceeds `2S/k` or its `t`-sum
/// exceeds `2T/k`. Fewer than `k/2` ranges can exceed either threshold, so
/// at most `k` ranges are formed, and each sum stays below
/// `2S/k + max s` (resp. `2T/k + max t`).
pub fn split_buckets(s: &[u64], t: &[u64], k: usize) -> Vec<Range<usize>> {
    assert_eq!(s.len(), t.len());
    assert!(k >= 1);
    let total_s: u64 = s.iter().sum();
    let total_t: u64 = t.iter().sum();
    let k = k as u64;
    let mut out = Vec::new();
    let (mut lo, mut sum_s, mut sum_t) = (0, 0u64, 0u64);
    for j in 0..s.len() {
        sum_s += s[j];
        sum_t += t[j];
        if sum_s * k > 2 * total_s || sum_t * k > 2 * total_t {
            out.push(lo..j + 1);
            (lo, sum_s, sum_t) = (j + 1, 0, 0);
        }
    }
    if lo < s.len() {
        out.push(lo..s.len());
    }
    out
}

/// Target machine of bucket `i'` of machine `i`, given every machine's
/// bucket count: `floor((i' + sum_{i'' < i} k_i'') / C_BAL)`.
pub fn bucket_target(counts: &[usize], i: usize, i_prime: usize) -> usize {
    (i_prime + counts[..i].iter().sum::<usize>()) / C_BAL
}

fn codecs(jobs: &[JobInstance]) -> Result<Vec<&dyn StateCodec>> {
    jobs.iter()
        .enumerate()
        .map(|(j, job)| {
            job.protocol
                .codec()
                .ok_or_else(|| Error::NotMemoryEfficient {
                    job: j,
                    name: job.protocol.name().to_string(),
                })
        })
        .collect()
}

/// Machine of every node in a chunk: `place[j - lo][slot]`.
struct Placement {
    lo: usize,
    place: Vec<Vec<usize>>,
}

impl Placement {
    fn of(&self, v: NodeRef) -> usize {
        self.place[v.job - self.lo][v.slot]
    }
}

/// Words in transit during a migration: `(job, slot, word)`.
type Tagged = (usize, usize, Word);

struct Scheduler<'t, 'a> {
    table: &'t mut JobTable<'a>,
    ledger: RoundLedger,
    codecs: Vec<&'a dyn StateCodec>,
    n: usize,
    m: usize,
    chunks: u64,
}

impl Scheduler<'_, '_> {
    /// Declared `(s, t)` of every node for the current round, `[slot][job]`.
    fn declared(&self) -> (Vec<Vec<u64>>, Vec<Vec<u64>>) {
        let t = self.table.t();
        let mut s = vec![vec![0u64; t]; self.n];
        let mut r = vec![vec![0u64; t]; self.n];
        for j in 0..t {
            let round = self.table.round(j);
            for slot in 0..self.n {
                if let Some(state) = self.table.state(j, slot) {
                    s[slot][j] = self.codecs[j].send_count(state, round) as u64;
                    r[slot][j] = self.codecs[j].recv_count(state, round) as u64;
                }
            }
        }
        (s, r)
    }

    /// Split the jobs into consecutive chunks, each closed by the first
    /// prefix of round messages reaching `n^2`.
    fn chunk(&mut self, s: &[Vec<u64>]) -> Result<Vec<Range<usize>>> {
        let t = self.table.t();
        let x = (self.n * self.n) as u64;
        let mut out = Vec::new();
        let mut start = 0;
        while start < t {
            let suffix: Vec<Vec<u64>> = s.iter().map(|row| row[start..].to_vec()).collect();
            let end = match nary_search(&mut self.ledger, &suffix, x)? {
                Some(k) => start + k + 1,
                None => t,
            };
            out.push(start..end);
            start = end;
        }
        Ok(out)
    }

    /// One epoch: every live job advances by one round.
    fn epoch(&mut self) -> Result<()> {
        let (s, r) = self.declared();
        for range in self.chunk(&s)? {
            self.chunks += 1;
            self.small_round(range, &s, &r)?;
        }
        Ok(())
    }

    /// Buckets of every machine, made globally known through one multiple
    /// broadcast of their end indices; returns the resulting placement.
    fn place(&mut self, range: &Range<usize>, s: &[Vec<u64>], r: &[Vec<u64>]) -> Result<Placement> {
        let n = self.n as u64;
        let sets: Vec<Vec<Word>> = (0..self.n)
            .map(|i| {
                let sv = &s[i][range.clone()];
                let rv = &r[i][range.clone()];
                let load = sv.iter().sum::<u64>().max(rv.iter().sum());
                let k = load.div_ceil(n).max(1) as usize;
                split_buckets(sv, rv, k)
                    .into_iter()
                    .map(|b| ((i as Word) << 32) | b.end as Word)
                    .collect()
            })
            .collect();
        let known = multiple_broadcast(&mut self.ledger, &sets)?;
        let mut ends = vec![Vec::new(); self.n];
        for w in known {
            ends[(w >> 32) as usize].push((w & 0xffff_ffff) as usize);
        }
        let counts: Vec<usize> = ends.iter().map(Vec::len).collect();
        let total: usize = counts.iter().sum();
        if total > C_BAL * self.n {
            return Err(Error::Invariant(format!(
                "{total} buckets exceed {C_BAL}n for jobs {range:?}"
            )));
        }
        let mut place = vec![vec![0; self.n]; range.len()];
        for (i, ends) in ends.iter().enumerate() {
            let mut lo = 0;
            for (b, &hi) in ends.iter().enumerate() {
                let target = bucket_target(&counts, i, b);
                for row in &mut place[lo..hi] {
                    row[i] = target;
                }
                lo = hi;
            }
        }
        Ok(Placement {
            lo: range.start,
            place,
        })
    }
}

impl Scheduler<'_, '_> {
    /// Move the live states of the chunk between their home machines and
    /// `placement`, encoded, in one routing call with `X = C_BAL |J| M`.
    /// Inbound moves also carry the outputs of nodes in `finished`.
    fn migrate(
        &mut self,
        range: &Range<usize>,
        placement: &Placement,
        outbound: bool,
        finished: &[NodeRef],
    ) -> Result<()> {
        let mut batch: Vec<Vec<(usize, Tagged)>> = vec![Vec::new(); self.n];
        let mut moved = Vec::new();
        let mut push = |v: NodeRef, words: &[Word], limit: usize| {
            if words.len() > limit {
                return Err(Error::EncodingOverflow {
                    node: v,
                    words: words.len(),
                    limit,
                });
            }
            let (from, to) = if outbound {
                (v.slot, placement.of(v))
            } else {
                (placement.of(v), v.slot)
            };
            batch[from].extend(words.iter().map(|&w| (to, (v.job, v.slot, w))));
            Ok(())
        };
        for j in range.clone() {
            for slot in 0..self.n {
                if let Some(state) = self.table.state(j, slot) {
                    let v = NodeRef::new(slot, j);
                    push(v, &self.codecs[j].encode(state), self.m)?;
                    moved.push(v);
                }
            }
        }
        for &v in finished {
            let out = self.table.output(v.job, v.slot).unwrap_or_default();
            push(v, out, self.m)?;
        }
        let x = (C_BAL * range.len() * self.m) as u64;
        let inboxes = self
            .ledger
            .route(batch, x)
            .map_err(|e| Error::Invariant(format!("state migration: {e}")))?;
        let mut words: BTreeMap<(usize, usize), Vec<Word>> = BTreeMap::new();
        for (_, (j, slot, w)) in inboxes.into_iter().flatten() {
            words.entry((j, slot)).or_default().push(w);
        }
        for v in moved {
            let encoded = words.remove(&(v.job, v.slot)).unwrap_or_default();
            self.table.take_state(v.job, v.slot);
            let ctx = self.table.ctx(v.job, v.slot);
            let state = self.codecs[v.job].decode(ctx, &encoded);
            self.table.put_state(v.job, v.slot, state);
        }
        Ok(())
    }

    fn check_counts(
        &self,
        j: usize,
        msgs: &[crate::sim::Message],
        s: &[Vec<u64>],
        r: &[Vec<u64>],
    ) -> Result<()> {
        let mut sent = vec![0u64; self.n];
        let mut recv = vec![0u64; self.n];
        for m in msgs {
            sent[m.src.slot] += 1;
            recv[m.dst.slot] += 1;
        }
        for slot in 0..self.n {
            for (side, declared, actual) in [
                (Side::Send, s[slot][j], sent[slot]),
                (Side::Receive, r[slot][j], recv[slot]),
            ] {
                if declared != actual {
                    return Err(Error::CountMismatch {
                        node: NodeRef::new(slot, j),
                        round: self.table.round(j),
                        side,
                        declared: declared as usize,
                        actual: actual as usize,
                    });
                }
            }
        }
        Ok(())
    }

    /// A round of a chunk sending at most `2n^2` words: place the nodes in
    /// buckets, move their states, route the round's words between the new
    /// hosts (`X = 4 C_BAL n`), compute, and move the states back.
    fn small_round(&mut self, range: Range<usize>, s: &[Vec<u64>], r: &[Vec<u64>]) -> Result<()> {
        let placement = self.place(&range, s, r)?;
        self.migrate(&range, &placement, true, &[])?;
        let mut all = Vec::new();
        for j in range.clone().filter(|&j| self.table.is_live(j)) {
            let msgs = self.table.sends(j)?;
            self.check_counts(j, &msgs, s, r)?;
            all.extend(msgs);
        }
        let batch = to_batch(self.n, all, |v| placement.of(v));
        let inboxes = self
            .ledger
            .route_messages(batch, (4 * C_BAL * self.n) as u64)
            .map_err(|e| Error::Invariant(format!("bucketed round: {e}")))?;
        let mut per_job: BTreeMap<usize, Vec<crate::sim::Message>> = BTreeMap::new();
        for (_, m) in inboxes.into_iter().flatten() {
            per_job.entry(m.dst.job).or_default().push(m);
        }
        let mut finished = Vec::new();
        let live: Vec<usize> = range.clone().filter(|&j| self.table.is_live(j)).collect();
        for j in live {
            let before: Vec<usize> = (0..self.n)
                .filter(|&i| self.table.node_live(j, i))
                .collect();
            self.table
                .finish_round(j, per_job.remove(&j).unwrap_or_default());
            finished.extend(
                before
                    .into_iter()
                    .filter(|&i| !self.table.node_live(j, i))
                    .map(|i| NodeRef::new(i, j)),
            );
        }
        self.migrate(&range, &placement, false, &finished)
    }
}

/// Deterministic scheduling of memory-efficient jobs.
///
/// Round 0 runs locally. Each epoch simulates one round of every live job,
/// chunk by chunk, then spends one all-gather round on termination
/// detection. Every node starts and ends an epoch on its home machine.
pub fn run_deterministic(jobs: &[JobInstance], n: usize, opts: &RunOptions) -> Result<RunOutput> {
    let codecs = codecs(jobs)?;
    let m = codecs
        .iter()
        .map(|c| c.memory_bound(n))
        .max()
        .unwrap_or(1)
        .max(1);
    let mut table = JobTable::new(jobs, n, opts.seed)?;
    table.init_all();
    let mut sched = Scheduler {
        table: &mut table,
        ledger: opts.ledger(n),
        codecs,
        n,
        m,
        chunks: 0,
    };
    let mut epochs = 0;
    if sched.table.any_live() {
        loop {
            sched.epoch()?;
            epochs += 1;
            let flags: Vec<Word> = (0..n)
                .map(|i| (0..sched.table.t()).any(|j| sched.table.node_live(j, i)) as Word)
                .collect();
            if all_gather(&mut sched.ledger, &flags)?
                .iter()
                .all(|&f| f == 0)
            {
                break;
            }
        }
    }
    let chunks = sched.chunks;
    let ledger = sched.ledger;
    let (outputs, profile) = table.into_outputs()?;
    let mut out = RunOutput::new(outputs, &profile, ledger);
    let a = &mut out.metrics.annotations;
    a.epochs = Some(epochs);
    a.chunks = Some(chunks);
    a.memory_bound = Some(m as u64);
    Ok(out)
}
