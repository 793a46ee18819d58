use rand::seq::SliceRandom;

use crate::collectives::all_gather;
use crate::error::{Error, Result, Side};
use crate::sim::{
    Budget, JobInstance, JobTable, NodeRef, RngStream, RoundLedger, SchedulerDomain, Word,
};

use super::{n_ln_n, routed_phase, Constants, RunOptions, RunOutput};

/// `plan[j][i]`: machine hosting `v[i,j]`. Each row is a uniform
/// permutation drawn by the leader, one stream per job.
pub fn shuffle_plan(t: usize, n: usize, seed: u64, identity: bool) -> Vec<Vec<usize>> {
    (0..t)
        .map(|j| {
            let mut p: Vec<usize> = (0..n).collect();
            if !identity {
                p.shuffle(&mut RngStream::for_scheduler(
                    seed,
                    SchedulerDomain::Shuffle,
                    j as u64,
                    0,
                ));
            }
            p
        })
        .collect()
}

/// Routing bound of a phase in which the jobs send `m_r` words in total.
pub fn phase_load_bound(m_r: u64, n: usize, c: &Constants) -> u64 {
    c.shuffle_msg * m_r.div_ceil(n as u64) + c.shuffle_log * n_ln_n(n)
}

fn io_check(n: usize, c: &Constants, node: NodeRef, side: Side, words: usize) -> Result<()> {
    let limit = c.c_io as usize * n;
    if words > limit {
        return Err(Error::IoViolation {
            node,
            side,
            words,
            limit,
        });
    }
    Ok(())
}

/// Leader hands `perm[i]` to machine `i`, which then broadcasts it.
fn disseminate(ledger: &mut RoundLedger, perm: &[usize]) -> Result<Vec<usize>> {
    let n = ledger.n();
    let mut batch: Vec<Vec<(usize, Word)>> = vec![Vec::new(); n];
    batch[0] = perm
        .iter()
        .enumerate()
        .map(|(i, &p)| (i, p as Word))
        .collect();
    let held = ledger.commit_round(batch, Budget::PerPair)?;
    let mine: Vec<Word> = held.iter().map(|inbox| inbox[0].1).collect();
    Ok(all_gather(ledger, &mine)?
        .into_iter()
        .map(|p| p as usize)
        .collect())
}

/// Move every node's words from `from(i)` to `to(i)` in one routing call
/// bounded by the longest list; returns the delivered lists by slot.
fn move_words(
    ledger: &mut RoundLedger,
    words: Vec<Vec<Word>>,
    from: impl Fn(usize) -> usize,
    to: impl Fn(usize) -> usize,
    x: u64,
) -> Result<Vec<Vec<Word>>> {
    let n = ledger.n();
    let mut batch: Vec<Vec<(usize, (usize, Word))>> = vec![Vec::new(); n];
    for (slot, ws) in words.into_iter().enumerate() {
        batch[from(slot)].extend(ws.into_iter().map(|w| (to(slot), (slot, w))));
    }
    let inboxes = ledger
        .route(batch, x)
        .map_err(|e| Error::Invariant(format!("word shuffle: {e}")))?;
    let mut out = vec![Vec::new(); n];
    for (_, (slot, w)) in inboxes.into_iter().flatten() {
        out[slot].push(w);
    }
    Ok(out)
}

/// Largest list length any machine holds, learnt in one all-gather round.
fn global_max(ledger: &mut RoundLedger, per_machine: Vec<Word>) -> Result<u64> {
    Ok(all_gather(ledger, &per_machine)?
        .into_iter()
        .max()
        .unwrap_or(0))
}

/// Random-shuffle scheduling of I/O-efficient jobs.
///
/// Input shuffling places `v[i,j]` on machine `plan[j][i]`. Each phase then
/// spends two rounds on computing `m^r` and liveness at the leader, and
/// routes the round's words of all jobs at once. Outputs return to their
/// home machines at the end.
pub fn run_shuffle(jobs: &[JobInstance], n: usize, opts: &RunOptions) -> Result<RunOutput> {
    let c = opts.constants;
    let mut table = JobTable::new(jobs, n, opts.seed)?;
    let t = jobs.len();
    for (j, job) in jobs.iter().enumerate() {
        for (slot, input) in job.inputs.iter().enumerate() {
            io_check(n, &c, NodeRef::new(slot, j), Side::Receive, input.len())?;
        }
    }
    let mut ledger = opts.ledger(n);
    let drawn = shuffle_plan(t, n, opts.seed, opts.identity_shuffle);
    let mut plan = Vec::with_capacity(t);
    if t > 0 {
        let longest = (0..n)
            .map(|i| {
                jobs.iter()
                    .map(|job| job.inputs[i].len())
                    .max()
                    .unwrap_or(0) as Word
            })
            .collect();
        let x_in = global_max(&mut ledger, longest)?.max(1);
        for (j, perm) in drawn.iter().enumerate() {
            let perm = disseminate(&mut ledger, perm)?;
            let inputs = move_words(
                &mut ledger,
                jobs[j].inputs.clone(),
                |i| i,
                |i| perm[i],
                x_in,
            )?;
            for (slot, input) in inputs.iter().enumerate() {
                table.init_node(j, slot, input);
            }
            plan.push(perm);
        }
    }
    let place = |v: NodeRef| plan[v.job][v.slot];

    let mut phase = 0;
    let mut max_phase_load = 0;
    // an empty job set charges nothing
    if t > 0 {
        loop {
            let mut words = vec![0 as Word; n];
            let mut live = vec![false; n];
            for j in table.live_jobs() {
                for slot in 0..n {
                    if table.node_live(j, slot) {
                        let host = place(NodeRef::new(slot, j));
                        words[host] += table.sends_of(j, slot)?.len() as Word;
                        live[host] = true;
                    }
                }
            }
            let report: Vec<Word> = words
                .iter()
                .zip(&live)
                .map(|(&w, &l)| w << 1 | l as Word)
                .collect();
            let (m_r, live) = aggregate(&mut ledger, &report)?;
            if !live {
                break;
            }
            let x = phase_load_bound(m_r, n, &c);
            let active = table.live_jobs();
            let load = routed_phase(&mut table, &mut ledger, &active, place, x, opts.seed, phase)?;
            max_phase_load = max_phase_load.max(load);
            phase += 1;
        }
    }

    let mut outputs = Vec::with_capacity(t);
    if t > 0 {
        let mut longest = vec![0 as Word; n];
        for j in 0..t {
            for slot in 0..n {
                let len = table.output(j, slot).map_or(0, <[Word]>::len);
                io_check(n, &c, NodeRef::new(slot, j), Side::Send, len)?;
                let host = place(NodeRef::new(slot, j));
                longest[host] = longest[host].max(len as Word);
            }
        }
        let x_out = global_max(&mut ledger, longest)?.max(1);
        for (j, perm) in plan.iter().enumerate() {
            let held = (0..n)
                .map(|slot| {
                    table
                        .output(j, slot)
                        .map(<[Word]>::to_vec)
                        .unwrap_or_default()
                })
                .collect();
            outputs.push(move_words(&mut ledger, held, |i| perm[i], |i| i, x_out)?);
        }
    }
    let (_, profile) = table.into_outputs()?;
    let mut out = RunOutput::new(outputs, &profile, ledger);
    out.metrics.annotations.phases = Some(phase as u64);
    out.metrics.annotations.max_phase_load = Some(max_phase_load);
    Ok(out)
}

/// Every machine reports `words << 1 | live` to the leader, which
/// broadcasts the total words and whether any node is live.
fn aggregate(ledger: &mut RoundLedger, report: &[Word]) -> Result<(u64, bool)> {
    let n = ledger.n();
    let batch = report.iter().map(|&w| vec![(0, w)]).collect();
    let at_leader = ledger.commit_round(batch, Budget::PerPair)?;
    let (words, live) = at_leader[0].iter().fold((0, false), |(s, l), &(_, w)| {
        (s + (w >> 1), l || w & 1 == 1)
    });
    let summary = words << 1 | live as Word;
    let mut batch: Vec<Vec<(usize, Word)>> = vec![Vec::new(); n];
    batch[0] = (0..n).map(|dst| (dst, summary)).collect();
    let got = ledger.commit_round(batch, Budget::PerPair)?;
    let w = got[0][0].1;
    Ok((w >> 1, w & 1 == 1))
}
