use std::io::{self, Write};

use crate::error::{ModelViolation, PViolated, Side};

use super::protocol::Message;

/// Default multiplier for the routing primitive: a request with per-machine
/// bound X is charged `C_ROUTE * ceil(X / n)` rounds.
pub const C_ROUTE: u64 = 2;

/// Budget enforced by a single committed round.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Budget {
    /// At most one word per ordered machine pair.
    PerPair,
    /// At most `n` words sent and `n` received per machine.
    PerMachine,
}

#[derive(Debug, Clone, Copy)]
pub struct LedgerConfig {
    pub c_route: u64,
    /// Whether machine-to-self words count toward the budgets.
    pub count_self_messages: bool,
}

impl Default for LedgerConfig {
    fn default() -> Self {
        LedgerConfig {
            c_route: C_ROUTE,
            count_self_messages: true,
        }
    }
}

/// Summary of one accepted communication step, kept for auditing.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LedgerEntry {
    Direct {
        budget: Budget,
        max_pair: usize,
        max_send: usize,
        max_recv: usize,
    },
    Routed {
        x: u64,
        max_send: u64,
        max_recv: u64,
        charged: u64,
    },
    Rejected {
        x: u64,
    },
}

/// One routed job message, as written to the trace dump.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TraceRecord {
    pub round: u64,
    pub src_machine: usize,
    pub dst_machine: usize,
    pub job: usize,
    pub src_slot: usize,
    pub dst_slot: usize,
    pub payload: u64,
}

impl TraceRecord {
    pub fn write_csv(&self, w: &mut impl Write) -> io::Result<()> {
        writeln!(
            w,
            "{},{},{},{},{},{},{}",
            self.round,
            self.src_machine,
            self.dst_machine,
            self.job,
            self.src_slot,
            self.dst_slot,
            self.payload
        )
    }
}

/// Round accounting for `n` machines: every communication step passes
/// through here and is either accepted and charged or rejected.
#[derive(Debug, Clone)]
pub struct RoundLedger {
    n: usize,
    config: LedgerConfig,
    charged_rounds: u64,
    entries: Vec<LedgerEntry>,
    trace: Option<Vec<TraceRecord>>,
}

/// Per-machine outgoing batches: `batch[i]` lists `(dst_machine, item)`.
pub type Batch<T> = Vec<Vec<(usize, T)>>;
/// Per-machine inboxes: `inbox[i]` lists `(src_machine, item)`.
pub type Inboxes<T> = Vec<Vec<(usize, T)>>;

impl RoundLedger {
    pub fn new(n: usize) -> Self {
        Self::with_config(n, LedgerConfig::default())
    }

    pub fn with_config(n: usize, config: LedgerConfig) -> Self {
        assert!(n >= 1, "a clique needs at least one machine");
        RoundLedger {
            n,
            config,
            charged_rounds: 0,
            entries: Vec::new(),
            trace: None,
        }
    }

    pub fn enable_trace(&mut self) {
        self.trace.get_or_insert_with(Vec::new);
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn config(&self) -> LedgerConfig {
        self.config
    }

    pub fn charged_rounds(&self) -> u64 {
        self.charged_rounds
    }

    pub fn entries(&self) -> &[LedgerEntry] {
        &self.entries
    }

    pub fn trace(&self) -> Option<&[TraceRecord]> {
        self.trace.as_deref()
    }

    pub fn take_trace(&mut self) -> Option<Vec<TraceRecord>> {
        self.trace.take()
    }

    /// Charge rounds spent on purely local bookkeeping that the model
    /// still accounts for (none of the built-in algorithms need this).
    pub fn charge(&mut self, rounds: u64) {
        self.charged_rounds += rounds;
    }

    fn counts<T>(&self, batch: &Batch<T>) -> (Vec<usize>, Vec<usize>) {
        let mut send = vec![0usize; self.n];
        let mut recv = vec![0usize; self.n];
        for (src, out) in batch.iter().enumerate() {
            for (dst, _) in out {
                if *dst == src && !self.config.count_self_messages {
                    continue;
                }
                send[src] += 1;
                recv[*dst] += 1;
            }
        }
        (send, recv)
    }

    fn deliver<T>(&self, batch: Batch<T>) -> Inboxes<T> {
        let mut inboxes: Inboxes<T> = (0..self.n).map(|_| Vec::new()).collect();
        for (src, out) in batch.into_iter().enumerate() {
            for (dst, item) in out {
                inboxes[dst].push((src, item));
            }
        }
        inboxes
    }

    fn check_shape<T>(&self, batch: &Batch<T>) {
        assert_eq!(batch.len(), self.n, "batch must have one entry per machine");
        for out in batch {
            for (dst, _) in out {
                assert!(*dst < self.n, "destination machine {dst} out of range");
            }
        }
    }

    /// Execute one synchronous round. On success the round is charged and
    /// the words are delivered; on violation nothing is charged.
    pub fn commit_round<T>(
        &mut self,
        batch: Batch<T>,
        budget: Budget,
    ) -> Result<Inboxes<T>, ModelViolation> {
        self.check_shape(&batch);
        let round = self.charged_rounds;
        let mut max_pair = 0;
        if budget == Budget::PerPair {
            let mut per_dst = vec![0usize; self.n];
            for (src, out) in batch.iter().enumerate() {
                per_dst.iter_mut().for_each(|c| *c = 0);
                for (dst, _) in out {
                    if *dst == src && !self.config.count_self_messages {
                        continue;
                    }
                    per_dst[*dst] += 1;
                    if per_dst[*dst] > 1 {
                        return Err(ModelViolation::Pair {
                            round,
                            src,
                            dst: *dst,
                            words: out.iter().filter(|(d, _)| d == dst).count(),
                        });
                    }
                }
                max_pair = max_pair.max(per_dst.iter().copied().max().unwrap_or(0));
            }
        }
        let (send, recv) = self.counts(&batch);
        for m in 0..self.n {
            for (side, words) in [(Side::Send, send[m]), (Side::Receive, recv[m])] {
                if words > self.n {
                    return Err(ModelViolation::Machine {
                        round,
                        machine: m,
                        side,
                        words,
                        budget: self.n,
                    });
                }
            }
        }
        self.entries.push(LedgerEntry::Direct {
            budget,
            max_pair,
            max_send: send.iter().copied().max().unwrap_or(0),
            max_recv: recv.iter().copied().max().unwrap_or(0),
        });
        self.charged_rounds += 1;
        Ok(self.deliver(batch))
    }

    /// Routing primitive: delivers every word iff each machine sends at most
    /// `x` and receives at most `x` words; charged `c_route * ceil(x / n)`
    /// rounds. If the property fails nothing is delivered and the single
    /// aggregate round used for the check is charged.
    pub fn route<T>(&mut self, batch: Batch<T>, x: u64) -> Result<Inboxes<T>, PViolated> {
        self.check_shape(&batch);
        let x = x.max(1);
        let (send, recv) = self.counts(&batch);
        let mut loads = recv
            .iter()
            .enumerate()
            .map(|(m, &l)| (m, Side::Receive, l))
            .chain(send.iter().enumerate().map(|(m, &l)| (m, Side::Send, l)));
        if let Some((machine, side, load)) = loads.find(|&(_, _, l)| l as u64 > x) {
            self.entries.push(LedgerEntry::Rejected { x });
            self.charged_rounds += 1;
            return Err(PViolated {
                machine,
                side,
                load: load as u64,
                x,
            });
        }
        let charged = self.config.c_route * x.div_ceil(self.n as u64);
        self.entries.push(LedgerEntry::Routed {
            x,
            max_send: send.iter().copied().max().unwrap_or(0) as u64,
            max_recv: recv.iter().copied().max().unwrap_or(0) as u64,
            charged,
        });
        self.charged_rounds += charged;
        Ok(self.deliver(batch))
    }

    fn record(&mut self, batch: &Batch<Message>) {
        let round = self.charged_rounds;
        if let Some(trace) = self.trace.as_mut() {
            for (src, out) in batch.iter().enumerate() {
                for (dst, msg) in out {
                    trace.push(TraceRecord {
                        round,
                        src_machine: src,
                        dst_machine: *dst,
                        job: msg.src.job,
                        src_slot: msg.src.slot,
                        dst_slot: msg.dst.slot,
                        payload: msg.payload,
                    });
                }
            }
        }
    }

    /// [`commit_round`](Self::commit_round) for job messages, recorded in the trace.
    pub fn commit_messages(
        &mut self,
        batch: Batch<Message>,
        budget: Budget,
    ) -> Result<Inboxes<Message>, ModelViolation> {
        let before = self.trace.as_ref().map_or(0, Vec::len);
        self.record(&batch);
        let out = self.commit_round(batch, budget);
        if out.is_err() {
            if let Some(t) = self.trace.as_mut() {
                t.truncate(before);
            }
        }
        out
    }

    /// [`route`](Self::route) for job messages, recorded in the trace.
    pub fn route_messages(
        &mut self,
        batch: Batch<Message>,
        x: u64,
    ) -> Result<Inboxes<Message>, PViolated> {
        let before = self.trace.as_ref().map_or(0, Vec::len);
        self.record(&batch);
        let out = self.route(batch, x);
        if out.is_err() {
            if let Some(t) = self.trace.as_mut() {
                t.truncate(before);
            }
        }
        out
    }

    /// Re-check every accepted entry against the model budgets.
    pub fn audit(&self) -> Result<(), String> {
        for (k, e) in self.entries.iter().enumerate() {
            match *e {
                LedgerEntry::Direct {
                    budget,
                    max_pair,
                    max_send,
                    max_recv,
                } => {
                    if budget == Budget::PerPair && max_pair > 1 {
                        return Err(format!("entry {k}: pair load {max_pair}"));
                    }
                    if max_send > self.n || max_recv > self.n {
                        return Err(format!("entry {k}: machine load {max_send}/{max_recv}"));
                    }
                }
                LedgerEntry::Routed {
                    x,
                    max_send,
                    max_recv,
                    ..
                } => {
                    if max_send > x || max_recv > x {
                        return Err(format!("entry {k}: routed load above X={x}"));
                    }
                }
                LedgerEntry::Rejected { .. } => {}
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn empty(n: usize) -> Batch<u64> {
        (0..n).map(|_| Vec::new()).collect()
    }

    #[test]
    fn empty_batch_charges_one_round() {
        let mut l = RoundLedger::new(4);
        let inbox = l.commit_round(empty(4), Budget::PerPair).unwrap();
        assert_eq!(l.charged_rounds(), 1);
        assert!(inbox.iter().all(Vec::is_empty));
    }

    #[test]
    fn full_pattern_saturates_budget() {
        let n = 5;
        let mut l = RoundLedger::new(n);
        let batch: Batch<u64> = (0..n)
            .map(|i| (0..n).map(|j| (j, (i * n + j) as u64)).collect())
            .collect();
        let inbox = l.commit_round(batch, Budget::PerPair).unwrap();
        for (j, inb) in inbox.iter().enumerate() {
            let srcs: Vec<usize> = inb.iter().map(|(s, _)| *s).collect();
            assert_eq!(srcs, (0..n).collect::<Vec<_>>());
            assert!(inb.iter().all(|(s, w)| *w == (s * n + j) as u64));
        }
        l.audit().unwrap();
    }

    #[test]
    fn two_words_on_a_pair_is_a_violation() {
        let mut l = RoundLedger::new(3);
        let mut batch = empty(3);
        batch[1] = vec![(2, 10), (2, 11)];
        let err = l.commit_round(batch, Budget::PerPair).unwrap_err();
        assert_eq!(
            err,
            ModelViolation::Pair {
                round: 0,
                src: 1,
                dst: 2,
                words: 2
            }
        );
        assert_eq!(l.charged_rounds(), 0);
    }

    #[test]
    fn per_machine_budget_allows_repeated_pairs() {
        let mut l = RoundLedger::new(3);
        let mut batch = empty(3);
        batch[0] = vec![(1, 1), (1, 2), (1, 3)];
        l.commit_round(batch, Budget::PerMachine).unwrap();
        let mut batch = empty(3);
        batch[0] = vec![(1, 1), (1, 2), (1, 3), (2, 4)];
        assert!(matches!(
            l.commit_round(batch, Budget::PerMachine),
            Err(ModelViolation::Machine {
                side: Side::Send,
                ..
            })
        ));
    }

    #[test]
    fn self_messages_optionally_free() {
        let cfg = LedgerConfig {
            count_self_messages: false,
            ..LedgerConfig::default()
        };
        let mut l = RoundLedger::with_config(2, cfg);
        let batch = vec![vec![(0, 1), (0, 2), (1, 3)], vec![]];
        l.commit_round(batch, Budget::PerPair).unwrap();
    }

    #[test]
    fn route_charges_ceiling_and_rejects() {
        let n = 4;
        let mut l = RoundLedger::new(n);
        // every machine sends one word to machine 0, X = n
        let batch: Batch<u64> = (0..n).map(|i| vec![(0, i as u64)]).collect();
        let inbox = l.route(batch, n as u64).unwrap();
        assert_eq!(inbox[0].len(), n);
        assert_eq!(l.charged_rounds(), C_ROUTE);

        let mut batch = empty(n);
        batch[0] = (0..2 * n).map(|k| (1, k as u64)).collect();
        let err = l.route(batch, n as u64).unwrap_err();
        assert_eq!(err.side, Side::Receive);
        assert_eq!(err.machine, 1);
        assert_eq!(l.charged_rounds(), C_ROUTE + 1);
    }
}
