//! Schedulers running a set of jobs concurrently on one clique.

mod delay;
mod deterministic;
mod naive;
mod shuffle;

pub use delay::{run_delay, run_delay_doubling, sample_delays, DelayWindow};
pub use deterministic::{bucket_target, run_deterministic, split_buckets, C_BAL};
pub use naive::{measure_profile, run_naive};
pub use shuffle::{phase_load_bound, run_shuffle, shuffle_plan};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::metrics::Metrics;
use crate::sim::{
    from_inboxes, to_batch, Batch, JobInstance, JobTable, LedgerConfig, Message, NodeRef,
    RoundLedger, TraceRecord, Word,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SchedulerKind {
    Naive,
    Deterministic,
    Shuffle,
    Delay,
    DelayDoubling,
}

impl SchedulerKind {
    pub const ALL: [SchedulerKind; 5] = [
        SchedulerKind::Naive,
        SchedulerKind::Deterministic,
        SchedulerKind::Shuffle,
        SchedulerKind::Delay,
        SchedulerKind::DelayDoubling,
    ];

    pub fn name(self) -> &'static str {
        match self {
            SchedulerKind::Naive => "naive",
            SchedulerKind::Deterministic => "deterministic",
            SchedulerKind::Shuffle => "shuffle",
            SchedulerKind::Delay => "delay",
            SchedulerKind::DelayDoubling => "delay-doubling",
        }
    }
}

/// Frozen scheduler constants.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Constants {
    /// Shuffle: input and output words allowed per node, in units of `n`.
    pub c_io: u64,
    /// Shuffle phase bound `X = shuffle_msg * ceil(m^r / n) + shuffle_log * ceil(n ln n)`.
    pub shuffle_msg: u64,
    pub shuffle_log: u64,
    /// Delay phase bound `X = c_del * ceil(cap * n / D)`.
    pub c_del: u64,
    /// Delay phase bound `X = delay_low * ceil(n ln n)` when `D <= 1`.
    pub delay_low: u64,
    /// Capacity guesses tried by the doubling variant.
    pub max_attempts: u32,
}

impl Default for Constants {
    fn default() -> Self {
        Constants {
            c_io: 4,
            shuffle_msg: 3,
            shuffle_log: 10,
            c_del: 21,
            delay_low: 2,
            max_attempts: 64,
        }
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub struct RunOptions {
    pub seed: u64,
    pub trace: bool,
    pub ledger: LedgerConfig,
    pub constants: Constants,
    /// Test hook: the shuffle scheduler uses identity permutations.
    pub identity_shuffle: bool,
    /// Capacity bound handed to the delay scheduler. When absent it is
    /// taken from a standalone profile of the job set.
    pub capacity_bound: Option<u64>,
}

impl RunOptions {
    pub fn seeded(seed: u64) -> Self {
        RunOptions {
            seed,
            ..Default::default()
        }
    }

    pub(crate) fn ledger(&self, n: usize) -> RoundLedger {
        let mut ledger = RoundLedger::with_config(n, self.ledger);
        if self.trace {
            ledger.enable_trace();
        }
        ledger
    }
}

/// Run `jobs` on an `n`-machine clique with the chosen scheduler.
pub fn run(
    kind: SchedulerKind,
    jobs: &[JobInstance],
    n: usize,
    opts: &RunOptions,
) -> Result<RunOutput> {
    match kind {
        SchedulerKind::Naive => run_naive(jobs, n, opts),
        SchedulerKind::Deterministic => run_deterministic(jobs, n, opts),
        SchedulerKind::Shuffle => run_shuffle(jobs, n, opts),
        SchedulerKind::Delay => {
            let cap = match opts.capacity_bound {
                Some(c) => c,
                None => measure_profile(jobs, n, opts.seed)?
                    .capacity()
                    .ceil()
                    .max(1),
            };
            run_delay(jobs, n, opts, cap)
        }
        SchedulerKind::DelayDoubling => run_delay_doubling(jobs, n, opts),
    }
}

/// Outputs of every node (`outputs[j][slot]`) and the run's accounting.
#[derive(Debug)]
pub struct RunOutput {
    pub outputs: Vec<Vec<Vec<Word>>>,
    pub metrics: Metrics,
    pub ledger: RoundLedger,
    pub trace: Option<Vec<TraceRecord>>,
}

impl RunOutput {
    pub(crate) fn new(
        outputs: Vec<Vec<Vec<Word>>>,
        profile: &crate::metrics::Profile,
        mut ledger: RoundLedger,
    ) -> Self {
        let metrics = Metrics::from_profile(profile, ledger.charged_rounds());
        let trace = ledger.take_trace();
        RunOutput {
            outputs,
            metrics,
            ledger,
            trace,
        }
    }
}

/// `ceil(n ln n)`.
pub fn n_ln_n(n: usize) -> u64 {
    let n = n as f64;
    (n * n.ln()).ceil() as u64
}

/// Largest number of words any machine sends or receives in `batch`.
pub(crate) fn max_load<T>(batch: &Batch<T>) -> u64 {
    let mut recv = vec![0u64; batch.len()];
    let mut worst = 0;
    for out in batch {
        worst = worst.max(out.len() as u64);
        for (dst, _) in out {
            recv[*dst] += 1;
        }
    }
    worst.max(recv.into_iter().max().unwrap_or(0))
}

/// Sending Step of the current round of every job in `active`, routed in a
/// single call with bound `x`, followed by the Receiving and Computation
/// steps. Returns the largest per-machine load of the phase.
pub(crate) fn routed_phase(
    table: &mut JobTable<'_>,
    ledger: &mut RoundLedger,
    active: &[usize],
    place: impl Fn(NodeRef) -> usize,
    x: u64,
    seed: u64,
    phase: usize,
) -> Result<u64> {
    let mut all = Vec::new();
    for &j in active {
        all.extend(table.sends(j)?);
    }
    let batch = to_batch(table.n(), all, place);
    let load = max_load(&batch);
    let inboxes = ledger
        .route_messages(batch, x)
        .map_err(|violation| Error::RoutingOverflow {
            seed,
            phase,
            violation,
        })?;
    let mut per_job: Vec<Vec<Message>> = vec![Vec::new(); table.t()];
    for m in from_inboxes(inboxes) {
        per_job[m.src.job].push(m);
    }
    for &j in active {
        table.finish_round(j, std::mem::take(&mut per_job[j]));
    }
    Ok(load)
}
