use rand::Rng;

use crate::collectives::{all_gather, multiple_broadcast};
use crate::error::{Error, Result};
use crate::metrics::Profile;
use crate::sim::{JobInstance, JobTable, RngStream, RoundLedger, SchedulerDomain, Word};

use super::{n_ln_n, routed_phase, Constants, RunOptions, RunOutput};

/// Delay window and per-phase routing bound for a capacity guess.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DelayWindow {
    /// Delays are drawn from `0..d`; `d <= 1` means no delays.
    pub d: u64,
    pub x: u64,
}

impl DelayWindow {
    /// `D = floor(cap / ln n)`; `X = c_del * ceil(cap n / D)`, or
    /// `delay_low * ceil(n ln n)` when `D <= 1`.
    pub fn new(capacity_bound: u64, n: usize, c: &Constants) -> Self {
        let ln = (n.max(2) as f64).ln();
        let d = (capacity_bound as f64 / ln).floor() as u64;
        if d <= 1 {
            DelayWindow {
                d,
                x: c.delay_low * n_ln_n(n).max(1),
            }
        } else {
            DelayWindow {
                d,
                x: c.c_del * (capacity_bound * n as u64).div_ceil(d),
            }
        }
    }
}

/// Delays drawn by the leader for the attempt with this capacity guess.
pub fn sample_delays(t: usize, d: u64, seed: u64, capacity_bound: u64) -> Vec<u64> {
    if d <= 1 {
        return vec![0; t];
    }
    let mut rng = RngStream::for_scheduler(seed, SchedulerDomain::Delay, capacity_bound, 0);
    (0..t).map(|_| rng.gen_range(0..d)).collect()
}

struct Attempt {
    outputs: Vec<Vec<Vec<Word>>>,
    profile: Profile,
    phases: u64,
    max_load: u64,
}

fn attempt(
    jobs: &[JobInstance],
    n: usize,
    opts: &RunOptions,
    capacity_bound: u64,
    ledger: &mut RoundLedger,
) -> Result<Attempt> {
    let window = DelayWindow::new(capacity_bound, n, &opts.constants);
    let t = jobs.len();
    let mut table = JobTable::new(jobs, n, opts.seed)?;
    table.init_all();
    let drawn = sample_delays(t, window.d, opts.seed, capacity_bound);
    let delays: Vec<u64> = if window.d > 1 && t > 0 {
        let mut sets = vec![Vec::new(); n];
        sets[0] = drawn;
        multiple_broadcast(ledger, &sets)?
    } else {
        drawn
    };
    let mut phase = 0usize;
    let mut max_load = 0;
    loop {
        let flags: Vec<Word> = (0..n)
            .map(|i| (0..t).any(|j| table.node_live(j, i)) as Word)
            .collect();
        if t == 0 || all_gather(ledger, &flags)?.iter().all(|&f| f == 0) {
            break;
        }
        let active: Vec<usize> = table
            .live_jobs()
            .into_iter()
            .filter(|&j| delays[j] <= phase as u64)
            .collect();
        let load = routed_phase(
            &mut table,
            ledger,
            &active,
            |v| v.slot,
            window.x,
            opts.seed,
            phase,
        )?;
        max_load = max_load.max(load);
        phase += 1;
    }
    let (outputs, profile) = table.into_outputs()?;
    Ok(Attempt {
        outputs,
        profile,
        phases: phase as u64,
        max_load,
    })
}

fn finish(a: Attempt, ledger: RoundLedger, capacity_bound: u64, attempts: u64) -> RunOutput {
    let mut out = RunOutput::new(a.outputs, &a.profile, ledger);
    let ann = &mut out.metrics.annotations;
    ann.phases = Some(a.phases);
    ann.max_phase_load = Some(a.max_load);
    ann.capacity_bound = Some(capacity_bound);
    ann.attempts = Some(attempts);
    out
}

/// Random-delay scheduling under the trivial assignment, given an upper
/// bound on the capacity. Job `j` starts its round 0 in phase `D_j`; each
/// phase costs one termination round plus one routing call.
pub fn run_delay(
    jobs: &[JobInstance],
    n: usize,
    opts: &RunOptions,
    capacity_bound: u64,
) -> Result<RunOutput> {
    if capacity_bound == 0 {
        return Err(Error::Config("capacity bound must be at least 1".into()));
    }
    let mut ledger = opts.ledger(n);
    let a = attempt(jobs, n, opts, capacity_bound, &mut ledger)?;
    Ok(finish(a, ledger, capacity_bound, 1))
}

/// [`run_delay`] with capacity guesses `1, 2, 4, ...`; an attempt whose
/// routing bound fails is discarded and the jobs restart from their inputs.
/// Rounds of failed attempts stay charged.
pub fn run_delay_doubling(jobs: &[JobInstance], n: usize, opts: &RunOptions) -> Result<RunOutput> {
    let mut ledger = opts.ledger(n);
    let mut cap = 1u64;
    for k in 1..=opts.constants.max_attempts {
        match attempt(jobs, n, opts, cap, &mut ledger) {
            Ok(a) => return Ok(finish(a, ledger, cap, k as u64)),
            Err(Error::RoutingOverflow { .. }) => cap = cap.saturating_mul(2),
            Err(e) => return Err(e),
        }
    }
    Err(Error::Invariant(format!(
        "no capacity guess up to {cap} succeeded in {} attempts",
        opts.constants.max_attempts
    )))
}
