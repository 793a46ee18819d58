use crate::error::Result;
use crate::metrics::Profile;
use crate::sim::{from_inboxes, to_batch, Budget, JobInstance, JobTable, RoundModel};

use super::{RunOptions, RunOutput};

pub(crate) fn budget(model: RoundModel) -> Budget {
    match model {
        RoundModel::Clique => Budget::PerPair,
        RoundModel::CliqueRouting => Budget::PerMachine,
    }
}

/// Run the jobs one after another, node `v[i,j]` on machine `i`.
/// Charged rounds are the sum of the jobs' round complexities.
pub fn run_naive(jobs: &[JobInstance], n: usize, opts: &RunOptions) -> Result<RunOutput> {
    let mut table = JobTable::new(jobs, n, opts.seed)?;
    let mut ledger = opts.ledger(n);
    for (j, job) in jobs.iter().enumerate() {
        let budget = budget(job.protocol.model());
        table.init_job(j);
        while table.is_live(j) {
            let msgs = table.sends(j)?;
            let inboxes = ledger.commit_messages(to_batch(n, msgs, |v| v.slot), budget)?;
            table.finish_round(j, from_inboxes(inboxes));
        }
    }
    let (outputs, profile) = table.into_outputs()?;
    Ok(RunOutput::new(outputs, &profile, ledger))
}

/// Congestion profile of the job set, each job run standalone.
pub fn measure_profile(jobs: &[JobInstance], n: usize, seed: u64) -> Result<Profile> {
    let mut table = JobTable::new(jobs, n, seed)?;
    let mut ledger = crate::sim::RoundLedger::new(n);
    for (j, job) in jobs.iter().enumerate() {
        let budget = budget(job.protocol.model());
        table.init_job(j);
        while table.is_live(j) {
            let msgs = table.sends(j)?;
            let inboxes = ledger.commit_messages(to_batch(n, msgs, |v| v.slot), budget)?;
            table.finish_round(j, from_inboxes(inboxes));
        }
    }
    Ok(table.into_outputs()?.1)
}
