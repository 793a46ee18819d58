//! Run reports: metrics, bound checks and a digest of all outputs.

use std::collections::BTreeMap;

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::error::Result;
use crate::metrics::{check_bound, BoundCheck, BoundConstant, BoundInputs, Metrics, TheoremId};
use crate::sched::{RunOutput, SchedulerKind};
use crate::sim::{JobInstance, Word};

/// SHA-256 over every node's output, hex encoded. Equal digests mean
/// byte-identical outputs.
pub fn outputs_digest(outputs: &[Vec<Vec<Word>>]) -> String {
    let mut h = Sha256::new();
    h.update((outputs.len() as u64).to_le_bytes());
    for job in outputs {
        h.update((job.len() as u64).to_le_bytes());
        for out in job {
            h.update((out.len() as u64).to_le_bytes());
            for w in out {
                h.update(w.to_le_bytes());
            }
        }
    }
    h.finalize().iter().map(|b| format!("{b:02x}")).collect()
}

/// Bound parameters read off the job set: the largest memory bound (only if
/// every job has a codec), the largest MIS degree and the largest
/// pointer-jumping `P`.
pub fn bound_inputs(jobs: &[JobInstance], n: usize) -> BoundInputs {
    let codecs: Option<Vec<u64>> = jobs
        .iter()
        .map(|j| j.protocol.codec().map(|c| c.memory_bound(n) as u64))
        .collect();
    let of = |name: &'static str| jobs.iter().filter(move |j| j.protocol.name() == name);
    let degree = of("mis")
        .flat_map(|j| j.inputs.iter())
        .map(|row| row.iter().map(|w| w.count_ones() as u64).sum::<u64>())
        .max();
    let pj = of("pointer-jumping")
        .flat_map(|j| j.inputs.iter())
        .map(|input| input.len().saturating_sub(2) as u64)
        .max();
    BoundInputs {
        memory_bound: codecs.and_then(|c| c.into_iter().max()),
        max_degree: degree,
        pj_elements: pj,
    }
}

/// Theorems that apply to a run: the scheduler's own bound, plus the
/// job-specific ones when the set consists of a single job type.
pub fn applicable_theorems(kind: SchedulerKind, jobs: &[JobInstance]) -> Vec<TheoremId> {
    let mut out = match kind {
        SchedulerKind::Naive => vec![],
        SchedulerKind::Deterministic => vec![TheoremId::Deterministic],
        SchedulerKind::Shuffle => vec![TheoremId::Shuffle],
        SchedulerKind::Delay => vec![TheoremId::Delay],
        SchedulerKind::DelayDoubling => vec![TheoremId::DelayDoubling],
    };
    let only = |name: &str| !jobs.is_empty() && jobs.iter().all(|j| j.protocol.name() == name);
    if only("mis") {
        out.push(TheoremId::MisMessages);
        if kind == SchedulerKind::Shuffle {
            out.push(TheoremId::MisAmortized);
        }
    }
    if only("pointer-jumping") {
        match kind {
            SchedulerKind::Deterministic => out.push(TheoremId::PjDeterministic),
            SchedulerKind::Shuffle => out.push(TheoremId::PjShuffle),
            _ => {}
        }
    }
    out
}

#[derive(Debug, Clone, Serialize)]
pub struct Report {
    pub scheduler: SchedulerKind,
    pub seed: u64,
    pub metrics: Metrics,
    pub bounds: BTreeMap<TheoremId, BoundCheck>,
    pub outputs_digest: String,
}

impl Report {
    pub fn new(
        kind: SchedulerKind,
        seed: u64,
        jobs: &[JobInstance],
        out: &RunOutput,
        overrides: &BTreeMap<TheoremId, BoundConstant>,
    ) -> Result<Self> {
        let inputs = bound_inputs(jobs, out.metrics.n);
        let mut bounds = BTreeMap::new();
        for th in applicable_theorems(kind, jobs) {
            let c = overrides.get(&th).copied().unwrap_or(th.default_constant());
            bounds.insert(th, check_bound(&out.metrics, th, c, &inputs)?);
        }
        Ok(Report {
            scheduler: kind,
            seed,
            metrics: out.metrics.clone(),
            bounds,
            outputs_digest: outputs_digest(&out.outputs),
        })
    }

    pub fn all_bounds_pass(&self) -> bool {
        self.bounds.values().all(|b| b.pass)
    }
}
