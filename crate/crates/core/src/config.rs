//! Experiment configuration: network size, scheduler, and the job set.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::jobs::{
    histogram, leader, pointer_jumping, Graph, Histogram, LeaderAggregation, Mis, PointerJumping,
};
use crate::metrics::{BoundConstant, TheoremId};
use crate::sched::{Constants, RunOptions, SchedulerKind};
use crate::sim::{JobInstance, LedgerConfig, RngStream, SchedulerDomain};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Fidelity {
    /// Routing is a charged primitive of the model.
    #[default]
    ModelRouting,
    /// Routing realised round by round; not available in this build.
    InRoundsRouting,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum GraphKind {
    #[default]
    Gnp,
    Complete,
    Empty,
}

fn one() -> usize {
    1
}

fn default_p() -> f64 {
    0.2
}

/// One entry of the `jobs` list; `count` copies get independent inputs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "kebab-case", deny_unknown_fields)]
pub enum JobSpec {
    Histogram {
        #[serde(default = "one")]
        items: usize,
        #[serde(default = "one")]
        count: usize,
    },
    Leader {
        /// Words per node; defaults to `n`.
        words: Option<usize>,
        #[serde(default = "one")]
        count: usize,
    },
    PointerJumping {
        /// Permutation size `P`; defaults to `n`.
        elems: Option<usize>,
        #[serde(default = "one")]
        count: usize,
    },
    Mis {
        #[serde(default)]
        graph: GraphKind,
        #[serde(default = "default_p")]
        p: f64,
        delta_prime: Option<usize>,
        #[serde(default = "one")]
        count: usize,
    },
}

impl JobSpec {
    pub fn count(&self) -> usize {
        match *self {
            JobSpec::Histogram { count, .. }
            | JobSpec::Leader { count, .. }
            | JobSpec::PointerJumping { count, .. }
            | JobSpec::Mis { count, .. } => count,
        }
    }

    /// One instance on `n` nodes with inputs drawn from `rng`.
    pub fn instance(&self, n: usize, rng: &mut RngStream) -> Result<JobInstance> {
        Ok(match *self {
            JobSpec::Histogram { items, .. } => {
                JobInstance::memory_efficient(Histogram, histogram::random_inputs(n, items, rng))
            }
            JobSpec::Leader { words, .. } => {
                let words = words.unwrap_or(n);
                JobInstance::memory_efficient(
                    LeaderAggregation { words },
                    leader::random_inputs(n, words, rng),
                )
            }
            JobSpec::PointerJumping { elems, .. } => {
                let p = elems.unwrap_or(n);
                if p == 0 {
                    return Err(Error::Config("pointer jumping needs elems >= 1".into()));
                }
                JobInstance::memory_efficient(
                    PointerJumping { elems: p },
                    pointer_jumping::random_inputs(n, p, rng),
                )
            }
            JobSpec::Mis {
                graph,
                p,
                delta_prime,
                ..
            } => {
                if !(0.0..=1.0).contains(&p) {
                    return Err(Error::Config(format!(
                        "edge probability {p} outside [0, 1]"
                    )));
                }
                let g = match graph {
                    GraphKind::Gnp => Graph::gnp(n, p, rng),
                    GraphKind::Complete => Graph::complete(n),
                    GraphKind::Empty => Graph::empty(n),
                };
                let mis = Mis {
                    delta_prime,
                    ..Mis::default()
                };
                JobInstance::plain(mis, g.to_inputs())
            }
        })
    }
}

/// Output locations; relative paths resolve against the working directory.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputSpec {
    pub report: Option<PathBuf>,
    /// CSV of job messages as routed: `round,src_machine,dst_machine,job,src_slot,dst_slot,payload`.
    pub trace: Option<PathBuf>,
    /// CSV of the `m^r` series: `round,messages`.
    pub m_r: Option<PathBuf>,
}

/// Values of `t` swept by `bench`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSpec {
    pub t: Vec<usize>,
    /// Bound reported per row; defaults to the scheduler's own theorem.
    pub theorem: Option<TheoremId>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    pub n: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_scheduler")]
    pub scheduler: SchedulerKind,
    #[serde(default)]
    pub jobs: Vec<JobSpec>,
    #[serde(default)]
    pub constants: Constants,
    /// Overrides of the bound constants, keyed by theorem.
    #[serde(default)]
    pub bounds: std::collections::BTreeMap<TheoremId, BoundConstant>,
    #[serde(default)]
    pub fidelity: Fidelity,
    pub capacity_bound: Option<u64>,
    #[serde(default)]
    pub outputs: OutputSpec,
    pub sweep: Option<SweepSpec>,
}

fn default_scheduler() -> SchedulerKind {
    SchedulerKind::Naive
}

impl Config {
    /// Parse JSON, or TOML when the file name ends in `.toml`.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        let cfg = if path.extension().is_some_and(|e| e == "toml") {
            Self::from_toml(&text)?
        } else {
            Self::from_json(&text)?
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return Err(Error::Config("n must be at least 1".into()));
        }
        if self.fidelity == Fidelity::InRoundsRouting {
            return Err(Error::Config(
                "in-rounds-routing fidelity is not supported".into(),
            ));
        }
        if self.capacity_bound == Some(0) {
            return Err(Error::Config("capacity_bound must be at least 1".into()));
        }
        Ok(())
    }

    /// Copies of every spec in order; the `k`-th job draws its inputs from
    /// its own workload stream.
    pub fn expanded(&self) -> Vec<&JobSpec> {
        self.jobs
            .iter()
            .flat_map(|s| std::iter::repeat_n(s, s.count()))
            .collect()
    }

    pub fn build_jobs(&self) -> Result<Vec<JobInstance>> {
        let specs = self.expanded();
        self.build_cycled(specs.len())
    }

    /// The first `t` jobs of the expanded list repeated cyclically.
    pub fn build_cycled(&self, t: usize) -> Result<Vec<JobInstance>> {
        let specs = self.expanded();
        if t > 0 && specs.is_empty() {
            return Err(Error::Config("sweep needs at least one job spec".into()));
        }
        (0..t)
            .map(|k| {
                let mut rng =
                    RngStream::for_scheduler(self.seed, SchedulerDomain::Workload, k as u64, 0);
                specs[k % specs.len()].instance(self.n, &mut rng)
            })
            .collect()
    }

    pub fn run_options(&self, trace: bool) -> RunOptions {
        RunOptions {
            seed: self.seed,
            trace,
            ledger: LedgerConfig::default(),
            constants: self.constants,
            identity_shuffle: false,
            capacity_bound: self.capacity_bound,
        }
    }
}
