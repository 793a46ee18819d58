//! Congestion parameters, run metrics and theorem bound checks.
//!
//! All bound checks are exact integer arithmetic. Logarithms are integerised
//! once, as `ceil(ln n)` and `ceil(log2 n)`, via [`ceil_ln`] and [`ceil_log2`].

use std::cmp::Ordering;
use std::ops::Add;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sim::Message;

/// Exact non-negative rational `num / den`, kept unreduced.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Fraction {
    pub num: u64,
    pub den: u64,
}

impl Fraction {
    pub fn new(num: u64, den: u64) -> Self {
        assert!(den > 0, "zero denominator");
        Fraction { num, den }
    }

    pub fn integer(v: u64) -> Self {
        Fraction { num: v, den: 1 }
    }

    pub fn ceil(self) -> u64 {
        self.num.div_ceil(self.den)
    }

    pub fn floor(self) -> u64 {
        self.num / self.den
    }

    pub fn to_f64(self) -> f64 {
        self.num as f64 / self.den as f64
    }

    pub fn mul_int(self, k: u64) -> Fraction {
        let num = self.num as u128 * k as u128;
        let g = gcd(num, self.den as u128);
        Fraction {
            num: u64::try_from(num / g).expect("fraction overflow"),
            den: (self.den as u128 / g) as u64,
        }
    }
}

/// Exact sum; the result may have a large denominator.
impl Add for Fraction {
    type Output = Fraction;

    fn add(self, other: Fraction) -> Fraction {
        let (a, b) = (self.num as u128, self.den as u128);
        let (c, d) = (other.num as u128, other.den as u128);
        let num = a * d + c * b;
        let den = b * d;
        let g = gcd(num, den);
        Fraction {
            num: u64::try_from(num / g).expect("fraction overflow"),
            den: u64::try_from(den / g).expect("fraction overflow"),
        }
    }
}

fn gcd(mut a: u128, mut b: u128) -> u128 {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a.max(1)
}

impl PartialOrd for Fraction {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Fraction {
    fn cmp(&self, other: &Self) -> Ordering {
        (self.num as u128 * other.den as u128).cmp(&(other.num as u128 * self.den as u128))
    }
}

impl fmt::Display for Fraction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.num, self.den)
    }
}

pub fn ceil_ln(n: usize) -> u64 {
    (n.max(1) as f64).ln().ceil() as u64
}

pub fn ceil_log2(n: u64) -> u64 {
    if n <= 1 {
        0
    } else {
        64 - (n - 1).leading_zeros() as u64
    }
}

/// Message counts of a job set as run standalone, per job round and slot.
#[derive(Debug, Clone, Default)]
pub struct Profile {
    pub n: usize,
    /// `ell_j`: rounds executed by each job.
    pub job_rounds: Vec<usize>,
    /// `m^r`: words sent by all jobs in their round `r`.
    pub m_r: Vec<u64>,
    pub slot_sent: Vec<u64>,
    pub slot_recv: Vec<u64>,
    /// `detail[j][r][i] = (s^r_{i,j}, t^r_{i,j})`.
    pub detail: Vec<Vec<Vec<(u32, u32)>>>,
}

impl Profile {
    pub fn new(n: usize, t: usize) -> Self {
        Profile {
            n,
            job_rounds: vec![0; t],
            m_r: Vec::new(),
            slot_sent: vec![0; n],
            slot_recv: vec![0; n],
            detail: vec![Vec::new(); t],
        }
    }

    pub fn t(&self) -> usize {
        self.job_rounds.len()
    }

    /// Register that job `job` executed round `round` with these messages.
    pub fn record_round(&mut self, job: usize, round: usize, msgs: &[Message]) {
        let ell = &mut self.job_rounds[job];
        *ell = (*ell).max(round + 1);
        if self.m_r.len() <= round {
            self.m_r.resize(round + 1, 0);
        }
        self.m_r[round] += msgs.len() as u64;
        let detail = &mut self.detail[job];
        if detail.len() <= round {
            detail.resize(round + 1, vec![(0, 0); self.n]);
        }
        for m in msgs {
            self.slot_sent[m.src.slot] += 1;
            self.slot_recv[m.dst.slot] += 1;
            detail[round][m.src.slot].0 += 1;
            detail[round][m.dst.slot].1 += 1;
        }
    }

    pub fn dilation(&self) -> usize {
        self.job_rounds.iter().copied().max().unwrap_or(0)
    }

    pub fn messages_total(&self) -> u64 {
        self.m_r.iter().sum()
    }

    pub fn bandwidth(&self) -> Fraction {
        Fraction::new(self.messages_total(), (self.n * self.n) as u64)
    }

    pub fn capacity(&self) -> Fraction {
        let worst = self
            .slot_sent
            .iter()
            .chain(&self.slot_recv)
            .copied()
            .max()
            .unwrap_or(0);
        Fraction::new(worst, self.n as u64)
    }
}

/// Scheduler-specific counters reported alongside the congestion numbers.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Annotations {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub epochs: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub chunks: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub phases: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub attempts: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub memory_bound: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub capacity_bound: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub max_phase_load: Option<u64>,
}

/// Congestion parameters of a job set plus what a scheduler was charged.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Metrics {
    pub n: usize,
    pub t: usize,
    pub dilation: usize,
    pub bandwidth_num: u64,
    pub bandwidth_den: u64,
    pub capacity_num: u64,
    pub capacity_den: u64,
    /// Charged rounds.
    pub rounds: u64,
    pub messages_total: u64,
    pub m_r: Vec<u64>,
    #[serde(default)]
    pub annotations: Annotations,
}

impl Metrics {
    pub fn from_profile(profile: &Profile, rounds: u64) -> Self {
        let bw = profile.bandwidth();
        let cap = profile.capacity();
        Metrics {
            n: profile.n,
            t: profile.t(),
            dilation: profile.dilation(),
            bandwidth_num: bw.num,
            bandwidth_den: bw.den,
            capacity_num: cap.num,
            capacity_den: cap.den,
            rounds,
            messages_total: profile.messages_total(),
            m_r: profile.m_r.clone(),
            annotations: Annotations::default(),
        }
    }

    pub fn bandwidth(&self) -> Fraction {
        Fraction::new(self.bandwidth_num, self.bandwidth_den)
    }

    pub fn capacity(&self) -> Fraction {
        Fraction::new(self.capacity_num, self.capacity_den)
    }
}

/// Theorems whose round bounds the harness mechanises.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TheoremId {
    /// `bandwidth + ceil(M t / n) * dilation`
    Deterministic,
    /// `t + bandwidth + dilation * ceil(ln n)`
    Shuffle,
    /// `t / n + capacity + dilation * ceil(ln n)`
    Delay,
    /// `capacity + (ceil(log2 capacity) + 1) * (t / n + dilation * ceil(ln n))`
    DelayDoubling,
    /// `t + ceil(log2 ceil(log2 Delta)) * ceil(log2 n)`
    MisAmortized,
    /// `n^2`, compared against messages rather than rounds.
    MisMessages,
    /// `ceil(P t / n) * ceil(log2 n)`
    PjDeterministic,
    /// `t + ceil(log2 n)^2`
    PjShuffle,
}

impl TheoremId {
    pub const ALL: [TheoremId; 8] = [
        TheoremId::Deterministic,
        TheoremId::Shuffle,
        TheoremId::Delay,
        TheoremId::DelayDoubling,
        TheoremId::MisAmortized,
        TheoremId::MisMessages,
        TheoremId::PjDeterministic,
        TheoremId::PjShuffle,
    ];

    /// Frozen slack of the bound check, calibrated on the acceptance suite.
    pub fn default_constant(self) -> BoundConstant {
        let c = match self {
            TheoremId::Deterministic => 40,
            TheoremId::Shuffle => 25,
            TheoremId::Delay => 50,
            TheoremId::DelayDoubling => 20,
            TheoremId::MisAmortized => 400,
            TheoremId::MisMessages => 4,
            TheoremId::PjDeterministic => 150,
            TheoremId::PjShuffle => 40,
        };
        let additive = if self == TheoremId::MisMessages {
            0
        } else {
            10
        };
        BoundConstant { c, additive }
    }

    pub fn name(self) -> &'static str {
        match self {
            TheoremId::Deterministic => "deterministic",
            TheoremId::Shuffle => "shuffle",
            TheoremId::Delay => "delay",
            TheoremId::DelayDoubling => "delay-doubling",
            TheoremId::MisAmortized => "mis-amortized",
            TheoremId::MisMessages => "mis-messages",
            TheoremId::PjDeterministic => "pj-deterministic",
            TheoremId::PjShuffle => "pj-shuffle",
        }
    }
}

/// Parameters a bound formula may need beyond [`Metrics`].
#[derive(Debug, Clone, Copy, Default)]
pub struct BoundInputs {
    pub memory_bound: Option<u64>,
    pub max_degree: Option<u64>,
    pub pj_elements: Option<u64>,
}

/// Multiplicative and additive slack of a bound check.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct BoundConstant {
    pub c: u64,
    pub additive: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundCheck {
    pub theorem: TheoremId,
    /// Measured quantity (charged rounds, or messages for `MisMessages`).
    pub measured: u64,
    pub rhs_num: u64,
    pub rhs_den: u64,
    pub ratio: f64,
    pub c: u64,
    pub additive: u64,
    pub pass: bool,
}

/// Right-hand side of `theorem` for the given metrics, as an exact fraction.
pub fn theorem_rhs(
    metrics: &Metrics,
    theorem: TheoremId,
    inputs: &BoundInputs,
) -> Result<Fraction> {
    let n = metrics.n as u64;
    let t = metrics.t as u64;
    let dil = metrics.dilation as u64;
    let ln_n = ceil_ln(metrics.n);
    let log_n = ceil_log2(n);
    let t_over_n = Fraction::new(t, n);
    let rhs = match theorem {
        TheoremId::Deterministic => {
            let m = inputs
                .memory_bound
                .ok_or(Error::MissingField("memory_bound"))?;
            metrics
                .bandwidth()
                .add(Fraction::integer((m * t).div_ceil(n) * dil))
        }
        TheoremId::Shuffle => Fraction::integer(t + dil * ln_n).add(metrics.bandwidth()),
        TheoremId::Delay => t_over_n
            .add(metrics.capacity())
            .add(Fraction::integer(dil * ln_n)),
        TheoremId::DelayDoubling => {
            let cap = metrics.capacity();
            let attempts = ceil_log2(cap.ceil()) + 1;
            cap.add(
                t_over_n
                    .add(Fraction::integer(dil * ln_n))
                    .mul_int(attempts),
            )
        }
        TheoremId::MisAmortized => {
            let delta = inputs.max_degree.ok_or(Error::MissingField("max_degree"))?;
            let loglog = ceil_log2(ceil_log2(delta)).max(1);
            Fraction::integer(t + loglog * log_n)
        }
        TheoremId::MisMessages => Fraction::integer(n * n),
        TheoremId::PjDeterministic => {
            let p = inputs
                .pj_elements
                .ok_or(Error::MissingField("pj_elements"))?;
            Fraction::integer((p * t).div_ceil(n) * log_n)
        }
        TheoremId::PjShuffle => Fraction::integer(t + log_n * log_n),
    };
    Ok(rhs)
}

/// Check `measured <= c * rhs + additive` exactly, where `measured` is the
/// charged round count (or the message count for `MisMessages`).
pub fn check_bound(
    metrics: &Metrics,
    theorem: TheoremId,
    constant: BoundConstant,
    inputs: &BoundInputs,
) -> Result<BoundCheck> {
    let rhs = theorem_rhs(metrics, theorem, inputs)?;
    let measured = match theorem {
        TheoremId::MisMessages => metrics.messages_total,
        _ => metrics.rounds,
    };
    let lhs = measured as u128 * rhs.den as u128;
    let limit = constant.c as u128 * rhs.num as u128 + constant.additive as u128 * rhs.den as u128;
    let ratio = if rhs.num == 0 {
        if measured == 0 {
            0.0
        } else {
            f64::INFINITY
        }
    } else {
        measured as f64 / rhs.to_f64()
    };
    Ok(BoundCheck {
        theorem,
        measured,
        rhs_num: rhs.num,
        rhs_den: rhs.den,
        ratio,
        c: constant.c,
        additive: constant.additive,
        pass: lhs <= limit,
    })
}
