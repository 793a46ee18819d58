//! Acceptance suite. Every test prints one `criterion N: PASS|FAIL` line;
//! run with `cargo test -p clique-core --test acceptance -- --nocapture`
//! to see them.

use std::collections::BTreeMap;
use std::sync::OnceLock;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use clique_core::collectives::{multiple_broadcast_views, nary_search};
use clique_core::config::{Config, GraphKind, JobSpec};
use clique_core::jobs::{pointer_jumping, Graph, Mis, PointerJumping};
use clique_core::metrics::{ceil_log2, BoundCheck, TheoremId};
use clique_core::report::{bound_inputs, Report};
use clique_core::sched::{
    measure_profile, phase_load_bound, run, run_naive, split_buckets, Constants, DelayWindow,
    RunOptions, SchedulerKind,
};
use clique_core::sim::{JobInstance, RoundLedger, C_ROUTE};
use clique_core::Error;

const SUITE_N: [usize; 3] = [16, 32, 64];
const SEEDS: u64 = 10;
const SHUFFLE_SEEDS: u64 = 20;
/// Criterion 1 runtime budget for the whole suite.
const SUITE_BUDGET: Duration = Duration::from_secs(300);

fn verdict(id: u32, pass: bool, detail: &str) {
    println!(
        "criterion {id}: {} ({detail})",
        if pass { "PASS" } else { "FAIL" }
    );
    assert!(pass, "criterion {id} failed: {detail}");
}

fn config(n: usize, seed: u64, jobs: Vec<JobSpec>) -> Config {
    let mut c = Config::from_json(&format!(r#"{{"n": {n}, "seed": {seed}}}"#)).unwrap();
    c.jobs = jobs;
    c
}

fn hist(count: usize) -> JobSpec {
    JobSpec::Histogram { items: 2, count }
}

fn pj(count: usize) -> JobSpec {
    JobSpec::PointerJumping { elems: None, count }
}

fn leader(words: Option<usize>, count: usize) -> JobSpec {
    JobSpec::Leader { words, count }
}

fn mis(p: f64, count: usize) -> JobSpec {
    JobSpec::Mis {
        graph: GraphKind::Gnp,
        p,
        delta_prime: None,
        count,
    }
}

/// Job mixes of the suite; the flag marks mixes the deterministic
/// scheduler accepts (no MIS).
fn mixes(n: usize) -> Vec<(&'static str, Vec<JobSpec>, bool)> {
    let root = (n as f64).sqrt().ceil() as usize;
    vec![
        (
            "mixed",
            vec![hist(2), pj(2), leader(Some(8), 2), mis(0.2, 2)],
            false,
        ),
        ("efficient", vec![hist(2), pj(2), leader(Some(8), 2)], true),
        // every job's leader sits on machine 0
        ("hot-machine", vec![leader(None, root)], true),
    ]
}

struct SuiteRun {
    n: usize,
    mix: &'static str,
    seed: u64,
    kind: SchedulerKind,
    /// Error that aborted the run, if any.
    error: Option<Error>,
    digest_matches: bool,
    audit: Result<(), String>,
    checks: Vec<BoundCheck>,
    attempts: Option<u64>,
    /// `ceil(capacity)` of the job set.
    capacity: u64,
}

struct Suite {
    runs: Vec<SuiteRun>,
    elapsed: Duration,
}

fn suite() -> &'static Suite {
    static SUITE: OnceLock<Suite> = OnceLock::new();
    SUITE.get_or_init(|| {
        let start = Instant::now();
        let mut runs = Vec::new();
        for n in SUITE_N {
            for (mix, specs, efficient) in mixes(n) {
                for seed in 0..SHUFFLE_SEEDS {
                    let cfg = config(n, seed, specs.clone());
                    let jobs = cfg.build_jobs().unwrap();
                    let opts = cfg.run_options(false);
                    let naive = run(SchedulerKind::Naive, &jobs, n, &opts).unwrap();
                    let base =
                        Report::new(SchedulerKind::Naive, seed, &jobs, &naive, &BTreeMap::new())
                            .unwrap();
                    let capacity = naive.metrics.capacity().ceil();
                    for kind in SchedulerKind::ALL {
                        let skip = kind == SchedulerKind::Naive
                            || (kind == SchedulerKind::Deterministic && !efficient)
                            || (kind != SchedulerKind::Shuffle && seed >= SEEDS);
                        if !skip {
                            runs.push(one_run(n, mix, seed, kind, &jobs, &opts, &base, capacity));
                        }
                    }
                }
            }
        }
        Suite {
            runs,
            elapsed: start.elapsed(),
        }
    })
}

#[allow(clippy::too_many_arguments)]
fn one_run(
    n: usize,
    mix: &'static str,
    seed: u64,
    kind: SchedulerKind,
    jobs: &[JobInstance],
    opts: &RunOptions,
    base: &Report,
    capacity: u64,
) -> SuiteRun {
    let mut r = SuiteRun {
        n,
        mix,
        seed,
        kind,
        error: None,
        digest_matches: false,
        audit: Ok(()),
        checks: Vec::new(),
        attempts: None,
        capacity,
    };
    match run(kind, jobs, n, opts) {
        Ok(out) => {
            let rep = Report::new(kind, seed, jobs, &out, &BTreeMap::new()).unwrap();
            r.digest_matches = rep.outputs_digest == base.outputs_digest;
            r.audit = out.ledger.audit();
            r.checks = rep.bounds.into_values().collect();
            r.attempts = out.metrics.annotations.attempts;
        }
        Err(e) => r.error = Some(e),
    }
    r
}

fn describe(r: &SuiteRun) -> String {
    format!("{} n={} {} seed={}", r.kind.name(), r.n, r.mix, r.seed)
}

fn worst_ratio(theorem: TheoremId) -> (f64, usize, Vec<String>) {
    let mut worst: f64 = 0.0;
    let mut count = 0;
    let mut failures = Vec::new();
    for r in &suite().runs {
        for c in r.checks.iter().filter(|c| c.theorem == theorem) {
            count += 1;
            worst = worst.max(c.ratio);
            if !c.pass {
                failures.push(format!("{} ratio {:.2}", describe(r), c.ratio));
            }
        }
    }
    (worst, count, failures)
}

#[test]
fn criterion_01_output_equivalence() {
    let s = suite();
    let bad: Vec<String> = s
        .runs
        .iter()
        .filter(|r| !r.digest_matches)
        .map(|r| format!("{}: {:?}", describe(r), r.error))
        .collect();
    let pass = bad.is_empty() && s.elapsed < SUITE_BUDGET;
    let detail = format!(
        "{} runs, {} digest mismatches {:?}, suite time {:.1}s",
        s.runs.len(),
        bad.len(),
        bad.iter().take(3).collect::<Vec<_>>(),
        s.elapsed.as_secs_f64()
    );
    verdict(1, pass, &detail);
}

#[test]
fn criterion_02_model_soundness() {
    let bad: Vec<String> = suite()
        .runs
        .iter()
        .filter_map(|r| match (&r.error, &r.audit) {
            (Some(Error::Model(v)), _) => Some(format!("{}: {v}", describe(r))),
            (_, Err(e)) => Some(format!("{}: {e}", describe(r))),
            _ => None,
        })
        .collect();
    verdict(
        2,
        bad.is_empty(),
        &format!("{} ledger violations {:?}", bad.len(), bad.first()),
    );
}

#[test]
fn criterion_03_deterministic_bound() {
    let (worst, count, failures) = worst_ratio(TheoremId::Deterministic);
    let c = TheoremId::Deterministic.default_constant();
    let hot = suite()
        .runs
        .iter()
        .filter(|r| r.mix == "hot-machine" && r.kind == SchedulerKind::Deterministic)
        .count();
    let pass = failures.is_empty() && count > 0 && hot > 0;
    let detail = format!(
        "C_det={} +{}: {count} runs ({hot} hot-machine), worst ratio {worst:.2}, failures {failures:?}",
        c.c, c.additive
    );
    verdict(3, pass, &detail);
}

#[test]
fn criterion_04_shuffle_bound() {
    let (worst, count, failures) = worst_ratio(TheoremId::Shuffle);
    let overflows: Vec<String> = suite()
        .runs
        .iter()
        .filter(|r| r.kind == SchedulerKind::Shuffle)
        .filter(|r| matches!(r.error, Some(Error::RoutingOverflow { .. })))
        .map(describe)
        .collect();
    let c = TheoremId::Shuffle.default_constant();
    let pass = failures.is_empty() && overflows.is_empty() && count > 0;
    let detail = format!(
        "C_shuf={} +{}: {count} runs ({SHUFFLE_SEEDS} seeds per configuration), worst ratio {worst:.2}, {} overflows, failures {failures:?}",
        c.c,
        c.additive,
        overflows.len()
    );
    verdict(4, pass, &detail);
}

#[test]
fn criterion_05_delay_bounds() {
    let (worst_del, n_del, fail_del) = worst_ratio(TheoremId::Delay);
    let (worst_dbl, n_dbl, fail_dbl) = worst_ratio(TheoremId::DelayDoubling);
    let attempts: Vec<String> = suite()
        .runs
        .iter()
        .filter(|r| r.kind == SchedulerKind::DelayDoubling)
        .filter(|r| r.attempts.is_none_or(|a| a > ceil_log2(r.capacity) + 1))
        .map(|r| {
            format!(
                "{}: {:?} attempts at capacity {}",
                describe(r),
                r.attempts,
                r.capacity
            )
        })
        .collect();
    let c1 = TheoremId::Delay.default_constant();
    let c2 = TheoremId::DelayDoubling.default_constant();
    let pass =
        fail_del.is_empty() && fail_dbl.is_empty() && attempts.is_empty() && n_del > 0 && n_dbl > 0;
    let detail = format!(
        "C_del={} worst {worst_del:.2} over {n_del}; C_doubling={} worst {worst_dbl:.2} over {n_dbl}; attempt violations {attempts:?}; failures {fail_del:?} {fail_dbl:?}",
        c1.c, c2.c
    );
    verdict(5, pass, &detail);
}

#[test]
fn criterion_06_regime_separation() {
    let n = 32;
    let cfg = config(n, 1, vec![leader(None, n)]);
    let jobs = cfg.build_jobs().unwrap();
    let opts = cfg.run_options(false);
    let shuffle = run(SchedulerKind::Shuffle, &jobs, n, &opts)
        .unwrap()
        .metrics
        .rounds;
    let delay = run(SchedulerKind::Delay, &jobs, n, &opts)
        .unwrap()
        .metrics
        .rounds;
    verdict(
        6,
        shuffle < delay,
        &format!("t=n={n} leader aggregation: shuffle {shuffle} rounds, delay {delay} rounds"),
    );
}

fn rng(stream: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(0xacce_0000 + stream)
}

#[test]
fn criterion_07_split_property() {
    let mut rng = rng(7);
    let mut bad = Vec::new();
    for case in 0..500 {
        let len = rng.gen_range(1..=60);
        let k = rng.gen_range(1..=20);
        let heavy = rng.gen_bool(0.2);
        let draw = |rng: &mut ChaCha8Rng| {
            if heavy && rng.gen_bool(0.1) {
                rng.gen_range(100..1000)
            } else {
                rng.gen_range(0..10)
            }
        };
        let s: Vec<u64> = (0..len).map(|_| draw(&mut rng)).collect();
        let t: Vec<u64> = (0..len).map(|_| draw(&mut rng)).collect();
        let buckets = split_buckets(&s, &t, k);
        let (total_s, total_t) = (s.iter().sum::<u64>(), t.iter().sum::<u64>());
        let (max_s, max_t) = (*s.iter().max().unwrap(), *t.iter().max().unwrap());
        let k64 = k as u64;
        // consecutive cover of 0..len, no empty bucket
        let mut next = 0;
        let mut ok = buckets.len() <= k;
        for b in &buckets {
            ok &= b.start == next && b.end > b.start;
            next = b.end;
            let bs: u64 = s[b.clone()].iter().sum();
            let bt: u64 = t[b.clone()].iter().sum();
            // sum <= 2 (S/k + max), cleared of the division
            ok &= bs * k64 <= 2 * (total_s + k64 * max_s);
            ok &= bt * k64 <= 2 * (total_t + k64 * max_t);
        }
        ok &= next == len;
        if !ok {
            bad.push(case);
        }
    }
    verdict(
        7,
        bad.is_empty(),
        &format!("500 instances, failing cases {bad:?}"),
    );
}

#[test]
fn criterion_08_nary_search() {
    let mut rng = rng(8);
    let mut bad = Vec::new();
    let mut worst_slack = i64::MIN;
    for case in 0..1000 {
        let n = [4usize, 8][case % 2];
        let c = 1 + (case / 2) % 2;
        let lo = n.pow(c as u32 - 1);
        let len = rng.gen_range(lo + 1..=n.pow(c as u32));
        let values: Vec<Vec<u64>> = (0..n)
            .map(|_| {
                (0..len)
                    .map(|_| {
                        if rng.gen_bool(0.4) {
                            0
                        } else {
                            rng.gen_range(0..5)
                        }
                    })
                    .collect()
            })
            .collect();
        let column: Vec<u64> = (0..len)
            .map(|j| values.iter().map(|v| v[j]).sum())
            .collect();
        let total: u64 = column.iter().sum();
        let x = rng.gen_range(0..=total + 2);
        let mut acc = 0;
        let oracle = column.iter().position(|&v| {
            acc += v;
            acc >= x
        });
        let mut ledger = RoundLedger::new(n);
        let got = nary_search(&mut ledger, &values, x).unwrap();
        let limit = 2 * c as u64 + 2;
        worst_slack = worst_slack.max(ledger.charged_rounds() as i64 - limit as i64);
        if got != oracle || ledger.charged_rounds() > limit {
            bad.push(format!(
                "case {case}: n={n} c={c} got {got:?} want {oracle:?} rounds {}",
                ledger.charged_rounds()
            ));
        }
    }
    verdict(
        8,
        bad.is_empty(),
        &format!(
            "1000 instances, max(rounds - (2c+2)) = {worst_slack}, failures {:?}",
            bad.first()
        ),
    );
}

#[test]
fn criterion_09_multiple_broadcast() {
    let mut rng = rng(9);
    let mut bad = Vec::new();
    for case in 0..100 {
        let n = [2usize, 4, 8, 16][case % 4];
        let sets: Vec<Vec<u64>> = (0..n)
            .map(|_| {
                let m = if rng.gen_bool(0.3) {
                    0
                } else {
                    rng.gen_range(0..=3 * n)
                };
                (0..m).map(|_| rng.gen()).collect()
            })
            .collect();
        let concat: Vec<u64> = sets.concat();
        let mut ledger = RoundLedger::new(n);
        let views = multiple_broadcast_views(&mut ledger, &sets).unwrap();
        let want = 1 + 2 * concat.len().div_ceil(n) as u64;
        if ledger.charged_rounds() != want
            || views.iter().any(|v| *v != concat)
            || ledger.audit().is_err()
        {
            bad.push(format!(
                "case {case}: rounds {} want {want}",
                ledger.charged_rounds()
            ));
        }
    }
    verdict(
        9,
        bad.is_empty(),
        &format!("100 profiles, failures {bad:?}"),
    );
}

#[test]
fn criterion_10_routing_contract() {
    let mut rng = rng(10);
    let mut bad = Vec::new();
    let (mut delivered, mut rejected) = (0, 0);
    for case in 0..200 {
        let n = [4usize, 8, 16][case % 3];
        let batch: Vec<Vec<(usize, u64)>> = (0..n)
            .map(|_| {
                let m = rng.gen_range(0..=2 * n);
                let skew = rng.gen_bool(0.1);
                (0..m)
                    .map(|_| {
                        let dst = if skew {
                            rng.gen_range(0..2)
                        } else {
                            rng.gen_range(0..n)
                        };
                        (dst, rng.gen())
                    })
                    .collect()
            })
            .collect();
        let x = rng.gen_range(1..=5 * n as u64);
        let mut recv = vec![0u64; n];
        for out in &batch {
            for &(dst, _) in out {
                recv[dst] += 1;
            }
        }
        let p = batch.iter().all(|out| out.len() as u64 <= x) && recv.iter().all(|&r| r <= x);
        let mut sent: Vec<(usize, usize, u64)> = batch
            .iter()
            .enumerate()
            .flat_map(|(src, out)| out.iter().map(move |&(dst, w)| (src, dst, w)))
            .collect();
        sent.sort_unstable();
        let mut ledger = RoundLedger::new(n);
        let ok = match ledger.route(batch, x) {
            Ok(inboxes) => {
                delivered += 1;
                let mut got: Vec<(usize, usize, u64)> = inboxes
                    .iter()
                    .enumerate()
                    .flat_map(|(dst, inbox)| inbox.iter().map(move |&(src, w)| (src, dst, w)))
                    .collect();
                got.sort_unstable();
                p && got == sent && ledger.charged_rounds() == C_ROUTE * x.div_ceil(n as u64)
            }
            Err(_) => {
                rejected += 1;
                !p && ledger.charged_rounds() == 1
            }
        };
        if !ok {
            bad.push(case);
        }
    }
    verdict(
        10,
        bad.is_empty(),
        &format!("200 requests ({delivered} delivered, {rejected} rejected), c_route={C_ROUTE}, failing cases {bad:?}"),
    );
}

/// Checks of `theorem` in a run of `kind` on `jobs`.
fn checked(kind: SchedulerKind, cfg: &Config, theorem: TheoremId) -> (BoundCheck, bool) {
    let jobs = cfg.build_jobs().unwrap();
    let out = run(kind, &jobs, cfg.n, &cfg.run_options(false)).unwrap();
    let base = run_naive(&jobs, cfg.n, &cfg.run_options(false)).unwrap();
    let same = out.outputs == base.outputs;
    let rep = Report::new(kind, cfg.seed, &jobs, &out, &BTreeMap::new()).unwrap();
    (rep.bounds[&theorem].clone(), same)
}

#[test]
fn criterion_11_mis() {
    let c_mis = TheoremId::MisMessages.default_constant().c;
    let mut bad = Vec::new();
    let mut worst_msgs: f64 = 0.0;
    for case in 0..200u64 {
        let n = [32usize, 64][case as usize % 2];
        let p = [0.05, 0.2, 0.5][(case as usize / 2) % 3];
        let g = Graph::gnp(n, p, &mut rng(1100 + case));
        let job = JobInstance::plain(Mis::default(), g.to_inputs());
        let out = run_naive(&[job], n, &RunOptions::seeded(case)).unwrap();
        let members: Vec<bool> = out.outputs[0].iter().map(|o| o[0] == 1).collect();
        let msgs = out.metrics.messages_total;
        worst_msgs = worst_msgs.max(msgs as f64 / (n * n) as f64);
        if !g.is_maximal_independent(&members) || msgs > c_mis * (n * n) as u64 {
            bad.push(format!("case {case}: n={n} p={p} msgs {msgs}"));
        }
    }
    let cfg = config(64, 11, vec![mis(0.3, 16)]);
    let (amortized, same) = checked(SchedulerKind::Shuffle, &cfg, TheoremId::MisAmortized);
    let pass = bad.is_empty() && amortized.pass && same;
    let detail = format!(
        "200 runs, C_mis={c_mis}, worst messages/n^2 {worst_msgs:.2}, failures {:?}; t=16 shuffle n=64: {} rounds <= {}*{}/{}+{} ({}), ratio {:.1}",
        bad.first(),
        amortized.measured,
        amortized.c,
        amortized.rhs_num,
        amortized.rhs_den,
        amortized.additive,
        if amortized.pass { "holds" } else { "violated" },
        amortized.ratio
    );
    verdict(11, pass, &detail);
}

/// Standalone pointer-jumping slack: rounds `<= 3 ceil(log2 n)` and
/// messages `<= 2 P n` for `P <= n`.
const C_PJ_ROUNDS: u64 = 3;
const C_PJ_MESSAGES: u64 = 2;

#[test]
fn criterion_12_pointer_jumping() {
    let mut draw = rng(12);
    let mut bad = Vec::new();
    for case in 0..300u64 {
        let n = draw.gen_range(2..=64);
        let p = draw.gen_range(1..=n);
        let inputs = pointer_jumping::random_inputs(n, p, &mut draw);
        let (query, want) = pointer_jumping::oracle(&inputs);
        let job = JobInstance::memory_efficient(PointerJumping { elems: p }, inputs);
        let out = run_naive(&[job], n, &RunOptions::seeded(case)).unwrap();
        let m = &out.metrics;
        let exact = out.outputs[0].iter().enumerate().all(|(slot, o)| {
            if slot == query {
                *o == vec![want]
            } else {
                o.is_empty()
            }
        });
        let log = ceil_log2(n as u64);
        if !exact
            || m.rounds > C_PJ_ROUNDS * log
            || m.messages_total > C_PJ_MESSAGES * (p * n) as u64
        {
            bad.push(format!(
                "case {case}: n={n} P={p} rounds {} msgs {}",
                m.rounds, m.messages_total
            ));
        }
    }
    let mut sched = Vec::new();
    for (n, t) in [(16, 4), (16, 16), (32, 8), (32, 32), (64, 8)] {
        let cfg = config(n, 12, vec![pj(t)]);
        for (kind, th) in [
            (SchedulerKind::Deterministic, TheoremId::PjDeterministic),
            (SchedulerKind::Shuffle, TheoremId::PjShuffle),
        ] {
            let (c, same) = checked(kind, &cfg, th);
            sched.push((
                format!("{} n={n} t={t} ratio {:.1}", kind.name(), c.ratio),
                c.pass && same,
            ));
        }
    }
    let failed: Vec<&String> = sched.iter().filter(|(_, ok)| !ok).map(|(d, _)| d).collect();
    let worst = |th: &str| {
        sched
            .iter()
            .filter(|(d, _)| d.starts_with(th))
            .map(|(d, _)| d.rsplit(' ').next().unwrap().parse::<f64>().unwrap())
            .fold(0.0, f64::max)
    };
    let detail = format!(
        "300 oracle instances (rounds <= {C_PJ_ROUNDS}*ceil(log n), msgs <= {C_PJ_MESSAGES}*P*n), failures {:?}; C_pj_det={} worst {:.1}; C_pj_shuf={} worst {:.1}; scheduled failures {failed:?}",
        bad.first(),
        TheoremId::PjDeterministic.default_constant().c,
        worst("deterministic"),
        TheoremId::PjShuffle.default_constant().c,
        worst("shuffle"),
    );
    verdict(12, bad.is_empty() && failed.is_empty(), &detail);
}

const MONTE_CARLO_SEEDS: u64 = 100;
const MONTE_CARLO_PASS: u64 = 99;

#[test]
fn criterion_13_phase_loads() {
    let c = Constants::default();

    // t = n leader jobs: every round of every job converges on one slot
    let n = 32;
    let floor = phase_load_bound(0, n, &c);
    let (mut shuffle_ok, mut shuffle_worst) = (0, 0);
    for seed in 0..MONTE_CARLO_SEEDS {
        let cfg = config(n, seed, vec![leader(Some(1), n)]);
        let jobs = cfg.build_jobs().unwrap();
        match run(SchedulerKind::Shuffle, &jobs, n, &cfg.run_options(false)) {
            Ok(out) => {
                shuffle_ok += 1;
                shuffle_worst =
                    shuffle_worst.max(out.metrics.annotations.max_phase_load.unwrap_or(0));
            }
            Err(Error::RoutingOverflow { .. }) => {}
            Err(e) => panic!("shuffle seed {seed}: {e}"),
        }
    }

    // delays only kick in once capacity exceeds 2 ln n
    let n = 16;
    let (mut delay_ok, mut delay_worst, mut window) = (0, 0, None);
    for seed in 0..MONTE_CARLO_SEEDS {
        let cfg = config(n, seed, vec![leader(None, 2 * n)]);
        let jobs = cfg.build_jobs().unwrap();
        let cap = measure_profile(&jobs, n, seed)
            .unwrap()
            .capacity()
            .ceil()
            .max(1);
        let w = DelayWindow::new(cap, n, &c);
        assert!(w.d > 1, "capacity {cap} too small to delay");
        window = Some((cap, w.d, w.x));
        match run(SchedulerKind::Delay, &jobs, n, &cfg.run_options(false)) {
            Ok(out) => {
                let load = out.metrics.annotations.max_phase_load.unwrap_or(0);
                delay_worst = delay_worst.max(load);
                delay_ok += u64::from(load <= w.x);
            }
            Err(Error::RoutingOverflow { .. }) => {}
            Err(e) => panic!("delay seed {seed}: {e}"),
        }
    }
    let (cap, d, x) = window.unwrap();
    let detail = format!(
        "per-phase load: {shuffle_ok}/{MONTE_CARLO_SEEDS} within 3*m^r/n + 10*n*ln n (max load {shuffle_worst}, floor {floor}); \
         delay phase load: {delay_ok}/{MONTE_CARLO_SEEDS} within c_del*cap*n/D (max load {delay_worst}, cap {cap}, D {d}, bound {x})"
    );
    verdict(
        13,
        shuffle_ok >= MONTE_CARLO_PASS && delay_ok >= MONTE_CARLO_PASS,
        &detail,
    );
}

/// Amortized MIS rounds allowed for `t >= t0`.
const C_MIS_AMORTIZED: f64 = 400.0;

fn sweep(kind: SchedulerKind, cfg: &Config, ts: &[usize]) -> Vec<(usize, u64)> {
    ts.iter()
        .map(|&t| {
            let jobs = cfg.build_cycled(t).unwrap();
            (
                t,
                run(kind, &jobs, cfg.n, &cfg.run_options(false))
                    .unwrap()
                    .metrics
                    .rounds,
            )
        })
        .collect()
}

fn table(rows: &[(usize, u64)]) -> String {
    rows.iter()
        .map(|&(t, r)| format!("t={t}: {r}/{t}={:.2}", r as f64 / t as f64))
        .collect::<Vec<_>>()
        .join(", ")
}

#[test]
fn criterion_14_amortized_tables() {
    let n = 64;
    let hist_cfg = config(n, 14, vec![hist(1)]);
    let ts = [1, 8, 64, 256, 512];
    let mut hist_rows = Vec::new();
    let mut best = f64::INFINITY;
    for kind in [
        SchedulerKind::Deterministic,
        SchedulerKind::Shuffle,
        SchedulerKind::DelayDoubling,
    ] {
        let rows = sweep(kind, &hist_cfg, &ts);
        best = rows
            .iter()
            .map(|&(t, r)| r as f64 / t as f64)
            .fold(best, f64::min);
        hist_rows.push(format!("{}: {}", kind.name(), table(&rows)));
    }

    let mis_cfg = config(n, 14, vec![mis(0.3, 1)]);
    let delta = bound_inputs(&mis_cfg.build_cycled(1).unwrap(), n)
        .max_degree
        .unwrap();
    let t0 = (ceil_log2(ceil_log2(delta)).max(1) * ceil_log2(n as u64)) as usize;
    let mis_rows = sweep(SchedulerKind::Shuffle, &mis_cfg, &[t0, 2 * t0, 4 * t0]);
    let mis_worst = mis_rows
        .iter()
        .map(|&(t, r)| r as f64 / t as f64)
        .fold(0.0, f64::max);

    let pass = best < 1.0 && mis_worst <= C_MIS_AMORTIZED;
    let detail = format!(
        "histogram n={n}, best amortized {best:.2} (needs < 1) [{}]; MIS shuffle n={n} Delta={delta} t0={t0}, worst amortized {mis_worst:.1} <= {C_MIS_AMORTIZED} [{}]",
        hist_rows.join("; "),
        table(&mis_rows)
    );
    verdict(14, pass, &detail);
}
