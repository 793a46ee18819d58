use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use clique_core::config::Config;
use clique_core::metrics::{check_bound, Fraction};
use clique_core::report::{applicable_theorems, bound_inputs, Report};
use clique_core::sched::{run, SchedulerKind};
use clique_core::Error;

#[derive(Parser)]
#[command(
    name = "clique",
    about = "Run job sets on a simulated congested clique"
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Run the configured job set once and print a JSON report.
    Run {
        config: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, value_parser = parse_kind)]
        scheduler: Option<SchedulerKind>,
        /// Write the report here instead of stdout.
        #[arg(long)]
        report: Option<PathBuf>,
        /// Write the routed-message trace as CSV.
        #[arg(long)]
        trace: Option<PathBuf>,
        /// Exit with status 4 if a bound check fails.
        #[arg(long)]
        enforce_bounds: bool,
    },
    /// Sweep the number of jobs and print one CSV row per value of t.
    Bench {
        config: PathBuf,
        #[arg(long, value_parser = parse_kind)]
        scheduler: Option<SchedulerKind>,
        #[arg(long)]
        csv: Option<PathBuf>,
        #[arg(long)]
        enforce_bounds: bool,
    },
}

fn parse_kind(s: &str) -> Result<SchedulerKind, String> {
    SchedulerKind::ALL
        .into_iter()
        .find(|k| k.name() == s)
        .ok_or_else(|| format!("unknown scheduler {s:?}"))
}

enum Failure {
    Config(String),
    Model(String),
    Bound,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Config(_) | Error::SizeMismatch { .. } | Error::MissingField(_) => {
                Failure::Config(e.to_string())
            }
            _ => Failure::Model(e.to_string()),
        }
    }
}

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Self {
        Failure::Config(e.to_string())
    }
}

fn create(path: &Path) -> Result<BufWriter<File>, Failure> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| Failure::Config(format!("{}: {e}", path.display())))
}

fn cmd_run(
    path: &Path,
    seed: Option<u64>,
    scheduler: Option<SchedulerKind>,
    report_path: Option<PathBuf>,
    trace_path: Option<PathBuf>,
    enforce: bool,
) -> Result<(), Failure> {
    let mut cfg = Config::load(path)?;
    if let Some(s) = seed {
        cfg.seed = s;
    }
    if let Some(k) = scheduler {
        cfg.scheduler = k;
    }
    let trace_path = trace_path.or(cfg.outputs.trace.clone());
    let jobs = cfg.build_jobs()?;
    let out = run(
        cfg.scheduler,
        &jobs,
        cfg.n,
        &cfg.run_options(trace_path.is_some()),
    )?;
    let report = Report::new(cfg.scheduler, cfg.seed, &jobs, &out, &cfg.bounds)?;
    let json = serde_json::to_string_pretty(&report).map_err(|e| Failure::Config(e.to_string()))?;
    match report_path.or(cfg.outputs.report.clone()) {
        Some(p) => writeln!(create(&p)?, "{json}")?,
        None => println!("{json}"),
    }
    if let (Some(p), Some(trace)) = (trace_path, &out.trace) {
        let mut w = create(&p)?;
        writeln!(
            w,
            "round,src_machine,dst_machine,job,src_slot,dst_slot,payload"
        )?;
        for rec in trace {
            rec.write_csv(&mut w)?;
        }
    }
    if let Some(p) = &cfg.outputs.m_r {
        let mut w = create(p)?;
        writeln!(w, "round,messages")?;
        for (r, m) in out.metrics.m_r.iter().enumerate() {
            writeln!(w, "{r},{m}")?;
        }
    }
    if enforce && !report.all_bounds_pass() {
        return Err(Failure::Bound);
    }
    Ok(())
}

fn gcd(a: u64, b: u64) -> u64 {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

fn cmd_bench(
    path: &Path,
    scheduler: Option<SchedulerKind>,
    csv: Option<PathBuf>,
    enforce: bool,
) -> Result<(), Failure> {
    let mut cfg = Config::load(path)?;
    if let Some(k) = scheduler {
        cfg.scheduler = k;
    }
    let sweep = cfg
        .sweep
        .clone()
        .ok_or_else(|| Failure::Config("bench needs a `sweep` section".into()))?;
    let mut w: Box<dyn Write> = match csv {
        Some(p) => Box::new(create(&p)?),
        None => Box::new(io::stdout().lock()),
    };
    writeln!(w, "t,rounds,amortized_num,amortized_den,bound_ratio")?;
    let mut failed = false;
    for &t in &sweep.t {
        let jobs = cfg.build_cycled(t)?;
        let out = run(cfg.scheduler, &jobs, cfg.n, &cfg.run_options(false))?;
        let rounds = out.metrics.rounds;
        let theorem = sweep
            .theorem
            .or_else(|| applicable_theorems(cfg.scheduler, &jobs).first().copied());
        let ratio = match theorem {
            Some(th) => {
                let c = cfg
                    .bounds
                    .get(&th)
                    .copied()
                    .unwrap_or(th.default_constant());
                let check = check_bound(&out.metrics, th, c, &bound_inputs(&jobs, cfg.n))?;
                failed |= !check.pass;
                format!("{:.4}", check.ratio)
            }
            None => String::new(),
        };
        let amortized = if t == 0 {
            Fraction::new(0, 1)
        } else {
            let g = gcd(rounds, t as u64).max(1);
            Fraction::new(rounds / g, t as u64 / g)
        };
        writeln!(
            w,
            "{t},{rounds},{},{},{ratio}",
            amortized.num, amortized.den
        )?;
    }
    w.flush()?;
    if enforce && failed {
        return Err(Failure::Bound);
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.cmd {
        Cmd::Run {
            config,
            seed,
            scheduler,
            report,
            trace,
            enforce_bounds,
        } => cmd_run(&config, seed, scheduler, report, trace, enforce_bounds),
        Cmd::Bench {
            config,
            scheduler,
            csv,
            enforce_bounds,
        } => cmd_bench(&config, scheduler, csv, enforce_bounds),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Config(msg)) => {
            eprintln!("config error: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Model(msg)) => {
            eprintln!("run failed: {msg}");
            ExitCode::from(3)
        }
        Err(Failure::Bound) => {
            eprintln!("bound check failed");
            ExitCode::from(4)
        }
    }
}
