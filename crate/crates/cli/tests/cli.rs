use std::path::Path;
use std::process::{Command, Output};

fn clique(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_clique"))
        .args(args)
        .output()
        .expect("run clique")
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p.to_str().unwrap().to_string()
}

fn digest(out: &Output) -> String {
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).expect("json report");
    v["outputs_digest"].as_str().unwrap().to_string()
}

const MIX: &str = r#"{
  "n": 16,
  "seed": 4,
  "jobs": [
    {"type": "histogram", "items": 2, "count": 2},
    {"type": "pointer-jumping", "count": 2},
    {"type": "leader", "words": 4}
  ]
}"#;

#[test]
fn every_scheduler_reports_the_naive_digest() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "mix.json", MIX);
    let base = clique(&["run", &cfg]);
    assert!(
        base.status.success(),
        "{}",
        String::from_utf8_lossy(&base.stderr)
    );
    for kind in ["deterministic", "shuffle", "delay", "delay-doubling"] {
        let out = clique(&["run", &cfg, "--scheduler", kind]);
        assert!(out.status.success(), "{kind}");
        assert_eq!(digest(&out), digest(&base), "{kind}");
    }
}

#[test]
fn report_has_metrics_and_bounds() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "mix.json", MIX);
    let report = dir.path().join("r.json");
    let out = clique(&[
        "run",
        &cfg,
        "--scheduler",
        "shuffle",
        "--report",
        report.to_str().unwrap(),
    ]);
    assert!(out.status.success());
    let v: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(report).unwrap()).unwrap();
    assert!(v["metrics"]["rounds"].as_u64().unwrap() > 0);
    assert!(v["bounds"]["shuffle"]["pass"].as_bool().unwrap());
}

#[test]
fn toml_config_and_trace() {
    let dir = tempfile::tempdir().unwrap();
    let trace = dir.path().join("trace.csv");
    let cfg = write(
        dir.path(),
        "c.toml",
        &format!(
            "n = 8\nscheduler = \"delay\"\n[[jobs]]\ntype = \"mis\"\np = 0.3\n[outputs]\ntrace = {:?}\n",
            trace.to_str().unwrap()
        ),
    );
    let out = clique(&["run", &cfg]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let text = std::fs::read_to_string(trace).unwrap();
    assert!(text.starts_with("round,src_machine"));
    assert!(text.lines().count() > 1);
}

#[test]
fn empty_job_list_charges_nothing() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "e.json", r#"{"n": 8, "scheduler": "shuffle"}"#);
    let out = clique(&["run", &cfg]);
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["metrics"]["rounds"], 0);
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let bad = write(dir.path(), "bad.json", r#"{"n": 0}"#);
    assert_eq!(clique(&["run", &bad]).status.code(), Some(2));
    let missing = dir.path().join("nope.json");
    assert_eq!(
        clique(&["run", missing.to_str().unwrap()]).status.code(),
        Some(2)
    );

    // a leader job with oversized inputs fails the shuffle I/O check
    let io = write(
        dir.path(),
        "io.json",
        r#"{"n": 4, "scheduler": "shuffle", "jobs": [{"type": "leader", "words": 17}]}"#,
    );
    assert_eq!(clique(&["run", &io]).status.code(), Some(3));

    let tight = write(
        dir.path(),
        "tight.json",
        r#"{"n": 8, "scheduler": "shuffle", "jobs": [{"type": "histogram"}],
            "bounds": {"shuffle": {"c": 0, "additive": 0}}}"#,
    );
    assert_eq!(clique(&["run", &tight]).status.code(), Some(0));
    assert_eq!(
        clique(&["run", &tight, "--enforce-bounds"]).status.code(),
        Some(4)
    );
}

#[test]
fn bench_writes_one_row_per_t() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "b.json",
        r#"{"n": 16, "scheduler": "deterministic", "jobs": [{"type": "histogram"}], "sweep": {"t": [1, 2, 4]}}"#,
    );
    let out = clique(&["bench", &cfg]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let text = String::from_utf8(out.stdout).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "t,rounds,amortized_num,amortized_den,bound_ratio");
    assert_eq!(lines.len(), 4);
    let row: Vec<&str> = lines[3].split(',').collect();
    assert_eq!(row[0], "4");
    let rounds: u64 = row[1].parse().unwrap();
    let (num, den): (u64, u64) = (row[2].parse().unwrap(), row[3].parse().unwrap());
    assert_eq!(rounds * den, 4 * num);
    assert!(!row[4].is_empty());
}
