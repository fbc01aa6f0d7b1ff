//! Runs the built binary end to end.

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn relaxtune(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_relaxtune")).args(args).output().expect("binary runs")
}

fn gen(out: &Path, n: &str, cities: &str, train_ratio: &str) {
    let out = out.to_str().unwrap();
    let o = relaxtune(&["gen", "--n", n, "--cities", cities, "--train-ratio", train_ratio, "--out", out]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
}

fn count_files(dir: &Path) -> usize {
    fs::read_dir(dir).map(|d| d.count()).unwrap_or(0)
}

#[test]
fn gen_writes_requested_instances() {
    let dir = tempfile::tempdir().unwrap();
    gen(dir.path(), "10", "8..12", "0.7");
    let train = count_files(&dir.path().join("train"));
    let test = count_files(&dir.path().join("test"));
    assert_eq!((train, test), (7, 3));
}

#[test]
fn sweep_feasibility_rises_with_penalty() {
    let dir = tempfile::tempdir().unwrap();
    gen(dir.path(), "1", "8..8", "1.0");
    let inst = fs::read_dir(dir.path().join("train")).unwrap().next().unwrap().unwrap().path();
    let csv_path = dir.path().join("sweep.csv");
    let o = relaxtune(&[
        "sweep",
        "--instance",
        inst.to_str().unwrap(),
        "--a-min",
        "0.1",
        "--a-max",
        "10",
        "--normalized",
        "--points",
        "12",
        "--sweeps",
        "300",
        "--out",
        csv_path.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let mut reader = csv::Reader::from_path(&csv_path).unwrap();
    let rows: Vec<(f64, f64)> = reader
        .records()
        .map(|r| {
            let r = r.unwrap();
            (r[0].parse().unwrap(), r[2].parse().unwrap())
        })
        .collect();
    assert_eq!(rows.len(), 12);
    let first = rows[..3].iter().map(|r| r.1).sum::<f64>();
    let last = rows[9..].iter().map(|r| r.1).sum::<f64>();
    assert!(last > first + 1.0, "p_f does not rise: {rows:?}");
}

#[test]
fn bench_surrogate_without_model_is_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    gen(dir.path(), "2", "6..6", "0.0");
    let out = dir.path().join("report");
    let o = relaxtune(&[
        "bench",
        "--instances",
        dir.path().to_str().unwrap(),
        "--methods",
        "surrogate,random",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("--model"));
}

#[test]
fn bench_without_surrogate_writes_reports() {
    let dir = tempfile::tempdir().unwrap();
    gen(dir.path(), "2", "6..6", "0.0");
    let out = dir.path().join("report");
    let o = relaxtune(&[
        "bench",
        "--instances",
        dir.path().to_str().unwrap(),
        "--methods",
        "random,tpe",
        "--max-trials",
        "8",
        "--seeds",
        "1",
        "--sweeps",
        "50",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    for name in ["curves.csv", "summary.csv", "runs.csv"] {
        assert!(out.join(name).exists(), "{name} missing");
    }
}

#[test]
fn unknown_subcommand_exits_two() {
    assert_eq!(relaxtune(&["frobnicate"]).status.code(), Some(2));
}
