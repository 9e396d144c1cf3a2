mod common;

use std::path::Path;
use std::process::{Command, Output};

use triadic::io::{write_social_graph, write_stream_file};

use common::*;

fn triadic(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_triadic")).args(args).output().unwrap()
}

fn path(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn writes_one_json_report_per_window() {
    let dir = tempfile::tempdir().unwrap();
    let stream = dir.path().join("stream.tsv");
    let mut acts = bowtie_activities();
    acts.extend(
        bowtie_activities()
            .into_iter()
            .map(|a| triadic::model::Activity { timestamp: a.timestamp + 250, ..a }),
    );
    write_stream_file(&stream, &acts).unwrap();
    let out = dir.path().join("reports.jsonl");
    let run = triadic(&[
        path(&stream),
        "--p", "1", "--window-seconds", "100", "--n", "5", "--W", "50", "--out", path(&out),
    ]);
    assert!(run.status.success(), "{}", String::from_utf8_lossy(&run.stderr));
    let text = std::fs::read_to_string(&out).unwrap();
    let reports: Vec<serde_json::Value> = text.lines().map(|l| serde_json::from_str(l).unwrap()).collect();
    // Windows 0 and 2 hold the triangles, window 1 is an empty gap.
    assert_eq!(reports.len(), 3);
    assert_eq!(reports[0]["window"], 0);
    assert_eq!(reports[0]["status"], "ok");
    assert_eq!(reports[0]["estimate_kind"], "theta");
    assert_eq!(reports[1]["status"], "no-signal");
    assert_eq!(reports[2]["histogram"], serde_json::json!([[1, 4], [2, 1]]));
}

#[test]
fn unknown_population_reports_theta_plus_and_size() {
    let dir = tempfile::tempdir().unwrap();
    let stream = dir.path().join("stream.tsv");
    write_stream_file(&stream, &bowtie_activities()).unwrap();
    let run = triadic(&[path(&stream), "--p", "1", "--window-seconds", "100", "--W", "10"]);
    assert!(run.status.success(), "{}", String::from_utf8_lossy(&run.stderr));
    let report: serde_json::Value = serde_json::from_slice(run.stdout.split(|&b| b == b'\n').next().unwrap()).unwrap();
    assert_eq!(report["estimate_kind"], "theta_plus");
    assert!((report["n_plus"].as_f64().unwrap() - 5.0).abs() < 1e-6);
}

#[test]
fn influence_mode_reads_the_social_graph() {
    let dir = tempfile::tempdir().unwrap();
    let (acts, social) = influence_example();
    let stream = dir.path().join("stream.tsv");
    let edges = dir.path().join("social.tsv");
    write_stream_file(&stream, &acts).unwrap();
    write_social_graph(std::fs::File::create(&edges).unwrap(), &social).unwrap();
    let run = triadic(&[
        path(&stream),
        "--mode", "uc", "--p", "1", "--p-prime", "1", "--window-seconds", "100", "--social", path(&edges),
    ]);
    assert!(run.status.success(), "{}", String::from_utf8_lossy(&run.stderr));
    let report: serde_json::Value = serde_json::from_slice(run.stdout.split(|&b| b == b'\n').next().unwrap()).unwrap();
    assert_eq!(report["mode"], "uc");
    assert_eq!(report["histogram"][1], serde_json::json!([1, 1]));
}

#[test]
fn configuration_errors_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let stream = dir.path().join("stream.tsv");
    write_stream_file(&stream, &bowtie_activities()).unwrap();
    assert_eq!(triadic(&[path(&stream), "--mode", "uc"]).status.code(), Some(2));
    assert_eq!(triadic(&[path(&stream), "--p", "0"]).status.code(), Some(2));
    assert_eq!(triadic(&[path(&stream), "--threshold", "bogus"]).status.code(), Some(2));
    assert_eq!(triadic(&[]).status.code(), Some(2));
}

#[test]
fn malformed_input_exits_with_three() {
    let dir = tempfile::tempdir().unwrap();
    let stream = dir.path().join("stream.tsv");
    std::fs::write(&stream, "1\tU\t1\t2\nnot a line\n2\tU\t2\t3\n").unwrap();
    let run = triadic(&[path(&stream)]);
    assert_eq!(run.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&run.stderr).contains(":2:"));
    assert_eq!(triadic(&[path(&dir.path().join("missing.tsv"))]).status.code(), Some(3));
}

#[test]
fn bench_mode_prints_exact_and_sampled_rows() {
    let dir = tempfile::tempdir().unwrap();
    let graph = dir.path().join("graph.tsv");
    let social = clustered_social(300, 2);
    let acts: Vec<_> = social
        .edges()
        .into_iter()
        .filter(|&(a, b)| a < b)
        .enumerate()
        .map(|(k, (a, b))| triadic::model::Activity::user(a, b, k as u64).unwrap())
        .collect();
    write_stream_file(&graph, &acts).unwrap();
    let run = triadic(&["--bench", path(&graph), "--p-list", "0.3,0.5", "--n", "300", "--W", "200"]);
    assert!(run.status.success(), "{}", String::from_utf8_lossy(&run.stderr));
    let rows: Vec<serde_json::Value> = String::from_utf8(run.stdout)
        .unwrap()
        .lines()
        .map(|l| serde_json::from_str(l).unwrap())
        .collect();
    assert_eq!(rows.len(), 3);
    assert_eq!(rows[0]["method"], "exact");
    assert_eq!(rows[2]["p"], 0.5);
}
