mod common;

use std::fs;
use std::process::Command;

use cardshift::cli::bench::{cmd_bench, load_suite, run_suite, SuiteEntry};
use cardshift::cli::run::{cmd_cluster, read_labels, RunReport};
use cardshift::cli::trace::cmd_trace;
use cardshift::cli::{Preprocess, RunConfig, Stage};
use cardshift::evalmetrics::rand_index;
use cardshift::{Boundary, LabelColumn};
use common::data_path;

fn iris() -> RunConfig {
    RunConfig {
        input: data_path("iris.csv").to_string_lossy().into_owned(),
        label_column: Some(LabelColumn::Name("class".into())),
        preprocess: Preprocess::Standardize,
        ..Default::default()
    }
}

#[test]
fn cluster_writes_consistent_labels_and_report() {
    let dir = tempfile::tempdir().unwrap();
    let report = cmd_cluster(&iris(), dir.path()).unwrap();
    let labels = read_labels(&dir.path().join("labels.csv")).unwrap();
    assert_eq!(labels.len(), 150);
    assert_eq!(report.n, 150);
    assert_eq!(report.d, 4);
    assert_eq!(report.classes, Some(3));
    assert_eq!(report.good_points + report.bad_points, 150);
    let distinct: std::collections::BTreeSet<_> = labels.iter().collect();
    assert_eq!(distinct.len(), report.modes);

    let text = fs::read_to_string(dir.path().join("report.json")).unwrap();
    let parsed: RunReport = serde_json::from_str(&text).unwrap();
    assert_eq!(parsed, report);

    let truth = cardshift::dataset::load_csv(data_path("iris.csv"), Some(&"class".parse().unwrap()))
        .unwrap();
    let ri = rand_index(truth.labels().unwrap(), &labels).unwrap();
    assert_eq!(Some(ri), report.rand_index);
}

#[test]
fn runs_are_deterministic() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let cfg = RunConfig { seed: 9, ..Default::default() };
    cmd_cluster(&cfg, a.path()).unwrap();
    cmd_cluster(&cfg, b.path()).unwrap();
    assert_eq!(
        fs::read(a.path().join("labels.csv")).unwrap(),
        fs::read(b.path().join("labels.csv")).unwrap()
    );
}

#[test]
fn missing_input_fails_at_load() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = RunConfig { input: "/nonexistent/data.csv".into(), ..Default::default() };
    let err = cmd_cluster(&cfg, dir.path()).unwrap_err();
    assert_eq!(err.stage, Stage::Load);

    let out = Command::new(env!("CARGO_BIN_EXE_cardshift"))
        .args(["cluster", "--input", "/nonexistent/data.csv", "--out"])
        .arg(dir.path())
        .output()
        .unwrap();
    assert!(!out.status.success());
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("error [load]"), "{stderr}");
}

#[test]
fn trace_agrees_with_the_estimator() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = RunConfig { seed: 2, ..Default::default() };
    let (csv_path, json_path, summary) = cmd_trace(&cfg, 17, dir.path()).unwrap();
    let mut r = csv::Reader::from_path(&csv_path).unwrap();
    let mut best: Option<(usize, f64)> = None;
    let mut last_k = 0;
    for rec in r.records() {
        let rec = rec.unwrap();
        let k: usize = rec[0].parse().unwrap();
        last_k = k;
        if k > summary.max_boundary || rec[2].is_empty() {
            continue;
        }
        let g: f64 = rec[2].parse().unwrap();
        if best.map_or(true, |(_, b)| g < b) {
            best = Some((k, g));
        }
    }
    assert_eq!(best.unwrap().0, summary.n_hat);
    assert_eq!(last_k, summary.extended_max);
    let json: serde_json::Value = serde_json::from_str(&fs::read_to_string(json_path).unwrap()).unwrap();
    assert_eq!(json["n_hat"], summary.n_hat);

    let err = cmd_trace(&cfg, 10_000, dir.path()).unwrap_err();
    assert_eq!(err.stage, Stage::Config);
}

#[test]
fn bench_adds_median_rows_and_survives_failures() {
    let dir = tempfile::tempdir().unwrap();
    let toy = SuiteEntry { seeds: Some(vec![0, 1, 2]), ..SuiteEntry::new(RunConfig::default()) };
    let broken = SuiteEntry::new(RunConfig { input: "/nonexistent.csv".into(), ..Default::default() });
    let wine = SuiteEntry {
        reference: Some("wine".into()),
        ..SuiteEntry::new(RunConfig {
            input: data_path("wine.csv").to_string_lossy().into_owned(),
            label_column: Some(LabelColumn::Name("class".into())),
            preprocess: Preprocess::Gagolewski,
            max_boundary: Boundary::Fraction(0.5),
            ..Default::default()
        })
    };
    let rows = cmd_bench(&[toy, broken, wine], dir.path()).unwrap();
    assert_eq!(rows.len(), 6);
    let median = &rows[3];
    assert_eq!(median.seed, "median");
    let mut ri: Vec<f64> = rows[..3].iter().map(|r| r.rand_index.unwrap()).collect();
    ri.sort_by(f64::total_cmp);
    assert_eq!(median.rand_index, Some(ri[1]));
    assert!(rows[4].status.starts_with("error (load)"));
    assert_eq!(rows[5].ref_published, Some(0.7067));
    assert!(rows[5].ref_kmeans.is_some());

    let mut r = csv::Reader::from_path(dir.path().join("bench.csv")).unwrap();
    assert_eq!(r.records().count(), 6);
    assert!(dir.path().join("bench_summary.txt").exists());
}

#[test]
fn empty_suite_is_rejected() {
    let err = run_suite(&[]).unwrap_err();
    assert_eq!(err.stage, Stage::Config);
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("empty.toml");
    fs::write(&path, "# nothing\n").unwrap();
    assert!(load_suite(&path).unwrap().is_empty());
}

#[test]
fn suite_inputs_resolve_against_the_suite_file() {
    let dir = tempfile::tempdir().unwrap();
    fs::copy(data_path("iris.csv"), dir.path().join("iris.csv")).unwrap();
    let path = dir.path().join("s.toml");
    fs::write(&path, "[[run]]\ninput = \"iris.csv\"\nlabel_column = \"class\"\nseeds = [1, 2]\n").unwrap();
    let suite = load_suite(&path).unwrap();
    assert_eq!(suite[0].config.input, dir.path().join("iris.csv").to_string_lossy());
    assert_eq!(suite[0].seeds, Some(vec![1, 2]));
}

#[test]
fn toygen_and_preset_through_the_binary() {
    let dir = tempfile::tempdir().unwrap();
    let csv_path = dir.path().join("toy.csv");
    let status = Command::new(env!("CARGO_BIN_EXE_cardshift"))
        .args(["toygen", "--seed", "4", "--out"])
        .arg(&csv_path)
        .status()
        .unwrap();
    assert!(status.success());
    let ds = cardshift::dataset::load_csv(&csv_path, Some(&"cluster".parse().unwrap())).unwrap();
    assert_eq!(ds.n(), 400);

    let out = Command::new(env!("CARGO_BIN_EXE_cardshift"))
        .args(["cluster", "--preset", "paper-toy", "--seed", "4", "--out"])
        .arg(dir.path())
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let report: RunReport =
        serde_json::from_str(&fs::read_to_string(dir.path().join("report.json")).unwrap()).unwrap();
    assert_eq!(report.params.max_iter, 200);
    assert_eq!(report.n, 400);
}
