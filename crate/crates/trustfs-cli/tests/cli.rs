//! End-to-end tests of the command-line interface.

use std::path::Path;
use std::process::{Command, Output};

fn trustfs(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_trustfs"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn path_str(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn synth_then_fit_produces_reports() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("data");
    let out = dir.path().join("out");

    let synth = trustfs(&[
        "synth", "--out", path_str(&data), "--views", "2", "--n", "24", "--dims", "8",
        "--classes", "2", "--informative", "2", "--seed", "3",
    ]);
    assert!(synth.status.success(), "{:?}", synth);
    assert!(data.join("meta.json").exists());
    assert!(data.join("view_1.csv").exists());
    assert!(data.join("labels.csv").exists());
    assert!(data.join("informative.json").exists());

    let fit = trustfs(&[
        "fit",
        "--data", path_str(&data),
        "--out", path_str(&out),
        "--missing-ratios", "0.3",
        "--feature-ratios", "0.5",
        "--gamma-grid", "2",
        "--lambda-grid", "0.01",
        "--tau-grid", "0.1",
        "--seeds", "0",
        "--knn-k", "4",
        "--max-iter", "10",
        "--kmeans-restarts", "4",
        "--eval-repeats", "2",
    ]);
    assert!(fit.status.success(), "{:?}", fit);
    assert!(out.join("summary.csv").exists());
    let runs: Vec<_> = std::fs::read_dir(out.join("runs")).unwrap().collect();
    assert_eq!(runs.len(), 1);
    let cell = runs[0].as_ref().unwrap().path();
    assert!(cell.join("report.csv").exists());
    assert!(cell.join("selection.json").exists());

    let report = std::fs::read_to_string(cell.join("report.csv")).unwrap();
    assert!(report.starts_with("iteration,total,fit,sparsity,smoothness,consensus"));
}

#[test]
fn sweep_is_byte_identical_across_reruns() {
    let dir = tempfile::tempdir().unwrap();
    let out1 = dir.path().join("a");
    let out2 = dir.path().join("b");
    let common = [
        "sweep",
        "--n", "24",
        "--views", "2",
        "--dims", "8",
        "--classes", "2",
        "--informative", "2",
        "--missing-ratios", "0.1,0.4",
        "--feature-ratios", "0.3,0.5",
        "--gamma-grid", "2",
        "--lambda-grid", "0.01",
        "--tau-grid", "0.1",
        "--seeds", "0,1",
        "--knn-k", "4",
        "--max-iter", "8",
        "--kmeans-restarts", "3",
        "--eval-repeats", "2",
    ];
    let mut args1: Vec<&str> = common.to_vec();
    args1.extend(["--out", path_str(&out1)]);
    let run1 = trustfs(&args1);
    assert!(run1.status.success(), "{:?}", run1);

    let mut args2: Vec<&str> = common.to_vec();
    args2.extend(["--out", path_str(&out2), "--threads", "2"]);
    let run2 = trustfs(&args2);
    assert!(run2.status.success(), "{:?}", run2);

    for file in ["summary.csv", "metric_vs_feature_ratio.csv", "metric_vs_missing_ratio.csv"] {
        let a = std::fs::read(out1.join(file)).unwrap();
        let b = std::fs::read(out2.join(file)).unwrap();
        assert_eq!(a, b, "{file} differs between reruns");
    }
}

#[test]
fn sweep_accepts_config_file_with_flag_overrides() {
    let dir = tempfile::tempdir().unwrap();
    let cfg_path = dir.path().join("sweep.cfg");
    std::fs::write(
        &cfg_path,
        "\
source = synthetic
views = 2
n = 24
dims = 8
classes = 2
informative = 2
data_seed = 1
missing_ratios = 0.2
feature_ratios = 0.5
gamma_grid = 2
lambda_grid = 0.01
tau_grid = 0.1
seeds = 0
knn_k = 4
max_iter = 8
kmeans_restarts = 3
eval_repeats = 2
out_dir = from_config
",
    )
    .unwrap();
    let out = dir.path().join("override");
    let run = trustfs(&[
        "sweep",
        "--config", path_str(&cfg_path),
        "--out", path_str(&out),
    ]);
    assert!(run.status.success(), "{:?}", run);
    assert!(out.join("summary.csv").exists());
    assert!(!dir.path().join("from_config").exists());
}

#[test]
fn dump_graphs_emits_expected_files() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("graphs");
    let run = trustfs(&[
        "dump-graphs",
        "--views", "3",
        "--n", "18",
        "--dims", "6",
        "--classes", "2",
        "--informative", "2",
        "--missing-ratios", "0.2",
        "--gamma-grid", "2",
        "--lambda-grid", "0.01",
        "--tau-grid", "0.1",
        "--seeds", "0",
        "--knn-k", "4",
        "--max-iter", "5",
        "--out", path_str(&out),
    ]);
    assert!(run.status.success(), "{:?}", run);
    for file in [
        "graph_view_1.csv",
        "graph_view_2.csv",
        "graph_view_3.csv",
        "belief.csv",
        "uncertainty.csv",
    ] {
        assert!(out.join(file).exists(), "missing {file}");
    }
}

#[test]
fn eval_runs_baselines_without_fitting() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("eval");
    let run = trustfs(&[
        "eval",
        "--variant", "allfea",
        "--views", "2",
        "--n", "24",
        "--dims", "8",
        "--classes", "2",
        "--informative", "2",
        "--missing-ratios", "0.3",
        "--gamma-grid", "2",
        "--lambda-grid", "0.01",
        "--tau-grid", "0.1",
        "--seeds", "0",
        "--kmeans-restarts", "3",
        "--eval-repeats", "2",
        "--out", path_str(&out),
    ]);
    assert!(run.status.success(), "{:?}", run);
    assert!(out.join("summary.csv").exists());
}

#[test]
fn ablate_writes_comparison_table() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("ablation");
    let run = trustfs(&[
        "ablate",
        "--views", "2",
        "--n", "24",
        "--dims", "8",
        "--classes", "2",
        "--informative", "2",
        "--missing-ratios", "0.3",
        "--feature-ratios", "0.5",
        "--gamma-grid", "2",
        "--lambda-grid", "0.01",
        "--tau-grid", "0.1",
        "--seeds", "0",
        "--knn-k", "4",
        "--max-iter", "8",
        "--kmeans-restarts", "3",
        "--eval-repeats", "2",
        "--out", path_str(&out),
    ]);
    assert!(run.status.success(), "{:?}", run);
    let table = std::fs::read_to_string(out.join("ablation.csv")).unwrap();
    for name in ["full", "variant-1", "variant-2", "variant-3"] {
        assert!(table.contains(name));
    }
}

#[test]
fn failures_produce_json_error_and_nonzero_exit() {
    let dir = tempfile::tempdir().unwrap();
    let run = trustfs(&[
        "fit",
        "--data", path_str(&dir.path().join("nonexistent")),
        "--out", path_str(&dir.path().join("out")),
    ]);
    assert!(!run.status.success());
    let stderr = String::from_utf8_lossy(&run.stderr);
    let parsed: serde_json::Value =
        serde_json::from_str(stderr.trim()).expect("stderr is JSON");
    assert!(parsed.get("error").is_some());
}
