use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use eos_cli::config::CsvConfig;
use eos_cli::{parse_csv_dataset, RunConfig};
use serde_json::Value;

fn eos(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_eos"))
        .args(args)
        .current_dir(dir)
        .output()
        .expect("binary runs")
}

fn ok(args: &[&str], dir: &Path) {
    let out = eos(args, dir);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
}

fn report(dir: &Path) -> Value {
    serde_json::from_slice(&std::fs::read(dir.join("report.json")).unwrap()).unwrap()
}

/// 80 Gaussian-ish points plus two far away, with an id column.
fn write_points(dir: &Path) -> PathBuf {
    let mut text = String::from("id,x,y,z\n");
    let mut state = 12345u64;
    let mut next = || {
        state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
        ((state >> 11) as f64 / (1u64 << 53) as f64) * 2.0 - 1.0
    };
    for i in 0..80 {
        text += &format!("{i},{},{},{}\n", next(), next(), next());
    }
    text += "80,9,9,9\n81,-8,7,9\n";
    let p = dir.join("points.csv");
    std::fs::write(&p, text).unwrap();
    p
}

fn write_wdbc_like(dir: &Path, rows: usize) -> PathBuf {
    let mut header = vec!["id".to_string(), "diagnosis".to_string()];
    header.extend((0..30).map(|j| format!("f{j}")));
    let mut text = header.join(",") + "\n";
    for i in 0..rows {
        let label = if i % 3 == 0 { "M" } else { "B" };
        let shift = if label == "M" { 1.0 } else { 0.0 };
        let feats: Vec<String> = (0..30)
            .map(|j| format!("{}", shift + ((i * 31 + j * 17) % 23) as f64 / 10.0))
            .collect();
        text += &format!("{},{label},{}\n", 84300 + i, feats.join(","));
    }
    let p = dir.join("wdbc.csv");
    std::fs::write(&p, text).unwrap();
    p
}

#[test]
fn wdbc_shaped_file_parses() {
    let dir = tempfile::tempdir().unwrap();
    let path = write_wdbc_like(dir.path(), 40);
    let cfg = CsvConfig {
        label_column: Some("diagnosis".into()),
        drop_columns: vec!["id".into()],
        label_map: [("M".to_string(), 1), ("B".to_string(), 0)].into(),
    };
    let data = parse_csv_dataset(&path, &cfg).unwrap();
    assert_eq!((data.len(), data.dim()), (40, 30));
    let labels = data.labels().unwrap();
    assert_eq!(labels.iter().filter(|y| **y == 1).count(), 14);
    assert_eq!(data.feature_names().unwrap()[0], "f0");
}

#[test]
fn synth_bench_report_structure() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("c.toml"), "[synth_bench]\nn_seeds = 3\n").unwrap();
    ok(&["synth-bench", "--config", "c.toml", "--output", "o", "--quiet"], dir.path());
    let r = report(&dir.path().join("o"));
    assert_eq!(r["schema_version"], 1);
    assert_eq!(r["command"], "synth-bench");
    assert_eq!(r["config"]["synth_bench"]["n_seeds"], 3);
    for method in ["eos_precision", "chi2_precision", "robust_chi2_precision"] {
        let m = r["results"]["metrics"]
            .as_array()
            .unwrap()
            .iter()
            .find(|m| m["metric_name"] == method)
            .unwrap();
        assert_eq!(m["per_seed_values"].as_array().unwrap().len(), 3);
        assert!(m["ci_low"].as_f64().unwrap() <= m["ci_high"].as_f64().unwrap());
    }
    let csv = std::fs::read_to_string(dir.path().join("o/metrics.csv")).unwrap();
    assert!(csv.starts_with("experiment,seed,metric,value\n"));
}

#[test]
fn detect_on_two_rows_fails_with_json() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("two.csv"), "a,b\n1,2\n3,4\n").unwrap();
    let out = eos(&["detect", "--input", "two.csv", "--output", "o"], dir.path());
    assert!(!out.status.success());
    let err: Value = serde_json::from_slice(&out.stderr).unwrap();
    assert_eq!(err["error"]["kind"], "invalid_input");
    assert!(!dir.path().join("o/report.json").exists());
}

#[test]
fn unknown_config_key_fails() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("c.toml"), "[eos]\nalfa = 1.0\n").unwrap();
    let out = eos(&["timing", "--config", "c.toml"], dir.path());
    assert!(!out.status.success());
    let err: Value = serde_json::from_slice(&out.stderr).unwrap();
    assert_eq!(err["error"]["kind"], "config");
}

#[test]
fn detect_flags_the_far_points() {
    let dir = tempfile::tempdir().unwrap();
    write_points(dir.path());
    std::fs::write(
        dir.path().join("c.toml"),
        "[csv]\ndrop_columns = [\"id\"]\n[detect.rule]\nrule = \"top-k\"\nk = 2\n",
    )
    .unwrap();
    ok(&["detect", "--config", "c.toml", "--input", "points.csv", "--output", "o", "--quiet"], dir.path());
    let r = report(&dir.path().join("o"));
    assert_eq!(r["results"]["flagged_indices"], serde_json::json!([80, 81]));
    let weights = std::fs::read_to_string(dir.path().join("o/weights.csv")).unwrap();
    assert_eq!(weights.lines().count(), 83);
    assert!(weights.lines().last().unwrap().ends_with(",1"));
}

#[test]
fn effective_config_reloads_to_the_same_run() {
    let dir = tempfile::tempdir().unwrap();
    write_points(dir.path());
    ok(
        &["detect", "--input", "points.csv", "--output", "a", "--seed", "5", "--alpha", "0.7", "--quiet"],
        dir.path(),
    );
    let first = report(&dir.path().join("a"));
    // the embedded config is a complete run description
    let cfg: RunConfig = serde_json::from_value(first["config"].clone()).unwrap();
    let mut cfg_b = cfg.clone();
    cfg_b.output_dir = "b".into();
    std::fs::write(dir.path().join("b.json"), serde_json::to_string(&cfg_b).unwrap()).unwrap();
    std::fs::write(dir.path().join("b.toml"), cfg_b.to_toml().unwrap()).unwrap();
    for file in ["b.json", "b.toml"] {
        ok(&["--config", file, "--quiet"], dir.path());
        assert_eq!(report(&dir.path().join("b"))["results"], first["results"]);
    }
    assert_eq!(cfg.eos.alpha, 0.7);
    assert_eq!(cfg.seed, 5);
}

#[test]
fn robust_train_and_mislabel_bench_run() {
    let dir = tempfile::tempdir().unwrap();
    write_wdbc_like(dir.path(), 60);
    std::fs::write(
        dir.path().join("c.toml"),
        "[csv]\nlabel_column = \"diagnosis\"\ndrop_columns = [\"id\"]\n[csv.label_map]\nM = 1\nB = 0\n",
    )
    .unwrap();
    ok(&["robust-train", "--config", "c.toml", "--input", "wdbc.csv", "--output", "rt", "--alpha", "0.05", "--quiet"], dir.path());
    let r = report(&dir.path().join("rt"));
    assert_eq!(r["results"]["robust"]["coefficients"].as_array().unwrap().len(), 30);

    std::fs::write(
        dir.path().join("m.toml"),
        "[mislabel_bench]\nflip_proportions = [0.0, 0.2]\n[mislabel_bench.data]\nn_instances = 80\n[mislabel_bench.experiment]\nn_splits = 3\n",
    )
    .unwrap();
    ok(&["mislabel-bench", "--config", "m.toml", "--output", "mb", "--quiet"], dir.path());
    let runs = report(&dir.path().join("mb"))["results"]["runs"].clone();
    assert_eq!(runs.as_array().unwrap().len(), 2);
    for run in runs.as_array().unwrap() {
        assert_eq!(run["plain_auc"]["per_seed_values"].as_array().unwrap().len(), 3);
        assert_eq!(run["eos_auc"]["per_seed_values"].as_array().unwrap().len(), 3);
    }
}

#[test]
fn timing_smoke_run() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(
        dir.path().join("c.toml"),
        "[timing]\nt_grid = [1000, 2000]\nd_grid = [2, 4]\nd_probe_instances = 500\nrepeats = 5\n",
    )
    .unwrap();
    ok(&["timing", "--config", "c.toml", "--output", "t", "--quiet"], dir.path());
    let csv = std::fs::read_to_string(dir.path().join("t/timing.csv")).unwrap();
    assert_eq!(csv.lines().count(), 5);
    assert!(csv.lines().nth(1).unwrap().starts_with("instances,1000,,"));
}
