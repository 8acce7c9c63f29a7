//! End-to-end tests of the simscan binary: exit codes, artifact files, and
//! determinism across worker counts.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use image::{Rgb, RgbImage};

fn simscan(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_simscan"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn write_png(path: &Path, seed: u64, size: u32) {
    let img = RgbImage::from_fn(size, size, |x, y| {
        let v = seed
            .wrapping_mul(6364136223846793005)
            .wrapping_add((y * size + x) as u64)
            .wrapping_mul(1442695040888963407);
        Rgb([(v >> 16) as u8, (v >> 24) as u8, (v >> 32) as u8])
    });
    img.save(path).unwrap();
}

/// Two classes of PNGs with one exact duplicate pair inside class "a".
fn image_dir_dataset(root: &Path) -> PathBuf {
    let data = root.join("data");
    for class in ["a", "b"] {
        std::fs::create_dir_all(data.join(class)).unwrap();
    }
    for i in 0..4u64 {
        write_png(&data.join(format!("a/{i}.png")), 100 + i, 16);
    }
    std::fs::copy(data.join("a/1.png"), data.join("a/9dup.png")).unwrap();
    for i in 0..3u64 {
        write_png(&data.join(format!("b/{i}.png")), 200 + i, 16);
    }
    data
}

fn cifar10_dataset(root: &Path) -> PathBuf {
    let dir = root.join("cifar");
    std::fs::create_dir_all(&dir).unwrap();
    let mut state = 0x1234_5678_u64;
    let mut record = |label: u8| {
        let mut bytes = vec![label];
        for _ in 0..3072 {
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            bytes.push((state >> 33) as u8);
        }
        bytes
    };
    for batch in 1..=5 {
        let mut content = Vec::new();
        content.extend(record((batch % 10) as u8));
        content.extend(record(((batch + 3) % 10) as u8));
        std::fs::write(dir.join(format!("data_batch_{batch}.bin")), content).unwrap();
    }
    let mut content = Vec::new();
    content.extend(record(1));
    content.extend(record(2));
    std::fs::write(dir.join("test_batch.bin"), content).unwrap();
    dir
}

fn report_without_timings(path: &Path) -> serde_json::Value {
    let mut value: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap();
    value["timings"] = serde_json::json!({});
    value
}

#[test]
fn alg1_writes_report_and_groups() {
    let tmp = tempfile::tempdir().unwrap();
    let data = image_dir_dataset(tmp.path());
    let out = tmp.path().join("out");
    let output = simscan(&[
        "alg1",
        "--dataset-path",
        data.to_str().unwrap(),
        "--target-height",
        "16",
        "--target-width",
        "16",
        "--basis",
        "haar",
        "--n-c",
        "7",
        "--restarts",
        "4",
        "--output-dir",
        out.to_str().unwrap(),
    ]);
    assert!(output.status.success(), "{}", String::from_utf8_lossy(&output.stderr));
    for file in ["report.json", "kept_ids.csv", "groups.csv"] {
        assert!(out.join(file).exists(), "{file} missing");
    }
    let report = report_without_timings(&out.join("report.json"));
    let redundant = report["redundant_groups"].as_array().unwrap();
    assert_eq!(redundant.len(), 1);
    let members: Vec<&str> = redundant[0]["members"]
        .as_array()
        .unwrap()
        .iter()
        .map(|m| m.as_str().unwrap())
        .collect();
    assert_eq!(members, vec!["a/1.png", "a/9dup.png"]);
    assert_eq!(report["kept_ids"].as_array().unwrap().len(), 7);
    let groups_csv = std::fs::read_to_string(out.join("groups.csv")).unwrap();
    assert!(groups_csv.contains("a/9dup.png,0,redundant,"));
}

#[test]
fn rerun_is_idempotent_and_worker_count_does_not_matter() {
    let tmp = tempfile::tempdir().unwrap();
    let data = image_dir_dataset(tmp.path());
    let base: Vec<String> = [
        "alg2",
        "--dataset-path",
        data.to_str().unwrap(),
        "--target-height",
        "16",
        "--target-width",
        "16",
        "--measure",
        "ssim",
        "--seed",
        "7",
    ]
    .iter()
    .map(|s| s.to_string())
    .collect();

    let mut reports = Vec::new();
    let mut matrices = Vec::new();
    for (i, workers) in ["1", "1", "8"].iter().enumerate() {
        let out = tmp.path().join(format!("out{i}"));
        let mut args: Vec<&str> = base.iter().map(String::as_str).collect();
        let out_s = out.to_str().unwrap().to_string();
        args.extend_from_slice(&["--workers", workers, "--output-dir"]);
        let args: Vec<String> = args
            .into_iter()
            .map(str::to_string)
            .chain([out_s])
            .collect();
        let args_ref: Vec<&str> = args.iter().map(String::as_str).collect();
        let output = simscan(&args_ref);
        assert!(output.status.success(), "{}", String::from_utf8_lossy(&output.stderr));
        reports.push(report_without_timings(&out.join("report.json")));
        matrices.push(std::fs::read(out.join("similarity.bin")).unwrap());
        assert!(out.join("spectrum.csv").exists());
    }
    assert_eq!(reports[0], reports[1], "re-run changed the report");
    assert_eq!(reports[0], reports[2], "worker count changed the report");
    assert_eq!(matrices[0], matrices[1]);
    assert_eq!(matrices[0], matrices[2]);
}

#[test]
fn unknown_config_key_names_the_key() {
    let tmp = tempfile::tempdir().unwrap();
    let config = tmp.path().join("cfg.json");
    std::fs::write(&config, r#"{"dataset": {"pth": "/tmp"}}"#).unwrap();
    let output = simscan(&["alg1", "--config", config.to_str().unwrap()]);
    assert_eq!(output.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&output.stderr).contains("pth"));
}

#[test]
fn missing_dataset_path_is_usage_error() {
    let output = simscan(&["alg1"]);
    assert_eq!(output.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&output.stderr).contains("dataset not found"));

    let output = simscan(&["alg1", "--dataset-path", "/nonexistent/nowhere"]);
    assert_eq!(output.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&output.stderr).contains("dataset not found"));
}

#[test]
fn out_of_range_edge_threshold_is_rejected() {
    let tmp = tempfile::tempdir().unwrap();
    let data = image_dir_dataset(tmp.path());
    let out = tmp.path().join("out");
    let output = simscan(&[
        "graph",
        "--dataset-path",
        data.to_str().unwrap(),
        "--target-height",
        "16",
        "--target-width",
        "16",
        "--edge-threshold",
        "1.01",
        "--output-dir",
        out.to_str().unwrap(),
    ]);
    assert_eq!(output.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&output.stderr).contains("edge_threshold"));
}

#[test]
fn swapped_mnist_files_are_a_data_error() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path().join("mnist");
    std::fs::create_dir_all(&dir).unwrap();
    // labels file under the images name and vice versa
    let mut images = Vec::new();
    images.extend_from_slice(&0x00000803u32.to_be_bytes());
    images.extend_from_slice(&1u32.to_be_bytes());
    images.extend_from_slice(&28u32.to_be_bytes());
    images.extend_from_slice(&28u32.to_be_bytes());
    images.extend(vec![0u8; 784]);
    let mut labels = Vec::new();
    labels.extend_from_slice(&0x00000801u32.to_be_bytes());
    labels.extend_from_slice(&1u32.to_be_bytes());
    labels.push(3);
    std::fs::write(dir.join("train-images-idx3-ubyte"), labels).unwrap();
    std::fs::write(dir.join("train-labels-idx1-ubyte"), images).unwrap();
    let output = simscan(&[
        "stats",
        "--dataset-format",
        "mnist",
        "--dataset-path",
        dir.to_str().unwrap(),
    ]);
    assert_eq!(output.status.code(), Some(3));
}

#[test]
fn cross_on_identical_splits_reports_full_fraction() {
    let tmp = tempfile::tempdir().unwrap();
    let data = image_dir_dataset(tmp.path());
    let out = tmp.path().join("out");
    // image_dir has no split distinction: test set == train set
    let output = simscan(&[
        "cross",
        "--dataset-path",
        data.to_str().unwrap(),
        "--target-height",
        "16",
        "--target-width",
        "16",
        "--near-identical",
        "0.99",
        "--output-dir",
        out.to_str().unwrap(),
    ]);
    assert!(output.status.success(), "{}", String::from_utf8_lossy(&output.stderr));
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out.join("cross_report.json")).unwrap()).unwrap();
    assert_eq!(report["near_identical_fraction"], serde_json::json!(1.0));
    assert!(out.join("cross_matrix.bin").exists());
    assert!(out.join("cross_matrix.csv").exists());
}

#[test]
fn dedupe_groups_planted_duplicates() {
    let tmp = tempfile::tempdir().unwrap();
    let data = image_dir_dataset(tmp.path());
    let out = tmp.path().join("out");
    let output = simscan(&[
        "dedupe",
        "--dataset-path",
        data.to_str().unwrap(),
        "--target-height",
        "16",
        "--target-width",
        "16",
        "--dedupe-threshold",
        "0.95",
        "--output-dir",
        out.to_str().unwrap(),
    ]);
    assert!(output.status.success(), "{}", String::from_utf8_lossy(&output.stderr));
    let report = report_without_timings(&out.join("report.json"));
    let redundant = report["redundant_groups"].as_array().unwrap();
    assert_eq!(redundant.len(), 1);
    assert_eq!(report["kept_ids"].as_array().unwrap().len(), 7);
}

#[test]
fn graph_outputs_are_deterministic() {
    let tmp = tempfile::tempdir().unwrap();
    let data = image_dir_dataset(tmp.path());
    let mut dots = Vec::new();
    for i in 0..2 {
        let out = tmp.path().join(format!("g{i}"));
        let output = simscan(&[
            "graph",
            "--dataset-path",
            data.to_str().unwrap(),
            "--target-height",
            "16",
            "--target-width",
            "16",
            "--edge-threshold",
            "0.4",
            "--output-dir",
            out.to_str().unwrap(),
        ]);
        assert!(output.status.success(), "{}", String::from_utf8_lossy(&output.stderr));
        dots.push(std::fs::read(out.join("graph.dot")).unwrap());
        assert!(out.join("isolation.csv").exists());
    }
    assert_eq!(dots[0], dots[1]);
    let text = String::from_utf8(dots[0].clone()).unwrap();
    assert!(text.starts_with("graph G {"));
    // the duplicate pair has similarity 1.0 >= threshold
    assert!(text.contains("[label=\"1.000\"]"));
}

#[test]
fn cifar10_stats_and_alg2_run() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = cifar10_dataset(tmp.path());
    let out = tmp.path().join("out");
    let output = simscan(&[
        "stats",
        "--dataset-format",
        "cifar10",
        "--dataset-path",
        dir.to_str().unwrap(),
        "--output-dir",
        out.to_str().unwrap(),
    ]);
    assert!(output.status.success(), "{}", String::from_utf8_lossy(&output.stderr));
    let stats: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out.join("coeff_stats.json")).unwrap()).unwrap();
    assert_eq!(stats["n"], serde_json::json!(10));
    assert_eq!(stats["d"], serde_json::json!(3072));
    assert!(out.join("r_diagonal.csv").exists());

    let out2 = tmp.path().join("out2");
    let output = simscan(&[
        "alg2",
        "--dataset-format",
        "cifar10",
        "--dataset-path",
        dir.to_str().unwrap(),
        "--measure",
        "gaussian",
        "--output-dir",
        out2.to_str().unwrap(),
    ]);
    assert!(output.status.success(), "{}", String::from_utf8_lossy(&output.stderr));
    let report = report_without_timings(&out2.join("report.json"));
    assert!(report["parameters"]["n_c_effective"].is_number());
}

#[test]
fn help_enumerates_config_keys_and_defaults() {
    let output = simscan(&["--help"]);
    assert!(output.status.success());
    let text = String::from_utf8_lossy(&output.stdout);
    for key in [
        "dataset.format",
        "wavelet.basis",
        "selection.tau",
        "clustering.n_c",
        "similarity.measure",
        "graph.gamma",
        "thresholds.near_identical",
        "output_dir",
        "workers",
    ] {
        assert!(text.contains(key), "--help missing {key}");
    }
    assert!(text.contains("[db2]"));
    assert!(text.contains("[1e5]"));
}

#[test]
fn env_var_sets_default_output_dir() {
    let tmp = tempfile::tempdir().unwrap();
    let data = image_dir_dataset(tmp.path());
    let out = tmp.path().join("env-out");
    let output = Command::new(env!("CARGO_BIN_EXE_simscan"))
        .env("SIMSCAN_OUT", out.to_str().unwrap())
        .args([
            "alg1",
            "--dataset-path",
            data.to_str().unwrap(),
            "--target-height",
            "16",
            "--target-width",
            "16",
            "--n-c",
            "7",
        ])
        .output()
        .unwrap();
    assert!(output.status.success(), "{}", String::from_utf8_lossy(&output.stderr));
    assert!(out.join("report.json").exists());
}
