//! CLI-level behavior: config validation, exit codes, artifact layout, and
//! the analyze round trip.

use braidmc::cli::commands::{cmd_analyze, cmd_oracle_compare, cmd_run, cmd_strtree, CliError};
use braidmc::cli::config::parse_config;
use std::path::PathBuf;

fn temp_dir(tag: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("braidmc_cli_{tag}_{}", std::process::id()));
    let _ = std::fs::remove_dir_all(&dir);
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

fn small_config(dir: &std::path::Path) -> String {
    format!(
        r#"
[lattice]
kind = "chain"
l = 3

[model]
interaction = "nn"
v = 0.0
mu = 0.5
filling = "2/3"
beta = 1.0

[run]
seed = 3
replicas = 2
thermalization_sweeps = 1000
target_samples = 4000
measure_interval = 3

[output]
dir = "{}"
"#,
        dir.join("out").display()
    )
}

#[test]
fn unknown_config_key_is_exit_2() {
    let text = small_config(&temp_dir("badkey")).replace("v = 0.0", "v = 0.0\ntt = 1.0");
    let err = parse_config(&text).unwrap_err();
    let cli: CliError = err.into();
    assert_eq!(cli.exit_code(), 2);
    assert!(cli.to_string().contains("tt"));
}

#[test]
fn run_writes_expected_artifacts() {
    let dir = temp_dir("artifacts");
    let cfg = parse_config(&small_config(&dir)).unwrap();
    let artifacts = cmd_run(&cfg).unwrap();
    for file in ["spectrum.csv", "spectrum.json", "report.csv", "samples.bin", "manifest.json", "run.log"] {
        assert!(
            artifacts.out_dir.join(file).exists(),
            "{file} missing from run output"
        );
    }
    let csv = std::fs::read_to_string(artifacts.out_dir.join("spectrum.csv")).unwrap();
    assert!(csv.starts_with("q,avg_lambda,prob,err,count\n"));
    let manifest: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(artifacts.out_dir.join("manifest.json")).unwrap())
            .unwrap();
    assert_eq!(manifest["seed"], 3);
    assert!(manifest["config_text"].as_str().unwrap().contains("[lattice]"));
    // merged stream totals both replicas
    assert_eq!(artifacts.merged.total_samples, 8000);
    let _ = std::fs::remove_dir_all(&dir);
}

#[test]
fn analyze_reproduces_run_spectrum() {
    let dir = temp_dir("analyze");
    let cfg = parse_config(&small_config(&dir)).unwrap();
    let artifacts = cmd_run(&cfg).unwrap();
    let reout = dir.join("re");
    cmd_analyze(
        artifacts.out_dir.join("samples.bin").to_str().unwrap(),
        Some(reout.to_str().unwrap()),
        0.01,
    )
    .unwrap();
    let a = std::fs::read(artifacts.out_dir.join("spectrum.csv")).unwrap();
    let b = std::fs::read(reout.join("spectrum.csv")).unwrap();
    assert_eq!(a, b, "analyze must reproduce the run spectrum exactly");
    let _ = std::fs::remove_dir_all(&dir);
}

#[test]
fn oracle_compare_small_system_passes() {
    let dir = temp_dir("oracle");
    let cfg = parse_config(&small_config(&dir)).unwrap();
    let pass = cmd_oracle_compare(&cfg, Some(dir.join("oc").to_str().unwrap())).unwrap();
    assert!(pass, "all z-scores should stay below 4 on the 3-ring");
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.join("oc").join("report.json")).unwrap())
            .unwrap();
    assert_eq!(report["pass"], true);
    assert!(report["cycles"]["entries"].as_array().unwrap().len() >= 2);
    let _ = std::fs::remove_dir_all(&dir);
}

#[test]
fn oracle_compare_oversized_basis_is_exit_4() {
    let dir = temp_dir("oversize");
    let text = small_config(&dir)
        .replace("kind = \"chain\"\nl = 3", "kind = \"square\"\nl = 6")
        .replace("filling = \"2/3\"", "filling = \"1/2\"");
    let cfg = parse_config(&text).unwrap();
    // C(36, 18) vastly exceeds the dense-spectrum limit
    let err = cmd_oracle_compare(&cfg, None).unwrap_err();
    assert_eq!(err.exit_code(), 4, "got {err}");
    let _ = std::fs::remove_dir_all(&dir);
}

#[test]
fn strtree_rejects_invalid_sizes() {
    let dir = temp_dir("strtree");
    let err = cmd_strtree(5, "str", dir.to_str().unwrap()).unwrap_err();
    assert_eq!(err.exit_code(), 2);
    cmd_strtree(6, "str", dir.to_str().unwrap()).unwrap();
    assert!(dir.join("strtree_str_L6.json").exists());
    assert!(dir.join("strtree_str_L6.txt").exists());
    let _ = std::fs::remove_dir_all(&dir);
}

#[test]
fn stalled_sampler_is_exit_3() {
    let dir = temp_dir("stall");
    // mu far below the bracket makes target-N snapshots unreachable
    let text = small_config(&dir)
        .replace("mu = 0.5", "mu = -40.0")
        .replace("target_samples = 4000", "target_samples = 100");
    let cfg = parse_config(&text).unwrap();
    let err = cmd_run(&cfg).unwrap_err();
    assert_eq!(err.exit_code(), 3, "got {err}");
    let _ = std::fs::remove_dir_all(&dir);
}
