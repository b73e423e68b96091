//! Command-level tests: exit codes, determinism, and output layout.

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn gblend(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_gblend"))
        .args(args)
        .current_dir(dir)
        .env_remove("GBLEND_OUT_ROOT")
        .output()
        .expect("binary runs")
}

fn write_demo_config(dir: &Path) -> std::path::PathBuf {
    let config = serde_json::json!({
        "version": 1,
        "seed": 3,
        "output_dir": "out/demo-data",
        "dataset": { "synthetic": {
            "class_count": 4,
            "rows": 600,
            "split": { "train": 0.7, "holdout": 0.15, "test": 0.15 },
            "modalities": [
                { "feature_dim": 10, "informative_dim": 8, "snr": 1.0,
                  "label_noise": 0.02, "bait_dim": 0, "bait_strength": 0.0 },
                { "feature_dim": 12, "informative_dim": 4, "snr": 0.6,
                  "label_noise": 0.3, "bait_dim": 4, "bait_strength": 3.0 }
            ],
            "seed": 3
        }},
        "arch": {
            "encoders": [
                { "hidden": [12], "out_dim": 6 },
                { "hidden": [12], "out_dim": 6 }
            ],
            "fusion_hidden": 8,
            "dropout": 0.0
        },
        "train": {
            "epochs": 4, "super_epoch": 2, "warmup": 2, "batch_size": 32,
            "optimizer": { "kind": "sgd_momentum", "lr": 0.03, "momentum": 0.9 },
            "metric": "loss", "holdout_fraction": 0.1,
            "tprime_fraction": 0.25, "estimation_subsample": 1.0
        }
    });
    let path = dir.join("demo.json");
    fs::write(&path, serde_json::to_string_pretty(&config).unwrap()).unwrap();
    path
}

#[test]
fn gen_data_is_deterministic_across_reruns() {
    let tmp = tempfile::tempdir().unwrap();
    write_demo_config(tmp.path());
    let out = gblend(&["gen-data", "--config", "demo.json"], tmp.path());
    assert!(out.status.success(), "{:?}", out);
    let first = fs::read(tmp.path().join("out/demo-data/manifest.json")).unwrap();
    let labels_first = fs::read(tmp.path().join("out/demo-data/labels.bin")).unwrap();
    let out = gblend(&["gen-data", "--config", "demo.json"], tmp.path());
    assert!(out.status.success());
    assert_eq!(first, fs::read(tmp.path().join("out/demo-data/manifest.json")).unwrap());
    assert_eq!(labels_first, fs::read(tmp.path().join("out/demo-data/labels.bin")).unwrap());
}

#[test]
fn invalid_split_fractions_exit_2_naming_the_field() {
    let tmp = tempfile::tempdir().unwrap();
    let path = write_demo_config(tmp.path());
    let text = fs::read_to_string(&path)
        .unwrap()
        .replace("\"train\": 0.7", "\"train\": 0.9");
    fs::write(&path, text).unwrap();
    let out = gblend(&["gen-data", "--config", "demo.json"], tmp.path());
    assert_eq!(out.status.code(), Some(2));
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("split"), "stderr: {}", stderr);
}

#[test]
fn unknown_config_keys_exit_2() {
    let tmp = tempfile::tempdir().unwrap();
    let path = write_demo_config(tmp.path());
    let text = fs::read_to_string(&path)
        .unwrap()
        .replace("\"seed\": 3,", "\"seed\": 3, \"surprise\": true,");
    fs::write(&path, text).unwrap();
    let out = gblend(&["gen-data", "--config", "demo.json"], tmp.path());
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn train_emits_run_artifacts_and_modes_differ_only_in_weights() {
    let tmp = tempfile::tempdir().unwrap();
    write_demo_config(tmp.path());
    let out = gblend(
        &["train", "--config", "demo.json", "--mode", "naive", "--output-dir", "out/naive"],
        tmp.path(),
    );
    assert!(out.status.success(), "{:?}", out);
    for file in ["curves.csv", "schedule.json", "checkpoint.json", "summary.json"] {
        assert!(tmp.path().join("out/naive").join(file).exists(), "{}", file);
    }
    let out = gblend(
        &["train", "--config", "demo.json", "--mode", "equal", "--output-dir", "out/equal"],
        tmp.path(),
    );
    assert!(out.status.success());
    let naive_schedule =
        fs::read_to_string(tmp.path().join("out/naive/schedule.json")).unwrap();
    let equal_schedule =
        fs::read_to_string(tmp.path().join("out/equal/schedule.json")).unwrap();
    assert!(naive_schedule.contains("1.0"));
    assert!(equal_schedule.contains("0.3333333333333333"));
}

#[test]
fn online_mode_emits_schedule_with_warmup_entry_and_weights_log() {
    let tmp = tempfile::tempdir().unwrap();
    write_demo_config(tmp.path());
    let out = gblend(
        &["train", "--config", "demo.json", "--mode", "online-gblend", "--output-dir", "out/online"],
        tmp.path(),
    );
    assert!(out.status.success(), "{:?}", out);
    let schedule: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(tmp.path().join("out/online/schedule.json")).unwrap())
            .unwrap();
    assert_eq!(schedule[0]["start_epoch"], 0);
    assert!(tmp.path().join("out/online/weights.json").exists());
}

#[test]
fn train_runs_are_idempotent() {
    let tmp = tempfile::tempdir().unwrap();
    write_demo_config(tmp.path());
    for _ in 0..2 {
        let out = gblend(
            &["train", "--config", "demo.json", "--mode", "naive", "--output-dir", "out/rerun"],
            tmp.path(),
        );
        assert!(out.status.success());
    }
    let first = fs::read(tmp.path().join("out/rerun/checkpoint.json")).unwrap();
    let out = gblend(
        &["train", "--config", "demo.json", "--mode", "naive", "--output-dir", "out/rerun2"],
        tmp.path(),
    );
    assert!(out.status.success());
    assert_eq!(first, fs::read(tmp.path().join("out/rerun2/checkpoint.json")).unwrap());
}

#[test]
fn estimate_weights_reads_a_checkpoint() {
    let tmp = tempfile::tempdir().unwrap();
    write_demo_config(tmp.path());
    assert!(gblend(
        &["train", "--config", "demo.json", "--mode", "naive", "--output-dir", "out/ck"],
        tmp.path()
    )
    .status
    .success());
    let out = gblend(
        &[
            "estimate-weights",
            "--config",
            "demo.json",
            "--checkpoint",
            "out/ck/checkpoint.json",
            "--epochs",
            "2",
        ],
        tmp.path(),
    );
    assert!(out.status.success(), "{:?}", out);
    let record: serde_json::Value =
        serde_json::from_slice(&out.stdout).expect("weight record JSON on stdout");
    assert_eq!(record["heads"].as_array().unwrap().len(), 3);
}

#[test]
fn report_is_byte_identical_and_fails_on_missing_summary() {
    let tmp = tempfile::tempdir().unwrap();
    write_demo_config(tmp.path());
    assert!(gblend(
        &["train", "--config", "demo.json", "--mode", "naive", "--output-dir", "out/a"],
        tmp.path()
    )
    .status
    .success());
    let first = gblend(&["report", "out/a", "--csv", "r.csv"], tmp.path());
    assert!(first.status.success());
    let csv1 = fs::read(tmp.path().join("r.csv")).unwrap();
    let second = gblend(&["report", "out/a", "--csv", "r.csv"], tmp.path());
    assert_eq!(first.stdout, second.stdout);
    assert_eq!(csv1, fs::read(tmp.path().join("r.csv")).unwrap());

    let missing = gblend(&["report", "out/nothing-here"], tmp.path());
    assert_eq!(missing.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&missing.stderr).contains("nothing-here"));
}

#[test]
fn train_from_dataset_path_leaves_the_dataset_untouched() {
    let tmp = tempfile::tempdir().unwrap();
    let config_path = write_demo_config(tmp.path());
    assert!(gblend(&["gen-data", "--config", "demo.json"], tmp.path()).status.success());

    // point the config at the generated directory instead of the inline spec
    let text = fs::read_to_string(&config_path).unwrap();
    let mut config: serde_json::Value = serde_json::from_str(&text).unwrap();
    config["dataset"] = serde_json::json!({ "path": "out/demo-data" });
    fs::write(&config_path, serde_json::to_string_pretty(&config).unwrap()).unwrap();

    let data_dir = tmp.path().join("out/demo-data");
    let snapshot: Vec<(String, Vec<u8>)> = {
        let mut files: Vec<_> = fs::read_dir(&data_dir)
            .unwrap()
            .map(|e| e.unwrap().path())
            .collect();
        files.sort();
        files
            .iter()
            .map(|p| (p.display().to_string(), fs::read(p).unwrap()))
            .collect()
    };

    let out = gblend(
        &["train", "--config", "demo.json", "--mode", "naive", "--output-dir", "out/from-path"],
        tmp.path(),
    );
    assert!(out.status.success(), "{:?}", out);
    for (path, before) in snapshot {
        assert_eq!(before, fs::read(&path).unwrap(), "{} changed", path);
    }
}

fn write_oracle_config(dir: &Path, extra: &str) -> std::path::PathBuf {
    let text = format!(
        r#"{{
  "version": 1,
  "trials": 20000,
  "seed": 9,
  "grid_step": 0.05,
  "scenarios": [ {{ "kind": "uncorrelated", "estimators": 2, "dim": 16 }} ],
  "taylor": {{ "dim": 4, "eta": 0.001 }}{}
}}"#,
        extra
    );
    let path = dir.join("oracle.json");
    fs::write(&path, text).unwrap();
    path
}

#[test]
fn oracle_default_scenario_passes_with_exit_0() {
    let tmp = tempfile::tempdir().unwrap();
    write_oracle_config(tmp.path(), "");
    let out = gblend(&["oracle", "--config", "oracle.json", "--out", "report.json"], tmp.path());
    assert_eq!(out.status.code(), Some(0), "{:?}", out);
    let report: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(tmp.path().join("report.json")).unwrap()).unwrap();
    assert_eq!(report["pass"], true);
}

#[test]
fn oracle_injected_bad_weights_exit_3() {
    let tmp = tempfile::tempdir().unwrap();
    write_oracle_config(tmp.path(), ",\n  \"inject_weights\": [0.01, 0.99]");
    let out = gblend(&["oracle", "--config", "oracle.json"], tmp.path());
    assert_eq!(out.status.code(), Some(3), "{:?}", out);
}

#[test]
fn oracle_zero_trials_exit_2() {
    let tmp = tempfile::tempdir().unwrap();
    let path = write_oracle_config(tmp.path(), "");
    let text = fs::read_to_string(&path).unwrap().replace("\"trials\": 20000", "\"trials\": 0");
    fs::write(&path, text).unwrap();
    let out = gblend(&["oracle", "--config", "oracle.json"], tmp.path());
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn output_root_env_var_redirects_runs() {
    let tmp = tempfile::tempdir().unwrap();
    write_demo_config(tmp.path());
    let root = tmp.path().join("elsewhere");
    let out = Command::new(env!("CARGO_BIN_EXE_gblend"))
        .args(["gen-data", "--config", "demo.json"])
        .current_dir(tmp.path())
        .env("GBLEND_OUT_ROOT", &root)
        .output()
        .unwrap();
    assert!(out.status.success(), "{:?}", out);
    assert!(root.join("out/demo-data/manifest.json").exists());
}

#[test]
fn shipped_acceptance_config_matches_library_presets() {
    let manifest_dir = Path::new(env!("CARGO_MANIFEST_DIR"));
    let path = manifest_dir.join("../../configs/acceptance.json");
    let text = fs::read_to_string(path).expect("shipped acceptance config");
    let config: serde_json::Value = serde_json::from_str(&text).unwrap();

    let spec = gblend_core::presets::acceptance_dataset_spec(0);
    let arch = gblend_core::presets::acceptance_arch();
    let train = gblend_core::presets::acceptance_train_config(0);

    assert_eq!(config["dataset"]["synthetic"], serde_json::to_value(&spec).unwrap());
    assert_eq!(config["arch"], serde_json::to_value(&arch).unwrap());
    // the file omits train.seed; the experiment-level seed is authoritative
    let mut train_value = serde_json::to_value(&train).unwrap();
    train_value.as_object_mut().unwrap().remove("seed");
    assert_eq!(config["train"], train_value);
}
