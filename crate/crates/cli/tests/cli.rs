//! Runs the `hypertrain` binary against small experiment files.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::{json, Value};

fn hypertrain(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_hypertrain")).args(args).output().unwrap()
}

fn write_config(dir: &Path, name: &str, value: &Value) -> PathBuf {
    let path = dir.join(name);
    fs::write(&path, serde_json::to_string_pretty(value).unwrap()).unwrap();
    path
}

fn ridge_data() -> Value {
    json!({
        "source": "ridge", "n": 40, "d": 4, "noise_sd": 0.1, "seed": 1,
        "split": {"n_train": 20, "n_valid": 20, "seed": 1}
    })
}

fn joint(out: &Path) -> Value {
    json!({
        "kind": "joint",
        "data": ridge_data(),
        "model": {"layer_sizes": [4, 1], "task": "mean-squared-error", "bias": false},
        "run": {
            "hypernet": {"family": "linear"},
            "sampler": {"kind": "local-gaussian", "sd": 0.01},
            "data_batch": 5, "valid_batch": 5, "joint_steps": 200,
            "phi_lr": 0.01, "lambda_lr": 0.01, "record_every": 7, "seed": 3
        },
        "output_dir": out
    })
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn joint_run_writes_all_artifacts() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("out");
    let cfg = write_config(tmp.path(), "joint.json", &joint(&out));
    let o = hypertrain(&["run", cfg.to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr(&o));
    for f in ["run.csv", "summary.json", "loss_curves.svg", "hypernet.ckpt"] {
        assert!(out.join(f).is_file(), "{f} missing");
    }
    let csv = fs::read_to_string(out.join("run.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("step,train_loss,valid_loss,lambda_norm,lambda_0,seconds"));
    // Rows every 7 steps plus the final step.
    assert_eq!(lines.count(), 200 / 7 + 1);

    let summary: Value = serde_json::from_slice(&fs::read(out.join("summary.json")).unwrap()).unwrap();
    assert_eq!(summary["outcome"]["kind"], "hyper-train");
    assert_eq!(summary["outcome"]["lambda_final"].as_array().unwrap().len(), 1);
    // Defaults are expanded in the recorded config.
    assert_eq!(summary["config"]["run"]["lambda_batch"], 8);
    assert_eq!(summary["config"]["record_wall_clock"], false);
}

#[test]
fn reruns_produce_identical_csv() {
    let tmp = tempfile::tempdir().unwrap();
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    let cfg = write_config(tmp.path(), "joint.json", &joint(&a));
    for dir in [&a, &b] {
        let o = hypertrain(&["run", cfg.to_str().unwrap(), "--out", dir.to_str().unwrap()]);
        assert!(o.status.success(), "{}", stderr(&o));
    }
    assert_eq!(fs::read(a.join("run.csv")).unwrap(), fs::read(b.join("run.csv")).unwrap());
}

#[test]
fn seed_flag_changes_the_run() {
    let tmp = tempfile::tempdir().unwrap();
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    let cfg = write_config(tmp.path(), "joint.json", &joint(&a));
    assert!(hypertrain(&["run", cfg.to_str().unwrap(), "--out", a.to_str().unwrap()]).status.success());
    assert!(hypertrain(&["run", cfg.to_str().unwrap(), "--out", b.to_str().unwrap(), "--seed", "4"]).status.success());
    assert_ne!(fs::read(a.join("run.csv")).unwrap(), fs::read(b.join("run.csv")).unwrap());
}

#[test]
fn unknown_key_exits_2_and_writes_nothing() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("out");
    let mut cfg = joint(&out);
    cfg["run"]["lamda_lr"] = json!(0.1);
    let path = write_config(tmp.path(), "bad.json", &cfg);
    let o = hypertrain(&["run", path.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("run.lamda_lr"), "{}", stderr(&o));
    assert!(!out.exists());
}

#[test]
fn invalid_value_exits_2_naming_the_key() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("out");
    let mut cfg = joint(&out);
    cfg["run"]["data_batch"] = json!(0);
    let path = write_config(tmp.path(), "bad.json", &cfg);
    let o = hypertrain(&["run", path.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("data_batch"), "{}", stderr(&o));
    assert!(!out.exists());
}

fn idx_config(dir: &Path, images: &str) -> PathBuf {
    let mut cfg = joint(&dir.join("out"));
    cfg["data"] = json!({
        "source": "idx", "images": images, "labels": "labels.gz",
        "split": {"n_train": 5, "n_valid": 5}
    });
    cfg["model"] = json!({"layer_sizes": [784, 10], "task": "softmax-cross-entropy"});
    write_config(dir, "idx.json", &cfg)
}

#[test]
fn missing_data_file_is_a_config_error() {
    let tmp = tempfile::tempdir().unwrap();
    fs::write(tmp.path().join("labels.gz"), b"").unwrap();
    let o = hypertrain(&["run", idx_config(tmp.path(), "nope.gz").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2), "{}", stderr(&o));
    assert!(stderr(&o).contains("data.images"), "{}", stderr(&o));
}

#[test]
fn unreadable_data_file_exits_4() {
    let tmp = tempfile::tempdir().unwrap();
    fs::write(tmp.path().join("labels.gz"), b"").unwrap();
    fs::create_dir(tmp.path().join("images.gz")).unwrap();
    let o = hypertrain(&["run", idx_config(tmp.path(), "images.gz").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(4), "{}", stderr(&o));
    assert!(stderr(&o).contains("images.gz"), "{}", stderr(&o));
    assert!(!tmp.path().join("out").exists());
}

#[test]
fn divergent_training_exits_3_naming_the_step() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("out");
    let cfg = json!({
        "kind": "cross-validate",
        "data": ridge_data(),
        "model": {"layer_sizes": [4, 1], "task": "mean-squared-error", "bias": false},
        "inner": {"steps": 5000, "batch_size": 20, "optimizer": {"kind": "sgd", "lr": 50.0}},
        "search": {"low": 0.0, "high": 1.0, "n": 2},
        "output_dir": out
    });
    let path = write_config(tmp.path(), "diverge.json", &cfg);
    let o = hypertrain(&["run", path.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(3), "{}", stderr(&o));
    assert!(stderr(&o).contains("step"), "{}", stderr(&o));
    assert!(!out.exists());
}

fn compare_config(out: &Path, n_eval: usize) -> Value {
    json!({
        "kind": "surrogate-compare",
        "data": ridge_data(),
        "model": {"layer_sizes": [4, 1], "task": "mean-squared-error", "bias": false},
        "compare": {
            "n_fit": 4, "n_eval": n_eval,
            "inner": {"steps": 20, "batch_size": 10, "optimizer": {"kind": "adam", "lr": 0.05}},
            "sampler": {"kind": "global-gaussian", "mean": [-2.0], "sd": [1.0]},
            "hypernet": {"family": "mlp", "hidden": 5},
            "phi_lr": 0.01
        },
        "output_dir": out
    })
}

#[test]
fn compare_writes_errors_and_histograms() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("out");
    let path = write_config(tmp.path(), "cmp.json", &compare_config(&out, 6));
    let o = hypertrain(&["compare", path.to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr(&o));
    let csv = fs::read_to_string(out.join("errors.csv")).unwrap();
    assert_eq!(csv.lines().count(), 1 + 3 * 6);
    for m in ["gp", "hypernet-fixed", "hypernet-sampled"] {
        assert!(out.join(format!("histogram_{m}.svg")).is_file());
    }
    let summary: Value = serde_json::from_slice(&fs::read(out.join("summary.json")).unwrap()).unwrap();
    let methods = summary["outcome"]["methods"].as_array().unwrap();
    assert_eq!(methods.len(), 3);
    for m in methods {
        assert_eq!(m["grad_evals"], 4 * 20);
        assert!(m["frac_below"].is_number());
    }
}

#[test]
fn compare_without_evaluation_points_writes_empty_errors() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("out");
    let path = write_config(tmp.path(), "cmp.json", &compare_config(&out, 0));
    let o = hypertrain(&["compare", path.to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr(&o));
    let csv = fs::read_to_string(out.join("errors.csv")).unwrap();
    assert_eq!(csv.lines().count(), 1, "{csv}");
    let summary: Value = serde_json::from_slice(&fs::read(out.join("summary.json")).unwrap()).unwrap();
    assert!(summary["outcome"]["note"].as_str().unwrap().contains("no evaluation points"));
    assert!(summary["outcome"]["methods"][0].get("mean").is_none());
}

#[test]
fn compare_rejects_other_kinds() {
    let tmp = tempfile::tempdir().unwrap();
    let path = write_config(tmp.path(), "joint.json", &joint(&tmp.path().join("out")));
    let o = hypertrain(&["compare", path.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("kind"));
}

#[test]
fn gradcheck_passes_and_reports() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("gc");
    let o = hypertrain(&["gradcheck", "--seed", "0", "--points", "3", "--out", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(String::from_utf8_lossy(&o.stdout).contains("PASS"));
    let summary: Value = serde_json::from_slice(&fs::read(out.join("summary.json")).unwrap()).unwrap();
    assert!(summary["max_rel_error"].as_f64().unwrap() <= 1e-4);
}
