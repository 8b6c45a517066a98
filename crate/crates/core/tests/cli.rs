mod common;

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn hdcdiff(data: &Path, out: &Path, args: &[&str]) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_hdcdiff"));
    cmd.args(args)
        .args(["--dimension", "128", "--epochs", "2", "--out"])
        .arg(out)
        .env("HDCDIFF_DATA_DIR", data);
    cmd.output().unwrap()
}

fn ok(output: Output) -> Output {
    assert!(
        output.status.success(),
        "stderr: {}",
        String::from_utf8_lossy(&output.stderr)
    );
    output
}

fn toy_data() -> tempfile::TempDir {
    let dir = tempfile::tempdir().unwrap();
    common::write_toy_mnist(dir.path(), 200, 60);
    dir
}

fn json(path: &Path) -> serde_json::Value {
    serde_json::from_slice(&fs::read(path).unwrap()).unwrap()
}

#[test]
fn full_command_sequence() {
    let data = toy_data();
    let work = tempfile::tempdir().unwrap();
    let out = work.path().join("run");

    ok(hdcdiff(data.path(), &out, &["train"]));
    for seed in [30, 40, 50] {
        assert!(out.join(format!("models/seed_{seed}.hdxm")).is_file());
    }
    let report = json(&out.join("train_report.json"));
    assert_eq!(report["train_count"], 100);
    assert_eq!(report["validation_count"], 100);
    assert_eq!(report["test_count"], 60);
    assert_eq!(report["accuracy"].as_array().unwrap().len(), 3);

    ok(hdcdiff(data.path(), &out, &["difftest"]));
    let manifest = json(&out.join("difftest/manifest.json"));
    let records = manifest["records"].as_array().unwrap();
    assert_eq!(manifest["discrepancy_count"].as_u64().unwrap() as usize, records.len());
    let images = fs::read_dir(out.join("difftest/images")).unwrap().count();
    assert_eq!(manifest["generated_count"].as_u64().unwrap() as usize, images);

    ok(hdcdiff(data.path(), &out, &["retrain", "--mode", "dynamic", "--perturbation", "on"]));
    ok(hdcdiff(data.path(), &out, &["retrain", "--mode", "dynamic", "--perturbation", "off"]));
    ok(hdcdiff(data.path(), &out, &["retrain", "--mode", "static", "--perturbation", "on"]));
    let csv = fs::read_to_string(out.join("retrain/dynamic-perturbation/metrics.csv")).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(
        lines[0],
        "epoch,acc_seed_30,acc_seed_40,acc_seed_50,discrepancy_count,test_discrepancy_count"
    );
    assert_eq!(lines.len(), 1 + 3);
    assert!(out.join("retrain/static-perturbation/models/seed_40.hdxm").is_file());
    let summary = json(&out.join("retrain/dynamic-no-perturbation/summary.json"));
    assert_eq!(summary["epochs"], 2);
    assert_eq!(summary["mode"], "dynamic");

    // a copy of the baseline compares equal to the baseline
    let same = out.join("retrain/baseline-copy/models");
    fs::create_dir_all(&same).unwrap();
    for seed in [30, 40, 50] {
        let name = format!("seed_{seed}.hdxm");
        fs::copy(out.join("models").join(&name), same.join(&name)).unwrap();
    }
    ok(hdcdiff(data.path(), &out, &["robustness"]));
    let robustness = json(&out.join("robustness.json"));
    let sets = robustness["sets"].as_array().unwrap();
    assert_eq!(sets.len(), 4);
    let copy = sets.iter().find(|s| s["name"] == "baseline-copy").unwrap();
    assert_eq!(copy["discrepancy_count"], robustness["baseline"]);
    assert_eq!(copy["ratio_to_baseline"], 1.0);
}

#[test]
fn outputs_are_reproducible() {
    let data = toy_data();
    let work = tempfile::tempdir().unwrap();
    let (a, b) = (work.path().join("a"), work.path().join("b"));
    for out in [&a, &b] {
        ok(hdcdiff(data.path(), out, &["pipeline"]));
    }
    for file in [
        "models/seed_30.hdxm",
        "train_report.json",
        "difftest/manifest.json",
        "retrain/dynamic-perturbation/metrics.csv",
        "retrain/dynamic-perturbation/summary.json",
        "retrain/dynamic-perturbation/models/seed_50.hdxm",
    ] {
        assert_eq!(fs::read(a.join(file)).unwrap(), fs::read(b.join(file)).unwrap(), "{file}");
    }
    // nothing left behind by the atomic writers
    let leftovers = walk(&a).into_iter().filter(|p| p.contains(".tmp-")).count();
    assert_eq!(leftovers, 0);
}

fn walk(dir: &Path) -> Vec<String> {
    let mut out = Vec::new();
    for entry in fs::read_dir(dir).unwrap() {
        let path = entry.unwrap().path();
        if path.is_dir() {
            out.extend(walk(&path));
        }
        out.push(path.display().to_string());
    }
    out
}

#[test]
fn sweep_writes_one_block_per_fraction() {
    let data = toy_data();
    let work = tempfile::tempdir().unwrap();
    let out = work.path().join("sweep");
    ok(hdcdiff(data.path(), &out, &["sweep", "--splits", "0.3,0.5"]));
    let csv = fs::read_to_string(out.join("sweep.csv")).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert!(lines[0].starts_with("fraction,epoch,acc_seed_30"));
    assert_eq!(lines.len(), 1 + 2 * 3);
    assert!(lines[1].starts_with("0.30,0,"));
    assert!(lines[4].starts_with("0.50,0,"));
}

#[test]
fn bad_configurations_fail() {
    let data = toy_data();
    let work = tempfile::tempdir().unwrap();
    let out = work.path().join("bad");
    let single = hdcdiff(data.path(), &out, &["train", "--seeds", "30"]);
    assert!(!single.status.success());
    assert!(String::from_utf8_lossy(&single.stderr).contains("at least 2 seeds"));
    assert!(!out.join("models").exists());

    let zero = Command::new(env!("CARGO_BIN_EXE_hdcdiff"))
        .args(["retrain", "--epochs", "0", "--out"])
        .arg(&out)
        .env("HDCDIFF_DATA_DIR", data.path())
        .output()
        .unwrap();
    assert!(!zero.status.success());
    assert!(String::from_utf8_lossy(&zero.stderr).contains("epochs"));

    let missing = hdcdiff(data.path(), &out, &["difftest"]);
    assert!(!missing.status.success());

    let no_data = hdcdiff(&work.path().join("nowhere"), &out, &["train"]);
    assert!(!no_data.status.success());
}

#[test]
fn empty_validation_split_gives_an_empty_report() {
    let data = toy_data();
    let work = tempfile::tempdir().unwrap();
    let out = work.path().join("tiny");
    ok(hdcdiff(data.path(), &out, &["train", "--validation-fraction", "0.001"]));
    ok(hdcdiff(data.path(), &out, &["difftest", "--validation-fraction", "0.001"]));
    let manifest = json(&out.join("difftest/manifest.json"));
    assert_eq!(manifest["discrepancy_count"], 0);
    assert_eq!(manifest["validation_count"], 0);
}
