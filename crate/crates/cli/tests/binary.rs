mod common;

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use common::*;

fn tailbreak(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_tailbreak")).args(args).output().unwrap()
}

fn error_json(out: &Output) -> serde_json::Value {
    serde_json::from_slice(out.stderr.trim_ascii())
        .unwrap_or_else(|_| panic!("{}", String::from_utf8_lossy(&out.stderr)))
}

fn write_config(dir: &Path, body: &str) -> String {
    let path = dir.join("study.toml");
    fs::write(&path, body).unwrap();
    path.to_string_lossy().into_owned()
}

#[test]
fn invalid_config_exits_with_config_code() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "output_dir = \"o\"\n[data]\n");
    let out = tailbreak(&["study", "--config", &cfg]);
    assert_eq!(out.status.code(), Some(3));
    assert_eq!(error_json(&out)["category"], "config");
}

#[test]
fn report_of_missing_bundle_names_the_artifact() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tailbreak(&["report", tmp.path().to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(9));
    let err = error_json(&out);
    assert_eq!(err["category"], "bundle");
    assert!(err["message"].as_str().unwrap().contains("manifest.json"));
}

#[test]
fn too_few_instruments_exit_code() {
    let tmp = tempfile::tempdir().unwrap();
    let data = tmp.path().join("data");
    write_panel_dir(&data, 1, 0, 3);
    let cfg = format!(
        "output_dir = \"out\"\ncache_dir = \"{}\"\n[data]\ndir = \"data\"\ntickers = [\"T00\", \"ZZZ\"]\n",
        threshold_cache().display()
    );
    let out = tailbreak(&["study", "--config", &write_config(tmp.path(), &cfg)]);
    assert_eq!(out.status.code(), Some(8));
    assert_eq!(error_json(&out)["category"], "insufficient-instruments");
}

#[test]
fn derive_writes_returns_and_variance() {
    let tmp = tempfile::tempdir().unwrap();
    let file = tmp.path().join("x.csv");
    fs::write(&file, "date,close,high,low\n2020-01-01,100,110,90\n2020-01-02,110,110,55\n").unwrap();
    let out = tailbreak(&["derive", file.to_str().unwrap()]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    let row: Vec<&str> = text.lines().nth(1).unwrap().split(',').collect();
    assert_eq!(row[0], "2020-01-02");
    assert!((row[1].parse::<f64>().unwrap() - 1.1f64.ln()).abs() < 1e-15);

    let out = tailbreak(&["derive", file.to_str().unwrap(), "--kind", "variance"]);
    let text = String::from_utf8(out.stdout).unwrap();
    let second: f64 = text.lines().nth(2).unwrap().split(',').nth(1).unwrap().parse().unwrap();
    assert!((second - 2f64.ln() * 2f64.ln() / (4.0 * 2f64.ln())).abs() < 1e-15);
}

#[test]
fn study_then_report_then_tools() {
    let tmp = tempfile::tempdir().unwrap();
    write_panel_dir(&tmp.path().join("data"), 3, 0, 9);
    let cfg = format!(
        "output_dir = \"out\"\ncache_dir = \"{}\"\n[data]\ndir = \"data\"\n[detector]\nmc_replications = 2000\nrng_seed = 7\n",
        threshold_cache().display()
    );
    let cfg = write_config(tmp.path(), &cfg);
    let out = tailbreak(&[
        "study",
        "--config",
        &cfg,
        "--pre-start",
        "2019-07-01",
        "--pre-end",
        "2019-10-31",
        "--post-start",
        "2019-11-01",
        "--post-end",
        "2019-12-31",
        "--linkage",
        "complete",
        "--report",
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let bundle = tmp.path().join("out");
    let report = fs::read_to_string(bundle.join("report.md")).unwrap();
    assert!(report.contains("Instruments analysed (3): T00, T01, T02"));
    let manifest = fs::read_to_string(bundle.join("manifest.json")).unwrap();
    assert!(manifest.contains("\"linkage\": \"complete\""));

    let out = tailbreak(&["report", bundle.to_str().unwrap()]);
    assert_eq!(String::from_utf8(out.stdout).unwrap(), report);

    // The per-step tools agree with the bundle.
    let panel = bundle.join("panels/pre_returns.csv");
    let out = tailbreak(&["matrices", panel.to_str().unwrap(), "--behaviour", "extremity"]);
    assert_eq!(
        String::from_utf8(out.stdout).unwrap(),
        fs::read_to_string(bundle.join("matrices/D_ER_pre.csv")).unwrap()
    );

    let breaks = tmp.path().join("breaks.txt");
    let cache = threshold_cache();
    let out = tailbreak(&[
        "breaks",
        panel.to_str().unwrap(),
        "--replications",
        "2000",
        "--seed",
        "7",
        "--cache-dir",
        cache.to_str().unwrap(),
        "--output",
        breaks.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(
        fs::read_to_string(&breaks).unwrap(),
        fs::read_to_string(bundle.join("breaks/pre_returns.txt")).unwrap()
    );

    let out = tailbreak(&["matrices", breaks.to_str().unwrap(), "--behaviour", "breaks"]);
    assert_eq!(
        String::from_utf8(out.stdout).unwrap(),
        fs::read_to_string(bundle.join("matrices/D_BR_pre.csv")).unwrap()
    );
}
