mod common;

use std::path::Path;
use std::process::Command;

use clap::Parser;
use esbmix_cli::{run, Cli};
use serde_json::{json, Value};

fn cli(args: &[&str]) -> Result<bool, String> {
    let cli = Cli::try_parse_from(std::iter::once("esbmix").chain(args.iter().copied())).map_err(|e| e.to_string())?;
    run(&cli).map_err(|e| e.to_string())
}

fn path(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn read_csv(path: &Path) -> (Vec<String>, Vec<Vec<String>>) {
    let mut r = csv::Reader::from_path(path).unwrap();
    let header = r.headers().unwrap().iter().map(String::from).collect();
    let rows = r.records().map(|rec| rec.unwrap().iter().map(String::from).collect()).collect();
    (header, rows)
}

fn read_json(path: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn empty_data_fails_before_writing() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("empty.csv");
    std::fs::write(&data, "").unwrap();
    let out = dir.path().join("out");
    let err = cli(&["fit", "--data", path(&data), "--out", path(&out)]).unwrap_err();
    assert!(err.contains("no observations") || err.contains("empty"), "{err}");
    assert!(!out.exists());
}

#[test]
fn malformed_data_reports_the_line() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("bad.csv");
    std::fs::write(&data, "1.0\n2.0\nabc\n").unwrap();
    let out = dir.path().join("out");
    let err = cli(&["fit", "--data", path(&data), "--out", path(&out)]).unwrap_err();
    assert!(err.contains('3'), "{err}");
    assert!(!out.exists());
}

#[test]
fn unknown_config_fields_are_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("c.json");
    common::write_json(&config, &json!({"n": 5, "replicate": 10}));
    let out = dir.path().join("out");
    let err = cli(&["prior-kn", "--config", path(&config), "--out", path(&out)]).unwrap_err();
    assert!(err.contains("replicate"), "{err}");
    assert!(cli(&["prior-kn", "--threads", "0", "--out", path(&out)]).is_err());
}

#[test]
fn injected_fault_is_caught_by_exactly_one_check() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("verify.json");
    common::write_json(&config, &json!({"mc_replicates": 100000, "prior_recovery_sweeps": 20000}));
    let bin = env!("CARGO_BIN_EXE_esbmix");

    let clean = dir.path().join("clean");
    let status = Command::new(bin)
        .args(["verify", "--config", path(&config), "--out", path(&clean)])
        .status()
        .unwrap();
    assert!(status.success());
    let report = read_json(&clean.join("verify_report.json"));
    assert_eq!(report["passed"], json!(true));

    let faulty = dir.path().join("faulty");
    let status = Command::new(bin)
        .args(["verify", "--inject-fault", "ordering-sign", "--config", path(&config), "--out", path(&faulty)])
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(1));
    let report = read_json(&faulty.join("verify_report.json"));
    assert_eq!(report["passed"], json!(false));
    assert_eq!(report["fault"], json!("ordering-sign"));
    let failed: Vec<&str> = report["checks"]
        .as_array()
        .unwrap()
        .iter()
        .filter(|c| c["passed"] == json!(false))
        .map(|c| c["name"].as_str().unwrap())
        .collect();
    assert_eq!(failed, ["ordering_closed_form"]);

    for c in report["checks"].as_array().unwrap() {
        let mut keys: Vec<&str> = c.as_object().unwrap().keys().map(String::as_str).collect();
        keys.sort_unstable();
        assert_eq!(keys, ["detail", "name", "passed", "statistic", "threshold"]);
    }
    let manifest = read_json(&faulty.join("manifest.json"));
    for key in ["command", "version", "seed", "threads", "runtime_seconds", "config", "outputs"] {
        assert!(manifest.get(key).is_some(), "manifest lacks {key}");
    }
}

#[test]
fn allocations_above_the_cap_need_the_fallback() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("alloc.json");
    common::write_json(
        &config,
        &json!({
            "prior": {"family": "dsb", "beta": 1.0, "theta": 1.0},
            "vectors": [[1, 2], [3, 1]],
            "cap": 2,
            "mc_replicates": 2000
        }),
    );
    let out = dir.path().join("out");
    let err = cli(&["alloc-prob", "--config", path(&config), "--out", path(&out)]).unwrap_err();
    assert!(err.contains("--mc-fallback"), "{err}");
    assert!(!out.exists());

    assert!(cli(&["alloc-prob", "--mc-fallback", "--config", path(&config), "--out", path(&out)]).unwrap());
    let (header, rows) = read_csv(&out.join("alloc_prob.csv"));
    assert_eq!(header, ["d", "exact_probability", "mc_estimate", "mc_stderr"]);
    assert_eq!(rows[0][0], "1 2");
    assert!(!rows[0][1].is_empty());
    assert_eq!(rows[1][1], "");
    assert!(!rows[1][2].is_empty());
}

#[test]
fn ordering_table_matches_the_theta_one_identity() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("order.json");
    common::write_json(
        &config,
        &json!({"betas": [0.5, 2.0, 7.0, "geometric"], "thetas": [1.0], "mc_replicates": 1000}),
    );
    let out = dir.path().join("out");
    assert!(cli(&["order-prob", "--config", path(&config), "--out", path(&out)]).unwrap());
    let (header, rows) = read_csv(&out.join("order_prob.csv"));
    assert_eq!(header, ["beta", "theta", "closed_form", "mc_estimate", "mc_stderr"]);
    assert_eq!(rows.len(), 4);
    for row in &rows[..3] {
        let beta: f64 = row[0].parse().unwrap();
        let closed: f64 = row[2].parse().unwrap();
        let identity = (1.0 + beta * std::f64::consts::LN_2) / (1.0 + beta);
        assert!((closed - identity).abs() < 1e-12, "{row:?}");
    }
    assert_eq!(rows[3][0], "geometric");
    assert_eq!(rows[3][2].parse::<f64>().unwrap(), 1.0);
    assert_eq!(rows[3][3].parse::<f64>().unwrap(), 1.0);
}

#[test]
fn single_replicate_gives_a_single_row() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("kn.json");
    common::write_json(
        &config,
        &json!({"specs": [{"family": "dirichlet", "theta": 1.0}], "n": 10, "replicates": 1}),
    );
    let out = dir.path().join("out");
    assert!(cli(&["prior-kn", "--config", path(&config), "--out", path(&out)]).unwrap());
    let (header, rows) = read_csv(&out.join("prior_kn.csv"));
    assert_eq!(header.len(), 2);
    assert_eq!(rows.len(), 1);
    assert_eq!(rows[0][1].parse::<f64>().unwrap(), 1.0);
}

#[test]
fn tables_do_not_depend_on_the_thread_count() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("kn.json");
    common::write_json(
        &config,
        &json!({
            "specs": [
                {"family": "dsb", "beta": 0.5, "theta": 1.0},
                {"family": "geometric", "theta": 2.0},
                {"family": "pitman_yor", "alpha": 0.3, "beta": 1.0, "theta": 1.0}
            ],
            "n": 15,
            "replicates": 20000
        }),
    );
    let mut tables = Vec::new();
    for threads in ["1", "2", "5"] {
        let out = dir.path().join(format!("t{threads}"));
        assert!(cli(&[
            "prior-kn", "--config", path(&config), "--seed", "5", "--threads", threads, "--out", path(&out)
        ])
        .unwrap());
        tables.push(std::fs::read(out.join("prior_kn.csv")).unwrap());
    }
    assert_eq!(tables[0], tables[1]);
    assert_eq!(tables[0], tables[2]);
    assert!(!tables[0].contains(&b'\r'));
}
