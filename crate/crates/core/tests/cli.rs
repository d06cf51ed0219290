//! End-to-end tests of the `minepool` binary.

use std::fs;
use std::process::{Command, Output};

use serde_json::Value;

fn minepool(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_minepool"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn json_of(out: &Output) -> Value {
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).unwrap()
}

#[test]
fn payoff_matches_golden() {
    let out = minepool(&["payoff"]);
    assert!(out.status.success());
    let golden = include_str!("golden/payoff.csv");
    assert_eq!(String::from_utf8(out.stdout).unwrap(), golden);
}

#[test]
fn payoff_shows_crossover() {
    let out = minepool(&["payoff", "--alpha", "0.5", "--delta", "0.99", "--n", "125"]);
    let text = String::from_utf8(out.stdout).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("offset,geometric_weight,pplns_weight"));
    let rows: Vec<(usize, f64, f64)> = lines
        .map(|l| {
            let f: Vec<&str> = l.split(',').collect();
            (f[0].parse().unwrap(), f[1].parse().unwrap(), f[2].parse().unwrap())
        })
        .collect();
    assert_eq!(rows.len(), 251);
    assert!((rows[0].1 - 0.0199).abs() < 1e-12);
    assert!(rows[..125].iter().all(|r| (r.2 - 1.0 / 125.0).abs() < 1e-15));
    assert!(rows[125..].iter().all(|r| r.2 == 0.0));
    // first offset where geometric pays less than PPLNS: c r^i < 1/N
    let expected = ((1.0f64 / 125.0 / 0.0199).ln() / 0.9801f64.ln()).floor() as usize + 1;
    let crossover = rows.iter().position(|r| r.1 < r.2).unwrap();
    assert_eq!(crossover, expected);
}

#[test]
fn optimize_reports_and_round_trips() {
    let v = json_of(&minepool(&["optimize", "--alpha", "0.5", "--delta", "0.99"]));
    let res = &v["results"];
    assert!((res["pplns"]["n_real"].as_f64().unwrap() - 125.0).abs() < 0.05);
    assert!((res["geometric"]["r"].as_f64().unwrap() - 0.9801).abs() < 1e-15);
    assert_eq!(v["version"], env!("CARGO_PKG_VERSION"));

    let rule = res["geometric"]["rule"].to_string();
    let eval = json_of(&minepool(&[
        "evaluate", "--rule", &rule, "--alpha", "0.5", "--delta", "0.99",
    ]));
    let a = eval["results"]["utility"].as_f64().unwrap();
    let b = res["geometric"]["utility"].as_f64().unwrap();
    assert!((a - b).abs() <= 1e-9 * b);
    assert!((eval["results"]["mass"].as_f64().unwrap() - 1.0).abs() < 1e-12);

    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("sim.json");
    fs::write(
        &cfg,
        format!(r#"{{"rule": {rule}, "alpha": 0.5, "delta": 0.99, "num_shares": 50000, "trials": 2}}"#),
    )
    .unwrap();
    let out = minepool(&["simulate", cfg.to_str().unwrap(), "--out-dir", dir.path().to_str().unwrap()]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn optimize_risk_neutral_is_solo() {
    let v = json_of(&minepool(&["optimize", "--alpha", "1"]));
    let res = &v["results"];
    assert_eq!(res["pplns"]["n_int"], 1);
    assert_eq!(res["geometric"]["degenerate_to"], "solo");
    assert_eq!(res["geometric"]["rule"]["kind"], "solo");
}

#[test]
fn evaluate_solo() {
    let v = json_of(&minepool(&[
        "evaluate", "--rule", r#"{"kind":"solo"}"#, "--utility", "log1p", "--p", "0.01",
        "--reward", "20",
    ]));
    let got = v["results"]["utility"].as_f64().unwrap();
    assert!((got - 0.01 * 21f64.ln()).abs() < 1e-15);
    assert_eq!(v["results"]["truncation_depth"], 1);
}

#[test]
fn exit_codes() {
    assert_eq!(minepool(&["optimize", "--delta", "1"]).status.code(), Some(2));
    let out = minepool(&["optimize", "--delta", "1"]);
    assert!(String::from_utf8_lossy(&out.stderr).contains("delta"));
    assert_eq!(minepool(&["optimize", "--alpha", "0"]).status.code(), Some(2));
    let ponzi = r#"{"kind":"custom","weights":[0.5,0.6]}"#;
    assert_eq!(minepool(&["evaluate", "--rule", ponzi]).status.code(), Some(3));
    assert_eq!(minepool(&["check", "--rule", ponzi]).status.code(), Some(3));
    assert_eq!(minepool(&["evaluate", "--rule", "{nope"]).status.code(), Some(2));
    assert_eq!(minepool(&["evaluate"]).status.code(), Some(2));
    assert_eq!(minepool(&["simulate", "/no/such/config.toml"]).status.code(), Some(2));
    assert_eq!(minepool(&["sweep", "--schemes", "pps", "--no-sim"]).status.code(), Some(2));
    assert_eq!(minepool(&["frobnicate"]).status.code(), Some(2));

    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("ponzi.toml");
    fs::write(&cfg, "rule = { kind = \"geometric\", c = 0.5, r = 0.9 }\n").unwrap();
    assert_eq!(minepool(&["simulate", cfg.to_str().unwrap()]).status.code(), Some(3));
    fs::write(&cfg, "rule = { kind = \"solo\" }\nbogus = 1\n").unwrap();
    assert_eq!(minepool(&["simulate", cfg.to_str().unwrap()]).status.code(), Some(2));
}

#[test]
fn simulate_deterministic_stream_from_toml() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("solo.toml");
    fs::write(
        &cfg,
        "p = 1.0\nB = 100.0\ndelta = 0.9\nalpha = 0.5\nnum_shares = 2000\ntrials = 3\nseed = 5\nreport_k = 10\n\n[rule]\nkind = \"solo\"\n",
    )
    .unwrap();
    let out = minepool(&[
        "simulate",
        cfg.to_str().unwrap(),
        "--out-dir",
        dir.path().to_str().unwrap(),
        "--seed",
        "77",
    ]);
    let report = json_of(&out);
    assert_eq!(report["seed"], 77);
    let conv = &report["results"]["convergence"];
    assert_eq!(conv["converged"], true);
    assert_eq!(conv["balance_ok"], true);
    assert_eq!(conv["steady_state_utility"], 10.0);

    let csv = fs::read_to_string(dir.path().join("per_k.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("k,mean,se"));
    let rows: Vec<&str> = lines.collect();
    assert_eq!(rows.len(), 10);
    for (k, row) in rows.iter().enumerate() {
        assert_eq!(*row, format!("{k},1.0000000000e1,0.0000000000e0"));
    }
    let on_disk: Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("report.json")).unwrap()).unwrap();
    assert_eq!(on_disk, report);
}

#[test]
fn analytic_sweep_rows() {
    let out = minepool(&["sweep", "--no-sim"]);
    let text = String::from_utf8(out.stdout).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("alpha,scheme,param,analytic_utility,sim_utility,sim_se"));
    let rows: Vec<Vec<String>> = lines
        .map(|l| l.split(',').map(str::to_owned).collect())
        .collect();
    assert_eq!(rows.len(), 50);
    assert!(rows.iter().all(|r| r.len() == 6 && r[4].is_empty() && r[5].is_empty()));
    for chunk in rows.chunks(5) {
        let value = |name: &str| -> f64 {
            chunk.iter().find(|r| r[1] == name).unwrap()[3].parse().unwrap()
        };
        assert!(value("geometric") >= value("pplns_opt"));
        assert!(value("pplns_opt") >= value("solo"));
        if chunk[0][0] == "1" {
            for s in ["solo", "pplns_min", "pplns_opt", "geometric"] {
                assert_eq!(value(s), 1.0);
            }
        }
    }
}

#[test]
fn check_passes_optimal_geometric() {
    let v = json_of(&minepool(&[
        "check", "--rule", r#"{"kind":"geometric","c":0.0199,"r":0.9801}"#, "--delta", "0.99",
        "--shares", "100000",
    ]));
    assert_eq!(v["results"]["all_passed"], true, "{v}");
    assert_eq!(v["seed"], 0);
}
