use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use portopt::market::synthesize_market;
use tempfile::TempDir;

fn portopt(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_portopt"))
        .args(args)
        .current_dir(dir)
        .env_remove("PORTOPT_SEED")
        .output()
        .unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

/// Temp dir holding `prices.csv` and `market.json` for `n` synthetic assets.
fn market(n: usize, clusters: usize) -> (TempDir, PathBuf) {
    let dir = tempfile::tempdir().unwrap();
    synthesize_market(n, 3, clusters)
        .unwrap()
        .write_csv(dir.path().join("prices.csv"))
        .unwrap();
    let o = portopt(&["ingest", "--prices", "prices.csv", "--out", "market.json"], dir.path());
    assert!(o.status.success(), "{}", stderr(&o));
    let path = dir.path().join("market.json");
    (dir, path)
}

#[test]
fn ingest_reports_assets_and_dates() {
    let dir = tempfile::tempdir().unwrap();
    synthesize_market(8, 1, 2).unwrap().write_csv(dir.path().join("p.csv")).unwrap();
    let o = portopt(&["ingest", "--prices", "p.csv", "--out", "m.json"], dir.path());
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).starts_with("8 assets, 2019-01-01 to "));
    let model: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(dir.path().join("m.json")).unwrap()).unwrap();
    for key in ["symbols", "mu", "sigma", "corr"] {
        assert!(model.get(key).is_some());
    }
}

#[test]
fn ingest_errors_are_data_errors() {
    let dir = tempfile::tempdir().unwrap();
    let o = portopt(&["ingest", "--prices", "missing.csv", "--out", "m.json"], dir.path());
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).to_lowercase().contains("no such file"), "{}", stderr(&o));

    std::fs::write(dir.path().join("bad.csv"), "date,A,B\n2020-01-01,1,2\n2020-01-02,x,3\n").unwrap();
    let o = portopt(&["ingest", "--prices", "bad.csv", "--out", "m.json"], dir.path());
    assert_eq!(o.status.code(), Some(2));
    let err = stderr(&o);
    assert!(err.contains("row 3") && err.contains('A'), "{err}");
}

#[test]
fn graph_threshold_extremes() {
    let (dir, _) = market(16, 4);
    let edges = |alpha: &str| {
        let o = portopt(&["graph", "--market", "market.json", "--alpha", alpha, "--out", "g.txt"], dir.path());
        assert!(o.status.success(), "{}", stderr(&o));
        let text = std::fs::read_to_string(dir.path().join("g.txt")).unwrap();
        assert!(text.starts_with("# 16 "));
        let out = stdout(&o);
        let density: f64 = out.rsplit(' ').next().unwrap().trim().parse().unwrap();
        (text.lines().count() - 1, density)
    };
    assert_eq!(edges("1.0"), (0, 0.0));
    assert_eq!(edges("0.0"), (120, 1.0));
    let (_, d) = edges("0.25");
    assert!(d > 0.0 && d < 1.0);

    let o = portopt(&["graph", "--market", "market.json", "--alpha", "1.5", "--out", "g.txt"], dir.path());
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn solve_exact_has_unit_ratio() {
    let (dir, _) = market(10, 2);
    let o = portopt(&["solve", "--market", "market.json", "--method", "exact", "--out", "r.json"], dir.path());
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(stdout(&o).contains("r_ar: 1.000000"));
    let r: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(dir.path().join("r.json")).unwrap()).unwrap();
    assert_eq!(r["r_ar"], 1.0);
    assert_eq!(r["config"]["method"], "exact");
}

#[test]
fn solve_mis_random_records_both_stages() {
    let (dir, _) = market(8, 2);
    let o = portopt(
        &["solve", "--market", "market.json", "--method", "lssa-mis-random", "--ng", "4", "--ns", "4", "--out", "r.json"],
        dir.path(),
    );
    assert!(o.status.success(), "{}", stderr(&o));
    let r: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(dir.path().join("r.json")).unwrap()).unwrap();
    let mis = r["samples"]["mis"].as_u64().unwrap();
    let po = r["samples"]["po"].as_u64().unwrap();
    assert!((1..=4).contains(&mis) && po >= 1, "{mis} - MIS, {po} - PO");
    assert_eq!(r["selected"].as_array().unwrap().len(), 8);
}

#[test]
fn coverage_guard_exits_before_solving() {
    let (dir, _) = market(8, 2);
    let o = portopt(
        &["solve", "--market", "market.json", "--method", "lssa-random", "--ng", "4", "--ns", "1", "--out", "r.json"],
        dir.path(),
    );
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("coverage"));
    assert!(!dir.path().join("r.json").exists());
}

#[test]
fn config_file_and_flag_precedence() {
    let (dir, _) = market(8, 2);
    std::fs::write(dir.path().join("run.cfg"), "method = exact\ngamma = 0.9\nseed = 5\n").unwrap();
    let o = portopt(
        &["--config", "run.cfg", "solve", "--market", "market.json", "--gamma", "0.4", "--out", "r.json"],
        dir.path(),
    );
    assert!(o.status.success(), "{}", stderr(&o));
    let r: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(dir.path().join("r.json")).unwrap()).unwrap();
    assert_eq!(r["method"], "exact");
    assert_eq!(r["config"]["gamma"], 0.4);
    assert_eq!(r["seed"], 5);

    std::fs::write(dir.path().join("bad.cfg"), "flavour = sweet\n").unwrap();
    let o = portopt(&["--config", "bad.cfg", "solve", "--market", "market.json", "--out", "r.json"], dir.path());
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn seed_falls_back_to_environment() {
    let (dir, _) = market(8, 2);
    let o = Command::new(env!("CARGO_BIN_EXE_portopt"))
        .args(["solve", "--market", "market.json", "--method", "tabu", "--out", "r.json"])
        .current_dir(dir.path())
        .env("PORTOPT_SEED", "77")
        .output()
        .unwrap();
    assert!(o.status.success(), "{}", stderr(&o));
    let r: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(dir.path().join("r.json")).unwrap()).unwrap();
    assert_eq!(r["seed"], 77);
}

#[test]
fn benchmark_rows_and_empty_spec() {
    let (dir, _) = market(16, 4);
    std::fs::write(
        dir.path().join("spec.txt"),
        "sizes = 8-4, 16-8\nmethods = lssa-random, lssa-mis, lssa-mis-random\nseeds = 0, 1, 2\nsolver = exact\n",
    )
    .unwrap();
    let o = portopt(&["benchmark", "--market", "market.json", "--spec", "spec.txt", "--out", "b.csv"], dir.path());
    assert!(o.status.success(), "{}", stderr(&o));
    let csv = std::fs::read_to_string(dir.path().join("b.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(
        lines.next().unwrap(),
        "n,ng,method,seed,r_ar,energy,classical_energy,ns_mis,ns_po,wall_time_ms"
    );
    assert_eq!(lines.count(), 18);
    assert!(stdout(&o).contains("16-8,lssa-mis,"));

    std::fs::write(dir.path().join("empty.txt"), "").unwrap();
    let o = portopt(&["benchmark", "--market", "market.json", "--spec", "empty.txt", "--out", "b.csv"], dir.path());
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn frontier_rows() {
    let (dir, _) = market(12, 3);
    let o = portopt(&["solve", "--market", "market.json", "--method", "lssa-mis", "--out", "r.json"], dir.path());
    assert!(o.status.success(), "{}", stderr(&o));
    let o = portopt(
        &["frontier", "--market", "market.json", "--reports", "r.json", "--samples", "5000", "--out", "f.csv"],
        dir.path(),
    );
    assert!(o.status.success(), "{}", stderr(&o));
    let csv = std::fs::read_to_string(dir.path().join("f.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next().unwrap(), "label,return,volatility");
    let labels: Vec<&str> = lines.map(|l| l.split(',').next().unwrap()).collect();
    assert_eq!(labels.iter().filter(|&&l| l == "random").count(), 5000);
    assert_eq!(labels.iter().filter(|&&l| l == "asset").count(), 12);
    assert_eq!(labels.last(), Some(&"lssa-mis"));
    assert_eq!(labels.len(), 5013);
}

#[test]
fn usage_errors_exit_one_and_help_exits_zero() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(portopt(&["solve"], dir.path()).status.code(), Some(1));
    assert_eq!(portopt(&["frobnicate"], dir.path()).status.code(), Some(1));
    assert_eq!(
        portopt(&["solve", "--market", "m.json", "--method", "greedy", "--out", "r.json"], dir.path())
            .status
            .code(),
        Some(1)
    );
    assert_eq!(portopt(&["--help"], dir.path()).status.code(), Some(0));
}

#[test]
fn synth_writes_loadable_prices() {
    let dir = tempfile::tempdir().unwrap();
    let o = portopt(&["synth", "--assets", "6", "--out", "p.csv"], dir.path());
    assert!(o.status.success(), "{}", stderr(&o));
    let o = portopt(&["ingest", "--prices", "p.csv", "--out", "m.json"], dir.path());
    assert!(stdout(&o).starts_with("6 assets"));
}
