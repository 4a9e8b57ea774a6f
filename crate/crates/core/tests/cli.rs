use std::process::{Command, Output};

use netisac::harness::ConfigFile;

fn netisac(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_netisac")).args(args).output().unwrap()
}

fn small_config(dir: &tempfile::TempDir, edit: impl FnOnce(&mut ConfigFile)) -> String {
    let mut f = ConfigFile::default();
    f.layout.n_antennas = 4;
    f.channel_draws = 2;
    f.sweep.values = vec![38.0, 44.0];
    f.trials_mc = 2000;
    edit(&mut f);
    let path = dir.path().join("cfg.json");
    std::fs::write(&path, serde_json::to_string_pretty(&f).unwrap()).unwrap();
    path.display().to_string()
}

#[test]
fn sweep_power_writes_one_row_per_point_scheme_and_pfa() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small_config(&dir, |f| f.p_fa = vec![1e-3, 1e-2]);
    let out_path = dir.path().join("out.csv");
    let out = netisac(&["sweep-power", "--config", &cfg, "--out", out_path.to_str().unwrap(), "--scheme", "PROPOSED_I,BENCHMARK_II"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = std::fs::read_to_string(&out_path).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 1 + 2 * 2 * 2);
    assert!(lines[0].starts_with("scheme,scenario,sweep_name"));
    assert!(lines[1].starts_with("PROPOSED_I,I,p_max_dbm,"));
}

#[test]
fn scenario_filter_and_json_output() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small_config(&dir, |f| f.sweep.values = vec![40.0]);
    let out = netisac(&["sweep-power", "--config", &cfg, "--scenario", "II", "--format", "json"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let rows: Vec<serde_json::Value> = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(rows.len(), 2);
    assert!(rows.iter().all(|r| r["scenario"] == "II"));
}

#[test]
fn config_errors_exit_one() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, "{ \"layout\": ").unwrap();
    assert_eq!(netisac(&["sweep-power", "--config", bad.to_str().unwrap()]).status.code(), Some(1));
    assert_eq!(netisac(&["sweep-power", "--config", "/nonexistent/cfg.json"]).status.code(), Some(1));
    // default config sweeps power, so the SINR sweep is refused
    assert_eq!(netisac(&["sweep-sinr"]).status.code(), Some(1));
    assert_eq!(netisac(&["sweep-power", "--scheme", "NOPE"]).status.code(), Some(1));
    let cfg = small_config(&dir, |f| f.channel_draws = 0);
    let out = netisac(&["sweep-power", "--config", &cfg]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("channel_draws"));
}

#[test]
fn solve_once_prints_report_or_exits_two() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small_config(&dir, |_| {});
    let out = netisac(&["solve-once", "--config", &cfg, "--scenario", "II"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let rep: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(rep["scenario"], "II");
    assert_eq!(rep["beamformers"].as_array().unwrap().len(), 3);

    let hard = small_config(&dir, |f| f.fixed.gamma_db = 120.0);
    assert_eq!(netisac(&["solve-once", "--config", &hard]).status.code(), Some(2));
}

#[test]
fn validate_detection_passes_on_small_budget() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small_config(&dir, |_| {});
    let out = netisac(&["validate-detection", "--config", &cfg]);
    let text = String::from_utf8_lossy(&out.stdout);
    assert_eq!(text.lines().count(), 15);
    // each case leaves its 3-sigma band with small probability; the seed is fixed
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn repeated_runs_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small_config(&dir, |_| {});
    let a = netisac(&["sweep-power", "--config", &cfg, "--jobs", "1"]);
    let b = netisac(&["sweep-power", "--config", &cfg, "--jobs", "2"]);
    assert!(a.status.success() && b.status.success());
    assert_eq!(a.stdout, b.stdout);
    let c = netisac(&["sweep-power", "--config", &cfg, "--seed", "7"]);
    assert_ne!(a.stdout, c.stdout);
}
