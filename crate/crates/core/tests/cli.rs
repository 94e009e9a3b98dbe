use std::path::Path;
use std::process::{Command, Output};

use uilsim::metrics::{read_summary_csv, SUMMARY_COLUMNS};
use uilsim::ScenarioConfig;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_uilsim"))
}

fn write_cfg(dir: &Path, cfg: &ScenarioConfig) -> std::path::PathBuf {
    let p = dir.join("cfg.json");
    std::fs::write(&p, serde_json::to_string_pretty(cfg).unwrap()).unwrap();
    p
}

fn tiny() -> ScenarioConfig {
    ScenarioConfig {
        n_stationary: 100,
        n_wearable: 100,
        n_vehicles: 200,
        n_pedestrians: 200,
        sim_duration_s: 60.0,
        rounds: 2,
        bs_distance_m: Some(300.0),
        ..Default::default()
    }
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn missing_config_is_exit_3() {
    let d = tempfile::tempdir().unwrap();
    let o = run(&["--config", "/nonexistent/cfg.json", "--out", d.path().to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(3));
    assert!(stderr(&o).starts_with("error kind=io msg=\""), "{}", stderr(&o));
}

#[test]
fn malformed_config_is_exit_3() {
    let d = tempfile::tempdir().unwrap();
    let p = d.path().join("cfg.json");
    std::fs::write(&p, "{ not json").unwrap();
    let o = run(&["--config", p.to_str().unwrap(), "--out", d.path().to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(3));
}

#[test]
fn invalid_config_is_exit_4() {
    let d = tempfile::tempdir().unwrap();
    let cfg = ScenarioConfig { vehicle_speed_kmh: -5.0, ..tiny() };
    let p = write_cfg(d.path(), &cfg);
    let o = run(&["--config", p.to_str().unwrap(), "--out", d.path().to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(4));
    assert!(stderr(&o).starts_with("error kind=config"));
}

#[test]
fn unknown_key_is_rejected() {
    let d = tempfile::tempdir().unwrap();
    let p = d.path().join("cfg.json");
    std::fs::write(&p, r#"{"n_stationary": 10, "warp_drive": true}"#).unwrap();
    let o = run(&["--config", p.to_str().unwrap(), "--out", d.path().to_str().unwrap()]);
    assert_ne!(o.status.code(), Some(0));
}

#[test]
fn usage_errors_are_exit_2() {
    let d = tempfile::tempdir().unwrap();
    let p = write_cfg(d.path(), &tiny());
    let out = d.path().join("o");
    assert_eq!(run(&["--bogus"]).status.code(), Some(2));
    let o = run(&["--config", p.to_str().unwrap(), "--out", out.to_str().unwrap(), "--rat", "WIFI"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).starts_with("error kind=usage"));
    let o = run(&["--config", p.to_str().unwrap(), "--out", out.to_str().unwrap(), "--involvement", "type9"]);
    assert_eq!(o.status.code(), Some(2));
    assert_eq!(run(&["--help"]).status.code(), Some(0));
}

#[test]
fn too_many_assistants_is_a_config_error() {
    let d = tempfile::tempdir().unwrap();
    let p = write_cfg(d.path(), &tiny());
    let out = d.path().join("o");
    let o = run(&["--config", p.to_str().unwrap(), "--out", out.to_str().unwrap(), "--involvement", "type1", "--vehicles", "5000"]);
    assert_ne!(o.status.code(), Some(0));
    assert!(!out.join("summary.csv").exists());
}

#[test]
fn calibrate_only_prints_distance_and_writes_no_summary() {
    let d = tempfile::tempdir().unwrap();
    let p = write_cfg(d.path(), &tiny());
    let out = d.path().join("o");
    let o = run(&["--config", p.to_str().unwrap(), "--out", out.to_str().unwrap(), "--rat", "LORAWAN", "--calibrate-only"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert_eq!(String::from_utf8_lossy(&o.stdout).trim(), "rat=LORAWAN calibrated_distance_m=300");
    assert!(out.join("manifest.json").exists());
    assert!(!out.join("summary.csv").exists());
}

#[test]
fn unreachable_calibration_target_fails() {
    let d = tempfile::tempdir().unwrap();
    let cfg = ScenarioConfig { bs_distance_m: None, target_baseline_sinr_db: 60.0, calibration_rounds: 1, ..tiny() };
    let p = write_cfg(d.path(), &cfg);
    let out = d.path().join("o");
    let o = run(&["--config", p.to_str().unwrap(), "--out", out.to_str().unwrap(), "--rat", "NBIOT", "--calibrate-only"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).starts_with("error kind=calibration"));

    let cfg = ScenarioConfig { calibration_best_effort: true, ..cfg };
    let p = write_cfg(d.path(), &cfg);
    let o = run(&["--config", p.to_str().unwrap(), "--out", out.to_str().unwrap(), "--rat", "NBIOT", "--calibrate-only"]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(String::from_utf8_lossy(&o.stdout).trim(), "rat=NBIOT calibrated_distance_m=10");
}

#[test]
fn sweep_writes_summary_snapshot_and_logs_reproducibly() {
    let d = tempfile::tempdir().unwrap();
    let p = write_cfg(d.path(), &tiny());
    let go = |name: &str| {
        let out = d.path().join(name);
        let o = run(&[
            "--config", p.to_str().unwrap(), "--out", out.to_str().unwrap(),
            "--rat", "HALOW", "--vehicles", "5", "--emit-snapshot", "--write-logs",
        ]);
        assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
        out
    };
    let a = go("a");
    let b = go("b");
    let summary = std::fs::read(a.join("summary.csv")).unwrap();
    assert_eq!(summary, std::fs::read(b.join("summary.csv")).unwrap());
    let text = String::from_utf8(summary.clone()).unwrap();
    assert_eq!(text.lines().next().unwrap(), SUMMARY_COLUMNS.join(","));
    let rows = read_summary_csv(summary.as_slice()).unwrap();
    assert_eq!(rows.len(), 3);
    assert_eq!(rows[0].involvement, uilsim::Involvement::Baseline);
    assert_eq!(rows[0].ee_gain_vs_baseline, Some(1.0));
    assert!(rows.iter().all(|r| r.rat == uilsim::Rat::Halow && r.rounds == 2));

    let snap = std::fs::read_to_string(a.join("snapshot.csv")).unwrap();
    assert_eq!(snap, std::fs::read_to_string(b.join("snapshot.csv")).unwrap());
    assert_eq!(snap.lines().count(), 1 + 100 + 100 + 200 + 200 + 1);

    let mut logs: Vec<_> = std::fs::read_dir(a.join("logs")).unwrap().map(|e| e.unwrap().file_name()).collect();
    logs.sort();
    assert_eq!(logs.len(), 3 * 2);
    for l in &logs {
        assert_eq!(std::fs::read(a.join("logs").join(l)).unwrap(), std::fs::read(b.join("logs").join(l)).unwrap());
    }
    let m: serde_json::Value = serde_json::from_slice(&std::fs::read(a.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(m["rounds"], 2);
    assert_eq!(m["vehicles"], serde_json::json!([5]));
    assert!(std::fs::read_dir(&a).unwrap().all(|e| !e.unwrap().file_name().to_string_lossy().ends_with(".tmp")));
}
