use std::path::Path;
use std::process::{Command, Output};

fn rudder(args: &[&str]) -> Output {
    let out = Command::new(env!("CARGO_BIN_EXE_rudder")).args(args).output().unwrap();
    assert!(out.status.success(), "rudder {args:?}: {}", String::from_utf8_lossy(&out.stderr));
    out
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

#[test]
fn drive_replay_analyze_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let script = dir.path().join("drive.txt");
    std::fs::write(&script, "EFFORT seq=1 t=0 roll=0 pitch=1.5 yaw=0 engaged=1\nSILENCE t=2\n").unwrap();
    let log = dir.path().join("session.log");
    let csv = dir.path().join("drive.csv");
    rudder(&["drive", "--profile", "day2", "--script", p(&script), "--max-t", "5", "--log", p(&log), "--csv", p(&csv)]);

    let replay_csv = dir.path().join("replay.csv");
    let replay_log = dir.path().join("replay.log");
    rudder(&["replay", p(&log), "--out", p(&replay_csv), "--log-out", p(&replay_log)]);
    assert_eq!(std::fs::read(&csv).unwrap(), std::fs::read(&replay_csv).unwrap());
    assert_eq!(std::fs::read(&log).unwrap(), std::fs::read(&replay_log).unwrap());

    let report = String::from_utf8(rudder(&["analyze", p(&log)]).stdout).unwrap();
    let duration: f64 = report
        .lines()
        .find_map(|l| l.strip_prefix("duration: "))
        .unwrap()
        .parse()
        .unwrap();
    assert!((duration - 5.0).abs() < 0.05, "{report}");
    assert!(report.contains("command_count: 250"), "{report}");
}

#[test]
fn scripted_drive_writes_log_to_stdout() {
    let dir = tempfile::tempdir().unwrap();
    let script = dir.path().join("drive.txt");
    std::fs::write(&script, "PING seq=1 t=0\n").unwrap();
    let out = rudder(&["drive", "--script", p(&script), "--max-t", "0.1"]);
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.starts_with('#'), "{text}");
    assert_eq!(text.lines().filter(|l| !l.starts_with('#')).count(), 5);
}

#[test]
fn config_overlay_changes_the_hash() {
    let base = String::from_utf8(rudder(&["config"]).stdout).unwrap();
    let day2 = String::from_utf8(rudder(&["config", "--profile", "day2"]).stdout).unwrap();
    let hash = |s: &str| s.lines().find_map(|l| l.strip_prefix("# hash ")).unwrap().to_string();
    assert_ne!(hash(&base), hash(&day2));

    let dir = tempfile::tempdir().unwrap();
    let file = dir.path().join("over.cfg");
    std::fs::write(&file, "v_max_x = 0.5\n").unwrap();
    let over = String::from_utf8(rudder(&["config", "--config", p(&file)]).stdout).unwrap();
    assert_ne!(hash(&base), hash(&over));
    assert!(over.lines().any(|l| l.replace(' ', "") == "v_max_x=0.5"), "{over}");
}

#[test]
fn bad_inputs_fail_cleanly() {
    let out = Command::new(env!("CARGO_BIN_EXE_rudder"))
        .args(["drive", "--script", "/nonexistent/script.txt"])
        .output()
        .unwrap();
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("nonexistent"));
}
