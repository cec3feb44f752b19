use std::path::Path;
use std::process::{Command, Output};

fn qfa(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qfa-pulse"))
        .args(args)
        .current_dir(dir)
        .output()
        .expect("binary runs")
}

fn ok(args: &[&str], dir: &Path) -> String {
    let out = qfa(args, dir);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn field(text: &str, key: &str) -> f64 {
    text.lines()
        .find(|l| l.starts_with(key))
        .and_then(|l| l[key.len()..].split_whitespace().next())
        .and_then(|v| v.parse().ok())
        .unwrap_or_else(|| panic!("no {key} in {text}"))
}

#[test]
fn presets_are_listed() {
    let dir = tempfile::tempdir().unwrap();
    let out = ok(&["presets"], dir.path());
    assert_eq!(out.lines().count(), 17);
    assert!(out.lines().any(|l| l == "square-mod3-rep4"));
}

#[test]
fn simulate_word_noiseless() {
    let dir = tempfile::tempdir().unwrap();
    let out = ok(
        &["simulate-word", "--len", "3", "--path", "custom_square", "--noise", "off", "--show-gates"],
        dir.path(),
    );
    assert_eq!(out.lines().filter(|l| l.starts_with("rx(")).count(), 3);
    assert!((field(&out, "exact") - 0.020_253_513).abs() < 1e-6);
    assert!(out.contains("(240 dt)"));

    let out = ok(
        &["simulate-word", "--len", "11", "--path", "default_drag", "--noise", "off", "--schedule-out", "s.json"],
        dir.path(),
    );
    assert!((field(&out, "exact") - 1.0).abs() < 1e-6);
    assert!(out.contains("(3520 dt)"));
    let schedule = std::fs::read_to_string(dir.path().join("s.json")).unwrap();
    assert!(schedule.contains("\"dt_ns\"") && schedule.contains("\"phase_shift\""));
}

#[test]
fn calibrate_sweep_report() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    ok(&["calibrate", "--out", "table.json"], d);
    let table = std::fs::read_to_string(d.join("table.json")).unwrap();
    assert!(table.contains("omega_rad_per_s") && table.contains("fit_meta"));

    let stdout = ok(
        &["sweep", "--max-len", "40", "--table", "table.json", "--out", "rows.csv", "--thresholds-out", "t.csv"],
        d,
    );
    assert!(stdout.contains("custom_square"));
    let rows = std::fs::read_to_string(d.join("rows.csv")).unwrap();
    let mut lines = rows.lines();
    assert_eq!(
        lines.next().unwrap(),
        "word_len,path,opt_level,residue,expected_prob,exact_prob,shot_prob,abs_error_exact,abs_error_shot,latency_ns,replication,seed"
    );
    // 0, 3, 11, 14, 22, 25, 33, 36 on both paths
    assert_eq!(lines.count(), 16);

    ok(&["sweep", "--max-len", "40", "--table", "table.json", "--out", "rows.json"], d);
    let report = ok(&["report", "--rows", "rows.json", "--out", "thresholds.json"], d);
    assert!(report.contains("> 40"));
    let doc: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(d.join("thresholds.json")).unwrap()).unwrap();
    assert_eq!(doc["thresholds"]["entries"].as_array().unwrap().len(), 8);
    let from_csv = ok(&["report", "--rows", "rows.csv", "--max-len", "40"], d);
    assert_eq!(from_csv, report.replace("wrote thresholds.json\n", ""));
}

#[test]
fn sweep_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    ok(&["calibrate", "--out", "table.json"], d);
    for name in ["a.csv", "b.csv"] {
        ok(&["sweep", "--max-len", "25", "--seed", "7", "--table", "table.json", "--out", name], d);
    }
    ok(&["sweep", "--max-len", "25", "--seed", "8", "--table", "table.json", "--out", "c.csv"], d);
    let read = |n: &str| std::fs::read_to_string(d.join(n)).unwrap();
    assert_eq!(read("a.csv"), read("b.csv"));
    assert_ne!(read("a.csv"), read("c.csv"));
}

#[test]
fn config_file_overrides_flags() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    ok(&["calibrate", "--out", "table.json"], d);
    std::fs::write(d.join("c.json"), r#"{"max_len": 14, "paths": ["custom_square"], "residues": [3]}"#).unwrap();
    ok(
        &["sweep", "--config", "c.json", "--max-len", "500", "--table", "table.json", "--out", "r.csv"],
        d,
    );
    let rows = std::fs::read_to_string(d.join("r.csv")).unwrap();
    assert_eq!(rows.lines().count(), 3);
    assert!(rows.lines().skip(1).all(|l| l.contains(",custom_square,")));
}

#[test]
fn bad_input_fails_cleanly() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    for args in [
        &["simulate-word", "--len", "3", "--path", "sideways"][..],
        &["sweep", "--opt-level", "2", "--out", "x.csv"][..],
        &["sweep", "--p", "12", "--out", "x.csv"][..],
        &["sweep", "--residues", "11", "--out", "x.csv"][..],
        &["sweep", "--device-preset", "nope", "--out", "x.csv"][..],
        &["report", "--rows", "missing.csv"][..],
    ] {
        let out = qfa(args, d);
        assert!(!out.status.success(), "{args:?} succeeded");
        assert!(String::from_utf8_lossy(&out.stderr).starts_with("error: "), "{args:?}");
    }
    assert!(!d.join("x.csv").exists());
}
