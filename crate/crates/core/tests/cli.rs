use std::path::Path;
use std::process::{Command, Output};

use ncsa::cli::{manifest_path, read_csv, CSV_HEADER};

fn sim(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ncsa-sim"))
        .args(args)
        .output()
        .expect("spawn ncsa-sim")
}

fn write_curve(path: &Path, rows: &[(f64, f64)]) {
    let mut text = CSV_HEADER.join(",") + "\n";
    for (db, ber) in rows {
        let bits = 1_000_000u64;
        let errors = (ber * bits as f64).round() as u64;
        text += &format!("{db},{ber},{errors},{bits},100,0\n");
    }
    std::fs::write(path, text).unwrap();
}

#[test]
fn run_writes_csv_and_manifest_reproducibly() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("k2.csv");
    let out_s = out.to_str().unwrap();
    let args = [
        "run", "--sources", "2", "--mod-order", "2", "--info-bits", "64", "--snr", "0:5:10",
        "--frames", "20", "--target-errors", "100000", "--seed", "7", "--quiet", "--out", out_s,
    ];
    let first = sim(&args);
    assert!(first.status.success(), "{}", String::from_utf8_lossy(&first.stderr));
    let csv = std::fs::read(&out).unwrap();
    let records = read_csv(&out).unwrap();
    assert_eq!(records.len(), 3);
    assert_eq!(records[2].ebn0_db, 10.0);
    assert!(records.iter().all(|r| r.bits_total == 20 * 64));

    let manifest: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(manifest_path(&out)).unwrap()).unwrap();
    assert_eq!(manifest["config"]["seed"], 7);
    assert_eq!(manifest["config"]["sources"], 2);
    assert_eq!(manifest["records"].as_array().unwrap().len(), 3);
    assert!(manifest["timestamp"].is_string());

    let second = sim(&[&args[..], &["--workers", "1"]].concat());
    assert!(second.status.success());
    assert_eq!(std::fs::read(&out).unwrap(), csv);
}

#[test]
fn run_prints_csv_without_out() {
    let out = sim(&["run", "--info-bits", "16", "--snr", "3", "--frames", "4", "--quiet"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next().unwrap(), CSV_HEADER.join(","));
    assert!(lines.next().unwrap().starts_with("3,"));
    assert!(lines.next().is_none());
}

#[test]
fn config_file_and_overrides() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("cfg.json");
    std::fs::write(&cfg, r#"{"sources": 3, "mod_order": 4, "info_bits": 32, "snr": [20.0], "max_frames": 3}"#).unwrap();
    let out = sim(&["run", "--config", cfg.to_str().unwrap(), "--frames", "5", "--quiet"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = String::from_utf8(out.stdout).unwrap();
    let row: Vec<&str> = text.lines().nth(1).unwrap().split(',').collect();
    assert_eq!(row[0], "20");
    assert_eq!(row[3], "160");
    assert_eq!(row[4], "5");
}

#[test]
fn bad_invocations_fail() {
    for args in [
        vec!["run", "--snr", "0:1:2", "--mod-order", "3"],
        vec!["run", "--snr", "0:-1:2"],
        vec!["run"],
        vec!["run", "--snr", "1", "--detector", "magic"],
        vec!["run", "--snr", "1", "--sources", "0"],
        vec!["frobnicate"],
    ] {
        let out = sim(&args);
        assert!(!out.status.success(), "{args:?} should fail");
        assert!(!out.stderr.is_empty());
    }
}

#[test]
fn gap_between_shifted_curves() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a.csv"), dir.path().join("b.csv"));
    let curve = |shift: f64| -> Vec<(f64, f64)> {
        (0..6).map(|i| (i as f64 * 2.0 + shift, 10f64.powf(-(i as f64) * 0.8))).collect()
    };
    write_curve(&a, &curve(0.0));
    write_curve(&b, &curve(1.0));
    let out = sim(&["gap", a.to_str().unwrap(), b.to_str().unwrap()]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(String::from_utf8(out.stdout).unwrap().trim(), "1.00");
}

#[test]
fn gap_fails_when_curve_never_crosses() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a.csv"), dir.path().join("b.csv"));
    write_curve(&a, &[(0.0, 0.1), (5.0, 1e-4)]);
    write_curve(&b, &[(0.0, 0.2), (5.0, 0.05), (10.0, 0.01)]);
    let out = sim(&["gap", a.to_str().unwrap(), b.to_str().unwrap()]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("above"));
}
