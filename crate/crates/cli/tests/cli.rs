use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn kronlab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_kronlab"))
        .args(args)
        .env("KRONLAB_THREADS", "2")
        .output()
        .expect("binary runs")
}

fn read_json(path: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

fn csv_rows(path: &Path) -> Vec<Vec<String>> {
    fs::read_to_string(path)
        .unwrap()
        .split("\r\n")
        .filter(|l| !l.is_empty())
        .map(|l| l.split(',').map(str::to_string).collect())
        .collect()
}

#[test]
fn count_writes_one_row_per_energy() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let o = kronlab(&["run", "count", "--system", "powerlaw:A=1,alpha=1.5", "--E", "10,20,30", "--out", out]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let rows = csv_rows(&dir.path().join("count.csv"));
    assert_eq!(rows[0][..2], ["E".to_string(), "N".to_string()]);
    assert_eq!(rows.len(), 4);
    let counts: Vec<u64> = rows[1..].iter().map(|r| r[1].parse().unwrap()).collect();
    assert!(counts.windows(2).all(|w| w[0] <= w[1]));
    let summary = read_json(&dir.path().join("count.json"));
    assert_eq!(summary["experiment"], "count");
    assert_eq!(summary["pass"], true);
    assert_eq!(summary["config_echo"]["system"], "powerlaw:A=1,alpha=1.5");
}

#[test]
fn tauber_ratio_column_is_finite() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let o = kronlab(&["run", "tauber-compare", "--system", "powerlaw:A=1,alpha=1", "--E", "50,100,200", "--out", out]);
    assert!(o.status.code() == Some(0) || o.status.code() == Some(2));
    let rows = csv_rows(&dir.path().join("tauber-compare.csv"));
    let col = rows[0].iter().position(|h| h == "ratio").unwrap();
    assert_eq!(rows.len(), 4);
    for r in &rows[1..] {
        let v: f64 = r[col].parse().unwrap();
        assert!(v.is_finite() && v > 0.0);
    }
}

#[test]
fn skms_defects_are_small() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let o = kronlab(&[
        "run", "skms", "--modes", "2", "--boson-cutoff", "4", "--beta", "1.0", "--seed", "7", "--out", out,
    ]);
    assert_eq!(o.status.code(), Some(0));
    let summary = read_json(&dir.path().join("skms.json"));
    for c in summary["results"]["checks"].as_array().unwrap() {
        assert!(c["defect"].as_f64().unwrap() <= 1e-10, "{c}");
    }
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    assert_eq!(kronlab(&["run", "no-such-experiment"]).status.code(), Some(1));
    assert_eq!(kronlab(&["run", "count", "--E", "abc", "--out", out]).status.code(), Some(1));
    assert_eq!(kronlab(&["run", "count", "--set", "bogus=1", "--out", out]).status.code(), Some(1));
    // A single frequency violates the growth assumption.
    let o = kronlab(&["run", "assumptions", "--system", "explicit:1", "--out", out]);
    assert_eq!(o.status.code(), Some(2));
    assert_eq!(read_json(&dir.path().join("assumptions.json"))["pass"], false);
    assert_eq!(kronlab(&["list"]).status.code(), Some(0));
}

#[test]
fn config_file_then_flags() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.ini");
    fs::write(
        &cfg,
        "# shared\nsystem = powerlaw:A=1,alpha=1\nE = 5,6\n\n[count]\nE = 7,8,9\n\n[witten]\nE = 1\n",
    )
    .unwrap();
    let out = dir.path().to_str().unwrap();
    let o = kronlab(&["run", "count", "--config", cfg.to_str().unwrap(), "--out", out]);
    assert_eq!(o.status.code(), Some(0));
    let rows = csv_rows(&dir.path().join("count.csv"));
    let energies: Vec<&str> = rows[1..].iter().map(|r| r[0].as_str()).collect();
    assert_eq!(energies, ["7", "8", "9"]);
    // Partition numbers: 1 + 1 + 2 + 3 + 5 + 7 + 11 + 15 = 45 states up to E = 7.
    assert_eq!(rows[1][1], "45");

    let o = kronlab(&["run", "count", "--config", cfg.to_str().unwrap(), "--E", "3", "--out", out]);
    assert_eq!(o.status.code(), Some(0));
    let rows = csv_rows(&dir.path().join("count.csv"));
    assert_eq!(rows.len(), 2);
    assert_eq!(rows[1][1], "7");
}

#[test]
fn repeated_runs_are_byte_identical() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    for d in [&a, &b] {
        let o = kronlab(&["run", "kms", "--seed", "3", "--svg", "--out", d.path().to_str().unwrap()]);
        assert_eq!(o.status.code(), Some(0));
    }
    for name in ["kms.csv", "kms.json"] {
        assert_eq!(fs::read(a.path().join(name)).unwrap(), fs::read(b.path().join(name)).unwrap());
    }
}
