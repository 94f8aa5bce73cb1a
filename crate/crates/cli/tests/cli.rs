use std::path::Path;
use std::process::{Command, Output};

use kawasaki_core::model::Configuration;

fn kawasaki(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_kawasaki")).args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let path = dir.join(name);
    std::fs::write(&path, text).unwrap();
    path.to_str().unwrap().to_string()
}

#[test]
fn constants_of_the_default_set() {
    let o = kawasaki(&["constants"]);
    assert!(o.status.success());
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["constants"]["eps"], "2/5");
    assert_eq!(v["constants"]["l2star"], 3);
    assert_eq!(v["constants"]["sstar"], 8);
    assert_eq!(v["constants"]["gamma"], "63/5");
    assert_eq!(v["constants"]["vstar"], "21/5");
}

#[test]
fn parameter_files() {
    let dir = tempfile::tempdir().unwrap();
    let good = write(dir.path(), "good.txt", "u1 = 3\nu2 = 1\ndelta = 3.6\nl0 = 12\nbeta = 1.5\n");
    let o = kawasaki(&["--params", &good, "constants"]);
    assert!(o.status.success());
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["params"]["delta"], "18/5");

    let bad = write(dir.path(), "bad.txt", "u1=3\nu2=1\ndelta=pi\nl0=12\n");
    assert_eq!(kawasaki(&["--params", &bad, "constants"]).status.code(), Some(2));
    let unknown = write(dir.path(), "unknown.txt", "u1=3\nu2=1\ndelta=18/5\nl0=12\nmu=1\n");
    assert_eq!(kawasaki(&["--params", &unknown, "constants"]).status.code(), Some(2));
    let missing = dir.path().join("nope.txt");
    assert_eq!(kawasaki(&["--params", missing.to_str().unwrap(), "constants"]).status.code(), Some(2));
    let outside = write(dir.path(), "outside.txt", "u1=3\nu2=1\ndelta=5\nl0=12\n");
    assert_eq!(kawasaki(&["--params", &outside, "constants"]).status.code(), Some(3));
    let integer_ratio = write(dir.path(), "ratio.txt", "u1=3\nu2=1\ndelta=7/2\nl0=12\n");
    assert_eq!(kawasaki(&["--params", &integer_ratio, "constants"]).status.code(), Some(3));
    assert_eq!(kawasaki(&["no-such-command"]).status.code(), Some(2));
}

#[test]
fn classify_a_rectangle_grid() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = Configuration::rectangle(12, 1, 1, 5, 3);
    let grid = write(dir.path(), "r53.txt", &cfg.to_grid());
    let o = kawasaki(&["classify", &grid]);
    assert!(o.status.success());
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["B"], false);
    assert_eq!(v["rule"], "none");
    assert_eq!(v["energy"], "8");
    // Emitted grids re-parse to the same configuration.
    assert_eq!(Configuration::from_grid(v["grid"].as_str().unwrap()).unwrap(), cfg);

    let broken = write(dir.path(), "broken.txt", "..\n.x\n");
    assert_eq!(kawasaki(&["classify", &broken]).status.code(), Some(2));
}

#[test]
fn energy_of_a_grid() {
    let dir = tempfile::tempdir().unwrap();
    let grid = write(dir.path(), "r32.txt", &Configuration::rectangle(12, 4, 4, 3, 2).to_grid());
    let v: serde_json::Value = serde_json::from_slice(&kawasaki(&["energy", &grid]).stdout).unwrap();
    assert_eq!(v["energy"], v["decomposition"]);
    assert_eq!(v["summary"]["p1"], 3);
    assert_eq!(v["summary"]["v"], 0);
}

#[test]
fn refpath_csv_peaks_at_gamma_in_p1() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    let o = kawasaki(&["--out", out.to_str().unwrap(), "refpath"]);
    assert!(o.status.success());
    assert!(stdout(&o).contains("max energy 63/5"));
    let mut reader = csv::Reader::from_path(out.join("refpath.csv")).unwrap();
    let headers = reader.headers().unwrap().clone();
    let col = |name: &str| headers.iter().position(|h| h == name).unwrap();
    let (num, den, p1) = (col("energy_num"), col("energy_den"), col("inP1"));
    let rows: Vec<csv::StringRecord> = reader.records().map(Result::unwrap).collect();
    let value = |r: &csv::StringRecord| r[num].parse::<f64>().unwrap() / r[den].parse::<f64>().unwrap();
    let peak = rows.iter().map(value).fold(f64::MIN, f64::max);
    assert_eq!(peak, 12.6);
    assert!(rows.iter().any(|r| value(r) == peak && &r[p1] == "true" && &r[num] == "63" && &r[den] == "5"));
}

#[test]
fn barriers_single_and_sweep() {
    let v: serde_json::Value = serde_json::from_slice(&kawasaki(&["barriers", "--l1", "6", "--l2", "3"]).stdout).unwrap();
    assert_eq!(v["region"], "C'");
    assert_eq!(v["minimal"], "add-column");
    let o = kawasaki(&["barriers", "--max", "4"]);
    assert_eq!(stdout(&o).lines().count(), 17);
    assert_eq!(kawasaki(&["barriers", "--l1", "3"]).status.code(), Some(2));
    assert_eq!(kawasaki(&["barriers", "--l1", "0", "--l2", "3"]).status.code(), Some(3));
}

#[test]
fn simulation_output_is_reproducible() {
    let args = ["--seed", "5", "simulate", "--beta", "0.8", "--runs", "6", "--cap", "20000", "--start", "R(2,2)", "--targets", "zero,R(3,3)"];
    let (a, b) = (kawasaki(&args), kawasaki(&args));
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
    let text = stdout(&a);
    assert!(text.starts_with("seed,run,start,outcome,steps,gate_hit,max_energy,max_energy_f64\n"));
    assert_eq!(text.lines().filter(|l| l.starts_with("5,")).count(), 6);

    let other = kawasaki(&["--seed", "6", "--threads", "1", "simulate", "--beta", "0.8", "--runs", "6", "--cap", "20000", "--start", "R(2,2)", "--targets", "zero,R(3,3)"]);
    assert_ne!(other.stdout, a.stdout);

    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("sim");
    let mut with_out = vec!["--out", out.to_str().unwrap()];
    with_out.extend_from_slice(&args);
    assert!(kawasaki(&with_out).status.success());
    let summary: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(out.join("summary.json")).unwrap()).unwrap();
    assert_eq!(summary["stats"]["runs"], 6);
    assert!(out.join("runs.csv").exists());

    assert_eq!(kawasaki(&["simulate", "--kernel", "heat-bath"]).status.code(), Some(2));
    assert_eq!(kawasaki(&["simulate", "--targets", "Q"]).status.code(), Some(2));
    assert_eq!(kawasaki(&["simulate", "--start", "R(20,2)"]).status.code(), Some(3));
    assert_eq!(kawasaki(&["simulate", "--runs", "0"]).status.code(), Some(3));
}

#[test]
fn fate_and_recurrence_commands() {
    let o = kawasaki(&["--seed", "1", "fate", "--rect", "R(2,2)", "--beta", "2.5", "--runs", "3"]);
    assert!(o.status.success());
    assert_eq!(stdout(&o).lines().filter(|l| l.contains(",zero,")).count(), 3);
    let o = kawasaki(&["recurrence", "--beta", "1.0", "--runs", "3", "--max-particles", "10"]);
    assert!(o.status.success());
    assert_eq!(kawasaki(&["recurrence", "--cap", "10"]).status.code(), Some(2));
}

#[test]
fn oracle_scan_and_inequalities() {
    let o = kawasaki(&["oracle-scan"]);
    assert!(o.status.success());
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!((v["gamma_num"].as_i64(), v["gamma_den"].as_i64()), (Some(63), Some(5)));
    assert_eq!((v["h_min_num"].as_i64(), v["h_min_den"].as_i64()), (Some(63), Some(5)));
    assert_eq!(v["passed"], true);
    assert!(!v["minimizers"].as_array().unwrap().is_empty());
    assert_eq!(kawasaki(&["oracle-scan", "--window", "1,1,3,2"]).status.code(), Some(3));
    assert_eq!(kawasaki(&["oracle-scan", "--window", "1,1"]).status.code(), Some(2));

    let v: serde_json::Value = serde_json::from_slice(&kawasaki(&["inequalities"]).stdout).unwrap();
    assert_eq!(v["k_max"], 10);
}
