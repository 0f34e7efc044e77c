use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempfile::TempDir;

const TABLE_ONE: &str = r#"{
  "mode": "conventional",
  "tier1": { "density_per_macro_cell": 1, "power_dbm": 46, "antennas": 4, "alpha": 3.7 },
  "tier2": { "density_per_macro_cell": 50, "power_dbm": 21, "antennas": 1, "alpha": 3.7 },
  "user_density_per_macro_cell": 50,
  "backhaul_mbps": 10,
  "bandwidth_mhz": 20,
  "noise": { "enabled": true, "figure_db": 9 },
  "catalog": { "size": 100000, "skew": 0.8, "eta": 0.01 }
}"#;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_hetcache"))
}

fn write_config(dir: &Path, name: &str, body: &str) -> PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, body).unwrap();
    p
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().unwrap()
}

/// Manifest line and parsed records of a CSV on disk.
fn read_csv(path: &Path) -> (String, Vec<csv::StringRecord>, csv::StringRecord) {
    let text = std::fs::read_to_string(path).unwrap();
    let (first, body) = text.split_once('\n').unwrap();
    let mut r = csv::Reader::from_reader(body.as_bytes());
    let header = r.headers().unwrap().clone();
    let rows = r.records().map(|x| x.unwrap()).collect();
    (first.to_string(), rows, header)
}

fn body(path: &Path) -> String {
    let text = std::fs::read_to_string(path).unwrap();
    text.split_once('\n').unwrap().1.to_string()
}

fn col(header: &csv::StringRecord, name: &str) -> usize {
    header
        .iter()
        .position(|h| h == name)
        .unwrap_or_else(|| panic!("missing column {name}"))
}

#[test]
fn single_point_grid_gives_one_row() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(dir.path(), "t.json", TABLE_ONE);
    let out = dir.path().join("a.csv");
    let o = run(&[
        "ase",
        "--config",
        cfg.to_str().unwrap(),
        "--sweep",
        "lambda2=50:50:1",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let (manifest, rows, header) = read_csv(&out);
    assert!(manifest.starts_with("# hetcache-cli") && manifest.contains("manifest="));
    assert_eq!(rows.len(), 1);
    let expected = ["swept_value", "ase_bps_hz_m2", "ase_nats_hz_m2", "method", "stderr"];
    assert_eq!(header.iter().take(5).collect::<Vec<_>>(), expected);
    assert_eq!(&rows[0][col(&header, "stderr")], "");
    assert_eq!(&rows[0][col(&header, "method")], "integral");
}

#[test]
fn cached_above_conventional_across_density_sweep() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(dir.path(), "t.json", TABLE_ONE);
    let mut ases = Vec::new();
    for mode in ["conventional", "cached"] {
        let out = dir.path().join(format!("{mode}.csv"));
        let o = run(&[
            "ase",
            "--config",
            cfg.to_str().unwrap(),
            "--mode",
            mode,
            "--sweep",
            "lambda2=1:100:6:log",
            "--out",
            out.to_str().unwrap(),
        ]);
        assert!(o.status.success());
        let (_, rows, header) = read_csv(&out);
        let i = col(&header, "ase_bps_hz_m2");
        ases.push(rows.iter().map(|r| r[i].parse::<f64>().unwrap()).collect::<Vec<_>>());
    }
    assert_eq!(ases[0].len(), 6);
    for (c, h) in ases[0].iter().zip(&ases[1]) {
        assert!(h >= c);
    }
}

#[test]
fn monte_carlo_is_reproducible_across_runs_and_workers() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(dir.path(), "t.json", TABLE_ONE);
    let mut bodies = Vec::new();
    for (i, workers) in ["1", "1", "2"].iter().enumerate() {
        let out = dir.path().join(format!("mc{i}.csv"));
        let o = bin()
            .env("HETCACHE_WORKERS", workers)
            .args([
                "ase",
                "--config",
                cfg.to_str().unwrap(),
                "--method",
                "monte_carlo",
                "--drops",
                "8",
                "--seed",
                "7",
                "--expected-macros",
                "50",
                "--sweep",
                "lambda2=5:10:2",
                "--out",
                out.to_str().unwrap(),
            ])
            .output()
            .unwrap();
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
        let (_, rows, header) = read_csv(&out);
        assert!(rows.iter().all(|r| !r[col(&header, "stderr")].is_empty()));
        bodies.push(body(&out));
    }
    assert_eq!(bodies[0], bodies[1]);
    assert_eq!(bodies[0], bodies[2]);
}

#[test]
fn config_errors_exit_with_two() {
    let dir = TempDir::new().unwrap();
    let bad = write_config(dir.path(), "bad.json", &TABLE_ONE.replace("\"mode\"", "\"mood\""));
    assert_eq!(run(&["ase", "--config", bad.to_str().unwrap()]).status.code(), Some(2));
    assert_eq!(run(&["ase", "--config", "/no/such/file.json"]).status.code(), Some(2));
    let unequal = write_config(
        dir.path(),
        "u.json",
        &TABLE_ONE.replacen("\"alpha\": 3.7", "\"alpha\": 4.0", 1),
    );
    let o = run(&["ase", "--config", unequal.to_str().unwrap(), "--method", "closed_form"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn failing_point_exits_with_three_but_writes_rows() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(dir.path(), "t.json", TABLE_ONE);
    let out = dir.path().join("b.csv");
    let o = run(&[
        "ase",
        "--config",
        cfg.to_str().unwrap(),
        "--sweep",
        "backhaul=-1:10:2",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(3));
    let (_, rows, header) = read_csv(&out);
    assert_eq!(rows.len(), 2);
    assert!(rows[0][col(&header, "status")].starts_with("error"));
    assert_eq!(&rows[1][col(&header, "status")], "ok");
}

#[test]
fn tradeoff_round_trips_and_marks_infeasible_rows() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(dir.path(), "t.json", TABLE_ONE);
    let out = dir.path().join("t.csv");
    let o = run(&[
        "tradeoff",
        "--config",
        cfg.to_str().unwrap(),
        "--target-per-cell",
        "20",
        "--density-grid",
        "10:200:3:log",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let (_, rows, header) = read_csv(&out);
    assert_eq!(
        header.iter().take(4).collect::<Vec<_>>(),
        ["lambda2_per_m2", "eta", "iterations", "residual"]
    );
    assert_eq!(&rows[0][col(&header, "status")], "no_solution");
    let last = &rows[2];
    let eta: f64 = last[col(&header, "eta")].parse().unwrap();
    assert!(last[col(&header, "residual")].parse::<f64>().unwrap() <= 1e-4);

    // evaluating at the solved η reproduces the target
    let check = dir.path().join("c.csv");
    let sweep = format!("eta={eta}:{eta}:1");
    let cfg200 = write_config(
        dir.path(),
        "t200.json",
        &TABLE_ONE.replace("\"density_per_macro_cell\": 50", "\"density_per_macro_cell\": 200"),
    );
    let o = run(&[
        "ase",
        "--config",
        cfg200.to_str().unwrap(),
        "--mode",
        "cached",
        "--method",
        "closed_form",
        "--sweep",
        &sweep,
        "--out",
        check.to_str().unwrap(),
    ]);
    assert!(o.status.success());
    let (_, rows, header) = read_csv(&check);
    let per_cell: f64 = rows[0][col(&header, "ase_bps_hz_per_macro_cell")].parse().unwrap();
    assert!((per_cell - 20.0).abs() <= 20.0 * 1e-4 + 1e-9, "{per_cell}");
}

#[test]
fn optimal_density_writes_summary_and_curves() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(dir.path(), "t.json", TABLE_ONE);
    let out = dir.path().join("od");
    let o = run(&[
        "optimal-density",
        "--config",
        cfg.to_str().unwrap(),
        "--budget",
        "1e4",
        "--delta-list",
        "0.6,1.0",
        "--points",
        "21",
        "--out-dir",
        out.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let (_, rows, header) = read_csv(&out.join("summary.csv"));
    assert_eq!(rows.len(), 2);
    let l = col(&header, "lambda2_per_m2");
    assert!(rows.iter().all(|r| &r[col(&header, "status")] == "interior"));
    assert!(rows[0][l].parse::<f64>().unwrap() < rows[1][l].parse::<f64>().unwrap());
    let (_, curve, _) = read_csv(&out.join("curve_delta_0p6.csv"));
    assert_eq!(curve.len(), 21);
    assert!(out.join("curve_delta_1.csv").exists());

    // a budget that fills every cache leaves the optimum on the boundary
    let sat = dir.path().join("sat");
    let o = run(&[
        "optimal-density",
        "--config",
        cfg.to_str().unwrap(),
        "--budget",
        "1e9",
        "--delta-list",
        "0.8",
        "--range",
        "1:100",
        "--points",
        "9",
        "--out-dir",
        sat.to_str().unwrap(),
    ]);
    assert!(o.status.success());
    let (_, rows, header) = read_csv(&sat.join("summary.csv"));
    assert_eq!(&rows[0][col(&header, "status")], "boundary");
    assert_eq!(&rows[0][col(&header, "eta")], "1");
}

#[test]
fn validate_passes_and_fails_with_exit_codes() {
    let dir = TempDir::new().unwrap();
    let macro_only = write_config(
        dir.path(),
        "m.json",
        &TABLE_ONE.replace("\"density_per_macro_cell\": 50", "\"density_per_macro_cell\": 0"),
    );
    let out = dir.path().join("v.csv");
    let o = run(&[
        "validate",
        "--config",
        macro_only.to_str().unwrap(),
        "--drops",
        "40",
        "--seed",
        "3",
        "--out",
        out.to_str().unwrap(),
    ]);
    let stdout = String::from_utf8_lossy(&o.stdout);
    // the simulator agrees; the closed form for a macro-only network sits
    // ~7% below the integral, outside the 5% band
    assert_eq!(o.status.code(), Some(1), "{stdout}");
    let (_, rows, header) = read_csv(&out);
    assert_eq!(rows.len(), 3);
    let status = |m: &str| rows.iter().find(|r| &r[0] == m).unwrap()[col(&header, "status")].to_string();
    assert_eq!(status("integral"), "reference");
    assert_eq!(status("monte_carlo"), "pass");
    assert_eq!(status("closed_form"), "fail");

    // Table I passes all three
    let cfg = write_config(dir.path(), "t.json", TABLE_ONE);
    let o = run(&[
        "validate",
        "--config",
        cfg.to_str().unwrap(),
        "--drops",
        "40",
        "--seed",
        "3",
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stdout));

    // a window too small for the simulator makes the Monte Carlo check fail
    let o = run(&[
        "validate",
        "--config",
        cfg.to_str().unwrap(),
        "--drops",
        "10",
        "--expected-macros",
        "10",
    ]);
    assert_eq!(o.status.code(), Some(1));
}
