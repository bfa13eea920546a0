use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn trc(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_trc")).args(args).output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

fn json(o: &Output) -> Value {
    assert!(o.status.success(), "{}", stderr(o));
    serde_json::from_slice(&o.stdout).unwrap()
}

fn path(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn rates_unit_example() {
    let v = json(&trc(&["rates", "--p1", "1", "--p2", "1", "--pr", "1", "--nr", "1", "--n1", "1", "--n2", "1", "--json"]));
    for g in ["g1", "g2"] {
        assert!((v["gap"][g].as_f64().unwrap() - 0.2075).abs() < 1e-4);
    }
    assert_eq!(v["cutset"]["r1"].as_f64(), Some(0.5));
    assert!(v["achievable"]["r2"].is_f64());
    assert!(v["alpha"].is_f64());
    assert!(v["effNoiseVar"].is_f64());
}

#[test]
fn rates_db_sweep_csv() {
    let o = trc(&["rates", "--nr-db-list", "0,-10,-20"]);
    assert!(o.status.success());
    let text = stdout(&o);
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 4);
    assert!(lines[0].starts_with("p1,p2,pr,nr,n1,n2,cutsetR1"));
    assert!(lines[2].split(',').nth(3).unwrap().starts_with("0.1"));
}

#[test]
fn trivial_lattice_example() {
    let v = json(&trc(&["lattice", "--base", "z", "--n", "1", "--k1", "1", "--k2", "1"]));
    assert_eq!(v["rates"]["r1"].as_f64(), Some(0.0));
    assert_eq!(v["rates"]["r2"].as_f64(), Some(0.0));
    assert_eq!(v["cosetCounts"]["c1"].as_u64(), Some(1));
    assert_eq!(v["cosetCounts"]["c2"].as_u64(), Some(1));
}

#[test]
fn lattice_report_e8() {
    let v = json(&trc(&["lattice", "--base", "e8", "--k1", "2", "--k2", "2", "--moment-samples", "2000", "--seed", "3"]));
    assert_eq!(v["n"].as_u64(), Some(8));
    assert_eq!(v["cosetCounts"]["c1"].as_u64(), Some(65536));
    assert_eq!(v["cosetCounts"]["c2"].as_u64(), Some(256));
    assert_eq!(v["rates"]["r1"].as_f64(), Some(2.0));
    assert_eq!(v["secondMoments"]["fine"]["method"], "monte-carlo");
    assert_eq!(v["secondMoments"]["fine"]["sampleCount"].as_u64(), Some(2000));
}

#[test]
fn saved_chain_drives_simulation() {
    let dir = tempfile::tempdir().unwrap();
    let chain = dir.path().join("chain.json");
    let o = trc(&["lattice", "--base", "a2", "--k1", "2", "--k2", "2", "--scale", "0.5", "--save", path(&chain)]);
    assert!(o.status.success());
    let saved: Value = serde_json::from_str(&std::fs::read_to_string(&chain).unwrap()).unwrap();
    assert_eq!(saved["family"], "base-matrix");
    let o = trc(&["simulate", "--seed", "1", "--trials", "500", "--chain", path(&chain), "--mode", "end-to-end"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let row = stdout(&o).lines().nth(1).unwrap().to_string();
    assert!(row.starts_with("end-to-end,2,"));
    let o = trc(&["simulate", "--seed", "1", "--chain", path(&chain), "--k2", "3"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn simulate_is_byte_identical() {
    let args = ["simulate", "--seed", "7", "--trials", "5000", "--nr", "0.25"];
    let a = trc(&args);
    let b = trc(&args);
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
    let c = trc(&[&args[..], &["--workers", "2"]].concat());
    assert_eq!(a.stdout, c.stdout);
    let header = stdout(&a).lines().next().unwrap().to_string();
    assert_eq!(
        header,
        "mode,n,p1,p2,pr,nr,n1,n2,alpha,r1,r2,trials,errT,errT1,errT2,errE2E,pHat,ciLo,ciHi,seed,wallMs,error"
    );
}

#[test]
fn seed_is_required() {
    let o = trc(&["simulate", "--trials", "10"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("--seed"));
    assert_eq!(stderr(&o).lines().count(), 1);
}

#[test]
fn unknown_flag_is_rejected() {
    let o = trc(&["simulate", "--seed", "1", "--bogus"]);
    assert_eq!(o.status.code(), Some(2));
    let o = trc(&["rates", "--p3", "1"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn linear_and_db_noise_are_exclusive() {
    let o = trc(&["rates", "--nr", "1", "--nr-db", "0"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn invalid_json_config() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.json");
    std::fs::write(&cfg, "{\"seed\": 3,").unwrap();
    let o = trc(&["simulate", "--config", path(&cfg)]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("invalid JSON"));
    std::fs::write(&cfg, "{\"sede\": 3}").unwrap();
    let o = trc(&["simulate", "--config", path(&cfg)]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn enumeration_cap_breach_is_actionable() {
    let o = trc(&[
        "simulate", "--seed", "1", "--base", "e8", "--k2", "4", "--mode", "end-to-end", "--enumeration-cap", "1000",
    ]);
    assert_eq!(o.status.code(), Some(2));
    let msg = stderr(&o);
    assert!(msg.contains("65536") && msg.contains("--enumeration-cap"), "{msg}");
}

#[test]
fn runtime_failure_exit_code() {
    let o = trc(&["rates", "--out", "/nonexistent-dir/x.json"]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn help_lists_flags() {
    let o = trc(&["simulate", "--help"]);
    assert!(o.status.success());
    let text = stdout(&o);
    for flag in [
        "--config", "--chain", "--base", "--n", "--k1", "--k2", "--scale", "--p1", "--p2", "--pr", "--nr", "--nr-db",
        "--n1", "--n2", "--seed", "--trials", "--mode", "--alpha", "--backoff", "--enumeration-cap", "--workers",
        "--out", "--plot", "--timing", "--transcript",
    ] {
        assert!(text.contains(flag), "missing {flag}");
    }
}

#[test]
fn config_merges_with_flags() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.json");
    std::fs::write(&cfg, r#"{"seed": 5, "trials": 300, "nr": 0.5, "base": "d4", "k2": 2}"#).unwrap();
    let from_file = stdout(&trc(&["simulate", "--config", path(&cfg)]));
    let from_flags = stdout(&trc(&["simulate", "--seed", "5", "--trials", "300", "--nr", "0.5", "--base", "d4", "--k2", "2"]));
    assert_eq!(from_file, from_flags);
    let overridden = stdout(&trc(&["simulate", "--config", path(&cfg), "--nr-db", "-3"]));
    let row: Vec<String> = overridden.lines().nth(1).unwrap().split(',').map(String::from).collect();
    let nr: f64 = row[5].parse().unwrap();
    assert!((nr - 10f64.powf(-0.3)).abs() < 1e-12);
}

#[test]
fn sweep_rows_follow_grid_order() {
    let base = ["sweep", "--seed", "3", "--trials", "2000", "--base", "a2"];
    let fwd = stdout(&trc(&[&base[..], &["--nr-list", "0.4,0.2,0.1"]].concat()));
    let rev = stdout(&trc(&[&base[..], &["--nr-list", "0.1,0.2,0.4"]].concat()));
    let f: Vec<&str> = fwd.lines().collect();
    let r: Vec<&str> = rev.lines().collect();
    assert_eq!(f.len(), 4);
    assert_eq!(f[1], r[3]);
    assert_eq!(f[2], r[2]);
    assert_eq!(f[3], r[1]);
}

#[test]
fn sweep_records_failed_points() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("grid.json");
    std::fs::write(&cfg, r#"{"seed": 2, "trials": 200, "grid": [{"nr": 0.3}, {"alpha": 1.5}, {"nr": 0.1}]}"#).unwrap();
    let out = dir.path().join("rows.csv");
    let o = trc(&["sweep", "--config", path(&cfg), "--out", path(&out)]);
    assert_eq!(o.status.code(), Some(1));
    let text = std::fs::read_to_string(&out).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 4);
    assert!(lines[1].ends_with(','));
    assert!(lines[2].contains("alpha"));
    assert!(lines[3].ends_with(','));
}

#[test]
fn plot_and_transcript_sidecars() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("pe.csv");
    let tr = dir.path().join("trials.csv");
    let o = trc(&[
        "simulate", "--seed", "9", "--trials", "50", "--mode", "end-to-end", "--nr", "0.2", "--out", path(&out),
        "--plot", "--transcript", path(&tr),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let script = std::fs::read_to_string(dir.path().join("pe.gp")).unwrap();
    assert!(script.contains("'pe.csv'"));
    assert!(script.contains("pe-region.png"));
    let t = std::fs::read_to_string(&tr).unwrap();
    assert_eq!(t.lines().count(), 51);
    assert!(t.starts_with("trial,w1,w2,t,tHat,t1Hat,t2Hat,w1Hat,w2Hat"));
}

#[test]
fn exponent_table_and_envelope() {
    let o = trc(&["exponent"]);
    assert!(o.status.success());
    let text = stdout(&o);
    assert_eq!(text.lines().count(), 30);
    assert_eq!(text.lines().nth(1), Some("1,0"));
    let v = json(&trc(&["exponent", "--n", "8", "--rate", "0.04", "--format", "json"]));
    assert!((v["mu"].as_f64().unwrap() - 1.419).abs() < 1e-3);
    assert!((v["bound"].as_f64().unwrap() - (-0.277f64).exp()).abs() < 1e-3);
    assert_eq!(v["envelope"], "asymptotic");
    let o = trc(&["exponent", "--n", "8", "--rate", "0.3"]);
    assert_eq!(o.status.code(), Some(2));
}
