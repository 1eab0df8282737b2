use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

const PATH3: &str = r#"{"name":"path3","base_mva":100,
 "buses":[{"id":1,"kind":"slack","p_load_mw":0},{"id":2,"kind":"pq","p_load_mw":0},{"id":3,"kind":"pq","p_load_mw":0}],
 "branches":[{"from":1,"to":2,"x_pu":1.0},{"from":2,"to":3,"x_pu":1.0}],
 "gens":[{"bus":1,"p_mw":0}]}"#;

fn data(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../data").join(name)
}

fn write(dir: &TempDir, name: &str, text: &str) -> PathBuf {
    let p = dir.path().join(name);
    std::fs::write(&p, text).unwrap();
    p
}

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_gridperturb")).args(args).output().unwrap()
}

fn run_env(args: &[&str], key: &str, value: &str) -> Output {
    Command::new(env!("CARGO_BIN_EXE_gridperturb"))
        .args(args)
        .env(key, value)
        .output()
        .unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn summary_value<'a>(text: &'a str, key: &str) -> Option<&'a str> {
    text.lines().find_map(|l| l.strip_prefix(key).and_then(|r| r.strip_prefix('=')))
}

#[test]
fn validate_exit_codes() {
    let dir = TempDir::new().unwrap();
    let good = write(&dir, "path3.json", PATH3);
    assert_eq!(run(&["validate", "--case", good.to_str().unwrap()]).status.code(), Some(0));

    let split = PATH3.replace(r#"{"from":2,"to":3,"x_pu":1.0}"#, r#"{"from":2,"to":3,"x_pu":1.0,"status":0}"#);
    let bad = write(&dir, "split.json", &split);
    let out = run(&["validate", "--case", bad.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stdout(&out).contains("disconnected"));

    let missing = dir.path().join("nope.json");
    assert_eq!(run(&["validate", "--case", missing.to_str().unwrap()]).status.code(), Some(2));
    let garbled = write(&dir, "garbled.json", "{ not json");
    assert_eq!(run(&["validate", "--case", garbled.to_str().unwrap()]).status.code(), Some(2));
}

#[test]
fn spread_on_path3() {
    let dir = TempDir::new().unwrap();
    let case = write(&dir, "path3.json", PATH3);
    let args = ["spread", "--case", case.to_str().unwrap(), "--bus", "3", "--gamma", "100"];
    let out = run(&args);
    assert_eq!(out.status.code(), Some(0));
    let text = stdout(&out);
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "K,mean_psi_deg_per_mw,shell_size");
    assert_eq!(lines[1], "1,0.5729577951,1");
    assert_eq!(lines[2], "2,0,1");
    assert_eq!(summary_value(&text, "s"), Some("1.745329252"));
    assert_eq!(summary_value(&text, "s_prime"), Some("0.3333333333"));
    assert_eq!(summary_value(&text, "g_delta_theta"), Some("0.4"));
    assert_eq!(summary_value(&text, "l_delta_theta_u"), Some("0.5"));

    // deterministic
    assert_eq!(run(&args).stdout, out.stdout);
}

#[test]
fn spread_reports_nonconvergence_with_gamma() {
    let dir = TempDir::new().unwrap();
    let case = write(&dir, "path3.json", PATH3);
    let out = run(&["spread", "--case", case.to_str().unwrap(), "--model", "ac", "--bus", "3", "--gamma", "5000"]);
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&out.stderr).contains("5000"));
}

#[test]
fn spread_on_case118_bus65_decays_with_distance() {
    let out = run(&["spread", "--case", data("case118.json").to_str().unwrap(), "--bus", "65", "--gamma", "50"]);
    assert_eq!(out.status.code(), Some(0));
    let text = stdout(&out);
    let slope: f64 = summary_value(&text, "slope").unwrap().parse().unwrap();
    assert!(slope < 0.0);
    let sizes: usize = text
        .lines()
        .skip(1)
        .take_while(|l| !l.contains('='))
        .map(|l| l.split(',').nth(2).unwrap().parse::<usize>().unwrap())
        .sum();
    assert_eq!(sizes, 117);
}

#[test]
fn empty_sweep_is_a_finding() {
    let dir = TempDir::new().unwrap();
    let case = write(&dir, "path3.json", PATH3);
    let out = run(&["sweep-buses", "--case", case.to_str().unwrap(), "--gamma", "50"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn sweep_csv_and_json_agree() {
    let case = data("case118.json");
    let csv = stdout(&run(&["sweep-buses", "--case", case.to_str().unwrap(), "--gamma", "50"]));
    let json_out = run(&["sweep-buses", "--case", case.to_str().unwrap(), "--gamma", "50", "--format", "json"]);
    assert_eq!(json_out.status.code(), Some(0));
    let doc: Value = serde_json::from_str(&stdout(&json_out)).unwrap();

    let mut lines = csv.lines();
    assert_eq!(lines.next().unwrap(), "bus,s,s_prime,g_delta_theta,l_delta_theta_u,status");
    let rows: Vec<&str> = lines.clone().take_while(|l| !l.contains('=')).collect();
    assert_eq!(rows.len(), 99);
    let json_rows = doc["rows"].as_array().unwrap();
    assert_eq!(json_rows.len(), 99);
    for (line, obj) in rows.iter().zip(json_rows) {
        let f: Vec<&str> = line.split(',').collect();
        assert_eq!(f[0].parse::<i64>().unwrap(), obj["bus"].as_i64().unwrap());
        for (i, key) in ["s", "s_prime", "g_delta_theta", "l_delta_theta_u"].iter().enumerate() {
            let a: f64 = f[i + 1].parse().unwrap();
            let b = obj[key].as_f64().unwrap();
            assert!((a - b).abs() <= 1e-12 * a.abs().max(1.0));
        }
        assert_eq!(f[5], obj["status"].as_str().unwrap());
    }
    let footer: f64 = summary_value(&csv, "spearman_s_s_prime").unwrap().parse().unwrap();
    assert!((footer - doc["summary"]["spearman_s_s_prime"].as_f64().unwrap()).abs() < 1e-12);
    for key in ["cosine_s_g_delta_theta", "spearman_s_l_delta_theta_u", "cosine_s_l_delta_theta_u"] {
        assert!(summary_value(&csv, key).is_some(), "{key}");
    }
}

#[test]
fn thread_count_does_not_change_output() {
    let case = data("case118.json");
    let args = ["sweep-buses", "--case", case.to_str().unwrap(), "--gamma", "50"];
    let one = run_env(&args, "GRIDPERTURB_THREADS", "1");
    let four = run_env(&args, "GRIDPERTURB_THREADS", "4");
    assert_eq!(one.status.code(), Some(0));
    assert_eq!(one.stdout, four.stdout);
    assert_eq!(run_env(&args, "GRIDPERTURB_THREADS", "zero").status.code(), Some(2));
}

#[test]
fn dc_gamma_curve_has_no_nc_line() {
    let case = data("case118.json");
    let out = run(&[
        "gamma-curve", "--case", case.to_str().unwrap(), "--bus", "102", "--from", "0", "--to", "1000", "--step", "5",
    ]);
    assert_eq!(out.status.code(), Some(0));
    let text = stdout(&out);
    assert!(text.starts_with("gamma_mw,g_theta,converged\n"));
    assert_eq!(text.lines().filter(|l| l.ends_with(",true")).count(), 201);
    let gc: f64 = summary_value(&text, "gamma_c_mw").unwrap().parse().unwrap();
    assert!(gc > 0.0 && gc < 1000.0);
    assert!(summary_value(&text, "gamma_nc_mw").is_none());
}

#[test]
fn ac_gamma_curve_on_two_bus_case() {
    let dir = TempDir::new().unwrap();
    let two_bus = r#"{"name":"two","base_mva":100,
     "buses":[{"id":1,"kind":"slack","p_load_mw":0},{"id":2,"kind":"pq","p_load_mw":0}],
     "branches":[{"from":1,"to":2,"x_pu":0.5}],"gens":[{"bus":1,"p_mw":0}]}"#;
    let case = write(&dir, "two.json", two_bus);
    let out_path = dir.path().join("curve.csv");
    let out = run(&[
        "gamma-curve", "--case", case.to_str().unwrap(), "--model", "ac", "--bus", "2", "--from", "10", "--to", "150",
        "--step", "10", "--out", out_path.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0));
    assert!(out.stdout.is_empty());
    let text = std::fs::read_to_string(out_path).unwrap();
    assert!(text.contains(",false\n"));
    let nc: f64 = summary_value(&text, "gamma_nc_mw").unwrap().parse().unwrap();
    assert!(nc > 90.0 && nc < 110.0, "{nc}");
}

#[test]
fn usage_errors() {
    let case = data("case118.json");
    let c = case.to_str().unwrap();
    let step_too_big = run(&["gamma-curve", "--case", c, "--bus", "102", "--from", "0", "--to", "10", "--step", "50"]);
    assert_eq!(step_too_big.status.code(), Some(2));
    assert_eq!(run(&["spread", "--case", c, "--bus", "69", "--gamma", "10"]).status.code(), Some(2));
    assert_eq!(run(&["spread", "--case", c, "--bus", "9999", "--gamma", "10"]).status.code(), Some(2));
    assert_eq!(run(&["spread", "--case", c, "--gamma", "10"]).status.code(), Some(2));
    assert_eq!(run(&["spread", "--case", c, "--bus", "3", "--gamma", "10", "--model", "xx"]).status.code(), Some(2));
}

#[test]
fn convert_matpower_to_json() {
    let dir = TempDir::new().unwrap();
    let out_path = dir.path().join("c.json");
    let out = run(&["convert", "--case", data("case118.m").to_str().unwrap(), "--out", out_path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    let parse = |p: &Path| -> Value { serde_json::from_str(&std::fs::read_to_string(p).unwrap()).unwrap() };
    assert_eq!(parse(&out_path), parse(&data("case118.json")));
}
