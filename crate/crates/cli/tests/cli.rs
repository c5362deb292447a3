use std::process::{Command, Output};

fn supfbm(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_supfbm")).args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn json(o: &Output) -> serde_json::Value {
    serde_json::from_str(stdout(o).trim()).unwrap()
}

#[test]
fn closed_form_infinite_m() {
    let o = supfbm(&["deriv", "--family", "m", "--T", "inf", "--a", "1", "--method", "closed"]);
    assert_eq!(o.status.code(), Some(0));
    let v = json(&o)["value"].as_f64().unwrap();
    assert!((v + 0.577_215_664_901_532_9 + 2f64.ln()).abs() < 1e-15);
}

#[test]
fn inadmissible_p_exits_2() {
    let o = supfbm(&["deriv", "--family", "p", "--T", "inf", "--a", "1", "--method", "quad"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("a > 1"));
    assert!(o.stdout.is_empty());
}

#[test]
fn quadrature_finite_m() {
    let o = supfbm(&["deriv", "--family", "m", "--T", "1", "--a", "0", "--method", "quad", "--rel-tol", "1e-8"]);
    assert_eq!(o.status.code(), Some(0));
    let r = json(&o);
    let want = -2.0 * (2.0 / std::f64::consts::PI).sqrt();
    assert!((r["value"].as_f64().unwrap() - want).abs() < 1e-6);
    assert_eq!(r["method"], "quad");
    assert_eq!(r["horizon"], "1");
    assert!(r["seed"].is_null());
}

#[test]
fn json_and_csv_agree() {
    let base = ["deriv", "--family", "p", "--T", "inf", "--a", "3", "--method", "quad"];
    let j = json(&supfbm(&base));
    let mut args = base.to_vec();
    args.push("--csv");
    let c = stdout(&supfbm(&args));
    let lines: Vec<&str> = c.lines().collect();
    assert_eq!(lines[0], "functional,horizon,a,h,method,value,error_estimate,n_evals_or_paths,seed,wall_time_ms");
    let fields: Vec<&str> = lines[1].split(',').collect();
    assert_eq!(fields[5].parse::<f64>().unwrap().to_bits(), j["value"].as_f64().unwrap().to_bits());
    assert_eq!(fields[6].parse::<f64>().unwrap().to_bits(), j["error_estimate"].as_f64().unwrap().to_bits());
}

#[test]
fn drift_grid_table() {
    let o = supfbm(&["table", "--family", "p", "--a-grid", "1.5:4:3", "--method", "closed"]);
    assert_eq!(o.status.code(), Some(0));
    let out = stdout(&o);
    let lines: Vec<&str> = out.lines().collect();
    assert_eq!(lines[0], "family,horizon,a,method,value,error_estimate");
    assert_eq!(lines.len(), 4);
    assert!(lines[2].starts_with("p,inf,2.75,closed,"));
}

#[test]
fn rate_table_approaches_minus_two_gamma() {
    let o = supfbm(&["table", "--family", "p", "--T-grid", "10:100:2", "--rate"]);
    assert_eq!(o.status.code(), Some(0));
    let out = stdout(&o);
    let vals: Vec<f64> = out.lines().skip(1).map(|l| l.split(',').nth(4).unwrap().parse().unwrap()).collect();
    let limit = -2.0 * 0.577_215_664_901_532_9;
    assert_eq!(vals.len(), 2);
    assert!((vals[1] - limit).abs() < (vals[0] - limit).abs());
    assert!((vals[1] - limit).abs() < 0.1);
}

#[test]
fn empty_grid_is_header_only() {
    let o = supfbm(&["table", "--family", "p", "--a-grid", "2:3:0", "--method", "closed"]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(stdout(&o), "family,horizon,a,method,value,error_estimate\n");
}

#[test]
fn failing_row_is_nan_and_exit_1() {
    let o = supfbm(&["table", "--family", "p", "--a-grid", "0.5:2:2", "--method", "closed"]);
    assert_eq!(o.status.code(), Some(1));
    let out = stdout(&o);
    assert!(out.lines().nth(1).unwrap().ends_with(",nan,nan"));
    assert!(out.lines().nth(2).unwrap().starts_with("p,inf,2,closed,-4,"));
}

#[test]
fn monte_carlo_is_reproducible_across_thread_counts() {
    let run = |threads: &str| {
        let o = supfbm(&[
            "--threads", threads, "deriv", "--family", "m", "--T", "1", "--a", "0", "--method", "mc-direct", "--paths",
            "2000", "--steps", "256", "--seed", "3",
        ]);
        assert_eq!(o.status.code(), Some(0));
        let r = json(&o);
        assert_eq!(r["seed"], 3);
        assert_eq!(r["n_evals_or_paths"], 2000);
        (r["value"].as_f64().unwrap(), r["error_estimate"].as_f64().unwrap())
    };
    assert_eq!(run("1"), run("2"));
}

#[test]
fn path_dump_writes_csv() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path().to_str().unwrap();
    let o = supfbm(&[
        "deriv", "--family", "m", "--T", "1", "--a", "0", "--method", "mc-fd", "--paths", "200", "--steps", "64",
        "--dump-paths", d, "--dump-count", "2",
    ]);
    assert_eq!(o.status.code(), Some(0));
    let text = std::fs::read_to_string(dir.path().join("path_1.csv")).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("node_time,value"));
    let rows: Vec<(f64, f64)> = lines
        .map(|l| {
            let (t, v) = l.split_once(',').unwrap();
            (t.parse().unwrap(), v.parse().unwrap())
        })
        .collect();
    assert_eq!(rows.last().unwrap().0, 1.0);
    assert!(rows.iter().any(|&(t, v)| t == 0.0 && v == 0.0));
}

#[test]
fn validate_fast_passes() {
    let o = supfbm(&["validate", "--level", "fast", "--seed", "7"]);
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    assert!(stdout(&o).contains("11/11 criteria passed"));
}

#[test]
fn injected_fault_fails_validation() {
    let o = supfbm(&["validate", "--level", "fast", "--inject-fault", "wrong-sign-density"]);
    assert_ne!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("[FAIL] criterion  4"));
}

#[test]
fn full_validation_reports_are_byte_identical() {
    let args = ["validate", "--level", "full", "--seed", "7", "--paths", "2000"];
    let a = supfbm(&args);
    let b = supfbm(&args);
    assert_eq!(a.stdout, b.stdout);
    assert!(stdout(&a).contains("criterion 13"));
}
