use std::fs;
use std::process::{Command, Output};

fn displace(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_displace"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exit code")
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).unwrap()
}

fn json_lines(out: &Output) -> Vec<serde_json::Value> {
    stdout(out).lines().map(|l| serde_json::from_str(l).unwrap()).collect()
}

/// Rows of a two-column CSV with a header.
fn csv_rows(text: &str) -> Vec<(f64, f64)> {
    text.lines()
        .skip(1)
        .map(|l| {
            let (a, b) = l.split_once(',').unwrap();
            (a.parse().unwrap(), b.parse().unwrap())
        })
        .collect()
}

#[test]
fn check_exit_codes() {
    let out = displace(&["check", "--builtin", "exponential", "--which", "d2"]);
    assert_eq!(code(&out), 0);
    let reports = json_lines(&out);
    assert_eq!(reports.len(), 1);
    assert_eq!(reports[0]["verdict"], "pass");
    assert!(reports[0]["r_estimate"].as_f64().unwrap() >= (-1.0f64).exp());

    let out = displace(&["check", "--builtin", "roundabout", "--which", "h1,h2prime"]);
    assert_eq!(code(&out), 0);
    assert_eq!(json_lines(&out).len(), 2);

    // the travel-time matrix breaks the triangle inequality at (x1, x3, x4)
    let out = displace(&["check", "--builtin", "santiago_graph", "--which", "h2prime"]);
    assert_eq!(code(&out), 2);
    let report = &json_lines(&out)[0];
    assert_eq!(report["verdict"], "fail");
    assert_eq!(report["sample_count"], 64);

    let out = displace(&["check", "--builtin", "santiago_graph", "--which", "h2prime", "--phi=-r"]);
    assert_eq!(code(&out), 3);
    assert_eq!(json_lines(&out)[0]["verdict"], "inconclusive");
}

#[test]
fn bad_specs_exit_one() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.json");
    fs::write(&bad, r#"{"kind": "smooth", "domain": [0, 1], "delta": "y - "}"#).unwrap();
    let out = displace(&["check", "--spec", bad.to_str().unwrap()]);
    assert_eq!(code(&out), 1);
    assert!(!out.stderr.is_empty());

    assert_eq!(code(&displace(&["check", "--spec", "/nonexistent/spec.json"])), 1);
    assert_eq!(code(&displace(&["check", "--builtin", "zermelo"])), 1);
    assert_eq!(
        code(&displace(&["check", "--builtin", "santiago_graph", "--which", "h3"])),
        1
    );
    assert_eq!(code(&displace(&["solve-ivp", "--rhs", "u"])), 1);
}

#[test]
fn gauge_tables() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("g.json");
    let out = displace(&["gauge", "--builtin", "exponential", "--out", path.to_str().unwrap()]);
    assert_eq!(code(&out), 0);
    let rows = csv_rows(&fs::read_to_string(path.with_extension("csv")).unwrap());
    assert_eq!(rows.len(), 101);
    for (t, g) in rows {
        assert!((g - (t * t + t)).abs() <= 1e-6);
    }

    // the written gauge can be fed back in
    let out = displace(&["integrate", "--f", "1", "--gauge", path.to_str().unwrap()]);
    assert_eq!(code(&out), 0);
    assert!((json_lines(&out)[0]["value"].as_f64().unwrap() - 2.0).abs() <= 1e-10);

    let out = displace(&["gauge", "--builtin", "identity_gauge", "--format", "csv"]);
    for (t, g) in csv_rows(&stdout(&out)) {
        assert_eq!(g, t);
    }

    let spec = r#"{"kind": "smooth", "domain": [0, 1], "delta": "exp(y) - exp(x)"}"#;
    let out = displace(&["gauge", "--spec", spec, "--format", "csv"]);
    assert_eq!(code(&out), 0);
    for (t, g) in csv_rows(&stdout(&out)) {
        assert!((g - t.exp_m1()).abs() <= 1e-6, "t={t}: {g}");
    }
}

#[test]
fn ftc_commands() {
    let out = displace(&[
        "ftc",
        "--f",
        "t",
        "--gauge",
        "extract:exponential",
        "--grid",
        "101",
        "--tol",
        "1e-4",
    ]);
    assert_eq!(code(&out), 0);
    let report = &json_lines(&out)[0];
    assert_eq!(report["evaluated"], 101);

    let out = displace(&["ftc", "--f", "t", "--gauge", "extract:exponential", "--tol", "1e-30"]);
    assert_eq!(code(&out), 2);

    let gauge = r#"{"domain": [0, 1], "density": "1", "jumps": [[0.5, 0.5]]}"#;
    let out = displace(&["ftc2", "--f", "gauge", "--gauge", gauge, "--tol", "1e-6"]);
    assert_eq!(code(&out), 0);
    let out = displace(&["ftc2", "--f", "abs(t - 0.25)", "--gauge", "identity", "--tol", "1e-6"]);
    assert_eq!(code(&out), 2);
}

#[test]
fn pointwise_commands() {
    let out = displace(&["ball", "--builtin", "identity_gauge", "--x", "0.5", "--r", "0.2"]);
    assert_eq!(code(&out), 0);
    let ball = &json_lines(&out)[0];
    assert!((ball["lo"].as_f64().unwrap() - 0.3).abs() < 1e-12);
    assert!((ball["hi"].as_f64().unwrap() - 0.7).abs() < 1e-12);
    assert_eq!(ball["lo_closed"], false);

    let out = displace(&["derive", "--f", "t^2", "--gauge", "extract:exponential", "--x", "0.5"]);
    let rows = json_lines(&out);
    assert!((rows[0][0]["value"].as_f64().unwrap() - 0.5).abs() < 1e-8);

    let out = displace(&["derive", "--f", "t", "--gauge", "identity", "--format", "csv"]);
    assert_eq!(stdout(&out).lines().count(), 12);

    let out = displace(&["path-integrate", "--builtin", "exponential", "--f", "1", "--alpha", "0"]);
    let e = std::f64::consts::E;
    assert!((json_lines(&out)[0]["value"].as_f64().unwrap() - (e - 1.0 / e)).abs() < 1e-12);
}

#[test]
fn solvers() {
    let out = displace(&[
        "solve-ivp",
        "--rhs",
        "u",
        "--gauge",
        "identity",
        "--u0",
        "1",
        "--step",
        "1e-4",
    ]);
    assert_eq!(code(&out), 0);
    let rows = csv_rows(&stdout(&out));
    assert!((rows.last().unwrap().1 - std::f64::consts::E).abs() <= 1e-3);

    let jumpy = r#"{"domain": [0, 1], "density": "1", "jumps": [[0.5, 0.5]]}"#;
    let out = displace(&[
        "solve-ivp",
        "--rhs",
        "u",
        "--gauge",
        jumpy,
        "--u0",
        "1",
        "--format",
        "json",
    ]);
    let sol = &json_lines(&out)[0];
    let record = &sol["jump_records"][0];
    assert_eq!(
        record["u_after"].as_f64().unwrap(),
        1.5 * record["u_before"].as_f64().unwrap()
    );

    let out = displace(&[
        "solve-ivp",
        "--rhs",
        "u",
        "--gauge",
        "identity",
        "--u0",
        "1",
        "--tol",
        "1e-12",
    ]);
    assert_eq!(code(&out), 2);

    let out = displace(&["solve-surface", "--h", "1", "--gauge", "identity", "--C", "0"]);
    assert_eq!(code(&out), 0);
    let rows = csv_rows(&stdout(&out));
    for &(x, u) in &rows {
        assert!((u - 0.5 * (1.0 - x * x)).abs() <= 1e-6);
    }
    assert_eq!(rows.last().unwrap().1, 0.0);
}

#[test]
fn output_is_byte_identical_across_runs() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a.json"), dir.path().join("b.json"));
    for p in [&a, &b] {
        let out = displace(&[
            "check",
            "--builtin",
            "exponential",
            "--which",
            "h4",
            "--seed",
            "3",
            "--out",
            p.to_str().unwrap(),
        ]);
        assert_eq!(code(&out), 0);
    }
    assert_eq!(fs::read(&a).unwrap(), fs::read(&b).unwrap());
    let text = fs::read_to_string(&a).unwrap();
    assert!(text.starts_with(r#"{"hypothesis":"H4-gamma","verdict":"pass","witnesses":[],"sample_count":"#));
    assert!(text.contains("\"tolerance\":9.9999999999999995e-7"));
}
