use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_revbound"))
}

fn scratch(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("revbound-cli-{}-{name}", std::process::id()));
    fs::create_dir_all(&dir).unwrap();
    dir
}

fn write(dir: &Path, name: &str, contents: &str) -> PathBuf {
    let path = dir.join(name);
    fs::write(&path, contents).unwrap();
    path
}

fn run(cmd: &mut Command) -> (i32, String, String) {
    let Output {
        status,
        stdout,
        stderr,
    } = cmd.output().unwrap();
    (
        status.code().unwrap(),
        String::from_utf8(stdout).unwrap(),
        String::from_utf8(stderr).unwrap(),
    )
}

#[test]
fn myerson_prints_price_and_revenue() {
    let dir = scratch("myerson");
    let pm = write(&dir, "pm5.json", r#"{"values":[5],"probs":[1]}"#);
    let (code, out, _) = run(bin().args(["myerson", "--dist"]).arg(&pm));
    assert_eq!(code, 0);
    assert!(out.starts_with("price=5 revenue=5"), "{out}");

    let uni = write(&dir, "u12.json", r#"{"values":[1,2],"probs":[0.5,0.5]}"#);
    let (code, out, _) = run(bin().args(["myerson", "--format", "json", "--dist"]).arg(&uni));
    assert_eq!(code, 0);
    let v: serde_json::Value = serde_json::from_str(&out).unwrap();
    assert_eq!(v["price"], 1.0);
    assert_eq!(v["revenue"], 1.0);
    assert_eq!(v["argmax_prices"], serde_json::json!([1.0, 2.0]));
}

#[test]
fn input_errors_exit_two() {
    let dir = scratch("errors");
    let bad = write(&dir, "bad.json", r#"{"values":[1,2"#);
    let (code, _, err) = run(bin().args(["myerson", "--dist"]).arg(&bad));
    assert_eq!(code, 2);
    assert!(err.contains("error"), "{err}");

    let invalid = write(&dir, "neg.json", r#"{"values":[1],"probs":[0.7]}"#);
    let (code, _, _) = run(bin().args(["myerson", "--dist"]).arg(&invalid));
    assert_eq!(code, 2);

    let (code, _, _) = run(bin().args(["myerson", "--dist"]).arg(dir.join("missing.json")));
    assert_eq!(code, 2);

    let pm = write(&dir, "pm.json", r#"{"values":[5],"probs":[1]}"#);
    let (code, _, _) = run(bin().args(["myerson", "--unknown", "--dist"]).arg(&pm));
    assert_eq!(code, 2);
    let (code, _, _) = run(bin().args(["frobnicate"]));
    assert_eq!(code, 2);
    let (code, _, _) = run(bin().args(["search", "--seed", "1", "--alpha-window", "2"]));
    assert_eq!(code, 2);
    let (code, _, _) = run(bin().args(["sweep", "--seed", "1", "--max-support", "20"]));
    assert_eq!(code, 2);
}

#[test]
fn analyze_reports_and_exit_codes() {
    let dir = scratch("analyze");
    let a = write(&dir, "a.json", r#"{"values":[5],"probs":[1]}"#);
    let b = write(&dir, "b.json", r#"{"values":[3],"probs":[1]}"#);
    let (code, out, _) = run(bin().arg("analyze").arg("--d1").arg(&a).arg("--d2").arg(&b));
    assert_eq!(code, 0, "{out}");
    assert!(out.contains("rev=8\n"), "{out}");
    assert!(out.contains("degenerate=false"), "{out}");

    let zero = write(&dir, "zero.json", r#"{"values":[0],"probs":[1]}"#);
    let (code, out, err) = run(bin().arg("analyze").arg("--d1").arg(&a).arg("--d2").arg(&zero));
    assert_eq!(code, 0);
    assert!(out.contains("degenerate=true"), "{out}");
    assert!(err.contains("notice"), "{err}");

    let uni = write(&dir, "u.json", r#"{"values":[1,2],"probs":[0.5,0.5]}"#);
    let lp = dir.join("rev.lp");
    let (code, out, _) = run(bin()
        .args(["analyze", "--format", "json", "--d1"])
        .arg(&uni)
        .arg("--d2")
        .arg(&uni)
        .arg("--dump-lp")
        .arg(&lp));
    assert_eq!(code, 0);
    let v: serde_json::Value = serde_json::from_str(&out).unwrap();
    assert!(v["rev"].as_f64().unwrap() >= 2.25 - 1e-7);
    let text = fs::read_to_string(&lp).unwrap();
    assert!(text.starts_with("max: "), "{text}");
    assert_eq!(text.lines().filter(|l| l.ends_with(">= 0")).count(), 12);

    let (code, _, err) = run(bin()
        .args(["analyze", "--grid-limit", "1", "--d1"])
        .arg(&uni)
        .arg("--d2")
        .arg(&uni));
    assert_eq!(code, 2);
    assert!(err.contains("limit"), "{err}");
}

#[test]
fn sweep_is_deterministic_and_handles_empty_runs() {
    let dir = scratch("sweep");
    let first = dir.join("first.csv");
    let second = dir.join("second.csv");
    for path in [&first, &second] {
        let (code, out, _) = run(bin()
            .args(["sweep", "--seed", "42", "--count", "12", "--max-support", "4", "--out"])
            .arg(path));
        assert_eq!(code, 0);
        assert!(out.starts_with("instances=12 "), "{out}");
    }
    let bytes = fs::read(&first).unwrap();
    assert_eq!(bytes, fs::read(&second).unwrap());
    let text = String::from_utf8(bytes).unwrap();
    assert_eq!(text.lines().count(), 13);
    assert!(text.starts_with("instance_id,n1,n2,"));
    assert!(text.lines().skip(1).all(|l| l.ends_with(",ok") || l.ends_with(",degenerate")));
    assert!(!dir.read_dir().unwrap().any(|e| {
        e.unwrap().file_name().to_string_lossy().contains("tmp")
    }));

    let (code, out, _) = run(bin().args(["sweep", "--seed", "7", "--count", "0"]));
    assert_eq!(code, 0);
    assert_eq!(out.lines().count(), 1);
    assert!(out.starts_with("instance_id,"));

    let (code, out, _) = run(bin().args([
        "sweep", "--seed", "42", "--count", "3", "--max-support", "3", "--format", "json",
    ]));
    assert_eq!(code, 0);
    let rows: serde_json::Value = serde_json::from_str(&out).unwrap();
    assert_eq!(rows.as_array().unwrap().len(), 3);
}

#[test]
fn search_prints_best_ratio() {
    let dir = scratch("search");
    let out_path = dir.join("search.csv");
    let (code, out, _) = run(bin()
        .args([
            "search", "--seed", "5", "--alpha-window", "1,1.01", "--restarts", "2", "--steps",
            "10", "--max-support", "3", "--out",
        ])
        .arg(&out_path));
    assert_eq!(code, 0, "{out}");
    assert!(out.starts_with("best_ratio="), "{out}");
    let csv = fs::read_to_string(&out_path).unwrap();
    assert!(csv.starts_with("instance_id,"));
    for row in csv.lines().skip(1) {
        let alpha: f64 = row.split(',').nth(5).unwrap().parse().unwrap();
        assert!((1.0..=1.01).contains(&alpha), "{row}");
    }
}

#[test]
fn lp_solve_reads_json_programs() {
    let dir = scratch("lp");
    let lp = write(
        &dir,
        "lp.json",
        r#"{"num_vars":2,"objective":[3,2],
            "constraints":[{"coeffs":[[0,1],[1,1]],"relation":"<=","rhs":4},
                           {"coeffs":[[0,1],[1,3]],"relation":"<=","rhs":6}],
            "names":["x","y"]}"#,
    );
    let (code, out, _) = run(bin().args(["lp-solve", "--lp"]).arg(&lp));
    assert_eq!(code, 0);
    assert_eq!(out, "status=optimal\nobjective=12\nx=4\ny=0\n");

    let infeasible = write(
        &dir,
        "inf.json",
        r#"{"num_vars":1,"objective":[1],
            "constraints":[{"coeffs":[[0,1]],"relation":">=","rhs":2},
                           {"coeffs":[[0,1]],"relation":"<=","rhs":1}]}"#,
    );
    let (code, out, _) = run(bin().args(["lp-solve", "--format", "json", "--lp"]).arg(&infeasible));
    assert_eq!(code, 0);
    let v: serde_json::Value = serde_json::from_str(&out).unwrap();
    assert_eq!(v["status"], "infeasible");

    let malformed = write(&dir, "bad.json", r#"{"num_vars":2,"objective":[1]}"#);
    let (code, _, _) = run(bin().args(["lp-solve", "--lp"]).arg(&malformed));
    assert_eq!(code, 2);
}
