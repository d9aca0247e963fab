use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_ranksolve"));
    for (k, _) in std::env::vars() {
        if k.starts_with("RANKSOLVE_") {
            c.env_remove(k);
        }
    }
    c
}

fn run(dir: &Path, args: &[&str]) -> Output {
    bin().current_dir(dir).args(args).output().expect("spawn ranksolve")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn read_json(p: PathBuf) -> Value {
    serde_json::from_str(&std::fs::read_to_string(p).unwrap()).unwrap()
}

/// Small sparse3 data set with its truth file.
fn tiny(dir: &Path) {
    let o = run(
        dir,
        &[
            "gen", "--n", "60", "--p", "30", "--seed", "4", "--noise", "normal0.25", "--out", "d.csv", "--truth",
            "t.csv",
        ],
    );
    assert_eq!(code(&o), 0, "{}", stderr(&o));
}

#[test]
fn gen_is_deterministic() {
    let dir = TempDir::new().unwrap();
    for out in ["a.csv", "b.csv"] {
        let o = run(
            dir.path(),
            &["gen", "--pattern", "sparse3", "--n", "200", "--p", "800", "--seed", "1", "--out", out],
        );
        assert_eq!(code(&o), 0, "{}", stderr(&o));
        let echo: Value = serde_json::from_slice(&o.stdout).unwrap();
        assert_eq!(echo["spec"]["n"], 200);
    }
    let a = std::fs::read(dir.path().join("a.csv")).unwrap();
    let b = std::fs::read(dir.path().join("b.csv")).unwrap();
    assert_eq!(a.len(), b.len());
    assert!(a == b);
    assert_eq!(String::from_utf8(a).unwrap().lines().count(), 200);
}

#[test]
fn gen_rejects_unknown_noise() {
    let dir = TempDir::new().unwrap();
    let o = run(dir.path(), &["gen", "--noise", "laplace", "--out", "x.csv"]);
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("laplace"));
    assert!(!dir.path().join("x.csv").exists());
}

#[test]
fn solve_l1_converges_and_admm_agrees() {
    let dir = TempDir::new().unwrap();
    tiny(dir.path());
    let o = run(dir.path(), &["solve", "--in", "d.csv", "--lambda", "0.1", "--out", "p.json"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let stdout = String::from_utf8_lossy(&o.stdout).into_owned();
    for col in ["pbname", "nnz", "lambda", "eta", "pobj", "time"] {
        assert!(stdout.contains(col), "missing column {col}");
    }
    let p = read_json(dir.path().join("p.json"));
    assert_eq!(p["status"], "converged");
    assert!(p["eta_kkt"].as_f64().unwrap() <= 1e-6);

    let o = run(
        dir.path(),
        &["solve", "--in", "d.csv", "--lambda", "0.1", "--algo", "admm", "--out", "a.json"],
    );
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let a = read_json(dir.path().join("a.json"));
    let (fp, fa) = (p["objective"].as_f64().unwrap(), a["objective"].as_f64().unwrap());
    assert!((fp - fa).abs() <= 1e-5 * fp.abs(), "{fp} vs {fa}");
}

#[test]
fn solve_with_truth_reports_errors() {
    let dir = TempDir::new().unwrap();
    tiny(dir.path());
    let o = run(
        dir.path(),
        &["solve", "--in", "d.csv", "--truth", "t.csv", "--reg", "mcp", "--lambda-fraction", "0.3", "--out", "r.json"],
    );
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let r = read_json(dir.path().join("r.json"));
    let rep = &r["report"];
    assert_eq!(rep["fn"], 0);
    for k in ["l1_err", "l2_err", "model_err", "fp"] {
        assert!(rep[k].is_number(), "{k}");
    }
    assert_eq!(r["reg"], "mcp");
}

#[test]
fn missing_input_is_an_error_exit() {
    let dir = TempDir::new().unwrap();
    let o = run(dir.path(), &["solve", "--in", "nope.csv", "--lambda", "0.1"]);
    assert_eq!(code(&o), 1);
    assert!(stderr(&o).contains("nope.csv"));
    let o = run(dir.path(), &["solve", "--lambda", "0.1"]);
    assert_eq!(code(&o), 2);
}

#[test]
fn unconverged_solve_exits_3_and_still_writes() {
    let dir = TempDir::new().unwrap();
    tiny(dir.path());
    let o = run(
        dir.path(),
        &["solve", "--in", "d.csv", "--lambda", "0.02", "--algo", "admm", "--max-iters", "3", "--out", "r.json"],
    );
    assert_eq!(code(&o), 3, "{}", stderr(&o));
    let r = read_json(dir.path().join("r.json"));
    assert_eq!(r["status"], "max_iterations");
}

#[test]
fn numeric_flags_are_echoed_verbatim() {
    let dir = TempDir::new().unwrap();
    tiny(dir.path());
    let o = run(
        dir.path(),
        &[
            "solve", "--in", "d.csv", "--lambda", "5.0e-2", "--tol", "1.000e-6", "--max-iters", "0200",
            "--time-cap-secs", "600.5", "--out", "r.json",
        ],
    );
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let echo = &read_json(dir.path().join("r.json"))["config_echo"];
    assert_eq!(echo["lambda"], "5.0e-2");
    assert_eq!(echo["tol"], "1.000e-6");
    assert_eq!(echo["max_iters"], "0200");
    assert_eq!(echo["time_cap_secs"], "600.5");
}

#[test]
fn flags_beat_environment_beats_config_file() {
    let dir = TempDir::new().unwrap();
    tiny(dir.path());
    std::fs::write(
        dir.path().join("cfg.toml"),
        "reg = \"scad\"\nlambda = 0.07\nin = \"d.csv\"\nout = \"r.json\"\n",
    )
    .unwrap();
    // file only
    let o = run(dir.path(), &["--config", "cfg.toml", "solve"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let r = read_json(dir.path().join("r.json"));
    assert_eq!(r["reg"], "scad");
    assert_eq!(r["lambda"], 0.07);

    // environment over file
    let o = bin()
        .current_dir(dir.path())
        .env("RANKSOLVE_REG", "mcp")
        .args(["--config", "cfg.toml", "solve"])
        .output()
        .unwrap();
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert_eq!(read_json(dir.path().join("r.json"))["reg"], "mcp");

    // flag over both
    let o = bin()
        .current_dir(dir.path())
        .env("RANKSOLVE_REG", "mcp")
        .args(["--config", "cfg.toml", "solve", "--reg", "l1", "--lambda", "0.06"])
        .output()
        .unwrap();
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let r = read_json(dir.path().join("r.json"));
    assert_eq!(r["reg"], "l1");
    assert_eq!(r["lambda"], 0.06);
    assert_eq!(r["config_echo"]["lambda"], "0.06");
}

#[test]
fn bad_config_file_is_a_usage_error() {
    let dir = TempDir::new().unwrap();
    std::fs::write(dir.path().join("bad.toml"), "reg = [").unwrap();
    let o = run(dir.path(), &["--config", "bad.toml", "solve"]);
    assert_eq!(code(&o), 2);
}

#[test]
fn tune_single_value_grid_returns_it() {
    let dir = TempDir::new().unwrap();
    tiny(dir.path());
    let o = run(dir.path(), &["tune", "--in", "d.csv", "--lambda-grid", "0.04", "--out", "t.json"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let t = read_json(dir.path().join("t.json"));
    assert_eq!(t["best_lambda"], 0.04);
    assert_eq!(t["rows"].as_array().unwrap().len(), 1);
}

#[test]
fn tune_deduplicates_and_uses_folds() {
    let dir = TempDir::new().unwrap();
    tiny(dir.path());
    let o = run(
        dir.path(),
        &["tune", "--in", "d.csv", "--lambda-grid", "0.1,0.04,0.1,0.04", "--folds", "3", "--out", "t.json"],
    );
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let t = read_json(dir.path().join("t.json"));
    assert_eq!(t["grid"], serde_json::json!([0.1, 0.04]));
    assert_eq!(t["rule"], "one_std_err");
    assert!(t["rows"][0]["std_err"].as_f64().unwrap() > 0.0);
    for row in t["rows"].as_array().unwrap() {
        assert_eq!(row["folds"].as_array().unwrap().len(), 3);
    }
    let o = run(dir.path(), &["tune", "--in", "d.csv", "--lambda-grid", "0.1,-2"]);
    assert_eq!(code(&o), 2);
    let o = run(dir.path(), &["tune", "--in", "d.csv", "--lambda-grid", "0.1", "--rule", "median"]);
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("median"));
}

fn bench_rows(dir: &Path, out: &str) -> Vec<Value> {
    let o = run(
        dir,
        &[
            "bench", "--n", "40", "--p", "30", "--patterns", "sparse3", "--noises", "normal0.25,cauchy", "--algos",
            "ppmm,admm", "--seed", "11", "--threads", "2", "--out", out,
        ],
    );
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    read_json(dir.join(out))["rows"].as_array().unwrap().clone()
}

#[test]
fn bench_dry_run_rows_and_determinism() {
    let dir = TempDir::new().unwrap();
    let mut a = bench_rows(dir.path(), "a.json");
    let mut b = bench_rows(dir.path(), "b.json");
    assert_eq!(a.len(), 2 * 2);
    assert_eq!(a[0]["algo"], "ppmm");
    assert_eq!(a[1]["algo"], "admm");
    for rows in [&mut a, &mut b] {
        for r in rows.iter_mut() {
            let m = r.as_object_mut().unwrap();
            assert!(m["lambda_source"] == "tuned-default");
            m.remove("time_secs");
            m.remove("time_hms");
        }
    }
    assert_eq!(a, b);
}
