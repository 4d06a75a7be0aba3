use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn supmeasure(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_supmeasure"))
        .args(args)
        .env_remove("SUPMEASURE_SEED")
        .output()
        .expect("binary runs")
}

fn json_lines(path: &Path) -> Vec<Value> {
    fs::read_to_string(path)
        .unwrap()
        .lines()
        .map(|l| serde_json::from_str(l).unwrap())
        .collect()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn kappa_above_the_bound_is_a_usage_error() {
    let o = supmeasure(&[
        "simulate-model", "--family", "renewal_free", "--alpha", "1.5", "--beta", "0.6", "--kappa", "2.0",
    ]);
    assert_eq!(o.status.code(), Some(2));
    let msg = stderr(&o);
    assert!(msg.contains("kappa") && msg.contains("c0/(1-1/alpha)"), "{msg}");
}

#[test]
fn unknown_flags_and_values_exit_2() {
    for args in [
        vec!["simulate-model", "--bogus"],
        vec!["simulate-limit", "--family", "cantor"],
        vec!["simulate-limit", "--intervals", "1/2:1/3"],
        vec!["verify", "--name", "nonexistent"],
        vec!["simulate-limit", "--family", "renewal_free", "--intervals", "0:1/2"],
        vec!["simulate-limit", "--emit", "movie"],
    ] {
        let o = supmeasure(&args);
        assert_eq!(o.status.code(), Some(2), "{args:?}: {}", stderr(&o));
    }
}

#[test]
fn sibuya_verification_passes() {
    let o = supmeasure(&["verify", "--name", "sibuya_pgf", "--beta", "0.6", "--samples", "100000", "--seed", "7"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let stdout = String::from_utf8(o.stdout).unwrap();
    let lines: Vec<Value> = stdout.lines().map(|l| serde_json::from_str(l).unwrap()).collect();
    assert_eq!(lines[0]["meta"]["seed"], 7);
    assert_eq!(lines[1]["name"], "sibuya_pgf");
    assert_eq!(lines[1]["pass"], true);
    assert_eq!(lines[1]["checks"].as_array().unwrap().len(), 3);
}

#[test]
fn failing_verification_exits_1() {
    // a three-point slope fit is far from the asymptotic exponent
    let o = supmeasure(&["verify", "--name", "renewal_exponent", "--beta", "0.9", "--grid-n", "3"]);
    assert_eq!(o.status.code(), Some(1), "{}", stderr(&o));
}

#[test]
fn figure_data_files() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("run.jsonl");
    let o = supmeasure(&[
        "simulate-limit", "--family", "renewal_shifted", "--alpha", "0.8", "--beta", "0.6", "--grid-n", "400",
        "--trunc-L", "20", "--seed", "1", "--replicates", "3", "--emit", "hypograph,pointprocess",
        "--out", out.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));

    let records = json_lines(&out);
    assert_eq!(records.len(), 4);
    let meta = &records[0]["meta"];
    assert_eq!(meta["config"]["setFamily"], "renewal_shifted");
    assert_eq!(meta["config"]["L"], 20);
    assert!(meta["rng"].as_str().unwrap().contains("chacha8"));
    assert!(records[1]["evals"]["agg"]["(3/10,3/5)"].is_number());

    let hyp = json_lines(&dir.path().join("run.hypograph.jsonl"));
    assert!(hyp[0].get("meta").is_some());
    let objects: Vec<&str> = hyp[1..].iter().map(|h| h["object"].as_str().unwrap()).collect();
    assert_eq!(objects, ["noAgg", "agg"]);
    assert_eq!(hyp[1]["values"].as_array().unwrap().len(), 401);

    let atoms = json_lines(&dir.path().join("run.pointprocess.jsonl"));
    assert!(atoms[0].get("meta").is_some());
    for atom in &atoms[1..] {
        assert!(atom["J"].is_array() && atom["magnitude"].is_f64() && atom["set"]["points"].is_array());
    }

    let csv = fs::read_to_string(dir.path().join("run.summary.csv")).unwrap();
    assert!(csv.starts_with("# meta {"));
    assert!(csv.lines().nth(1).unwrap().starts_with("interval,"));
}

#[test]
fn runs_are_reproducible_across_thread_counts() {
    let dir = tempfile::tempdir().unwrap();
    let run = |name: &str, threads: &str| {
        let out = dir.path().join(name);
        let o = supmeasure(&[
            "simulate-model", "--grid-n", "300", "--replicates", "20", "--seed", "9", "--threads", threads,
            "--out", out.to_str().unwrap(),
        ]);
        assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
        fs::read_to_string(out).unwrap()
    };
    assert_eq!(run("a.jsonl", "1"), run("b.jsonl", "3"));
}

#[test]
fn seed_falls_back_to_environment() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("env.jsonl");
    let o = Command::new(env!("CARGO_BIN_EXE_supmeasure"))
        .args(["simulate-limit", "--replicates", "1", "--out", out.to_str().unwrap()])
        .env("SUPMEASURE_SEED", "4242")
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert_eq!(json_lines(&out)[0]["meta"]["seed"], 4242);
}

#[test]
fn config_file_with_flag_override() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.conf");
    fs::write(
        &cfg,
        "# model run\nalpha = 0.9\nbeta = 0.5\nn = 250\nkappa = 0.6\nreplicates = 4\nseed = 3\nsetFamily = karlin\nintervals = 1/10:1/2, 1/2:9/10\nell = 2\n",
    )
    .unwrap();
    let out = dir.path().join("model.jsonl");
    let o = supmeasure(&[
        "simulate-model", "--config", cfg.to_str().unwrap(), "--alpha", "0.7", "--out", out.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let lines = json_lines(&out);
    let resolved = &lines[0]["meta"]["config"]["config"];
    assert_eq!(resolved["alpha"], 0.7);
    assert_eq!(resolved["setFamily"], "karlin");
    assert_eq!(resolved["n"], 250);
    assert_eq!(lines.len(), 5);
    assert!(lines[1]["topEllEvals"]["(1/10,1/2)"].is_number() || lines[1]["topEllEvals"]["(1/10,1/2)"].is_null());

    fs::write(&cfg, "alpha = 0.9\nwidth = 3\n").unwrap();
    let o = supmeasure(&["simulate-model", "--config", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("width"));
}

#[test]
fn emit_figure_preset() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("fig2.jsonl");
    let o = supmeasure(&["emit-figure", "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let hyp = json_lines(&dir.path().join("fig2.hypograph.jsonl"));
    let config = &hyp[0]["meta"]["config"];
    assert_eq!(config["setFamily"], "renewal_shifted");
    assert_eq!((config["n"].as_u64(), config["L"].as_u64(), config["alpha"].as_f64()), (Some(400), Some(20), Some(1.0)));
    assert_eq!(config["beta"], 0.6);
    assert!(dir.path().join("fig2.pointprocess.jsonl").exists());
}
