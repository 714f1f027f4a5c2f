use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use lstd_core::io::{Problem, ProblemDocument};
use lstd_core::mrp::recurrent_classes;
use lstd_harness::benchmarks;

fn lstd(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_lstd")).args(args).output().expect("binary runs")
}

fn write_config(dir: &Path, name: &str, value: serde_json::Value) -> String {
    let path = dir.join(name);
    fs::write(&path, serde_json::to_string_pretty(&value).unwrap()).unwrap();
    path.to_str().unwrap().to_string()
}

fn two_state_config(estimators: serde_json::Value, sizes: &[usize], reps: usize) -> serde_json::Value {
    serde_json::json!({
        "problem": {"inline": benchmarks::two_state()},
        "estimators": estimators,
        "sample_sizes": sizes,
        "repetitions": reps,
        "seed": 5
    })
}

#[test]
fn single_run_is_one_row_and_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "c.json", two_state_config(serde_json::json!(["lstd_sample"]), &[1000], 1));
    let a = lstd(&["run", "--config", &cfg]);
    let b = lstd(&["run", "--config", &cfg]);
    assert!(a.status.success(), "{}", String::from_utf8_lossy(&a.stderr));
    assert_eq!(a.stdout, b.stdout);
    let text = String::from_utf8(a.stdout).unwrap();
    let lines: Vec<_> = text.lines().collect();
    assert_eq!(lines.len(), 2);
    assert_eq!(lines[0], "estimator_id,N,seed,weight_error,value_error,condition_number,wall_time_ms");
    assert!(lines[1].starts_with("lstd_sample,1000,5,"));
}

#[test]
fn rows_are_sorted_by_estimator_size_and_repetition() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = two_state_config(serde_json::json!(["brm_sample", "lstd_sample"]), &[50, 500], 3);
    let cfg = write_config(dir.path(), "c.json", cfg);
    let out = dir.path().join("out.csv");
    let run = lstd(&["run", "--config", &cfg, "--out", out.to_str().unwrap()]);
    assert!(run.status.success());
    let mut reader = csv::Reader::from_path(&out).unwrap();
    let keys: Vec<(String, usize, u64)> = reader
        .records()
        .map(|r| {
            let r = r.unwrap();
            (r[0].to_string(), r[1].parse().unwrap(), r[2].parse().unwrap())
        })
        .collect();
    let mut expected = Vec::new();
    for id in ["brm_sample", "lstd_sample"] {
        for n in [50, 500] {
            for seed in 5..8 {
                expected.push((id.to_string(), n, seed));
            }
        }
    }
    assert_eq!(keys, expected);
}

#[test]
fn json_output_and_timing() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = two_state_config(serde_json::json!(["lstd_design"]), &[10], 2);
    cfg["output"] = "json".into();
    cfg["timing"] = true.into();
    let cfg = write_config(dir.path(), "c.json", cfg);
    let run = lstd(&["run", "--config", &cfg]);
    assert!(run.status.success());
    let rows: serde_json::Value = serde_json::from_slice(&run.stdout).unwrap();
    assert_eq!(rows.as_array().unwrap().len(), 2);
    assert_eq!(rows[0]["weight_error"], 0.0);
    assert!(rows[0]["wall_time_ms"].as_f64().unwrap() >= 0.0);
}

#[test]
fn problem_from_file_relative_to_config() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("p.json"), benchmarks::three_state_episodic().to_json()).unwrap();
    let cfg = serde_json::json!({
        "problem": {"file": "p.json"},
        "estimators": ["episodic"],
        "sample_sizes": [20],
        "seed": 1
    });
    let cfg = write_config(dir.path(), "c.json", cfg);
    let run = lstd(&["run", "--config", &cfg]);
    assert!(run.status.success(), "{}", String::from_utf8_lossy(&run.stderr));
    assert!(String::from_utf8(run.stdout).unwrap().contains("episodic,20,1,"));
}

#[test]
fn config_errors_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let empty = write_config(dir.path(), "a.json", two_state_config(serde_json::json!([]), &[10], 1));
    let run = lstd(&["run", "--config", &empty]);
    assert_eq!(run.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&run.stderr).contains("estimators"));

    let wrong = write_config(dir.path(), "b.json", two_state_config(serde_json::json!(["episodic"]), &[10], 1));
    assert_eq!(lstd(&["run", "--config", &wrong]).status.code(), Some(2));

    fs::write(dir.path().join("c.json"), "{\n  \"problem\": 3\n}").unwrap();
    let run = lstd(&["run", "--config", dir.path().join("c.json").to_str().unwrap()]);
    assert_eq!(run.status.code(), Some(2));
    let msg = String::from_utf8_lossy(&run.stderr).to_string();
    assert!(msg.contains("line 2") && msg.contains("problem"), "{msg}");

    assert_eq!(lstd(&["run", "--config", "/nonexistent/config.json"]).status.code(), Some(2));
}

#[test]
fn singular_problem_exits_3() {
    let dir = tempfile::tempdir().unwrap();
    let mut doc = benchmarks::two_state();
    doc.features = vec![vec![1.0, 1.0], vec![1.0, 1.0]];
    let cfg = serde_json::json!({
        "problem": {"inline": doc},
        "estimators": ["lstd_sample"],
        "sample_sizes": [10]
    });
    let cfg = write_config(dir.path(), "c.json", cfg);
    let run = lstd(&["run", "--config", &cfg]);
    assert_eq!(run.status.code(), Some(3));
}

#[test]
fn verify_exit_codes() {
    let ok = lstd(&["verify", "--suite", "error_bound,td_orthogonality", "--count", "20", "--seed", "3"]);
    assert!(ok.status.success());
    let text = String::from_utf8(ok.stdout).unwrap();
    let reports: Vec<serde_json::Value> = text.lines().map(|l| serde_json::from_str(l).unwrap()).collect();
    assert_eq!(reports.len(), 2);
    assert_eq!(reports[0]["check_id"], "error_bound");
    assert_eq!(reports[0]["instances_run"], 20);

    assert_eq!(lstd(&["verify", "--suite", "no_such_check"]).status.code(), Some(2));

    let vacuous = lstd(&["verify", "--suite", "all", "--count", "0", "--seed", "1"]);
    assert!(vacuous.status.success());
    for line in String::from_utf8(vacuous.stdout).unwrap().lines() {
        let r: serde_json::Value = serde_json::from_str(line).unwrap();
        assert_eq!(r["instances_run"], 0);
        assert_eq!(r["vacuous"], true);
    }
}

#[test]
fn generate_writes_reproducible_problems() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.json");
    let b = dir.path().join("b.json");
    for out in [&a, &b] {
        let run = lstd(&["generate", "--states", "6", "--features", "2", "--transient", "2", "--seed", "9", "--out", out.to_str().unwrap()]);
        assert!(run.status.success(), "{}", String::from_utf8_lossy(&run.stderr));
    }
    let text = fs::read_to_string(&a).unwrap();
    assert_eq!(text, fs::read_to_string(&b).unwrap());
    match ProblemDocument::from_json(&text).unwrap().to_problem().unwrap() {
        Problem::Continuing { mrp, fmap } => {
            assert_eq!(fmap.dim(), 2);
            let transient = recurrent_classes(&mrp).iter().filter(|c| c.is_transient()).count();
            assert!(transient >= 1);
        }
        _ => panic!("expected a continuing problem"),
    }
}

#[test]
fn generate_rejects_invalid_specs() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("x.json");
    let out = out.to_str().unwrap();
    assert_eq!(lstd(&["generate", "--states", "-2", "--features", "1", "--seed", "1", "--out", out]).status.code(), Some(2));
    assert_eq!(lstd(&["generate", "--states", "3", "--features", "4", "--seed", "1", "--out", out]).status.code(), Some(2));
    assert_eq!(lstd(&["generate", "--states", "3", "--features", "1", "--transient", "3", "--seed", "1", "--out", out]).status.code(), Some(2));
    assert!(!Path::new(out).exists());
}
