use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use aatgs::harness::{run_experiment, ExperimentConfig};

fn aatgs(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_aatgs"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn text(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

fn read(dir: &Path, name: &str) -> String {
    fs::read_to_string(dir.join(name)).unwrap()
}

#[test]
fn bratu_run_writes_one_csv_row_per_iterate() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("bratu.json");
    fs::write(
        &config,
        r#"{
            "problem": {"type": "bratu", "grid": 20},
            "solvers": [
                {"method": "aatgs", "m": 3},
                {"method": "aa", "m": 20, "eta": "inf"}
            ],
            "tol": 1e-8,
            "max_iters": 2000
        }"#,
    )
    .unwrap();
    let out_dir = dir.path().join("out");
    let out = aatgs(&[
        "run",
        "--config",
        config.to_str().unwrap(),
        "--out",
        out_dir.to_str().unwrap(),
    ]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let stdout = text(&out);
    assert!(stdout.contains("AATGS[3,-]") && stdout.contains("AA[20,-]"));

    for run in ["run00", "run01"] {
        let summary: serde_json::Value =
            serde_json::from_str(&read(&out_dir, &format!("{run}.json"))).unwrap();
        assert_eq!(summary["converged"], true);
        let iterations = summary["iterations_to_tol"].as_u64().unwrap() as usize;
        let csv = read(&out_dir, &format!("{run}.csv"));
        let rows = csv.lines().count() - 1;
        assert_eq!(rows, iterations + 1, "{run}");
        assert!(csv.starts_with("iter,residual_norm,monitor_w,restarted,elapsed_ms\n"));
    }
    assert!(out_dir.join("summary.txt").exists());
    let echoed = ExperimentConfig::load(&out_dir.join("config.json")).unwrap();
    assert_eq!(echoed.solvers[1].eta, f64::INFINITY);
}

#[test]
fn reruns_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let mut outputs = Vec::new();
    for k in 0..2 {
        let out_dir = dir.path().join(format!("out{k}"));
        let out = aatgs(&[
            "run",
            "--problem",
            "lennard_jones",
            "--solver",
            "aatgs",
            "--m",
            "5",
            "--max-iters",
            "40",
            "--seed",
            "3",
            "--out",
            out_dir.to_str().unwrap(),
        ]);
        assert!(out.status.success());
        outputs.push(out_dir);
    }
    for name in ["run00.csv", "run00.json", "summary.txt"] {
        assert_eq!(read(&outputs[0], name), read(&outputs[1], name), "{name}");
    }
}

#[test]
fn timing_column_is_filled_only_on_request() {
    let dir = tempfile::tempdir().unwrap();
    let base = ["run", "--problem", "hequation", "--max-iters", "20"];
    for (timing, out) in [(false, "plain"), (true, "timed")] {
        let out_dir = dir.path().join(out);
        let mut args = base.to_vec();
        args.extend(["--out", out_dir.to_str().unwrap()]);
        if timing {
            args.push("--timing");
        }
        assert!(aatgs(&args).status.success());
        let csv = read(&out_dir, "run00.csv");
        let last = csv.lines().nth(1).unwrap().rsplit(',').next().unwrap();
        assert_eq!(!last.is_empty(), timing);
    }
}

#[test]
fn configuration_errors_exit_with_two() {
    let out = aatgs(&["run", "--problem", "navier_stokes"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("unknown problem"));

    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("bad.json");
    fs::write(
        &config,
        r#"{"problem": {"type": "bratu", "gird": 5}, "solvers": []}"#,
    )
    .unwrap();
    let out = aatgs(&["run", "--config", config.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));

    let out = aatgs(&["verify", "--suite", "nope"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn verify_reports_pass_lines() {
    let out = aatgs(&["verify", "--suite", "spd_bound", "--seed", "2"]);
    assert!(out.status.success());
    let stdout = text(&out);
    assert!(stdout.contains("suite=spd_bound seed=2"));
    assert!(stdout.contains("PASS residual_over_bound"));
    assert!(stdout.trim_end().ends_with("result=pass"));
}

#[test]
fn sweep_prints_a_lambda_by_eta_table() {
    let out = aatgs(&[
        "sweep",
        "--samples",
        "200",
        "--dims",
        "30",
        "--lambdas",
        "1e-1,1e-2",
        "--etas",
        "1e2,inf",
        "--tol",
        "1e-10",
    ]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let stdout = text(&out);
    let lines: Vec<&str> = stdout.lines().collect();
    assert_eq!(lines.len(), 3);
    assert!(lines[0].contains("eta=1e2") && lines[0].contains("eta=inf"));
    assert!(lines[1].starts_with("1e-1") && lines[2].starts_with("1e-2"));
    for line in &lines[1..] {
        let cells: Vec<usize> = line
            .split_whitespace()
            .skip(1)
            .map(|c| c.parse().unwrap())
            .collect();
        assert_eq!(cells.len(), 2);
    }
}

#[test]
fn madelon_files_feed_the_sweep() {
    let dir = tempfile::tempdir().unwrap();
    let features = dir.path().join("train.data");
    let labels = dir.path().join("train.labels");
    let rows: Vec<String> = (0..40)
        .map(|i| format!("{} {} {}", i % 7, (i * 3) % 5, 10 - i % 4))
        .collect();
    fs::write(&features, rows.join("\n") + "\n").unwrap();
    let ys: Vec<&str> = (0..40)
        .map(|i| if i % 3 == 0 { "1" } else { "-1" })
        .collect();
    fs::write(&labels, ys.join("\n") + "\n").unwrap();
    let out = aatgs(&[
        "sweep",
        "--features",
        features.to_str().unwrap(),
        "--labels",
        labels.to_str().unwrap(),
        "--lambdas",
        "1e-1",
        "--etas",
        "1e3",
    ]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );

    fs::write(&labels, "1\n-1\n").unwrap();
    let out = aatgs(&[
        "sweep",
        "--features",
        features.to_str().unwrap(),
        "--labels",
        labels.to_str().unwrap(),
    ]);
    assert_ne!(out.status.code(), Some(0));
}

#[test]
fn library_runs_keep_solver_order() {
    let config = ExperimentConfig::from_json(
        r#"{
            "problem": {"type": "hequation", "n": 200, "omega": 0.9},
            "solvers": [
                {"method": "fixed_point"},
                {"method": "aa", "m": 5},
                {"method": "aatgs", "m": 5},
                {"method": "aatgs", "m": 2, "restart_d": 4}
            ],
            "max_iters": 300
        }"#,
    )
    .unwrap();
    let result = run_experiment(&config).unwrap();
    let labels: Vec<&str> = result.runs.iter().map(|r| r.label.as_str()).collect();
    assert_eq!(labels, ["FP", "AA[5,-]", "AATGS[5,-]", "AATGS[2,4]"]);
    assert!(result.runs.iter().skip(1).all(|r| r.trace.converged));
    assert!(result.runs[3].trace.restart_count() > 0);
}
