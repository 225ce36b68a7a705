//! End-to-end checks of the command-line interface: exit-code convention,
//! CSV schema and byte determinism, config-file layering, and the built-in
//! reproduction runs.

use std::path::PathBuf;
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_inclusion-lab"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn tmp(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join("inclusion-lab-cli-tests");
    std::fs::create_dir_all(&dir).unwrap();
    dir.join(name)
}

#[test]
fn usage_errors_exit_2() {
    assert_eq!(run(&[]).status.code(), Some(2));
    assert_eq!(run(&["bogus"]).status.code(), Some(2));
    assert_eq!(run(&["simulate"]).status.code(), Some(2));
    assert_eq!(
        run(&["simulate", "--scenario", "nope"]).status.code(),
        Some(2)
    );
    assert_eq!(
        run(&["simulate", "--scenario", "sec8_example1", "--dt", "-1"])
            .status
            .code(),
        Some(2)
    );
    assert_eq!(
        run(&["certify", "--scenario", "sec8_example1", "--grid", "0:1:1"])
            .status
            .code(),
        Some(2)
    );
    assert_eq!(run(&["repro", "wat"]).status.code(), Some(2));
}

#[test]
fn help_exits_clean() {
    let out = run(&["help"]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("simulate"));
    assert!(text.contains("INCLUSION_LAB_THREADS"));
}

#[test]
fn simulate_writes_deterministic_csv() {
    let a = tmp("det_a.csv");
    let b = tmp("det_b.csv");
    for path in [&a, &b] {
        let out = run(&[
            "simulate",
            "--scenario",
            "sec8_example1",
            "--tfinal",
            "2",
            "--dt",
            "1e-3",
            "--seed",
            "42",
            "--out",
            path.to_str().unwrap(),
        ]);
        assert_eq!(
            out.status.code(),
            Some(0),
            "stderr: {}",
            String::from_utf8_lossy(&out.stderr)
        );
    }
    let bytes_a = std::fs::read(&a).unwrap();
    let bytes_b = std::fs::read(&b).unwrap();
    assert_eq!(
        bytes_a, bytes_b,
        "same config and seed must give identical bytes"
    );

    let text = String::from_utf8(bytes_a).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next().unwrap(), "t,x1,x2,V,W,event");
    let row: Vec<&str> = lines.next().unwrap().split(',').collect();
    assert_eq!(row.len(), 6);
    for cell in &row[..5] {
        cell.parse::<f64>().expect("numeric cell");
    }
    assert!(!text.contains('\r'), "LF line endings only");
    assert_eq!(text.lines().count(), 2002);
}

#[test]
fn simulate_to_stdout_and_summary_to_stderr() {
    let out = run(&[
        "simulate",
        "--scenario",
        "sec8_example1",
        "--tfinal",
        "1",
        "--dt",
        "1e-2",
    ]);
    assert_eq!(out.status.code(), Some(0));
    let stdout = String::from_utf8(out.stdout).unwrap();
    assert!(stdout.starts_with("t,x1,x2,V,W,event\n"));
    let stderr = String::from_utf8(out.stderr).unwrap();
    assert!(stderr.contains("\"scenario\""));
}

#[test]
fn config_file_layering_matches_flags() {
    let conf = tmp("layer.conf");
    std::fs::write(
        &conf,
        "scenario = sec8_example1\ntfinal = 2\ndt = 1e-3\nseed = 9\nk = 1.5\n",
    )
    .unwrap();
    let from_file = tmp("layer_file.csv");
    let out = run(&[
        "simulate",
        "--config",
        conf.to_str().unwrap(),
        "--out",
        from_file.to_str().unwrap(),
    ]);
    assert_eq!(
        out.status.code(),
        Some(0),
        "stderr: {}",
        String::from_utf8_lossy(&out.stderr)
    );

    let from_flags = tmp("layer_flags.csv");
    let out = run(&[
        "simulate",
        "--scenario",
        "sec8_example1",
        "--tfinal",
        "2",
        "--dt",
        "1e-3",
        "--seed",
        "9",
        "--k",
        "1.5",
        "--out",
        from_flags.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(
        std::fs::read(&from_file).unwrap(),
        std::fs::read(&from_flags).unwrap()
    );

    // Flags override the file.
    let overridden = tmp("layer_override.csv");
    let out = run(&[
        "simulate",
        "--config",
        conf.to_str().unwrap(),
        "--k",
        "1.0",
        "--out",
        overridden.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0));
    assert_ne!(
        std::fs::read(&from_file).unwrap(),
        std::fs::read(&overridden).unwrap()
    );
}

#[test]
fn certify_reports_union_failure_distinctly() {
    let summary = tmp("cert7.json");
    let out = bin()
        .args([
            "certify",
            "--scenario",
            "sec7_counterexample",
            "--mode",
            "lower",
            "--grid",
            "-2:2:21,-2:2:21",
            "--out",
            summary.to_str().unwrap(),
        ])
        .env("INCLUSION_LAB_THREADS", "2")
        .output()
        .unwrap();
    // The union-hull failure is the correct finding: analysis exit 1.
    assert_eq!(out.status.code(), Some(1));
    let stdout = String::from_utf8(out.stdout).unwrap();
    assert!(stdout.contains("F1"));
    assert!(stdout.contains("FAIL"));

    let json: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&summary).unwrap()).unwrap();
    assert_eq!(json["scenario"], "sec7_counterexample");
    assert!(json["runtime_s"].as_f64().unwrap() >= 0.0);
    let verdicts = json["verdicts"].as_array().unwrap();
    assert_eq!(verdicts.len(), 3);
    assert_eq!(verdicts[0]["pass"], true);
    assert_eq!(verdicts[2]["name"], "union");
    assert_eq!(verdicts[2]["pass"], false);
    assert!(json["worst_margin"].as_f64().unwrap() < -0.1);
}

#[test]
fn certify_passes_adaptive_scenario() {
    let out = run(&["certify", "--scenario", "sec8_example1", "--mode", "upper"]);
    assert_eq!(
        out.status.code(),
        Some(0),
        "stderr: {}",
        String::from_utf8_lossy(&out.stderr)
    );
}

#[test]
fn contain_flags_dyadic_failure() {
    let out = run(&["contain", "--scenario", "sec4_example"]);
    assert_eq!(out.status.code(), Some(1));
    let stdout = String::from_utf8(out.stdout).unwrap();
    assert!(stdout.contains("NOT contained"));

    let out = run(&["contain", "--scenario", "sec8_example1"]);
    assert_eq!(out.status.code(), Some(0));
}

#[test]
fn probe_flags_dyadic_signal_only() {
    assert_eq!(
        run(&["probe", "--scenario", "sec4_example"]).status.code(),
        Some(1)
    );
    assert_eq!(
        run(&["probe", "--scenario", "sec7_counterexample"])
            .status
            .code(),
        Some(0)
    );
}

#[test]
fn repro_targets_pass() {
    for target in ["sec4", "sec7"] {
        let out = run(&["repro", target]);
        assert_eq!(
            out.status.code(),
            Some(0),
            "repro {target} stdout: {}",
            String::from_utf8_lossy(&out.stdout)
        );
        let stdout = String::from_utf8(out.stdout).unwrap();
        assert!(stdout.contains("[ok]"));
        assert!(!stdout.contains("UNEXPECTED"));
    }
}

#[test]
fn repro_adaptive_targets_pass() {
    for target in ["sec8ex1", "sec8ex2"] {
        let out = run(&["repro", target]);
        assert_eq!(
            out.status.code(),
            Some(0),
            "repro {target} stdout: {}",
            String::from_utf8_lossy(&out.stdout)
        );
    }
}
