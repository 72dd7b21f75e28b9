//! End-to-end checks of the `hbf-sim` binary: exit codes, CSV output,
//! determinism across runs and thread counts, and the bounds printout.

use std::path::PathBuf;
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_hbf-sim"))
}

fn temp_dir(tag: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("hbf-sim-test-{tag}-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

fn write_scenario(dir: &std::path::Path, name: &str, extra: &str) -> PathBuf {
    let path = dir.join(name);
    std::fs::write(
        &path,
        format!(
            r#"{{
                "id": "cli-test",
                "n_bs": 16, "n_ue": 2, "k": 3,
                "phase_bits_bs": 3,
                "rician_factor": 10.0, "paths": 2,
                "sigma_delta": 0.05, "sigma_alpha": 0.05,
                "snr_db": [0, 10],
                "trials": 4,
                "method": "algorithm1",
                "seed": 5{extra}
            }}"#
        ),
    )
    .unwrap();
    path
}

fn run_ok(out: &Output) {
    assert!(
        out.status.success(),
        "stdout: {}\nstderr: {}",
        String::from_utf8_lossy(&out.stdout),
        String::from_utf8_lossy(&out.stderr)
    );
}

#[test]
fn run_writes_deterministic_csv() {
    let dir = temp_dir("run");
    let scenario = write_scenario(&dir, "scenario.json", "");
    let out_a = dir.join("a");
    let out_b = dir.join("b");
    for (out_dir, threads) in [(&out_a, "1"), (&out_b, "4")] {
        let out = bin()
            .args([
                "run",
                "--scenario",
                scenario.to_str().unwrap(),
                "--out",
                out_dir.to_str().unwrap(),
                "--threads",
                threads,
            ])
            .output()
            .unwrap();
        run_ok(&out);
    }
    let a = std::fs::read(out_a.join("cli-test.csv")).unwrap();
    let b = std::fs::read(out_b.join("cli-test.csv")).unwrap();
    assert!(!a.is_empty());
    assert_eq!(a, b, "CSV bytes differ across thread counts");

    let text = String::from_utf8(a).unwrap();
    let mut lines = text.lines();
    assert_eq!(
        lines.next().unwrap(),
        "scenario,method,snr_db,sigma_delta,sigma_alpha,K,N_BS,metric,value,ci95,trials,seed"
    );
    assert!(text.lines().count() > 2);
    assert!(text.ends_with('\n'));
    std::fs::remove_dir_all(&dir).ok();
}

#[test]
fn seed_override_changes_the_output() {
    let dir = temp_dir("seed");
    let scenario = write_scenario(&dir, "scenario.json", "");
    let mut results = Vec::new();
    for seed in ["7", "8"] {
        let out_dir = dir.join(seed);
        let out = bin()
            .args([
                "run",
                "--scenario",
                scenario.to_str().unwrap(),
                "--seed",
                seed,
                "--out",
                out_dir.to_str().unwrap(),
            ])
            .output()
            .unwrap();
        run_ok(&out);
        results.push(std::fs::read(out_dir.join("cli-test.csv")).unwrap());
    }
    assert_ne!(results[0], results[1]);
    std::fs::remove_dir_all(&dir).ok();
}

#[test]
fn env_var_thread_fallback_is_accepted() {
    let dir = temp_dir("env");
    let scenario = write_scenario(&dir, "scenario.json", "");
    let out = bin()
        .env("HBF_SIM_THREADS", "2")
        .args([
            "run",
            "--scenario",
            scenario.to_str().unwrap(),
            "--out",
            dir.join("out").to_str().unwrap(),
        ])
        .output()
        .unwrap();
    run_ok(&out);

    let out = bin()
        .env("HBF_SIM_THREADS", "not-a-number")
        .args([
            "run",
            "--scenario",
            scenario.to_str().unwrap(),
            "--out",
            dir.join("out2").to_str().unwrap(),
        ])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
    std::fs::remove_dir_all(&dir).ok();
}

#[test]
fn config_errors_exit_with_code_2() {
    let dir = temp_dir("bad");
    // Unknown key.
    let bad = dir.join("bad.json");
    std::fs::write(&bad, r#"{"id": "x", "sigma_theta": 1.0}"#).unwrap();
    let out = bin()
        .args([
            "run",
            "--scenario",
            bad.to_str().unwrap(),
            "--out",
            dir.join("out").to_str().unwrap(),
        ])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));

    // Violated invariant: algorithm1 with P*K > N_BS.
    let invalid = write_scenario(&dir, "invalid.json", ", \"pilot_cycles\": 50");
    let out = bin()
        .args([
            "run",
            "--scenario",
            invalid.to_str().unwrap(),
            "--out",
            dir.join("out").to_str().unwrap(),
        ])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("pilot_cycles"), "stderr: {err}");

    // Unknown figure preset.
    let out = bin()
        .args(["figure", "fig9", "--out", dir.join("out").to_str().unwrap()])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
    std::fs::remove_dir_all(&dir).ok();
}

#[test]
fn bounds_prints_the_closed_forms() {
    let out = bin()
        .args([
            "bounds",
            "--sigma-delta",
            "0.1",
            "--sigma-alpha",
            "0.1",
            "--nbs",
            "128",
            "--nue",
            "4",
            "--ki",
            "10",
        ])
        .output()
        .unwrap();
    run_ok(&out);
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(
        text.contains("simplified interference bound: 6.605"),
        "{text}"
    );
    assert!(
        text.contains("exact interference expectation: 6.587"),
        "{text}"
    );
    assert!(text.contains("sum-rate ceiling at K_I=10"), "{text}");
}

#[test]
fn missing_scenario_file_is_an_io_error() {
    let out = bin()
        .args([
            "run",
            "--scenario",
            "/nonexistent/path.json",
            "--out",
            "/tmp",
        ])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("/nonexistent/path.json"), "stderr: {err}");
}
