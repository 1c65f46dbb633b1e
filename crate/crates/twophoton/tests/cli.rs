use std::f64::consts::{FRAC_PI_4, FRAC_PI_8};
use std::process::{Command, Output};

use approx::assert_abs_diff_eq;
use twophoton::OutputEnvelope;

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_twophoton"))
        .args(args)
        .output()
        .unwrap()
}

fn envelope(args: &[&str]) -> OutputEnvelope {
    let out = run(args);
    assert!(
        out.status.success(),
        "{args:?}: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    OutputEnvelope::from_json(std::str::from_utf8(&out.stdout).unwrap()).unwrap()
}

#[test]
fn probs_reports_table_and_closed_form() {
    let env = envelope(&["probs", "--theta1", &FRAC_PI_8.to_string(), "--theta2", "0"]);
    assert_eq!(env.command, "probs");
    let table = env.results["table"].as_array().unwrap();
    assert_eq!(table.len(), 36);
    let p21 = table.iter().find(|r| r["i"] == 2 && r["j"] == 1).unwrap()["p"]
        .as_f64()
        .unwrap();
    assert_abs_diff_eq!(p21, (1.0 + FRAC_PI_4.cos()) / 8.0, epsilon = 1e-8);
    assert!(env.results["max_deviation"].as_f64().unwrap() < 1e-12);

    let env = envelope(&["probs", "--theta1", "0", "--theta2", "0"]);
    assert_eq!(env.results["table"][0]["p"].as_f64(), Some(0.0));
}

#[test]
fn degrees_flag_matches_radians() {
    let deg = envelope(&[
        "--degrees",
        "probs",
        "--theta1",
        "22.5",
        "--theta2",
        "-10",
        "--eta",
        "0.8",
    ]);
    let rad = envelope(&[
        "probs",
        "--theta1",
        &FRAC_PI_8.to_string(),
        "--theta2",
        &(-10f64).to_radians().to_string(),
        "--eta",
        "0.8",
    ]);
    assert_eq!(deg.results, rad.results);
}

#[test]
fn probs_csv_has_record_schema() {
    let out = run(&[
        "probs", "--theta1", "0.4", "--theta2", "0.1", "--alpha", "0.5", "--format", "csv",
    ]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert_eq!(text.lines().next(), Some("i,j,theta1,theta2,eta,alpha,p"));
    assert_eq!(text.lines().count(), 37);
}

#[test]
fn correlation_and_chsh() {
    let env = envelope(&[
        "correlation",
        "--psi1",
        "1.3",
        "--psi2",
        "-0.4",
        "--alpha",
        "0.3",
        "--eta",
        "0.9",
    ]);
    assert!(env.results["difference"].as_f64().unwrap().abs() < 1e-10);

    let env = envelope(&["chsh"]);
    assert_abs_diff_eq!(
        env.results["s"].as_f64().unwrap(),
        1.0 + 2f64.sqrt(),
        epsilon = 1e-8
    );
    assert_abs_diff_eq!(
        env.results["margin"].as_f64().unwrap(),
        2f64.sqrt() - 1.0,
        epsilon = 1e-8
    );

    let env = envelope(&[
        "chsh",
        "--settings",
        "2.93798,4.25513,-0.20241,1.11708",
        "--alpha",
        "0",
    ]);
    assert_abs_diff_eq!(
        env.results["s"].as_f64().unwrap(),
        2.33711631,
        epsilon = 1e-8
    );
}

#[test]
fn optimize_finds_ideal_maximum() {
    let env = envelope(&["optimize", "--starts", "16"]);
    assert_abs_diff_eq!(
        env.results["best_value"].as_f64().unwrap(),
        1.0 + 2f64.sqrt(),
        epsilon = 1e-8
    );
    assert_eq!(env.results["starts_used"], 16);
}

#[test]
fn critical_eta_prints_published_comparison() {
    let out = run(&["critical-eta", "--alpha", "1"]);
    assert!(out.status.success());
    let stderr = String::from_utf8(out.stderr).unwrap();
    assert!(stderr.starts_with("published: 0.91"), "{stderr}");
    let env = OutputEnvelope::from_json(std::str::from_utf8(&out.stdout).unwrap()).unwrap();
    assert_abs_diff_eq!(
        env.results["eta_critical"].as_f64().unwrap(),
        4.0 / (3.0 + 2f64.sqrt()),
        epsilon = 1e-4
    );
    assert_eq!(env.results["published"].as_f64(), Some(0.91));
}

#[test]
fn hom_scan_minimum_at_quarter_turn() {
    let env = envelope(&["hom-scan"]);
    assert_eq!(env.results["rows"].as_array().unwrap().len(), 50);
    let min = &env.results["minimum"];
    assert_abs_diff_eq!(min["theta1"].as_f64().unwrap(), FRAC_PI_4, epsilon = 1e-6);
    assert!(min["p43"].as_f64().unwrap() < 1e-12);
    assert_abs_diff_eq!(min["p53"].as_f64().unwrap(), 0.125, epsilon = 1e-12);
}

#[test]
fn sample_files_are_byte_identical_for_equal_seeds() {
    let dir = tempfile::tempdir().unwrap();
    let paths: Vec<_> = ["a.csv", "b.csv", "c.csv"]
        .iter()
        .map(|f| dir.path().join(f))
        .collect();
    let go = |path: &std::path::Path, seed: &str, threads: &str| {
        let out = Command::new(env!("CARGO_BIN_EXE_twophoton"))
            .env("TWOPHOTON_THREADS", threads)
            .args([
                "sample", "--seed", seed, "--n", "70000", "--alpha", "0.4", "--eta", "0.9", "--out",
            ])
            .arg(path)
            .output()
            .unwrap();
        assert!(
            out.status.success(),
            "{}",
            String::from_utf8_lossy(&out.stderr)
        );
        std::fs::read(path).unwrap()
    };
    let a = go(&paths[0], "5", "1");
    let b = go(&paths[1], "5", "4");
    let c = go(&paths[2], "6", "4");
    assert_eq!(a, b);
    assert_ne!(a, c);
    assert!(a.starts_with(b"index,setting,psi1,psi2,raw1,raw2,obs1,obs2,a,b\n"));
}

#[test]
fn sample_envelope_estimates_chsh() {
    let env = envelope(&["sample", "--seed", "3", "--n", "50000"]);
    let (s, se) = (
        env.results["s"].as_f64().unwrap(),
        env.results["stderr"].as_f64().unwrap(),
    );
    assert!((s - 1.0 - 2f64.sqrt()).abs() < 5.0 * se);
    assert_eq!(env.results["events"], 200000);
}

#[test]
fn validate_passes_with_report() {
    let out = run(&["validate"]);
    assert_eq!(out.status.code(), Some(0));
    let stderr = String::from_utf8(out.stderr).unwrap();
    assert!(stderr.lines().filter(|l| l.starts_with("PASS ")).count() >= 15);
    assert!(!stderr.contains("FAIL"));
}

#[test]
fn usage_errors_exit_with_two() {
    for args in [
        &["probs", "--theta1", "0", "--theta2", "0", "--eta", "0"][..],
        &["probs", "--theta1", "0", "--theta2", "0", "--alpha", "1.2"],
        &["probs", "--theta1", "NaN", "--theta2", "0"],
        &["chsh", "--settings", "1,2,3"],
        &["chsh", "--format", "csv"],
        &["sample", "--n", "0"],
        &["nonsense"],
    ] {
        assert_eq!(run(args).status.code(), Some(2), "{args:?}");
    }
}

#[test]
fn envelopes_reparse_to_identical_bytes() {
    for args in [
        &[
            "probs", "--theta1", "0.3", "--theta2", "1.1", "--eta", "0.7", "--alpha", "0.2",
        ][..],
        &["chsh"],
        &["hom-scan"],
    ] {
        let out = run(args);
        let text = std::str::from_utf8(&out.stdout).unwrap().trim_end();
        let env = OutputEnvelope::from_json(text).unwrap();
        assert_eq!(env.to_json(), text);
    }
}
