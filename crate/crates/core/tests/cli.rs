//! End-to-end checks of the `renlab` binary: exit-code contract, override
//! parsing, and artifact emission.

use std::process::Command;

fn renlab() -> Command {
    Command::new(env!("CARGO_BIN_EXE_renlab"))
}

#[test]
fn constants_prints_normalizations_and_exits_zero() {
    let out = renlab()
        .args(["--mode", "iid", "--beta", "0.75", "constants"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0), "{:?}", out);
    let stdout = String::from_utf8(out.stdout).unwrap();
    for needle in ["d_beta", "big_d_beta", "c_beta_re", "0.75"] {
        assert!(stdout.contains(needle), "missing {needle} in:\n{stdout}");
    }
}

#[test]
fn unknown_key_is_named_and_exits_with_config_code() {
    let out = renlab()
        .args(["--set", "not_a_key=1", "constants"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(3));
    let stderr = String::from_utf8(out.stderr).unwrap();
    assert!(stderr.contains("not_a_key"), "stderr: {stderr}");
    assert!(stderr.contains("known keys:"), "stderr: {stderr}");
}

#[test]
fn malformed_override_exits_with_config_code() {
    let out = renlab().args(["--set", "nonsense", "wre"]).output().unwrap();
    assert_eq!(out.status.code(), Some(3));
    let stderr = String::from_utf8(out.stderr).unwrap();
    assert!(stderr.contains("key=value"), "stderr: {stderr}");
}

#[test]
fn out_of_range_value_exits_with_config_code() {
    let out = renlab()
        .args(["--mode", "iid", "--beta", "1.5", "constants"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(3), "{:?}", out);
}

#[test]
fn density_tabulates_csv() {
    let dir = tempfile::tempdir().unwrap();
    let out = renlab()
        .args(["--mode", "iid", "--beta", "0.6", "--out"])
        .arg(dir.path())
        .arg("density")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0), "{:?}", out);
    let path = dir.path().join("density-beta-0.6.csv");
    let body = std::fs::read_to_string(&path).unwrap();
    let mut lines = body.lines();
    assert_eq!(lines.next(), Some("x,density,cdf"));
    let rows: Vec<Vec<f64>> = lines
        .map(|l| l.split(',').map(|v| v.parse().unwrap()).collect())
        .collect();
    assert!(rows.len() >= 500, "rows: {}", rows.len());
    assert!(rows.windows(2).all(|w| w[1][2] >= w[0][2]), "cdf must be monotone");
    assert!(rows.iter().all(|r| r[1] >= 0.0), "density must be nonnegative");
}

#[test]
fn constant_roof_spectral_reports_designed_failure() {
    let dir = tempfile::tempdir().unwrap();
    let out = renlab()
        .args([
            "--mode",
            "det",
            "--roof",
            "constant:1.5",
            "--grid-size",
            "256",
            "--set",
            "samples_per_cell=32",
            "--set",
            "tail_samples=20000",
            "--set",
            "scan_b=0.5..5",
            "--set",
            "scan_points=6",
            "--seed",
            "3",
            "--out",
        ])
        .arg(dir.path())
        .arg("spectral")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1), "{:?}", out);
    let stdout = String::from_utf8(out.stdout).unwrap();
    assert!(stdout.contains("spectral-aperiodicity"), "stdout: {stdout}");
    assert!(
        stdout.contains("spectral-lattice-resonance"),
        "stdout: {stdout}"
    );
    assert!(stdout.contains("FAIL"), "stdout: {stdout}");
}

#[test]
fn iid_run_emits_parseable_report_artifact() {
    let dir = tempfile::tempdir().unwrap();
    let out = renlab()
        .args([
            "--mode",
            "iid",
            "--n-orbits",
            "150000",
            "--seed",
            "5",
            "--set",
            "t_min=50",
            "--set",
            "t_max=1500",
            "--set",
            "points_per_octave=2",
            "--out",
        ])
        .arg(dir.path())
        .arg("srt")
        .output()
        .unwrap();
    let code = out.status.code();
    assert!(
        code == Some(0) || code == Some(2),
        "srt on the baseline must pass or be inconclusive, got {:?}\n{}",
        code,
        String::from_utf8_lossy(&out.stderr)
    );
    let json_path = dir.path().join("srt-iid.json");
    let body = std::fs::read_to_string(&json_path).unwrap();
    let v: serde_json::Value = serde_json::from_str(&body).unwrap();
    assert_eq!(v["schema_version"], 1);
    assert!(v["verdicts"].as_array().is_some_and(|a| !a.is_empty()));
    assert!(v["renewal_rows"].as_array().is_some_and(|a| !a.is_empty()));
    let csv_path = dir.path().join("srt-iid_renewal.csv");
    let csv = std::fs::read_to_string(&csv_path).unwrap();
    assert!(csv.starts_with("t,h,raw_mean,stderr,normalized,target,ratio"));
}
