use std::path::Path;
use std::process::{Command, Output};

fn drivesim(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_drivesim"))
        .args(args)
        .current_dir(cwd)
        .output()
        .expect("launch drivesim")
}

fn error_line(out: &Output) -> serde_json::Value {
    let stderr = String::from_utf8_lossy(&out.stderr);
    serde_json::from_str(stderr.lines().last().expect("error line")).expect("JSON error line")
}

fn short_config(dir: &Path) -> std::path::PathBuf {
    let path = dir.join("short.toml");
    std::fs::write(
        &path,
        r#"
duration = 0.9
speed_schedule = [[0.0, 100.0], [0.3, 300.0]]
load_schedule = [[0.0, 5.0]]

[thd]
windows = [{ t_end = 0.8, n_cycles = 10 }]
"#,
    )
    .unwrap();
    path
}

#[test]
fn simulate_writes_outputs_and_summary() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = short_config(dir.path());
    let out = drivesim(
        &[
            "simulate",
            "--config",
            cfg.to_str().unwrap(),
            "--modulator",
            "svpwm",
            "--fast",
            "--out",
            "run",
        ],
        dir.path(),
    );
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let summary: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(summary["modulator"], "svpwm");
    assert_eq!(summary["thd"].as_array().unwrap().len(), 1);
    assert_eq!(summary["thd"][0]["f1_source"], "speed");
    for f in [
        "spectrum_svpwm.csv",
        "speed_svpwm.csv",
        "gates_svpwm.csv",
        "refs_svpwm.csv",
        "config_svpwm.toml",
    ] {
        assert!(dir.path().join("run").join(f).is_file(), "{f}");
    }
}

#[test]
fn thd_f1_flag_overrides_config() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = short_config(dir.path());
    let out = drivesim(
        &[
            "simulate",
            "--config",
            cfg.to_str().unwrap(),
            "--modulator",
            "spwm",
            "--fast",
            "--thd-f1",
            "50",
        ],
        dir.path(),
    );
    assert!(out.status.success());
    let summary: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(summary["thd"][0]["f1_source"], "fixed");
    assert!((summary["thd"][0]["f1_hz"].as_f64().unwrap() - 50.0).abs() < 1e-9);
}

#[test]
fn compare_subset_writes_report() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = short_config(dir.path());
    let out = drivesim(
        &[
            "compare",
            "--config",
            cfg.to_str().unwrap(),
            "--modulators",
            "spwm,svpwm",
            "--fast",
            "--out",
            "cmp",
        ],
        dir.path(),
    );
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let report = std::fs::read_to_string(dir.path().join("cmp/report.csv")).unwrap();
    assert_eq!(String::from_utf8_lossy(&out.stdout), report);
    let rows: Vec<_> = report
        .lines()
        .skip(1)
        .map(|l| l.split(',').next().unwrap())
        .collect();
    assert_eq!(rows, ["spwm", "svpwm"]);
}

#[test]
fn imcurve_csv() {
    let dir = tempfile::tempdir().unwrap();
    let out = drivesim(&["imcurve", "--out", "curve.csv"], dir.path());
    assert!(out.status.success());
    let csv = std::fs::read_to_string(dir.path().join("curve.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next().unwrap(), "S,Te,Pout,I_mag");
    let rows: Vec<Vec<f64>> = lines
        .map(|l| l.split(',').map(|x| x.parse().unwrap()).collect())
        .collect();
    assert_eq!(rows.len(), 200);
    let last = rows.last().unwrap();
    assert_eq!(last[0], 1.0);
    assert_eq!(last[1], 0.0);
    assert_eq!(last[2], 0.0);
    let running = &rows[..rows.len() - 1];
    assert!(running
        .iter()
        .all(|r| r[1] > 0.0 && r[2] > 0.0 && r[3] > 0.0));
    assert!(rows.windows(2).all(|w| w[1][0] > w[0][0]));
}

#[test]
fn imcurve_reads_config() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("im.toml");
    std::fs::write(&cfg, "[induction]\nslip_points = 5\nslip_min = 0.2\n").unwrap();
    let out = drivesim(&["imcurve", "--config", cfg.to_str().unwrap()], dir.path());
    assert!(out.status.success());
    let csv = String::from_utf8(out.stdout).unwrap();
    let slips: Vec<&str> = csv
        .lines()
        .skip(1)
        .map(|l| l.split(',').next().unwrap())
        .collect();
    assert_eq!(slips, ["0.2", "0.4", "0.6000000000000001", "0.8", "1"]);
}

#[test]
fn invalid_config_gives_error_line() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.toml");
    std::fs::write(&cfg, "duration = 1.0\nno_such_field = 3\n").unwrap();
    let out = drivesim(
        &[
            "simulate",
            "--config",
            cfg.to_str().unwrap(),
            "--modulator",
            "hcc",
        ],
        dir.path(),
    );
    assert!(!out.status.success());
    assert_eq!(error_line(&out)["error"], "config");
}

#[test]
fn missing_config_file() {
    let dir = tempfile::tempdir().unwrap();
    let out = drivesim(&["compare", "--config", "absent.toml"], dir.path());
    assert!(!out.status.success());
    assert_eq!(error_line(&out)["error"], "io");
}

#[test]
fn unknown_modulator_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = drivesim(&["simulate", "--modulator", "foc"], dir.path());
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(error_line(&out)["error"], "usage");
}
