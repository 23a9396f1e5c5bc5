use std::path::Path;
use std::process::{Command, Output};

fn maslov(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_maslov")).args(args).output().unwrap()
}

fn write_config(dir: &Path, name: &str, body: &str) -> String {
    let path = dir.join(name);
    std::fs::write(&path, body).unwrap();
    path.to_str().unwrap().to_string()
}

fn harmonic(out: &Path) -> String {
    format!(
        r#"{{"system": {{"builtin": "harmonic"}}, "initial": {{"state": [1.0, 0.0]}},
            "time": {{"t1": 6.283185307179586, "dt": 0.001}}, "output": {{"path": {:?}}}}}"#,
        out.to_str().unwrap()
    )
}

#[test]
fn index_harmonic_period() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("h.csv");
    let cfg = write_config(dir.path(), "h.json", &harmonic(&out));
    let run = maslov(&["index", &cfg]);
    assert_eq!(run.status.code(), Some(0), "{}", String::from_utf8_lossy(&run.stderr));
    let csv = std::fs::read_to_string(&out).unwrap();
    assert!(csv.starts_with("t,arg_delta_unwrapped,alpha_mi,mi_checkpoint,vert_dim,conformal_defect\n"));
    let last: Vec<&str> = csv.lines().last().unwrap().split(',').collect();
    assert!((last[2].parse::<f64>().unwrap() + 2.0).abs() < 1e-6);
    assert_eq!(last[3], "-2");
}

#[test]
fn index_output_is_byte_stable() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("h.csv");
    let cfg = write_config(dir.path(), "h.json", &harmonic(&out));
    maslov(&["index", &cfg]);
    let first = std::fs::read(&out).unwrap();
    maslov(&["index", &cfg]);
    assert_eq!(first, std::fs::read(&out).unwrap());
}

#[test]
fn free_motion_stays_at_zero() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("f.csv");
    let cfg = write_config(dir.path(), "f.json", &harmonic(&out));
    let run = maslov(&["index", &cfg, "--set", "system.builtin=free", "--set", "time.t1=20"]);
    assert_eq!(run.status.code(), Some(0));
    let csv = std::fs::read_to_string(&out).unwrap();
    for line in csv.lines().skip(1) {
        let cols: Vec<&str> = line.split(',').collect();
        assert!(cols[2].parse::<f64>().unwrap().abs() < 1e-9);
        assert_eq!(cols[3], "0");
    }
}

#[test]
fn malformed_config_writes_nothing() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("never.csv");
    let cfg = write_config(dir.path(), "bad.json", "{\"system\": ");
    let run = maslov(&["index", &cfg]);
    assert_eq!(run.status.code(), Some(2));
    assert!(!out.exists());

    let cfg = write_config(dir.path(), "h.json", &harmonic(&out));
    for set in ["time.dt=-1", "system.builtin=nope", "bogus=1"] {
        let run = maslov(&["index", &cfg, "--set", set]);
        assert_eq!(run.status.code(), Some(2), "{set}");
        assert!(!out.exists());
    }
}

#[test]
fn numerical_failure_exits_three() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("v.csv");
    let cfg = write_config(dir.path(), "h.json", &harmonic(&out));
    // RK4 is unstable for the oscillator at this step size
    let run = maslov(&["index", &cfg, "--set", "time.dt=3", "--set", "time.t1=10000"]);
    assert_eq!(run.status.code(), Some(3), "{}", String::from_utf8_lossy(&run.stderr));
    assert!(!out.exists());
}

#[test]
fn asymptotic_report_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("a.json");
    let cfg = write_config(dir.path(), "h.json", &harmonic(&out));
    let run = maslov(&["asymptotic", &cfg, "--set", "time.t1=40"]);
    assert_eq!(run.status.code(), Some(0), "{}", String::from_utf8_lossy(&run.stderr));
    let text = std::fs::read_to_string(&out).unwrap();
    let v: serde_json::Value = serde_json::from_str(&text).unwrap();
    let rate = v["rate"].as_f64().unwrap();
    assert!((rate + 1.0 / std::f64::consts::PI).abs() < 2e-2, "{rate}");
    assert_eq!(maslov_core::io::reformat_json::<maslov_core::asymptotic::AsymptoticEstimate>(&text).unwrap(), text);
}

#[test]
fn scan_writes_csv_and_summary() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("s.csv");
    let body = format!(
        r#"{{"system": {{"builtin": "damped_pendulum", "params": {{"a": 0.1}}}},
            "time": {{"t1": 5.0, "dt": 0.01}}, "scan": {{"n_points": 8}}, "output": {{"path": {:?}}}}}"#,
        out.to_str().unwrap()
    );
    let cfg = write_config(dir.path(), "s.json", &body);
    let run = maslov(&["scan", &cfg]);
    assert_eq!(run.status.code(), Some(0), "{}", String::from_utf8_lossy(&run.stderr));
    let csv = std::fs::read_to_string(&out).unwrap();
    assert_eq!(csv.lines().next().unwrap(), "point_index,q0,p0,min_mi,max_mi,skips");
    assert_eq!(csv.lines().count(), 9);
    assert!(dir.path().join("s.csv.summary.json").exists());
}

#[test]
fn twist_certificate_for_harmonic() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("t.json");
    let cfg = write_config(dir.path(), "h.json", &harmonic(&out));
    let run = maslov(&["twist", &cfg]);
    assert_eq!(run.status.code(), Some(0));
    assert!(std::fs::read_to_string(&out).unwrap().contains("\"verdict\": \"strict-twist\""));
}

#[test]
fn thread_cap_must_be_positive() {
    let run = Command::new(env!("CARGO_BIN_EXE_maslov")).env("MASLOV_THREADS", "0").args(["selftest"]).output().unwrap();
    assert_eq!(run.status.code(), Some(2));
}

#[test]
fn flipped_crossing_sign_fails_selftest() {
    let run = maslov(&["selftest", "--flip-crossing-sign"]);
    assert_eq!(run.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&run.stdout).contains("FAIL crossing-vs-identity"));
}

#[test]
fn selftest_passes() {
    let run = maslov(&["selftest"]);
    assert_eq!(run.status.code(), Some(0), "{}", String::from_utf8_lossy(&run.stdout));
}
