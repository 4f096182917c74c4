use std::path::Path;
use std::process::{Command, Output};

fn mixtype(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_mixtype")).args(args).output().expect("binary runs")
}

fn report(dir: &Path) -> serde_json::Value {
    serde_json::from_str(&std::fs::read_to_string(dir.join("report.json")).unwrap()).unwrap()
}

fn write_config(dir: &Path, body: &str) -> String {
    let path = dir.join("run.cfg");
    std::fs::write(&path, body).unwrap();
    path.to_string_lossy().into_owned()
}

#[test]
fn help_lists_exit_codes() {
    let out = mixtype(&["--help"]);
    assert!(out.status.success());
    let text = String::from_utf8_lossy(&out.stdout);
    for code in ["0", "2", "3", "7", "9", "10"] {
        assert!(text.lines().any(|l| l.trim_start().starts_with(code)), "missing exit code {code}:\n{text}");
    }
}

#[test]
fn reversed_counterexample_reports_orientation() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "[run]\nscenario = counterexample\n[coefficients]\npreset = reversed\n[grid]\nh = 0.03125\n");
    let out = mixtype(&["--config", &cfg, "--out", dir.path().to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let r = report(dir.path());
    assert_eq!(r["failure_mode"], "orientation");
    assert!(dir.path().join("region_map.csv").exists());
}

#[test]
fn zero_composite_writes_zero_field() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "[run]\nscenario = composite-linear\n[data]\nkind = zero\n");
    let out = mixtype(&["--config", &cfg, "--out", dir.path().to_str().unwrap(), "--h", "0.03125"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let text = std::fs::read_to_string(dir.path().join("u.csv")).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("x,y,value"));
    let mut rows = 0;
    for l in lines {
        let v: f64 = l.rsplit(',').next().unwrap().parse().unwrap();
        assert_eq!(v, 0.0);
        rows += 1;
    }
    assert!(rows > 0);
    let head = std::fs::read_to_string(dir.path().join("region_map.csv")).unwrap();
    assert!(head.starts_with("x,y,label"));
    let energy = std::fs::read_to_string(dir.path().join("energy.csv")).unwrap();
    assert!(energy.starts_with("y,E"));
    assert_eq!(report(dir.path())["status"], "pass");
}

#[test]
fn unknown_key_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "[grid]\nspacing = 0.1\n");
    let out = mixtype(&["--config", &cfg, "--out", dir.path().to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("spacing"));
}

#[test]
fn bad_expression_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "[data]\nkind = expression\nf = sin(x\n");
    let out = mixtype(&["--config", &cfg, "--out", dir.path().to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn reversed_composite_exits_with_geometry_code() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "[run]\nscenario = composite-linear\n[coefficients]\npreset = reversed\n[data]\nkind = zero\n");
    let out = mixtype(&["--config", &cfg, "--out", dir.path().to_str().unwrap(), "--h", "0.03125"]);
    assert_eq!(out.status.code(), Some(3));
    let r = report(dir.path());
    assert_eq!(r["error"]["kind"], "orientation");
}

#[test]
fn failing_assertion_exits_ten() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "[run]\nscenario = elliptic-only\n[solver]\nerror_bound = 1e-12\n");
    let out = mixtype(&["--config", &cfg, "--out", dir.path().to_str().unwrap(), "--h", "0.0625"]);
    assert_eq!(out.status.code(), Some(10));
    let r = report(dir.path());
    let failed: Vec<_> = r["assertions"].as_array().unwrap().iter().filter(|a| a["pass"] == false).collect();
    assert_eq!(failed.len(), 1);
    assert_eq!(failed[0]["name"], "relative_l2_error");
}
