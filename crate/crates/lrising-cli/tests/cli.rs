use serde_json::Value;
use std::path::Path;
use std::process::{Command, Output};

fn tool(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_tool")).args(args).current_dir(dir).env_remove("TOOL_THREADS").output().unwrap()
}

fn manifest(dir: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(dir.join("manifest.json")).unwrap()).unwrap()
}

fn write_config(dir: &Path, text: &str) -> String {
    let p = dir.join("cfg.json");
    std::fs::write(&p, text).unwrap();
    p.display().to_string()
}

#[test]
fn passing_run_writes_manifest_and_tables() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), r#"{"N": 2, "samples": 20, "group_N": 4}"#);
    let out = tmp.path().join("run");
    let o = tool(&["contours-verify", "--config", &cfg, "--out", out.to_str().unwrap()], tmp.path());
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(String::from_utf8_lossy(&o.stderr).contains("PASS"));
    let m = manifest(&out);
    assert_eq!(m["tool"], "tool");
    assert_eq!(m["command"], "contours-verify");
    assert_eq!(m["seed"], 2024);
    assert_eq!(m["status"], "pass");
    assert_eq!(m["exit_code"], 0);
    assert!(m["error"].is_null());
    assert_eq!(m["config"]["N"], 2);
    assert_eq!(m["config_sha256"].as_str().unwrap().len(), 64);
    assert!(m["wall_time_seconds"].as_f64().unwrap() >= 0.0);
    assert!(m["threads"].as_u64().unwrap() >= 1);
    let outputs: Vec<&str> = m["outputs"].as_array().unwrap().iter().map(|v| v.as_str().unwrap()).collect();
    assert!(!outputs.is_empty());
    for f in outputs {
        assert!(out.join(f).is_file(), "{f}");
    }
    assert!(!m["assertions"].as_array().unwrap().is_empty());
}

#[test]
fn seed_flag_overrides_config() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), r#"{"N": 1, "samples": 10, "group_N": 3, "seed": 1}"#);
    let o = tool(&["contours-verify", "--config", &cfg, "--seed", "77", "--out", "r"], tmp.path());
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(manifest(&tmp.path().join("r"))["seed"], 77);
}

#[test]
fn config_errors_exit_two_with_manifest() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), r#"{"alpha": 0.4, "N": 3, "bogus": 1}"#);
    let o = tool(&["gibbs-exact", "--config", &cfg, "--out", "bad"], tmp.path());
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("unknown key 'bogus'"));
    let m = manifest(&tmp.path().join("bad"));
    assert_eq!(m["exit_code"], 2);
    assert_eq!(m["command"], "gibbs-exact");
    assert!(m["error"]["message"].as_str().unwrap().contains("bogus"));
}

#[test]
fn unknown_command_and_missing_file() {
    let tmp = tempfile::tempdir().unwrap();
    let o = tool(&["nope"], tmp.path());
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("unknown command 'nope'"));
    let o = tool(&["rho-scan", "--config", "missing.json"], tmp.path());
    assert_eq!(o.status.code(), Some(2));
    let o = tool(&[], tmp.path());
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn thread_count_must_be_positive() {
    let tmp = tempfile::tempdir().unwrap();
    let o = Command::new(env!("CARGO_BIN_EXE_tool"))
        .args(["contours-verify", "--out", "t"])
        .current_dir(tmp.path())
        .env("TOOL_THREADS", "0")
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("TOOL_THREADS"));
}

#[test]
fn failing_assertion_exits_one() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), r#"{"m_max": 2, "beta": [1.0, 2.0], "thresholds": {"rho_max": 1e-300}}"#);
    let o = tool(&["rho-scan", "--config", &cfg, "--out", "f"], tmp.path());
    assert_eq!(o.status.code(), Some(1), "{}", String::from_utf8_lossy(&o.stderr));
    let m = manifest(&tmp.path().join("f"));
    assert_eq!(m["status"], "fail");
    assert!(String::from_utf8_lossy(&o.stderr).contains("FAIL"));
}

#[test]
fn repeated_runs_are_byte_identical() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), r#"{"alpha": 0.75, "N_grid": [16, 32], "samples": 500}"#);
    for d in ["a", "b"] {
        let o = tool(&["toy-scan", "--config", &cfg, "--out", d], tmp.path());
        assert!(o.status.code().unwrap() <= 1);
    }
    let a = manifest(&tmp.path().join("a"));
    for f in a["outputs"].as_array().unwrap() {
        let f = f.as_str().unwrap();
        assert_eq!(
            std::fs::read(tmp.path().join("a").join(f)).unwrap(),
            std::fs::read(tmp.path().join("b").join(f)).unwrap()
        );
    }
}
