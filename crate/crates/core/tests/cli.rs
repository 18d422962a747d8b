//! The `cfw` binary: commands, report files and exit codes.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn cfw(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_cfw")).args(args).output().expect("cfw runs")
}

fn config(name: &str) -> String {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs").join(name).display().to_string()
}

fn out_dir(tag: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("cfw-test-{}-{tag}", std::process::id()));
    let _ = std::fs::remove_dir_all(&dir);
    dir
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

#[test]
fn diamond_gen_prints_the_set() {
    let dir = out_dir("gen");
    let o = cfw(&["diamond", "gen", "--ps", "2,3,5", "--cap", "100", "--out", dir.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("{2,3,5,6,10,15,30}"));
    let report: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(dir.join("diamond.json")).unwrap()).unwrap();
    assert_eq!(report["schema_version"], 1);
    assert_eq!(report["config"]["diamond"]["gen"][0]["cap"], 100);
    assert_eq!(report["results"]["gen"][0]["set"], serde_json::json!([2, 3, 5, 6, 10, 15, 30]));
}

#[test]
fn diamond_factor_and_check() {
    let dir = out_dir("factor");
    let o = cfw(&["diamond", "factor", "--set", "2,3,6", "--out", dir.to_str().unwrap(), "--json"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("[[2, 3]]"));
    assert!(!dir.join("diamond_results.csv").exists());
    let o = cfw(&["diamond", "check", "--set", "2,3", "--bound", "10", "--out", dir.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn validate_aux_tower_passes() {
    let dir = out_dir("validate");
    let o = cfw(&["validate", "--config", &config("aux.json"), "--out", dir.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    let csv = std::fs::read_to_string(dir.join("validate_levels.csv")).unwrap();
    let rows: Vec<&str> = csv.lines().skip(1).collect();
    assert_eq!(rows.len(), 4);
    assert!(rows.iter().all(|r| r.ends_with("true,true,true,1/1")), "{csv}");
}

#[test]
fn depth_override_reaches_the_tower() {
    let dir = out_dir("depth");
    let o = cfw(&["validate", "--config", &config("aux.json"), "--depth", "2", "--out", dir.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    let report: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(dir.join("validate.json")).unwrap()).unwrap();
    assert_eq!(report["config"]["tower"]["depth"], 2);
    assert_eq!(report["results"]["validation"]["levels"].as_array().unwrap().len(), 2);
}

#[test]
fn rigidity_on_discrete_tower_is_monotone() {
    let dir = out_dir("rigidity");
    let o = cfw(&["rigidity", "--config", &config("rigid_z.json"), "--out", dir.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    let report: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(dir.join("rigidity.json")).unwrap()).unwrap();
    assert_eq!(report["results"]["non_increasing"], true);
    let values: Vec<&str> =
        report["results"]["certified"].as_array().unwrap().iter().map(|r| r["value"].as_str().unwrap()).collect();
    assert_eq!(values, ["1/1", "2/3", "1/2", "2/5"]);
}

#[test]
fn seed_override_changes_samples_deterministically() {
    let run = |seed: &str, tag: &str| {
        let dir = out_dir(tag);
        let o = cfw(&[
            "poisson", "--config", &config("rigid_z.json"), "--seed", seed, "--trials", "2000", "--out", dir.to_str().unwrap(),
        ]);
        assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
        std::fs::read_to_string(dir.join("poisson_histogram.csv")).unwrap()
    };
    let a = run("1", "s1a");
    assert_eq!(a, run("1", "s1b"));
    assert_ne!(a, run("2", "s2"));
}

#[test]
fn config_errors_exit_2() {
    let dir = out_dir("bad");
    std::fs::create_dir_all(&dir).unwrap();
    let bad = dir.join("bad.json");
    std::fs::write(&bad, r#"{"foo": 1}"#).unwrap();
    let o = cfw(&["validate", "--config", bad.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("foo"));

    std::fs::write(&bad, r#"{"poisson": {"trials": 5, "window_level": 0, "work_level": 0, "a": {"level": 0}}}"#).unwrap();
    let o = cfw(&["poisson", "--config", bad.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("seed"));

    assert_eq!(cfw(&["spectral"]).status.code(), Some(2));
}

#[test]
fn runtime_errors_exit_3() {
    // three elements cannot carry four levels
    let dir = out_dir("rt");
    std::fs::create_dir_all(&dir).unwrap();
    let cfg = dir.join("cfg.json");
    std::fs::write(
        &cfg,
        r#"{"tower": {"kind": "rigid-discrete", "group": {"kind": "free-abelian", "rank": 1},
            "sequence": {"kind": "powers", "base": 3, "from": 1, "to": 3}, "depth": 4}}"#,
    )
    .unwrap();
    let o = cfw(&["validate", "--config", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(3), "{}", String::from_utf8_lossy(&o.stderr));
    let o = cfw(&["validate", "--config", &config("aux.json"), "--out", "/proc/forbidden"]);
    assert_eq!(o.status.code(), Some(3));
}

#[test]
fn all_runs_every_block() {
    let dir = out_dir("all");
    for name in ["spectral.json", "replab.json", "diamond.json", "rigid_rm.json"] {
        let o = cfw(&["all", "--config", &config(name), "--out", dir.to_str().unwrap()]);
        assert_eq!(o.status.code(), Some(0), "{name}: {}", stdout(&o));
    }
    for f in ["spectral.json", "replab.json", "diamond.json", "validate.json", "rigidity.json", "rigidity_certified.csv"] {
        assert!(dir.join(f).exists(), "{f}");
    }
}
