use std::path::Path;
use std::process::{Command, Output};

fn twistlaw(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_twistlaw"))
        .args(args)
        .current_dir(cwd)
        .env_remove("TWISTLAW_OUT_DIR")
        .output()
        .unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn usage_errors_exit_nonzero() {
    let dir = tempfile::tempdir().unwrap();
    let cases: [(&[&str], &str); 7] = [
        (&["cf-dv", "--n", "1", "--seed", "1"], "n = 1"),
        (&["cf-dv", "--n", "200"], "--seed"),
        (&["sim", "--surface", "2; (); ()", "--seed", "1"], "disconnected"),
        (&["sim", "--surface", "torus", "--eps", "0.9", "--seed", "1"], "eps0 = 0.5"),
        (&["estimate", "--surface", "torus", "--rays", "1", "--seed", "1"], "at least 30"),
        (&["oracle", "--surface", "torus", "--samples", "10", "--seed", "1"], "samples"),
        (&["oracle", "--surface", "torus", "--ladder", "1,2", "--samples", "1000", "--seed", "1"], "rungs"),
    ];
    for (args, needle) in cases {
        let o = twistlaw(args, dir.path());
        assert_eq!(o.status.code(), Some(2), "{args:?}: {}", stderr(&o));
        assert!(stderr(&o).contains(needle), "{args:?}: {}", stderr(&o));
    }
    let o = twistlaw(&["no-such-command"], dir.path());
    assert_eq!(o.status.code(), Some(2));
    assert_eq!(std::fs::read_dir(dir.path()).unwrap().count(), 0);
}

#[test]
fn config_file_and_flags() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.cfg");
    std::fs::write(&cfg, "# small run\nn = 150\nsamples = 10\nseed = 3\n").unwrap();
    let cfg = cfg.to_str().unwrap();
    let o = twistlaw(&["cf-dv", "--config", cfg, "--samples", "12", "--out", "a"], dir.path());
    assert!(o.status.success(), "{}", stderr(&o));
    let s: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("a/cf_dv_summary.json")).unwrap()).unwrap();
    assert_eq!(s["config"]["n"], "150");
    assert_eq!(s["config"]["samples"], "12");
    assert_eq!(s["config"]["seed"], "3");
    let trace = std::fs::read_to_string(dir.path().join("a/cf_dv_trace.csv")).unwrap();
    assert!(trace.starts_with("# twistlaw"));
    assert_eq!(trace.lines().filter(|l| !l.starts_with('#')).count(), 1 + 12);

    std::fs::write(dir.path().join("bad.cfg"), "seed = 1\ncolour = red\n").unwrap();
    let o = twistlaw(&["cf-dv", "--config", "bad.cfg"], dir.path());
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("colour"));
}

#[test]
fn out_dir_from_environment() {
    let dir = tempfile::tempdir().unwrap();
    let o = Command::new(env!("CARGO_BIN_EXE_twistlaw"))
        .args(["sim", "--surface", "3; (1 2); (1 3)", "--T", "10,30", "--seed", "2"])
        .current_dir(dir.path())
        .env("TWISTLAW_OUT_DIR", dir.path().join("env_out"))
        .output()
        .unwrap();
    assert!(o.status.success(), "{}", stderr(&o));
    let csv = std::fs::read_to_string(dir.path().join("env_out/sim_excursions.csv")).unwrap();
    assert!(csv.lines().any(|l| l == "# stratum [2]"));
    assert!(csv.lines().any(|l| l.starts_with("trajectory_id,label,t_entry")));
    let json: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("env_out/sim_series.json")).unwrap()).unwrap();
    assert_eq!(json["stratum"], serde_json::json!([2]));
    assert_eq!(json["config"]["surface"], "3; (1 2); (1 3)");
}

#[test]
fn decompose_prints_tables() {
    let dir = tempfile::tempdir().unwrap();
    let o = twistlaw(&["decompose", "--surface", "3; (1 2); (1 3)", "--direction", "1,0"], dir.path());
    assert!(o.status.success());
    let out = String::from_utf8(o.stdout).unwrap();
    let rows: Vec<&str> = out.lines().filter(|l| !l.starts_with('#')).skip(1).collect();
    assert_eq!(rows.len(), 2);
    assert!(out.contains("stratum [2], genus 2"));
}
