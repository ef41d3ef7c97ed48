use std::path::Path;
use std::process::Command;

use jetdqn::bridge::{Environment, RemoteEnv, RemoteOptions};
use jetdqn::harness::RunConfig;
use jetdqn::thermal::ThermalEnv;

const BIN: &str = env!("CARGO_BIN_EXE_jetdqn");

fn tiny_config(dir: &Path) -> std::path::PathBuf {
    let mut cfg = RunConfig {
        name: "tiny".into(),
        n_episodes: 2,
        eval_duration: 1.0,
        ..RunConfig::default()
    };
    cfg.env.nx = 24;
    cfg.env.ny = 12;
    cfg.env.episode_duration = 1.0;
    cfg.env.calibration = jetdqn::thermal::Calibration::Midpoint;
    cfg.agent.hidden = vec![8];
    cfg.agent.batch_size = 4;
    cfg.agent.learn_start = 4;
    let path = dir.join("tiny.toml");
    std::fs::write(&path, cfg.to_toml_string()).unwrap();
    path
}

fn jetdqn(root: &Path, args: &[&str]) -> std::process::Output {
    Command::new(BIN)
        .args(args)
        .env("JETDQN_OUTPUT_ROOT", root)
        .output()
        .unwrap()
}

#[test]
fn train_evaluate_baseline_roundtrip() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = tiny_config(dir.path());
    let cfg = cfg.to_str().unwrap();
    let out = jetdqn(dir.path(), &["train", "--config", cfg, "--seed", "5"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let run = dir.path().join("tiny");
    for f in ["metrics.csv", "timing.csv", "checkpoint.json", "config.toml"] {
        assert!(run.join(f).exists(), "{f}");
    }
    let saved = RunConfig::load(&run.join("config.toml")).unwrap();
    assert_eq!(saved.seed, 5);

    let ckpt = run.join("checkpoint.json");
    let out = jetdqn(dir.path(), &["evaluate", "--ckpt", ckpt.to_str().unwrap(), "--config", cfg]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let history = std::fs::read_to_string(run.join("eval.csv")).unwrap();
    assert_eq!(history.lines().next().unwrap(), "time_s,v_jet,t_surf,t_star,reward");
    assert_eq!(history.lines().count(), 11);

    let out = jetdqn(dir.path(), &["baseline", "--level", "0", "--config", cfg]);
    assert!(out.status.success());
    assert!(run.join("baseline_0_summary.csv").exists());
    let out = jetdqn(dir.path(), &["baseline", "--level", "10", "--config", cfg]);
    assert!(!out.status.success());
}

#[test]
fn repeated_cli_runs_are_byte_identical() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let cfg = tiny_config(a.path());
    for root in [a.path(), b.path()] {
        assert!(jetdqn(root, &["train", "--config", cfg.to_str().unwrap()]).status.success());
    }
    for f in ["metrics.csv", "checkpoint.json"] {
        let x = std::fs::read(a.path().join("tiny").join(f)).unwrap();
        let y = std::fs::read(b.path().join("tiny").join(f)).unwrap();
        assert_eq!(x, y, "{f}");
    }
}

#[test]
fn bad_inputs_fail_cleanly() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.toml");
    std::fs::write(&bad, "format_version = 9\n").unwrap();
    let out = jetdqn(dir.path(), &["train", "--config", bad.to_str().unwrap()]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("format_version"));
    let cfg = tiny_config(dir.path());
    let junk = dir.path().join("junk.json");
    std::fs::write(&junk, "{\"format\":\"jetdqn-checkpoint\",\"ver").unwrap();
    let out = jetdqn(
        dir.path(),
        &["evaluate", "--ckpt", junk.to_str().unwrap(), "--config", cfg.to_str().unwrap()],
    );
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("format error"));
}

#[test]
fn default_config_parses_back() {
    let out = Command::new(BIN).arg("default-config").output().unwrap();
    let text = String::from_utf8(out.stdout).unwrap();
    assert_eq!(RunConfig::from_toml_str(&text).unwrap(), RunConfig::default());
}

#[test]
fn stdio_server_matches_local_env() {
    let dir = tempfile::tempdir().unwrap();
    let cfg_path = tiny_config(dir.path());
    let mut cmd = Command::new(BIN);
    cmd.args(["serve-env", "--env", "thermal", "--listen", "stdio", "--config"])
        .arg(&cfg_path);
    let mut remote = RemoteEnv::spawn(&mut cmd, RemoteOptions::default()).unwrap();
    let mut local = ThermalEnv::new(RunConfig::load(&cfg_path).unwrap().env).unwrap();
    assert_eq!(remote.reset().unwrap(), Environment::reset(&mut local).unwrap());
    for a in [0, 9, 3, 3, 7, 1, 0, 5, 9, 2] {
        assert_eq!(remote.step(a).unwrap(), Environment::step(&mut local, a).unwrap());
    }
}
