//! End-to-end checks of the `simmer` binary surfaces.

use std::path::PathBuf;
use std::process::Command;

fn simmer() -> Command {
    Command::new(env!("CARGO_BIN_EXE_simmer"))
}

fn write_config(dir: &std::path::Path) -> PathBuf {
    let path = dir.join("tiny.toml");
    std::fs::write(
        &path,
        "env = \"pendulum\"\nepochs = 2\ntrajectories_per_epoch = 2\ncontroller = \"pi\"\n",
    )
    .unwrap();
    path
}

#[test]
fn run_produces_all_artifacts() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path());
    let out = tmp.path().join("run1");
    let status = simmer()
        .args(["run", "--config"])
        .arg(&cfg)
        .args(["--seed", "3", "--out"])
        .arg(&out)
        .args(["--set", "ppo.inner_epochs=2"])
        .status()
        .unwrap();
    assert!(status.success());
    for artifact in ["config.toml", "epochs.csv", "policy.json", "summary.json"] {
        assert!(out.join(artifact).is_file(), "missing {artifact}");
    }
    let summary: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out.join("summary.json")).unwrap()).unwrap();
    assert_eq!(summary["status"], "ok");
    assert_eq!(summary["seed"], 3);
    // The snapshot records the override.
    let snapshot = std::fs::read_to_string(out.join("config.toml")).unwrap();
    assert!(snapshot.contains("inner_epochs = 2"));
}

#[test]
fn seed_env_var_is_the_fallback() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path());
    let out = tmp.path().join("run_env");
    let status = simmer()
        .env("SIMMER_SEED", "9")
        .args(["run", "--config"])
        .arg(&cfg)
        .arg("--out")
        .arg(&out)
        .args(["--set", "ppo.inner_epochs=1"])
        .status()
        .unwrap();
    assert!(status.success());
    let summary: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out.join("summary.json")).unwrap()).unwrap();
    assert_eq!(summary["seed"], 9);
}

#[test]
fn sweep_and_report_round_trip() {
    let tmp = tempfile::tempdir().unwrap();
    write_config(tmp.path());
    let runs = tmp.path().join("runs");
    let status = simmer()
        .args(["sweep", "--configs"])
        .arg(tmp.path().join("*.toml"))
        .args(["--seeds", "0..1", "--jobs", "2", "--out"])
        .arg(&runs)
        .args(["--set", "ppo.inner_epochs=1", "--set", "epochs=2"])
        .status()
        .unwrap();
    assert!(status.success());
    assert!(runs.join("sweep_summary.csv").is_file());
    assert!(runs.join("tiny_seed0").join("epochs.csv").is_file());
    assert!(runs.join("tiny_seed1").join("epochs.csv").is_file());

    let status = simmer().args(["report", "--runs"]).arg(&runs).status().unwrap();
    assert!(status.success());
    for artifact in ["aggregate.csv", "return.svg", "cost.svg", "budget.svg"] {
        assert!(runs.join(artifact).is_file(), "missing {artifact}");
    }
}

#[test]
fn oracle_regen_reproduces_the_golden_file() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("crossing.golden");
    let output = simmer()
        .args(["oracle", "regen", "--out"])
        .arg(&out)
        .output()
        .unwrap();
    assert!(output.status.success());
    let regenerated = std::fs::read_to_string(&out).unwrap();
    let shipped = std::fs::read_to_string(concat!(
        env!("CARGO_MANIFEST_DIR"),
        "/../core/fixtures/crossing.golden"
    ))
    .unwrap();
    assert_eq!(regenerated, shipped);
}
