//! Harness-level integration tests: statistics, CSV invariants, controller
//! wiring, and the Lagrangian-reduces-to-unconstrained identity.

use simmer_core::harness::{
    cost_statistic, read_epochs_csv, run_experiment, target_violation, ControllerId, EnvId,
    LearnerId, TrainConfig,
};
use simmer_core::saute::ConstraintMode;

#[test]
fn cost_statistic_examples() {
    let costs = [3.0, 5.0, 7.0];
    assert_eq!(cost_statistic(&costs, ConstraintMode::Average).unwrap(), 5.0);
    assert_eq!(cost_statistic(&costs, ConstraintMode::ProbOne).unwrap(), 7.0);
    // A single trajectory makes both modes agree.
    assert_eq!(
        cost_statistic(&[4.2], ConstraintMode::Average).unwrap(),
        cost_statistic(&[4.2], ConstraintMode::ProbOne).unwrap()
    );
    assert!(cost_statistic(&[], ConstraintMode::Average).is_err());
}

#[test]
fn target_violation_examples() {
    assert_eq!(target_violation(30.0, 40.0), 0.0);
    assert_eq!(target_violation(47.0, 40.0), 7.0);
}

fn tiny_pendulum(controller: ControllerId) -> TrainConfig {
    let mut cfg = TrainConfig::default();
    cfg.epochs = 6;
    cfg.trajectories_per_epoch = 3;
    cfg.controller = controller;
    cfg.ppo.inner_epochs = 2;
    cfg.seed = 11;
    cfg
}

#[test]
fn csv_rows_satisfy_the_violation_identity() {
    // Every logged (budget, statistic, violation) triple satisfies
    // violation = max(0, statistic - d_target), and the summary's total is
    // exactly the recomputed column sum.
    let cfg = tiny_pendulum(ControllerId::Pi);
    let dir = std::env::temp_dir().join("simmer_harness_csv");
    let summary = run_experiment(&cfg, &dir).unwrap();
    let rows = read_epochs_csv(dir.join("epochs.csv")).unwrap();
    assert_eq!(rows.len(), cfg.epochs);
    let d_target = cfg.d_target();
    let mut total = 0.0;
    for row in &rows {
        assert_eq!(row.target_violation, (row.cost_stat - d_target).max(0.0));
        assert!(row.budget >= cfg.d_start() && row.budget <= d_target);
        total += row.target_violation;
    }
    assert_eq!(total, summary.total_target_violation);
    assert_eq!(
        summary.total_violating_trajectories,
        rows.iter().map(|r| r.n_violations).sum::<usize>()
    );
}

#[test]
fn fixed_controller_trains_at_the_target_every_epoch() {
    let cfg = tiny_pendulum(ControllerId::Fixed);
    let dir = std::env::temp_dir().join("simmer_harness_fixed");
    run_experiment(&cfg, &dir).unwrap();
    let rows = read_epochs_csv(dir.join("epochs.csv")).unwrap();
    assert!(rows.iter().all(|r| r.budget == cfg.d_target()));
}

#[test]
fn naive_controller_follows_the_staircase() {
    let mut cfg = tiny_pendulum(ControllerId::Naive);
    cfg.budget.levels = vec![5.0, 10.0, 20.0];
    cfg.budget.epochs_per_level = 2;
    let dir = std::env::temp_dir().join("simmer_harness_naive");
    run_experiment(&cfg, &dir).unwrap();
    let rows = read_epochs_csv(dir.join("epochs.csv")).unwrap();
    let budgets: Vec<f64> = rows.iter().map(|r| r.budget).collect();
    assert_eq!(budgets, vec![5.0, 5.0, 10.0, 10.0, 20.0, 20.0]);
}

#[test]
fn lagrangian_with_inactive_multiplier_reduces_to_plain_ppo() {
    // With a budget no batch can exceed, lambda stays exactly zero and the
    // mixed reward is the identity, so the Lagrangian learner's parameter
    // trajectory -- and hence the logged CSV -- is bit-identical to the
    // unconstrained learner under the same seed.
    let mut plain = tiny_pendulum(ControllerId::Fixed);
    plain.learner = LearnerId::Ppo;
    plain.constraint_mode = ConstraintMode::Average;
    plain.budget.levels = vec![1e7];
    let mut lag = plain.clone();
    lag.learner = LearnerId::Lagrangian;

    let d1 = std::env::temp_dir().join("simmer_harness_red_plain");
    let d2 = std::env::temp_dir().join("simmer_harness_red_lag");
    run_experiment(&plain, &d1).unwrap();
    run_experiment(&lag, &d2).unwrap();
    let a = std::fs::read(d1.join("epochs.csv")).unwrap();
    let b = std::fs::read(d2.join("epochs.csv")).unwrap();
    assert_eq!(a, b);
    let rows = read_epochs_csv(d2.join("epochs.csv")).unwrap();
    assert!(rows.iter().all(|r| r.lambda == 0.0));
}

#[test]
fn q_controller_logs_its_level() {
    let mut cfg = tiny_pendulum(ControllerId::Q);
    cfg.budget.levels = vec![5.0, 10.0, 20.0];
    let dir = std::env::temp_dir().join("simmer_harness_qlog");
    run_experiment(&cfg, &dir).unwrap();
    let rows = read_epochs_csv(dir.join("epochs.csv")).unwrap();
    assert!(rows.iter().all(|r| r.q_level < 3));
}

#[test]
fn grid_runs_write_consistent_artifacts() {
    let mut cfg = TrainConfig::default();
    cfg.env = EnvId::Grid;
    cfg.learner = LearnerId::Tabular;
    cfg.gamma_r = 1.0;
    cfg.epochs = 5;
    cfg.trajectories_per_epoch = 4;
    cfg.budget.levels = vec![4.0];
    let dir = std::env::temp_dir().join("simmer_harness_grid");
    let summary = run_experiment(&cfg, &dir).unwrap();
    assert!(summary.is_ok());
    assert!(dir.join("policy.json").is_file());
    let rows = read_epochs_csv(dir.join("epochs.csv")).unwrap();
    assert_eq!(rows.len(), 5);
}

#[test]
fn invalid_configs_are_rejected_before_running() {
    let mut cfg = TrainConfig::default();
    cfg.epochs = 0;
    assert!(run_experiment(&cfg, std::env::temp_dir().join("simmer_harness_bad")).is_err());
}
