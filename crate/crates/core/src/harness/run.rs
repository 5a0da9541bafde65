//! The per-epoch bilevel loop: budget from the controller, one batch, one
//! learner update, statistics, controller update, CSV row.

use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::envs::{Cell, Env, GridAction, GridEnv, GridSpec, PendulumEnv, PendulumState};
use crate::learners::{
    self, lagrangian_update, pg_update, pid_lagrangian_update, Adam, EpochBatch, GaussianPolicy,
    LagrangianState, Mlp, TabularQ, TabularState, TabularTransition, TrajView,
};
use crate::saute::{ConstraintMode, SauteConfig};
use crate::simmer::{BudgetSchedule, PiSimmer, QSimmer};

use super::config::{ControllerId, EnvId, LearnerId, PiSignal, TrainConfig};

/// Per-epoch record; the CSV column order is fixed:
/// `k, d_ref, d_k, mean_return, cost_stat, n_violations, target_violation,
/// lambda, w, integral, q_level`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochStats {
    pub epoch: usize,
    pub d_ref: f64,
    pub budget: f64,
    pub mean_return: f64,
    pub cost_stat: f64,
    pub n_violations: usize,
    pub target_violation: f64,
    pub lambda: f64,
    pub pi_w: f64,
    pub pi_integral: f64,
    pub q_level: usize,
}

pub const CSV_HEADER: &str =
    "k,d_ref,d_k,mean_return,cost_stat,n_violations,target_violation,lambda,w,integral,q_level";

impl EpochStats {
    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{},{},{},{}",
            self.epoch,
            self.d_ref,
            self.budget,
            self.mean_return,
            self.cost_stat,
            self.n_violations,
            self.target_violation,
            self.lambda,
            self.pi_w,
            self.pi_integral,
            self.q_level
        )
    }

    pub fn parse_csv_row(line: &str) -> crate::Result<Self> {
        let f: Vec<&str> = line.split(',').collect();
        if f.len() != 11 {
            return Err(crate::Error::parse("epochs.csv", format!("bad row {line:?}")));
        }
        let num = |s: &str| -> crate::Result<f64> {
            s.parse().map_err(|e| crate::Error::parse("epochs.csv", e))
        };
        Ok(EpochStats {
            epoch: num(f[0])? as usize,
            d_ref: num(f[1])?,
            budget: num(f[2])?,
            mean_return: num(f[3])?,
            cost_stat: num(f[4])?,
            n_violations: num(f[5])? as usize,
            target_violation: num(f[6])?,
            lambda: num(f[7])?,
            pi_w: num(f[8])?,
            pi_integral: num(f[9])?,
            q_level: num(f[10])? as usize,
        })
    }
}

/// The epoch cost statistic: the empirical mean of the discounted cost in
/// average mode, the maximum in probability-one mode.
pub fn cost_statistic(costs: &[f64], mode: ConstraintMode) -> crate::Result<f64> {
    if costs.is_empty() {
        return Err(crate::Error::EmptyBatch);
    }
    Ok(match mode {
        ConstraintMode::Average => costs.iter().sum::<f64>() / costs.len() as f64,
        ConstraintMode::ProbOne => costs.iter().fold(f64::NEG_INFINITY, |a, &b| a.max(b)),
    })
}

/// ReLU of the excess over the target budget.
pub fn target_violation(statistic: f64, d_target: f64) -> f64 {
    (statistic - d_target).max(0.0)
}

/// End-of-run summary, persisted as `summary.json`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunSummary {
    pub status: String,
    pub seed: u64,
    pub epochs_run: usize,
    /// Sum over epochs of `max(0, cost_stat - d_target)`.
    pub total_target_violation: f64,
    /// Trajectories whose discounted cost exceeded the target budget.
    pub total_violating_trajectories: usize,
    pub final_mean_return: f64,
    pub final_cost_stat: f64,
}

impl RunSummary {
    pub fn is_ok(&self) -> bool {
        self.status == "ok"
    }
}

enum Controller {
    Fixed,
    Naive,
    Pi(PiSimmer),
    Q(QSimmer),
}

impl Controller {
    fn budget(&self, schedule: &BudgetSchedule, epoch: usize) -> f64 {
        match self {
            Controller::Fixed => schedule.d_target(),
            Controller::Naive => schedule.naive(epoch),
            Controller::Pi(pi) => pi.budget(),
            Controller::Q(q) => q.budget(),
        }
    }

    fn reference(&self, schedule: &BudgetSchedule, epoch: usize) -> f64 {
        match self {
            Controller::Fixed => schedule.d_target(),
            Controller::Naive => schedule.naive(epoch),
            Controller::Pi(_) => schedule.naive(epoch),
            Controller::Q(q) => q.budget(),
        }
    }
}

/// A PPO-family learner bundled with its optimizers and multiplier state.
struct PolicyLearner {
    policy: GaussianPolicy,
    value: Mlp,
    adam_pi: Adam,
    adam_v: Adam,
    lagrangian: LagrangianState,
    updates: usize,
}

impl PolicyLearner {
    fn new(cfg: &TrainConfig, obs_dim: usize, rng: &mut ChaCha8Rng) -> Self {
        let mut sizes = vec![obs_dim];
        sizes.extend_from_slice(&cfg.ppo.hidden);
        sizes.push(1);
        let policy = GaussianPolicy::new(sizes.clone(), cfg.ppo.log_std_init, rng);
        let value = Mlp::new(sizes, rng);
        let adam_pi = Adam::new(cfg.ppo.lr, policy.n_params());
        let adam_v = Adam::new(cfg.ppo.value_lr, value.n_params());
        PolicyLearner {
            policy,
            value,
            adam_pi,
            adam_v,
            lagrangian: LagrangianState::default(),
            updates: 0,
        }
    }

    /// One update: refresh the multiplier from the batch statistics, mix
    /// the learning reward, and take the clipped-gradient step. The batch
    /// is consumed; on-policy data never outlives its epoch.
    fn update(
        &mut self,
        cfg: &TrainConfig,
        batch: EpochBatch<PendulumState, f64>,
        budget: f64,
        rng: &mut ChaCha8Rng,
    ) -> crate::Result<()> {
        let costs: Vec<f64> =
            batch.trajectories.iter().map(|t| t.discounted_cost).collect();
        let mean_cost = cost_statistic(&costs, ConstraintMode::Average)?;
        match cfg.learner {
            LearnerId::Lagrangian => {
                self.lagrangian = lagrangian_update(
                    self.lagrangian,
                    mean_cost,
                    budget,
                    cfg.lagrangian.lr_lambda,
                );
            }
            LearnerId::PidLagrangian => {
                self.lagrangian = pid_lagrangian_update(
                    self.lagrangian,
                    mean_cost,
                    budget,
                    cfg.lagrangian.kp,
                    cfg.lagrangian.ki,
                );
            }
            _ => {}
        }
        let lambda = self.lagrangian;
        let mixes: Vec<Vec<f64>> = batch
            .trajectories
            .iter()
            .map(|t| {
                t.steps
                    .iter()
                    .map(|s| lambda.mix(s.reshaped_reward, s.cost))
                    .collect()
            })
            .collect();
        let mut actions_store: Vec<Vec<Vec<f64>>> = Vec::with_capacity(batch.trajectories.len());
        for t in &batch.trajectories {
            actions_store.push(t.steps.iter().map(|s| vec![s.action]).collect());
        }
        let obs_store: Vec<Vec<Vec<f64>>> = batch
            .trajectories
            .iter()
            .map(|t| t.steps.iter().map(|s| s.obs.clone()).collect())
            .collect();
        let logp_store: Vec<Vec<f64>> = batch
            .trajectories
            .iter()
            .map(|t| t.steps.iter().map(|s| s.log_prob).collect())
            .collect();
        let views: Vec<TrajView> = (0..batch.trajectories.len())
            .map(|i| TrajView {
                obs: &obs_store[i],
                actions: &actions_store[i],
                log_probs: &logp_store[i],
                rewards: mixes[i].clone(),
                final_obs: batch.trajectories[i].final_obs.as_deref(),
            })
            .collect();
        pg_update(
            &mut self.policy,
            &mut self.value,
            &mut self.adam_pi,
            &mut self.adam_v,
            &views,
            &cfg.ppo,
            rng,
        )?;
        self.updates += 1;
        Ok(())
    }
}

/// Tabular learner bundled with its table.
struct GridLearner {
    table: TabularQ,
    updates: usize,
}

impl GridLearner {
    fn update(
        &mut self,
        cfg: &TrainConfig,
        batch: EpochBatch<Cell, GridAction>,
        horizon: usize,
    ) -> crate::Result<()> {
        for traj in &batch.trajectories {
            for s in &traj.steps {
                let tr = TabularTransition {
                    state: TabularState {
                        cell: s.env_state,
                        z: self.table.clamp_z(s.z),
                        t: s.t,
                    },
                    action: s.action,
                    reward: s.reshaped_reward,
                    next_state: TabularState {
                        cell: s.next_env_state,
                        z: self.table.clamp_z(s.next_z),
                        t: s.t + 1,
                    },
                    terminal: s.done || s.t + 1 >= horizon,
                };
                self.table.update(&tr, cfg.tabular.lr, cfg.gamma_r);
            }
        }
        self.updates += 1;
        Ok(())
    }
}

/// Resolves the grid spec from the config (the shipped fixture by default).
pub fn resolve_grid(cfg: &TrainConfig) -> crate::Result<GridSpec> {
    match &cfg.grid.file {
        Some(path) => GridSpec::from_file(path),
        None => Ok(crate::oracle::crossing_fixture()),
    }
}

fn saute_config(cfg: &TrainConfig, horizon: usize) -> crate::Result<SauteConfig> {
    let sc = SauteConfig::new(
        cfg.gamma_l,
        cfg.saute.delta_penalty.unwrap_or(horizon as f64),
        cfg.constraint_mode,
        cfg.saute.z_normalizer.unwrap_or_else(|| cfg.d_target()).max(1e-12),
    );
    sc.validate()?;
    Ok(sc)
}

/// Runs one experiment, writing `config.toml`, `epochs.csv`, `policy.json`
/// and `summary.json` into `out_dir`. A non-finite loss marks the run
/// failed; the logs written so far are retained.
pub fn run_experiment(cfg: &TrainConfig, out_dir: impl AsRef<Path>) -> crate::Result<RunSummary> {
    cfg.validate()?;
    let out_dir = out_dir.as_ref();
    fs::create_dir_all(out_dir).map_err(|e| crate::Error::io(out_dir, e))?;
    fs::write(out_dir.join("config.toml"), cfg.to_toml())
        .map_err(|e| crate::Error::io(out_dir.join("config.toml"), e))?;

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let schedule = BudgetSchedule::new(cfg.budget.levels.clone(), cfg.budget.epochs_per_level)?;
    let mut controller = match cfg.controller {
        ControllerId::Fixed => Controller::Fixed,
        ControllerId::Naive => Controller::Naive,
        ControllerId::Pi => Controller::Pi(PiSimmer::new(
            cfg.pi.controller,
            schedule.d_start(),
            schedule.d_target(),
        )),
        ControllerId::Q => Controller::Q(QSimmer::new(cfg.q, schedule.levels.clone())),
    };

    let csv_path = out_dir.join("epochs.csv");
    let mut csv = fs::File::create(&csv_path).map_err(|e| crate::Error::io(&csv_path, e))?;
    writeln!(csv, "{CSV_HEADER}").map_err(|e| crate::Error::io(&csv_path, e))?;

    match cfg.env {
        EnvId::Pendulum => {
            let env = PendulumEnv::new(cfg.pendulum);
            let sc = saute_config(cfg, env.horizon())?;
            let obs_dim = 3 + usize::from(cfg.augment);
            let learner = PolicyLearner::new(cfg, obs_dim, &mut rng);
            run_loop(
                cfg,
                out_dir,
                &mut csv,
                &csv_path,
                &schedule,
                &mut controller,
                learner,
                env,
                sc,
                rng,
            )
        }
        EnvId::Grid => {
            let grid = resolve_grid(cfg)?;
            let env = GridEnv::new(grid.clone());
            let sc = saute_config(cfg, env.horizon())?;
            let budget_ceiling = cfg.d_target().ceil() as i64;
            let learner = GridLearner {
                table: TabularQ::new(&grid, budget_ceiling, cfg.tabular.z_min),
                updates: 0,
            };
            run_grid_loop(
                cfg,
                out_dir,
                &mut csv,
                &csv_path,
                &schedule,
                &mut controller,
                learner,
                env,
                sc,
                rng,
            )
        }
    }
}

/// Epoch statistics common to both loops.
fn epoch_stats(
    cfg: &TrainConfig,
    epoch: usize,
    d_ref: f64,
    budget: f64,
    mean_return: f64,
    costs: &[f64],
) -> crate::Result<EpochStats> {
    let stat = cost_statistic(costs, cfg.constraint_mode)?;
    let d_target = cfg.d_target();
    Ok(EpochStats {
        epoch,
        d_ref,
        budget,
        mean_return,
        cost_stat: stat,
        n_violations: costs.iter().filter(|&&c| c > d_target).count(),
        target_violation: target_violation(stat, d_target),
        lambda: 0.0,
        pi_w: 0.0,
        pi_integral: 0.0,
        q_level: 0,
    })
}

fn update_controller(
    controller: &mut Controller,
    cfg: &TrainConfig,
    stats: &mut EpochStats,
    rng: &mut ChaCha8Rng,
) {
    match controller {
        Controller::Fixed | Controller::Naive => {}
        Controller::Pi(pi) => {
            let signal = match cfg.pi.signal {
                PiSignal::CostStat => stats.cost_stat,
                PiSignal::ViolationCount => stats.n_violations as f64,
            };
            pi.step(stats.d_ref, signal);
            stats.pi_w = pi.filtered_error();
            stats.pi_integral = pi.integral();
        }
        Controller::Q(q) => {
            q.step(stats.cost_stat, rng);
            stats.q_level = q.level();
        }
    }
}

fn write_summary(
    out_dir: &Path,
    rows: &[EpochStats],
    status: String,
    seed: u64,
) -> crate::Result<RunSummary> {
    let summary = RunSummary {
        status,
        seed,
        epochs_run: rows.len(),
        total_target_violation: rows.iter().map(|r| r.target_violation).sum(),
        total_violating_trajectories: rows.iter().map(|r| r.n_violations).sum(),
        final_mean_return: rows.last().map(|r| r.mean_return).unwrap_or(f64::NAN),
        final_cost_stat: rows.last().map(|r| r.cost_stat).unwrap_or(f64::NAN),
    };
    let path = out_dir.join("summary.json");
    let json = serde_json::to_string_pretty(&summary)
        .map_err(|e| crate::Error::parse("summary.json", e))?;
    fs::write(&path, json).map_err(|e| crate::Error::io(&path, e))?;
    Ok(summary)
}

#[allow(clippy::too_many_arguments)]
fn run_loop(
    cfg: &TrainConfig,
    out_dir: &Path,
    csv: &mut fs::File,
    csv_path: &Path,
    schedule: &BudgetSchedule,
    controller: &mut Controller,
    mut learner: PolicyLearner,
    env: PendulumEnv,
    sc: SauteConfig,
    mut rng: ChaCha8Rng,
) -> crate::Result<RunSummary> {
    let mut rows: Vec<EpochStats> = Vec::with_capacity(cfg.epochs);
    let mut status = "ok".to_string();
    for k in 0..cfg.epochs {
        let budget = controller.budget(schedule, k);
        let d_ref = controller.reference(schedule, k);
        let policy = &learner.policy;
        let batch = learners::collect(
            &env,
            &sc,
            cfg.augment,
            budget,
            cfg.trajectories_per_epoch,
            cfg.gamma_r,
            &mut rng,
            |obs, _state, r| {
                let (a, logp) = policy.sample(obs, r);
                (a[0], logp)
            },
        )?;
        let costs: Vec<f64> = batch.trajectories.iter().map(|t| t.discounted_cost).collect();
        let mean_return = batch.mean_return();
        let mut stats = epoch_stats(cfg, k, d_ref, budget, mean_return, &costs)?;
        // Exactly one learner update per epoch; the batch is moved into it
        // and dropped afterwards.
        if let Err(e) = learner.update(cfg, batch, budget, &mut rng) {
            status = format!("failed at epoch {k}: {e}");
            break;
        }
        debug_assert_eq!(learner.updates, k + 1, "one update per epoch");
        stats.lambda = learner.lagrangian.lambda;
        update_controller(controller, cfg, &mut stats, &mut rng);
        writeln!(csv, "{}", stats.csv_row()).map_err(|e| crate::Error::io(csv_path, e))?;
        rows.push(stats);
    }
    if status == "ok" {
        assert_eq!(learner.updates, cfg.epochs, "one update per epoch");
    }

    let policy_path = out_dir.join("policy.json");
    let json = serde_json::json!({
        "policy": learner.policy,
        "value": learner.value,
        "lambda": learner.lagrangian.lambda,
    });
    fs::write(&policy_path, serde_json::to_string(&json).unwrap())
        .map_err(|e| crate::Error::io(&policy_path, e))?;
    write_summary(out_dir, &rows, status, cfg.seed)
}

#[allow(clippy::too_many_arguments)]
fn run_grid_loop(
    cfg: &TrainConfig,
    out_dir: &Path,
    csv: &mut fs::File,
    csv_path: &Path,
    schedule: &BudgetSchedule,
    controller: &mut Controller,
    mut learner: GridLearner,
    env: GridEnv,
    sc: SauteConfig,
    mut rng: ChaCha8Rng,
) -> crate::Result<RunSummary> {
    let mut rows: Vec<EpochStats> = Vec::with_capacity(cfg.epochs);
    let horizon = env.horizon();
    for k in 0..cfg.epochs {
        let budget = controller.budget(schedule, k);
        let d_ref = controller.reference(schedule, k);
        let table = &learner.table;
        let epsilon = cfg.tabular.epsilon;
        let batch = learners::collect(
            &env,
            &sc,
            cfg.augment,
            budget,
            cfg.trajectories_per_epoch,
            cfg.gamma_r,
            &mut rng,
            |_obs, state, r| {
                let s = TabularState {
                    cell: state.env_state,
                    z: table.clamp_z(state.z),
                    t: state.t,
                };
                (table.epsilon_greedy(&s, epsilon, r), 0.0)
            },
        )?;
        let costs: Vec<f64> = batch.trajectories.iter().map(|t| t.discounted_cost).collect();
        let mean_return = batch.mean_return();
        let mut stats = epoch_stats(cfg, k, d_ref, budget, mean_return, &costs)?;
        learner.update(cfg, batch, horizon)?;
        debug_assert_eq!(learner.updates, k + 1, "one update per epoch");
        update_controller(controller, cfg, &mut stats, &mut rng);
        writeln!(csv, "{}", stats.csv_row()).map_err(|e| crate::Error::io(csv_path, e))?;
        rows.push(stats);
    }
    assert_eq!(learner.updates, cfg.epochs, "one update per epoch");

    let policy_path = out_dir.join("policy.json");
    let json = serde_json::to_string(&serde_json::json!({ "q_table": learner.table }))
        .map_err(|e| crate::Error::parse("policy.json", e))?;
    fs::write(&policy_path, json).map_err(|e| crate::Error::io(&policy_path, e))?;
    write_summary(out_dir, &rows, "ok".to_string(), cfg.seed)
}

/// Reads every row of an `epochs.csv`.
pub fn read_epochs_csv(path: impl AsRef<Path>) -> crate::Result<Vec<EpochStats>> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| crate::Error::io(path, e))?;
    let mut rows = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if i == 0 {
            if line != CSV_HEADER {
                return Err(crate::Error::parse("epochs.csv", format!("bad header {line:?}")));
            }
            continue;
        }
        if !line.trim().is_empty() {
            rows.push(EpochStats::parse_csv_row(line)?);
        }
    }
    Ok(rows)
}

/// Finds run directories (those with an `epochs.csv`) under `root`.
pub fn find_runs(root: impl AsRef<Path>) -> crate::Result<Vec<PathBuf>> {
    let root = root.as_ref();
    let mut out = Vec::new();
    if root.join("epochs.csv").is_file() {
        out.push(root.to_path_buf());
    }
    let entries = fs::read_dir(root).map_err(|e| crate::Error::io(root, e))?;
    for entry in entries {
        let entry = entry.map_err(|e| crate::Error::io(root, e))?;
        let path = entry.path();
        if path.is_dir() && path.join("epochs.csv").is_file() {
            out.push(path);
        }
    }
    out.sort();
    Ok(out)
}
