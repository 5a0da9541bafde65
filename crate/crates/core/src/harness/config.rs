//! Run configuration: a plain-text key-value file with nested sections,
//! every default overridable via dotted `key=value` pairs.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::envs::PendulumSpec;
use crate::learners::PgConfig;
use crate::saute::ConstraintMode;
use crate::simmer::{PiSimmerConfig, QSimmerConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EnvId {
    Pendulum,
    Grid,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LearnerId {
    /// Clipped policy gradient on the (reshaped) reward.
    Ppo,
    /// PPO with a plain Lagrangian multiplier on the cost.
    Lagrangian,
    /// PPO with the PI-controlled multiplier.
    PidLagrangian,
    /// Tabular Q-learning (grid only).
    Tabular,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ControllerId {
    /// Train at the target budget every epoch.
    Fixed,
    /// Follow the staircase schedule.
    Naive,
    /// PI Simmer around the staircase reference.
    Pi,
    /// Q Simmer over the budget levels.
    Q,
}

/// Statistic fed to the PI controller each epoch.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PiSignal {
    /// The mode's cost statistic (mean cost in average mode, max in
    /// probability-one mode).
    CostStat,
    /// Number of trajectories violating the target budget.
    ViolationCount,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BudgetConfig {
    /// Nondecreasing budget levels; first is `d_start`, last is `d_target`.
    pub levels: Vec<f64>,
    pub epochs_per_level: usize,
}

impl Default for BudgetConfig {
    fn default() -> Self {
        BudgetConfig { levels: vec![8.0, 16.0, 24.0, 32.0, 40.0], epochs_per_level: 60 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(default)]
pub struct GridConfig {
    /// Grid file path; the shipped crossing fixture when omitted.
    pub file: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SauteOptions {
    /// Penalty magnitude for reshaped rewards; defaults to the episode
    /// horizon (per-step rewards are at most 1 in both environments).
    pub delta_penalty: Option<f64>,
    /// Scale of the `z` policy feature; defaults to `d_target`.
    pub z_normalizer: Option<f64>,
}

impl Default for SauteOptions {
    fn default() -> Self {
        SauteOptions { delta_penalty: None, z_normalizer: None }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LagrangianConfig {
    /// Dual-ascent step for the plain multiplier.
    pub lr_lambda: f64,
    /// PID-Lagrangian proportional gain.
    pub kp: f64,
    /// PID-Lagrangian integral gain.
    pub ki: f64,
}

impl Default for LagrangianConfig {
    fn default() -> Self {
        LagrangianConfig { lr_lambda: 0.02, kp: 0.1, ki: 0.01 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TabularConfig {
    pub lr: f64,
    /// Exploration probability of the behavior policy (standard
    /// convention).
    pub epsilon: f64,
    /// Lower clamp of the discretized safety state.
    pub z_min: i64,
}

impl Default for TabularConfig {
    fn default() -> Self {
        TabularConfig { lr: 0.5, epsilon: 0.2, z_min: -1 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PiOptions {
    #[serde(flatten)]
    pub controller: PiSimmerConfig,
    pub signal: PiSignal,
}

impl Default for PiOptions {
    fn default() -> Self {
        PiOptions { controller: PiSimmerConfig::default(), signal: PiSignal::CostStat }
    }
}

/// Everything a run needs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub env: EnvId,
    pub learner: LearnerId,
    pub constraint_mode: ConstraintMode,
    pub augment: bool,
    pub controller: ControllerId,
    pub epochs: usize,
    pub trajectories_per_epoch: usize,
    pub gamma_r: f64,
    pub gamma_l: f64,
    pub seed: u64,
    pub budget: BudgetConfig,
    pub pendulum: PendulumSpec,
    pub grid: GridConfig,
    pub saute: SauteOptions,
    pub ppo: PgConfig,
    pub lagrangian: LagrangianConfig,
    pub tabular: TabularConfig,
    pub pi: PiOptions,
    pub q: QSimmerConfig,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            env: EnvId::Pendulum,
            learner: LearnerId::Ppo,
            constraint_mode: ConstraintMode::ProbOne,
            augment: true,
            controller: ControllerId::Fixed,
            epochs: 300,
            trajectories_per_epoch: 20,
            gamma_r: 0.99,
            gamma_l: 1.0,
            seed: 0,
            budget: BudgetConfig::default(),
            pendulum: PendulumSpec::default(),
            grid: GridConfig::default(),
            saute: SauteOptions::default(),
            ppo: PgConfig::default(),
            lagrangian: LagrangianConfig::default(),
            tabular: TabularConfig::default(),
            pi: PiOptions::default(),
            q: QSimmerConfig::default(),
        }
    }
}

impl TrainConfig {
    pub fn d_start(&self) -> f64 {
        self.budget.levels.first().copied().unwrap_or(0.0)
    }

    pub fn d_target(&self) -> f64 {
        self.budget.levels.last().copied().unwrap_or(0.0)
    }

    pub fn horizon(&self) -> usize {
        match self.env {
            EnvId::Pendulum => self.pendulum.horizon,
            EnvId::Grid => 0, // resolved against the loaded grid spec
        }
    }

    pub fn validate(&self) -> crate::Result<()> {
        if self.epochs == 0 {
            return Err(crate::Error::InvalidConfig("epochs must be >= 1".into()));
        }
        if self.trajectories_per_epoch == 0 {
            return Err(crate::Error::InvalidConfig(
                "trajectories_per_epoch must be >= 1".into(),
            ));
        }
        if self.budget.levels.is_empty() {
            return Err(crate::Error::InvalidConfig("budget.levels must be nonempty".into()));
        }
        if self.budget.levels.windows(2).any(|w| w[0] > w[1]) {
            return Err(crate::Error::InvalidConfig(
                "budget.levels must be nondecreasing".into(),
            ));
        }
        if !(self.gamma_l > 0.0 && self.gamma_l <= 1.0) {
            return Err(crate::Error::InvalidConfig("gamma_l must be in (0, 1]".into()));
        }
        if !(self.gamma_r > 0.0 && self.gamma_r <= 1.0) {
            return Err(crate::Error::InvalidConfig("gamma_r must be in (0, 1]".into()));
        }
        match (self.env, self.learner) {
            (EnvId::Pendulum, LearnerId::Tabular) => {
                return Err(crate::Error::InvalidConfig(
                    "the tabular learner requires the grid environment".into(),
                ))
            }
            (EnvId::Grid, LearnerId::Tabular) => {}
            (EnvId::Grid, _) => {
                return Err(crate::Error::InvalidConfig(
                    "the grid environment requires the tabular learner".into(),
                ))
            }
            _ => {}
        }
        self.pendulum.validate()?;
        self.pi.controller.validate()?;
        self.q.validate()?;
        Ok(())
    }

    /// Loads a config file, applying dotted-path overrides such as
    /// `ppo.lr=0.001` or `controller=pi` on top.
    pub fn load(path: impl AsRef<Path>, overrides: &[(String, String)]) -> crate::Result<Self> {
        let path = path.as_ref();
        let text =
            std::fs::read_to_string(path).map_err(|e| crate::Error::io(path, e))?;
        Self::from_toml(&text, overrides)
    }

    /// Parses config text and applies overrides.
    pub fn from_toml(text: &str, overrides: &[(String, String)]) -> crate::Result<Self> {
        let mut value: toml::Value = text
            .parse()
            .map_err(|e| crate::Error::parse("config file", e))?;
        for (key, raw) in overrides {
            set_dotted(&mut value, key, raw)?;
        }
        let cfg: TrainConfig = value
            .try_into()
            .map_err(|e| crate::Error::parse("config file", e))?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Serializes the resolved configuration (used for run snapshots).
    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serialization cannot fail")
    }
}

/// Sets `root[a][b][c] = parsed(raw)` for a dotted key `a.b.c`, creating
/// intermediate tables as needed. Values parse as bool, integer, float,
/// arrays of those, or fall back to strings.
fn set_dotted(root: &mut toml::Value, key: &str, raw: &str) -> crate::Result<()> {
    let parts: Vec<&str> = key.split('.').collect();
    if parts.iter().any(|p| p.is_empty()) {
        return Err(crate::Error::InvalidConfig(format!("bad override key {key:?}")));
    }
    let mut node = root;
    for part in &parts[..parts.len() - 1] {
        let table = node.as_table_mut().ok_or_else(|| {
            crate::Error::InvalidConfig(format!("override {key:?} traverses a non-table"))
        })?;
        node = table
            .entry(part.to_string())
            .or_insert_with(|| toml::Value::Table(Default::default()));
    }
    let table = node.as_table_mut().ok_or_else(|| {
        crate::Error::InvalidConfig(format!("override {key:?} traverses a non-table"))
    })?;
    table.insert(parts[parts.len() - 1].to_string(), parse_override(raw));
    Ok(())
}

fn parse_override(raw: &str) -> toml::Value {
    let raw = raw.trim();
    if let Ok(b) = raw.parse::<bool>() {
        return toml::Value::Boolean(b);
    }
    if let Ok(i) = raw.parse::<i64>() {
        return toml::Value::Integer(i);
    }
    if let Ok(f) = raw.parse::<f64>() {
        return toml::Value::Float(f);
    }
    if raw.starts_with('[') && raw.ends_with(']') {
        let inner = &raw[1..raw.len() - 1];
        let items: Vec<toml::Value> =
            inner.split(',').map(|s| parse_override(s)).collect();
        return toml::Value::Array(items);
    }
    toml::Value::String(raw.to_string())
}
