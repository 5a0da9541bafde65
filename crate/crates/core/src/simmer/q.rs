//! Q-learning-controlled safety budget.
//!
//! A small MDP whose states are the budget levels and whose actions are
//! {decrease, stay, increase}. The reward compares the level's budget value
//! `s` with a low-pass-filtered cost statistic `o`:
//!
//! * not safe (`s - o <= -delta`): decrease pays 2, anything else -1;
//! * borderline (`|s - o| <= delta`): stay or increase pay 1, decrease -1;
//! * very safe (`s - o >= delta`): increase pays 2, stay 1, decrease -1.
//!
//! The overlap at `|s - o| = delta` resolves conservatively: the unsafe
//! branch is checked first, then borderline, then safe.
//!
//! Note the exploration convention: the *greedy* action is taken with
//! probability `epsilon` and a uniform random valid action with `1 -
//! epsilon` (inverted relative to common usage, so `epsilon = 0.95` means
//! mostly greedy). Implemented as written.

use rand::Rng;
use serde::{Deserialize, Serialize};

/// Budget-level move.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum QSimmerAction {
    Decrease,
    Stay,
    Increase,
}

impl QSimmerAction {
    /// Column index in the Q-table.
    pub fn index(self) -> usize {
        match self {
            QSimmerAction::Decrease => 0,
            QSimmerAction::Stay => 1,
            QSimmerAction::Increase => 2,
        }
    }

    fn level_delta(self) -> isize {
        match self {
            QSimmerAction::Decrease => -1,
            QSimmerAction::Stay => 0,
            QSimmerAction::Increase => 1,
        }
    }
}

/// Hyper-parameters of the meta-learner.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct QSimmerConfig {
    /// Q-update learning rate, in `[0, 1]`.
    pub lr: f64,
    /// Probability of acting greedily (see the module note on the inverted
    /// convention).
    pub epsilon: f64,
    /// Safety significance threshold for the reward regions.
    pub delta: f64,
    /// Polyak coefficient of the cost filter.
    pub tau: f64,
}

impl Default for QSimmerConfig {
    fn default() -> Self {
        QSimmerConfig { lr: 0.05, epsilon: 0.95, delta: 1.0, tau: 0.995 }
    }
}

impl QSimmerConfig {
    pub fn validate(&self) -> crate::Result<()> {
        for (name, v) in [("lr", self.lr), ("epsilon", self.epsilon), ("tau", self.tau)] {
            if !(0.0..=1.0).contains(&v) {
                return Err(crate::Error::InvalidConfig(format!(
                    "q-simmer {name} must be in [0, 1], got {v}"
                )));
            }
        }
        Ok(())
    }
}

/// Reward table over `(diff = s - o, action)`; `s` is the current level's
/// budget value and `o` the filtered observed cost.
pub fn q_simmer_reward(diff: f64, delta: f64, action: QSimmerAction) -> f64 {
    use QSimmerAction::*;
    if diff <= -delta {
        // Not safe: costs run above the budget.
        match action {
            Decrease => 2.0,
            Stay | Increase => -1.0,
        }
    } else if diff.abs() <= delta {
        // Borderline safe.
        match action {
            Decrease => -1.0,
            Stay | Increase => 1.0,
        }
    } else {
        // Very safe.
        match action {
            Decrease => -1.0,
            Stay => 1.0,
            Increase => 2.0,
        }
    }
}

/// Meta-controller state: the K x 3 Q-table, the current level, and the
/// filtered cost.
#[derive(Debug, Clone)]
pub struct QSimmer {
    cfg: QSimmerConfig,
    /// Budget value of each level, nondecreasing.
    levels: Vec<f64>,
    q: Vec<[f64; 3]>,
    level: usize,
    filtered_cost: f64,
}

impl QSimmer {
    /// Starts at the lowest level with a zero table and zero filtered cost.
    pub fn new(cfg: QSimmerConfig, levels: Vec<f64>) -> Self {
        let q = vec![[0.0; 3]; levels.len()];
        QSimmer { cfg, levels, q, level: 0, filtered_cost: 0.0 }
    }

    /// Moves the starting level (clamped to the ladder).
    pub fn with_initial_level(mut self, level: usize) -> Self {
        self.level = level.min(self.levels.len() - 1);
        self
    }

    pub fn level(&self) -> usize {
        self.level
    }

    pub fn budget(&self) -> f64 {
        self.levels[self.level]
    }

    pub fn filtered_cost(&self) -> f64 {
        self.filtered_cost
    }

    pub fn q_table(&self) -> &[[f64; 3]] {
        &self.q
    }

    /// Actions valid at `level` (boundary masking), in table order.
    pub fn valid_actions(&self, level: usize) -> Vec<QSimmerAction> {
        use QSimmerAction::*;
        let mut v = Vec::with_capacity(3);
        if level > 0 {
            v.push(Decrease);
        }
        v.push(Stay);
        if level + 1 < self.levels.len() {
            v.push(Increase);
        }
        v
    }

    /// Greedy argmax over valid actions; ties break toward Stay, then
    /// Increase, then Decrease.
    pub fn greedy_action(&self, level: usize) -> QSimmerAction {
        use QSimmerAction::*;
        let mut best = Stay;
        let mut best_q = f64::NEG_INFINITY;
        for a in [Stay, Increase, Decrease] {
            if !self.valid_actions(level).contains(&a) {
                continue;
            }
            let q = self.q[level][a.index()];
            if q > best_q {
                best_q = q;
                best = a;
            }
        }
        best
    }

    /// Low-pass filter of the observed cost statistic:
    /// `o <- (1 - tau) o + tau raw`.
    pub fn observe(&mut self, raw_cost_statistic: f64) -> f64 {
        self.filtered_cost =
            (1.0 - self.cfg.tau) * self.filtered_cost + self.cfg.tau * raw_cost_statistic;
        self.filtered_cost
    }

    /// Epsilon-greedy action (inverted convention, see module docs).
    pub fn act<R: Rng + ?Sized>(&self, rng: &mut R) -> QSimmerAction {
        let valid = self.valid_actions(self.level);
        if rng.gen::<f64>() < self.cfg.epsilon {
            self.greedy_action(self.level)
        } else {
            valid[rng.gen_range(0..valid.len())]
        }
    }

    /// The paper-exact table update:
    /// `Q(s,a) <- (1 - lr) Q(s,a) + lr (r + max_b Q(s', b))`, with the max
    /// over actions valid at `s'`. No discount on the bootstrap term.
    pub fn update(&mut self, level: usize, action: QSimmerAction, reward: f64, next_level: usize) {
        let max_next = self
            .valid_actions(next_level)
            .into_iter()
            .map(|a| self.q[next_level][a.index()])
            .fold(f64::NEG_INFINITY, f64::max);
        let q = &mut self.q[level][action.index()];
        *q = (1.0 - self.cfg.lr) * *q + self.cfg.lr * (reward + max_next);
    }

    /// One full controller epoch: filter the raw statistic, pick an action,
    /// score it against the current situation, update the table, and move.
    /// Returns the new budget.
    pub fn step<R: Rng + ?Sized>(&mut self, raw_cost_statistic: f64, rng: &mut R) -> f64 {
        let o = self.observe(raw_cost_statistic);
        let action = self.act(rng);
        let reward = q_simmer_reward(self.budget() - o, self.cfg.delta, action);
        let next_level =
            (self.level as isize + action.level_delta()).clamp(0, self.levels.len() as isize - 1)
                as usize;
        self.update(self.level, action, reward, next_level);
        self.level = next_level;
        self.budget()
    }
}
