//! Tabular Q-learning over the augmented grid.
//!
//! The augmented state is `(cell, z, t)` with `z` discretized to integer
//! budget units (grid costs are integers, so with `gamma_l = 1` the
//! augmented MDP is exactly finite). `z` is clamped below at `z_min`: once
//! the budget is blown, how far past it went no longer matters because
//! every further step is reshaped to the same penalty.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::envs::{Cell, GridAction, GridSpec};

/// Dense Q-table over `(cell, z, t, action)`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TabularQ {
    q: Vec<f64>,
    width: usize,
    height: usize,
    z_min: i64,
    z_max: i64,
    horizon: usize,
}

/// A discrete augmented state.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct TabularState {
    pub cell: Cell,
    pub z: i64,
    pub t: usize,
}

/// One transition consumed by [`TabularQ::update`].
#[derive(Debug, Clone, Copy)]
pub struct TabularTransition {
    pub state: TabularState,
    pub action: GridAction,
    pub reward: f64,
    pub next_state: TabularState,
    /// Terminal transitions do not bootstrap.
    pub terminal: bool,
}

impl TabularQ {
    pub fn new(spec: &GridSpec, budget: i64, z_min: i64) -> Self {
        assert!(z_min <= budget);
        let n = spec.n_cells() * (budget - z_min + 1) as usize * (spec.horizon + 1) * 4;
        TabularQ {
            q: vec![0.0; n],
            width: spec.width,
            height: spec.height,
            z_min,
            z_max: budget,
            horizon: spec.horizon,
        }
    }

    /// Clamps a raw safety state into the table's z range.
    pub fn clamp_z(&self, z: f64) -> i64 {
        (z.floor() as i64).clamp(self.z_min, self.z_max)
    }

    fn index(&self, s: &TabularState, a: GridAction) -> usize {
        debug_assert!(s.cell.x < self.width && s.cell.y < self.height);
        debug_assert!((self.z_min..=self.z_max).contains(&s.z));
        debug_assert!(s.t <= self.horizon);
        let cell = s.cell.y * self.width + s.cell.x;
        let z = (s.z - self.z_min) as usize;
        let n_z = (self.z_max - self.z_min + 1) as usize;
        ((cell * n_z + z) * (self.horizon + 1) + s.t) * 4 + a.index()
    }

    pub fn get(&self, s: &TabularState, a: GridAction) -> f64 {
        self.q[self.index(s, a)]
    }

    pub fn max_value(&self, s: &TabularState) -> f64 {
        GridAction::ALL
            .iter()
            .map(|a| self.get(s, *a))
            .fold(f64::NEG_INFINITY, f64::max)
    }

    /// Greedy action with deterministic tie-breaking in N, S, E, W order.
    pub fn greedy(&self, s: &TabularState) -> GridAction {
        let mut best = GridAction::North;
        let mut best_q = f64::NEG_INFINITY;
        for a in GridAction::ALL {
            let q = self.get(s, a);
            if q > best_q {
                best_q = q;
                best = a;
            }
        }
        best
    }

    /// Standard epsilon-greedy behavior policy (explores with probability
    /// `epsilon`; note this is the conventional direction, unlike the
    /// meta-controller in [`crate::simmer`]).
    pub fn epsilon_greedy<R: Rng + ?Sized>(
        &self,
        s: &TabularState,
        epsilon: f64,
        rng: &mut R,
    ) -> GridAction {
        if rng.gen::<f64>() < epsilon {
            GridAction::ALL[rng.gen_range(0..4)]
        } else {
            self.greedy(s)
        }
    }

    /// One Q-learning update:
    /// `Q(s,a) += lr * (r + gamma * max_b Q(s',b) - Q(s,a))`.
    pub fn update(&mut self, tr: &TabularTransition, lr: f64, gamma: f64) {
        let bootstrap = if tr.terminal { 0.0 } else { self.max_value(&tr.next_state) };
        let idx = self.index(&tr.state, tr.action);
        self.q[idx] += lr * (tr.reward + gamma * bootstrap - self.q[idx]);
    }
}
