//! Enumerated deterministic MDPs and exact value iteration.

use crate::envs::{grid_step, Cell, GridAction, GridSpec};

/// A finite MDP with deterministic transitions, given as explicit tables.
/// Terminal states self-loop with zero reward and have value zero.
#[derive(Debug, Clone)]
pub struct Mdp {
    pub n_states: usize,
    pub n_actions: usize,
    /// `transitions[s][a] = (next_state, reward)`.
    pub transitions: Vec<Vec<(usize, f64)>>,
    pub terminal: Vec<bool>,
    pub gamma: f64,
}

/// Exact solution: state values and a greedy policy with deterministic
/// tie-breaking toward the lowest action index.
#[derive(Debug, Clone)]
pub struct Solution {
    pub values: Vec<f64>,
    pub policy: Vec<usize>,
    pub sweeps: usize,
}

/// Iterates the Bellman optimality operator until the residual drops below
/// `tol`. Finite-horizon (time-indexed) MDPs converge exactly after one
/// sweep per layer; discounted MDPs converge by contraction.
pub fn value_iteration(mdp: &Mdp, tol: f64) -> Solution {
    assert!(tol > 0.0, "tolerance must be positive");
    let mut values = vec![0.0; mdp.n_states];
    let mut sweeps = 0;
    let max_sweeps = 1_000_000;
    loop {
        sweeps += 1;
        let mut residual = 0.0f64;
        for s in 0..mdp.n_states {
            if mdp.terminal[s] {
                continue;
            }
            let mut best = f64::NEG_INFINITY;
            for &(ns, r) in &mdp.transitions[s] {
                best = best.max(r + mdp.gamma * values[ns]);
            }
            residual = residual.max((best - values[s]).abs());
            values[s] = best;
        }
        if residual < tol || sweeps >= max_sweeps {
            break;
        }
    }

    let mut policy = vec![0; mdp.n_states];
    for s in 0..mdp.n_states {
        let mut best = f64::NEG_INFINITY;
        for (a, &(ns, r)) in mdp.transitions[s].iter().enumerate() {
            let q = r + mdp.gamma * values[ns];
            if q > best {
                best = q;
                policy[s] = a;
            }
        }
    }
    Solution { values, policy, sweeps }
}

/// The grid augmented with the integer safety state and the step index:
/// states are `(cell, z, t)` with `z` clamped to `[z_min, budget]`
/// (violation is absorbing at `z_min`), `gamma_l = 1`, `gamma_r = 1`, and
/// rewards reshaped to `-delta_penalty` whenever the pre-step `z` is
/// negative.
#[derive(Debug, Clone)]
pub struct AugmentedGridMdp {
    pub grid: GridSpec,
    pub budget: i64,
    pub z_min: i64,
    pub delta_penalty: f64,
    pub mdp: Mdp,
}

impl AugmentedGridMdp {
    pub fn new(grid: GridSpec, budget: i64, delta_penalty: f64) -> Self {
        // One z level below zero is enough: violation is absorbing.
        let z_min = -1;
        let n_z = (budget - z_min + 1) as usize;
        let horizon = grid.horizon;
        let n_states = grid.n_cells() * n_z * (horizon + 1);
        let mut transitions = vec![Vec::with_capacity(4); n_states];
        let mut terminal = vec![false; n_states];

        let index = |cell: Cell, z: i64, t: usize| -> usize {
            (grid.cell_index(cell) * n_z + (z - z_min) as usize) * (horizon + 1) + t
        };

        for ci in 0..grid.n_cells() {
            let cell = grid.cell_at(ci);
            for z in z_min..=budget {
                for t in 0..=horizon {
                    let s = index(cell, z, t);
                    if cell == grid.goal || t == horizon {
                        terminal[s] = true;
                        transitions[s] = vec![(s, 0.0); 4];
                        continue;
                    }
                    let trans = &mut transitions[s];
                    for a in GridAction::ALL {
                        let out = grid_step(cell, a, &grid);
                        let reward =
                            if z < 0 { -delta_penalty } else { out.reward };
                        let nz = (z - out.cost as i64).max(z_min);
                        trans.push((index(out.next_state, nz, t + 1), reward));
                    }
                }
            }
        }

        let mdp =
            Mdp { n_states, n_actions: 4, transitions, terminal, gamma: 1.0 };
        AugmentedGridMdp { grid, budget, z_min, delta_penalty, mdp }
    }

    pub fn state_index(&self, cell: Cell, z: i64, t: usize) -> usize {
        let n_z = (self.budget - self.z_min + 1) as usize;
        (self.grid.cell_index(cell) * n_z + (z.clamp(self.z_min, self.budget) - self.z_min) as usize)
            * (self.grid.horizon + 1)
            + t
    }
}

/// Exact augmented optimum on a grid, with greedy rollouts from each start.
#[derive(Debug, Clone)]
pub struct AugmentedSolution {
    pub solution: Solution,
    /// Optimal return from each start at `z = budget`, `t = 0`.
    pub start_returns: Vec<f64>,
    pub mean_return: f64,
}

/// Solves the augmented grid MDP exactly.
pub fn augmented_optimum(mdp: &AugmentedGridMdp, tol: f64) -> AugmentedSolution {
    let solution = value_iteration(&mdp.mdp, tol);
    let start_returns: Vec<f64> = mdp
        .grid
        .starts
        .iter()
        .map(|s| solution.values[mdp.state_index(*s, mdp.budget, 0)])
        .collect();
    let mean_return = start_returns.iter().sum::<f64>() / start_returns.len() as f64;
    AugmentedSolution { solution, start_returns, mean_return }
}

/// One greedy rollout through the augmented MDP. Costs are accumulated
/// undiscounted (`gamma_l = 1`); `z_final` is the unclamped safety state at
/// the end of the episode.
#[derive(Debug, Clone)]
pub struct GreedyRollout {
    pub cells: Vec<Cell>,
    pub total_return: f64,
    pub total_cost: f64,
    pub z_final: f64,
    pub reached_goal: bool,
}

/// Rolls the greedy policy out from `start` with the full budget.
pub fn greedy_rollout(mdp: &AugmentedGridMdp, sol: &Solution, start: Cell) -> GreedyRollout {
    let mut cell = start;
    let mut z = mdp.budget as f64;
    let mut zi = mdp.budget;
    let mut total_return = 0.0;
    let mut total_cost = 0.0;
    let mut cells = vec![cell];
    for t in 0..mdp.grid.horizon {
        if cell == mdp.grid.goal {
            break;
        }
        let s = mdp.state_index(cell, zi, t);
        let action = GridAction::ALL[sol.policy[s]];
        let out = grid_step(cell, action, &mdp.grid);
        total_return += if zi < 0 { -mdp.delta_penalty } else { out.reward };
        total_cost += out.cost;
        z -= out.cost;
        zi = (zi - out.cost as i64).max(mdp.z_min);
        cell = out.next_state;
        cells.push(cell);
    }
    GreedyRollout {
        cells,
        total_return,
        total_cost,
        z_final: z,
        reached_goal: cell == mdp.grid.goal,
    }
}
