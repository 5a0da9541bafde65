//! Exhaustive search over budget-blind (z-blind) stationary policies.
//!
//! A deterministic stationary policy over cells alone induces one
//! trajectory per start. The search assigns actions lazily along realized
//! trajectories: cells never visited by any trajectory cannot influence the
//! outcome, so branching only on visited cells enumerates every outcome
//! class of the full policy space exactly. Branches are pruned as soon as a
//! trajectory exceeds the budget, which keeps the fixture-sized search in
//! the tens of thousands of nodes.

use std::collections::HashMap;

use crate::envs::{grid_step, Cell, GridAction, GridSpec};

/// Outcome of the z-blind policy search.
#[derive(Debug, Clone, PartialEq)]
pub struct MarkovPolicyResult {
    /// Best mean return over starts among policies whose accumulated cost
    /// stays within the budget from *every* start; `None` if no policy is
    /// cost-feasible.
    pub best_return: Option<f64>,
    /// Whether the best policy also reaches the goal from every start. The
    /// scenario is infeasible for z-blind policies when this is false.
    pub reaches_goal: bool,
    /// Search nodes explored (diagnostic).
    pub nodes: usize,
}

const MAX_CELLS: usize = 400;
const MAX_NODES: usize = 50_000_000;

struct Search<'a> {
    grid: &'a GridSpec,
    budget: f64,
    nodes: usize,
}

enum Sim {
    /// Hit a cell with no assigned action.
    Need(Cell),
    /// Trajectory exceeded the budget.
    Infeasible,
    /// Finished (goal or horizon): accumulated return and goal flag.
    Done(f64, bool),
}

impl<'a> Search<'a> {
    fn simulate(&self, start: Cell, assign: &HashMap<Cell, GridAction>) -> Sim {
        let mut cell = start;
        let mut ret = 0.0;
        let mut cost = 0.0;
        for _ in 0..self.grid.horizon {
            if cell == self.grid.goal {
                return Sim::Done(ret, true);
            }
            let Some(&action) = assign.get(&cell) else {
                return Sim::Need(cell);
            };
            let out = grid_step(cell, action, self.grid);
            ret += out.reward;
            cost += out.cost;
            if cost > self.budget + 1e-9 {
                return Sim::Infeasible;
            }
            cell = out.next_state;
        }
        Sim::Done(ret, cell == self.grid.goal)
    }

    /// Best (total return, all-reached) over completions of `assign` for
    /// starts `start_idx..`.
    fn solve(
        &mut self,
        start_idx: usize,
        assign: &mut HashMap<Cell, GridAction>,
    ) -> crate::Result<Option<(f64, bool)>> {
        self.nodes += 1;
        if self.nodes > MAX_NODES {
            return Err(crate::Error::SearchTooLarge(format!(
                "z-blind policy search exceeded {MAX_NODES} nodes"
            )));
        }
        if start_idx == self.grid.starts.len() {
            return Ok(Some((0.0, true)));
        }
        match self.simulate(self.grid.starts[start_idx], assign) {
            Sim::Infeasible => Ok(None),
            Sim::Done(ret, reached) => {
                Ok(self.solve(start_idx + 1, assign)?.map(|(rest, all_reached)| {
                    (ret + rest, reached && all_reached)
                }))
            }
            Sim::Need(cell) => {
                let mut best: Option<(f64, bool)> = None;
                for action in GridAction::ALL {
                    assign.insert(cell, action);
                    if let Some(cand) = self.solve(start_idx, assign)? {
                        best = match best {
                            Some(cur) if cur.0 >= cand.0 => Some(cur),
                            _ => Some(cand),
                        };
                    }
                    assign.remove(&cell);
                }
                Ok(best)
            }
        }
    }
}

/// Evaluates every z-blind deterministic stationary policy and returns the
/// best mean return among those whose accumulated (undiscounted) cost stays
/// within `budget` on every start.
pub fn best_markov_policy(grid: &GridSpec, budget: f64) -> crate::Result<MarkovPolicyResult> {
    if grid.n_cells() > MAX_CELLS {
        return Err(crate::Error::SearchTooLarge(format!(
            "grid has {} cells; the policy search is capped at {MAX_CELLS}",
            grid.n_cells()
        )));
    }
    let mut search = Search { grid, budget, nodes: 0 };
    let mut assign = HashMap::new();
    let best = search.solve(0, &mut assign)?;
    let n = grid.starts.len() as f64;
    Ok(MarkovPolicyResult {
        best_return: best.map(|(total, _)| total / n),
        reaches_goal: best.map(|(_, r)| r).unwrap_or(false),
        nodes: search.nodes,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle::{augmented_optimum, AugmentedGridMdp};

    #[test]
    fn no_hazards_matches_unconstrained_shortest_path_and_augmented_optimum() {
        let grid = GridSpec::new(
            4,
            3,
            vec![Cell::new(0, 1)],
            Cell::new(3, 1),
            [],
            1.0,
            10.0,
            12,
        )
        .unwrap();
        let blind = best_markov_policy(&grid, 5.0).unwrap();
        // Three steps east: 10 - 2 penalties.
        assert_eq!(blind.best_return, Some(8.0));
        assert!(blind.reaches_goal);

        let aug = augmented_optimum(&AugmentedGridMdp::new(grid, 5, 500.0), 1e-9);
        assert_eq!(aug.mean_return, 8.0);
    }

    #[test]
    fn zero_budget_with_hazards_everywhere_is_infeasible() {
        // Interior start; the goal is fenced by hazards, so any route costs
        // at least 1 > 0. The best cost-feasible behavior never reaches.
        let grid = GridSpec::new(
            5,
            5,
            vec![Cell::new(0, 0)],
            Cell::new(4, 4),
            (0..5)
                .flat_map(|i| [Cell::new(3, i), Cell::new(i, 3)])
                .filter(|c| !(c.x == 4 && c.y == 4)),
            1.0,
            10.0,
            20,
        )
        .unwrap();
        let res = best_markov_policy(&grid, 0.0).unwrap();
        assert!(!res.reaches_goal);
    }

    #[test]
    fn oversized_grids_are_rejected() {
        let grid = GridSpec::new(
            25,
            25,
            vec![Cell::new(0, 0)],
            Cell::new(24, 24),
            [],
            1.0,
            10.0,
            10,
        )
        .unwrap();
        assert!(matches!(
            best_markov_policy(&grid, 1.0),
            Err(crate::Error::SearchTooLarge(_))
        ));
    }
}
