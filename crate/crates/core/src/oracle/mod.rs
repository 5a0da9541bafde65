//! Independent ground-truth machinery.
//!
//! Everything here exists to check the rest of the crate: exact value
//! iteration over the augmented grid MDP, exhaustive search over
//! budget-blind policies, and finite-difference gradient verification. The
//! headline result on the shipped crossing fixture is the strict separation
//! between the augmented optimum and the best budget-blind policy: the two
//! optimal paths meet at one cell with different spent budgets, and no
//! single cell-indexed action serves both.

mod fd;
mod markov;
mod mdp;

pub use fd::finite_diff_check;
pub use markov::{best_markov_policy, MarkovPolicyResult};
pub use mdp::{
    augmented_optimum, greedy_rollout, value_iteration, AugmentedGridMdp, AugmentedSolution,
    GreedyRollout, Mdp, Solution,
};

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use crate::envs::{Cell, GridSpec};

/// Budget used by the crossing demonstration: it admits exactly one of the
/// two continuations at the shared cell for the costly inbound path.
pub const CROSSING_BUDGET: i64 = 4;

/// Penalty dominating any achievable return on the fixture.
pub const CROSSING_DELTA: f64 = 1_000.0;

/// Builds the crossing fixture programmatically (the shipped `crossing.grid`
/// file holds the same instance).
///
/// A 9x9 grid whose free cells form a plus shape around the shared cell
/// `(4,5)`: one start must cross a four-cell hazard band to get there
/// (accumulated cost 4), the other walks a free corridor (cost 0). From the
/// shared cell the goal is reachable through a short risky arm (two hazards)
/// or a long safe arm (no cost). With budget 4 only the clean-history start
/// can afford the short arm, so the optimal action at the shared cell
/// depends on the remaining budget.
pub fn crossing_fixture() -> GridSpec {
    let width = 9;
    let height = 9;
    let free: &[(usize, usize)] = &[
        (4, 0), // band start
        (4, 5), // shared cell
        (3, 5),
        (2, 5),
        (1, 5),
        (0, 5), // corridor start
        (4, 6),
        (5, 6),
        (6, 6),
        (7, 6), // safe arm
        (7, 5), // goal
    ];
    let hazards = (0..height)
        .flat_map(|y| (0..width).map(move |x| (x, y)))
        .filter(|c| !free.contains(c))
        .map(|(x, y)| Cell::new(x, y));
    GridSpec::new(
        width,
        height,
        vec![Cell::new(4, 0), Cell::new(0, 5)],
        Cell::new(7, 5),
        hazards,
        1.0,
        50.0,
        40,
    )
    .expect("fixture is valid by construction")
}

/// Golden numbers for the crossing demonstration.
#[derive(Debug, Clone, PartialEq)]
pub struct CrossingGolden {
    pub budget: i64,
    pub augmented_mean_return: f64,
    pub augmented_start_returns: Vec<f64>,
    pub blind_mean_return: f64,
    pub margin: f64,
}

/// Recomputes the golden numbers with both exact solvers.
pub fn compute_crossing_golden() -> crate::Result<CrossingGolden> {
    let grid = crossing_fixture();
    let aug = AugmentedGridMdp::new(grid.clone(), CROSSING_BUDGET, CROSSING_DELTA);
    let aug_sol = augmented_optimum(&aug, 1e-9);
    let blind = best_markov_policy(&grid, CROSSING_BUDGET as f64)?;
    let blind_return = blind.best_return.ok_or_else(|| {
        crate::Error::InvalidConfig("crossing fixture has no feasible blind policy".into())
    })?;
    Ok(CrossingGolden {
        budget: CROSSING_BUDGET,
        augmented_mean_return: aug_sol.mean_return,
        augmented_start_returns: aug_sol.start_returns,
        blind_mean_return: blind_return,
        margin: aug_sol.mean_return - blind_return,
    })
}

impl CrossingGolden {
    /// Plain-text key-value serialization.
    pub fn to_key_value(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "budget = {}", self.budget);
        let _ = writeln!(s, "augmented_mean_return = {}", self.augmented_mean_return);
        for (i, r) in self.augmented_start_returns.iter().enumerate() {
            let _ = writeln!(s, "augmented_return_start_{i} = {r}");
        }
        let _ = writeln!(s, "blind_mean_return = {}", self.blind_mean_return);
        let _ = writeln!(s, "margin = {}", self.margin);
        s
    }

    pub fn from_key_value(text: &str) -> crate::Result<Self> {
        let mut map = BTreeMap::new();
        for line in text.lines() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (k, v) = line.split_once('=').ok_or_else(|| {
                crate::Error::parse("golden file", format!("missing '=' in line {line:?}"))
            })?;
            map.insert(k.trim().to_string(), v.trim().to_string());
        }
        let get = |k: &str| -> crate::Result<f64> {
            map.get(k)
                .ok_or_else(|| crate::Error::parse("golden file", format!("missing key {k}")))?
                .parse::<f64>()
                .map_err(|e| crate::Error::parse("golden file", e))
        };
        let mut starts = Vec::new();
        for i in 0.. {
            let key = format!("augmented_return_start_{i}");
            if !map.contains_key(&key) {
                break;
            }
            starts.push(get(&key)?);
        }
        Ok(CrossingGolden {
            budget: get("budget")? as i64,
            augmented_mean_return: get("augmented_mean_return")?,
            augmented_start_returns: starts,
            blind_mean_return: get("blind_mean_return")?,
            margin: get("margin")?,
        })
    }

    pub fn write_to(&self, path: impl AsRef<Path>) -> crate::Result<()> {
        std::fs::write(path.as_ref(), self.to_key_value())
            .map_err(|e| crate::Error::io(path.as_ref(), e))
    }

    pub fn read_from(path: impl AsRef<Path>) -> crate::Result<Self> {
        let text = std::fs::read_to_string(path.as_ref())
            .map_err(|e| crate::Error::io(path.as_ref(), e))?;
        Self::from_key_value(&text)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn golden_key_value_round_trip() {
        let g = CrossingGolden {
            budget: 4,
            augmented_mean_return: 42.5,
            augmented_start_returns: vec![41.0, 44.0],
            blind_mean_return: 41.5,
            margin: 1.0,
        };
        let text = g.to_key_value();
        assert_eq!(CrossingGolden::from_key_value(&text).unwrap(), g);
    }

    #[test]
    fn fixture_has_two_starts_and_a_plus_shaped_free_network() {
        let g = crossing_fixture();
        assert_eq!(g.starts.len(), 2);
        assert!(!g.is_hazard(Cell::new(4, 5)));
        assert!(g.is_hazard(Cell::new(4, 4)));
        assert!(g.is_hazard(Cell::new(5, 5)));
        assert_eq!(g.hazard_cells().count(), 81 - 11);
    }
}
