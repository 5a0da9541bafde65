//! Invariants of the shipped crossing fixture, verified by exhaustive path
//! enumeration, plus file-format checks.

use std::collections::HashSet;

use simmer_core::envs::{grid_step, Cell, GridAction, GridSpec};
use simmer_core::oracle;

fn fixture_path() -> String {
    format!("{}/fixtures/crossing.grid", env!("CARGO_MANIFEST_DIR"))
}

#[test]
fn shipped_grid_file_matches_the_programmatic_fixture() {
    let from_file = GridSpec::from_file(fixture_path()).expect("fixture parses");
    assert_eq!(from_file, oracle::crossing_fixture());
}

/// Every safe (cost within budget) simple path from a start to the goal, up
/// to a length cap, with the accumulated cost at each visited cell.
fn enumerate_safe_paths(
    grid: &GridSpec,
    start: Cell,
    budget: f64,
    max_len: usize,
) -> Vec<Vec<(Cell, f64)>> {
    let mut out = Vec::new();
    let mut path = vec![(start, 0.0)];
    let mut visited: HashSet<Cell> = [start].into();
    fn dfs(
        grid: &GridSpec,
        budget: f64,
        max_len: usize,
        path: &mut Vec<(Cell, f64)>,
        visited: &mut HashSet<Cell>,
        out: &mut Vec<Vec<(Cell, f64)>>,
    ) {
        let (cell, cost) = *path.last().expect("path nonempty");
        if cell == grid.goal {
            out.push(path.clone());
            return;
        }
        if path.len() > max_len {
            return;
        }
        for action in GridAction::ALL {
            let step = grid_step(cell, action, grid);
            let next = step.next_state;
            let next_cost = cost + step.cost;
            if next == cell || visited.contains(&next) || next_cost > budget {
                continue;
            }
            visited.insert(next);
            path.push((next, next_cost));
            dfs(grid, budget, max_len, path, visited, out);
            path.pop();
            visited.remove(&next);
        }
    }
    dfs(grid, budget, max_len, &mut path, &mut visited, &mut out);
    out
}

#[test]
fn two_safe_paths_share_a_cell_with_different_accumulated_costs() {
    let grid = oracle::crossing_fixture();
    let budget = oracle::CROSSING_BUDGET as f64;
    // Exhaustive enumeration of simple safe paths from each start (the cap
    // comfortably exceeds the optimal lengths).
    let paths_a = enumerate_safe_paths(&grid, grid.starts[0], budget, 16);
    let paths_b = enumerate_safe_paths(&grid, grid.starts[1], budget, 16);
    assert!(!paths_a.is_empty(), "no safe path from the banded start");
    assert!(!paths_b.is_empty(), "no safe path from the corridor start");

    // Some pair of safe goal-reaching paths passes one shared cell with
    // different accumulated costs there.
    let mut witness = None;
    'outer: for pa in &paths_a {
        for pb in &paths_b {
            for (ca, cost_a) in pa.iter().take(pa.len() - 1).skip(1) {
                for (cb, cost_b) in pb.iter().take(pb.len() - 1).skip(1) {
                    if ca == cb && (cost_a - cost_b).abs() > 0.5 {
                        witness = Some((*ca, *cost_a, *cost_b));
                        break 'outer;
                    }
                }
            }
        }
    }
    let (cell, cost_a, cost_b) =
        witness.expect("no shared intermediate cell with differing accumulated costs");
    assert_eq!(cell, Cell::new(4, 5));
    assert_ne!(cost_a, cost_b);
}

#[test]
fn all_fixture_costs_are_nonnegative() {
    let grid = oracle::crossing_fixture();
    for ci in 0..grid.n_cells() {
        let cell = grid.cell_at(ci);
        for action in GridAction::ALL {
            assert!(grid_step(cell, action, &grid).cost >= 0.0);
        }
    }
}

#[test]
fn penalty_scale_invariance_of_the_greedy_policy() {
    // Once violations dominate, the margin between penalty levels does not
    // move the optimum: the golden numbers agree when delta is scaled 10x.
    let grid = oracle::crossing_fixture();
    let a = oracle::augmented_optimum(
        &oracle::AugmentedGridMdp::new(grid.clone(), oracle::CROSSING_BUDGET, 1_000.0),
        1e-9,
    );
    let b = oracle::augmented_optimum(
        &oracle::AugmentedGridMdp::new(grid, oracle::CROSSING_BUDGET, 10_000.0),
        1e-9,
    );
    assert_eq!(a.mean_return, b.mean_return);
    assert_eq!(a.start_returns, b.start_returns);
}
