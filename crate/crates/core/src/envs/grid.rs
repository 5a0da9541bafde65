//! Discrete crossing grid.
//!
//! A rectangular grid of cells, some of which are hazards carrying a
//! per-step cost of 1. An episode starts at one of the start cells (drawn
//! uniformly), pays `step_penalty` per move, and ends with `goal_reward` on
//! entering the goal. Moves off the edge are no-ops. The shipped
//! `crossing.grid` fixture realizes the two-paths-through-one-cell scenario:
//! two safe routes to the goal meet at a shared cell with different
//! accumulated costs, so the optimal continuation there depends on the
//! remaining budget.

use std::collections::BTreeSet;
use std::fmt;
use std::path::Path;

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{Env, StepOutcome};

/// Grid coordinate: `x` grows east, `y` grows south, origin at the north-west.
#[derive(
    Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize,
)]
pub struct Cell {
    pub x: usize,
    pub y: usize,
}

impl Cell {
    pub fn new(x: usize, y: usize) -> Self {
        Cell { x, y }
    }
}

impl fmt::Display for Cell {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.x, self.y)
    }
}

/// The four moves. The declaration order (N, S, E, W) is also the
/// deterministic tie-break order used by the exact solvers.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum GridAction {
    North,
    South,
    East,
    West,
}

impl GridAction {
    pub const ALL: [GridAction; 4] =
        [GridAction::North, GridAction::South, GridAction::East, GridAction::West];

    pub fn index(self) -> usize {
        match self {
            GridAction::North => 0,
            GridAction::South => 1,
            GridAction::East => 2,
            GridAction::West => 3,
        }
    }

    fn delta(self) -> (isize, isize) {
        match self {
            GridAction::North => (0, -1),
            GridAction::South => (0, 1),
            GridAction::East => (1, 0),
            GridAction::West => (-1, 0),
        }
    }
}

/// Grid description. Loadable from a plain-text key-value file (see
/// [`GridSpec::from_file`]).
#[derive(Debug, Clone, PartialEq)]
pub struct GridSpec {
    pub width: usize,
    pub height: usize,
    /// Initial cells; episodes start from one of these, uniformly at random.
    pub starts: Vec<Cell>,
    pub goal: Cell,
    hazards: Vec<bool>,
    pub step_penalty: f64,
    pub goal_reward: f64,
    pub horizon: usize,
}

/// On-disk form of a grid file: `key = value` pairs, cells as `[x, y]`.
#[derive(Debug, Serialize, Deserialize)]
struct GridFile {
    width: usize,
    height: usize,
    start: StartField,
    goal: [usize; 2],
    hazard_cells: Vec<[usize; 2]>,
    step_penalty: f64,
    goal_reward: f64,
    horizon: usize,
}

/// `start` accepts a single cell or a list of cells.
#[derive(Debug, Serialize, Deserialize)]
#[serde(untagged)]
enum StartField {
    One([usize; 2]),
    Many(Vec<[usize; 2]>),
}

impl GridSpec {
    pub fn new(
        width: usize,
        height: usize,
        starts: Vec<Cell>,
        goal: Cell,
        hazard_cells: impl IntoIterator<Item = Cell>,
        step_penalty: f64,
        goal_reward: f64,
        horizon: usize,
    ) -> crate::Result<Self> {
        let mut hazards = vec![false; width * height];
        for c in hazard_cells {
            if c.x >= width || c.y >= height {
                return Err(crate::Error::InvalidConfig(format!(
                    "hazard cell {c} out of bounds ({width} x {height})"
                )));
            }
            hazards[c.y * width + c.x] = true;
        }
        let spec = GridSpec {
            width,
            height,
            starts,
            goal,
            hazards,
            step_penalty,
            goal_reward,
            horizon,
        };
        spec.validate()?;
        Ok(spec)
    }

    fn validate(&self) -> crate::Result<()> {
        let inb = |c: &Cell| c.x < self.width && c.y < self.height;
        if self.starts.is_empty() {
            return Err(crate::Error::InvalidConfig("grid needs at least one start".into()));
        }
        if !inb(&self.goal) || self.starts.iter().any(|s| !inb(s)) {
            return Err(crate::Error::InvalidConfig("start/goal out of bounds".into()));
        }
        if self.starts.contains(&self.goal) {
            return Err(crate::Error::InvalidConfig("start must differ from goal".into()));
        }
        if self.is_hazard(self.goal) || self.starts.iter().any(|s| self.is_hazard(*s)) {
            return Err(crate::Error::InvalidConfig(
                "start and goal cells must not be hazards".into(),
            ));
        }
        if self.horizon < 1 {
            return Err(crate::Error::InvalidConfig("grid horizon must be >= 1".into()));
        }
        Ok(())
    }

    pub fn is_hazard(&self, c: Cell) -> bool {
        self.hazards[c.y * self.width + c.x]
    }

    pub fn n_cells(&self) -> usize {
        self.width * self.height
    }

    pub fn cell_index(&self, c: Cell) -> usize {
        c.y * self.width + c.x
    }

    pub fn cell_at(&self, index: usize) -> Cell {
        Cell::new(index % self.width, index / self.width)
    }

    /// Hazard cells in row-major order.
    pub fn hazard_cells(&self) -> impl Iterator<Item = Cell> + '_ {
        (0..self.n_cells()).map(|i| self.cell_at(i)).filter(|c| self.is_hazard(*c))
    }

    /// Loads a spec from a plain-text key-value file.
    pub fn from_file(path: impl AsRef<Path>) -> crate::Result<Self> {
        let path = path.as_ref();
        let text =
            std::fs::read_to_string(path).map_err(|e| crate::Error::io(path, e))?;
        Self::from_str(&text)
    }

    /// Parses the key-value grid format.
    #[allow(clippy::should_implement_trait)]
    pub fn from_str(text: &str) -> crate::Result<Self> {
        let file: GridFile = toml::from_str(text)
            .map_err(|e| crate::Error::parse("grid file", e))?;
        let starts = match file.start {
            StartField::One(c) => vec![Cell::new(c[0], c[1])],
            StartField::Many(cs) => cs.into_iter().map(|c| Cell::new(c[0], c[1])).collect(),
        };
        // BTreeSet deduplicates and fixes the order.
        let hazards: BTreeSet<Cell> =
            file.hazard_cells.iter().map(|c| Cell::new(c[0], c[1])).collect();
        GridSpec::new(
            file.width,
            file.height,
            starts,
            Cell::new(file.goal[0], file.goal[1]),
            hazards,
            file.step_penalty,
            file.goal_reward,
            file.horizon,
        )
    }

    /// Serializes back to the key-value format.
    pub fn to_file_string(&self) -> String {
        let file = GridFile {
            width: self.width,
            height: self.height,
            start: StartField::Many(self.starts.iter().map(|c| [c.x, c.y]).collect()),
            goal: [self.goal.x, self.goal.y],
            hazard_cells: self.hazard_cells().map(|c| [c.x, c.y]).collect(),
            step_penalty: self.step_penalty,
            goal_reward: self.goal_reward,
            horizon: self.horizon,
        };
        toml::to_string(&file).expect("grid file serialization cannot fail")
    }
}

/// One grid transition. Off-grid moves keep the current cell; the cost is 1
/// exactly when the resulting cell is a hazard; entering the goal pays
/// `goal_reward` and terminates, every other move pays `-step_penalty`.
pub fn grid_step(cell: Cell, action: GridAction, spec: &GridSpec) -> StepOutcome<Cell> {
    let (dx, dy) = action.delta();
    let nx = cell.x as isize + dx;
    let ny = cell.y as isize + dy;
    let next = if nx >= 0 && ny >= 0 && (nx as usize) < spec.width && (ny as usize) < spec.height
    {
        Cell::new(nx as usize, ny as usize)
    } else {
        cell
    };
    let done = next == spec.goal;
    StepOutcome {
        next_state: next,
        reward: if done { spec.goal_reward } else { -spec.step_penalty },
        cost: if spec.is_hazard(next) { 1.0 } else { 0.0 },
        done,
    }
}

/// [`Env`] wrapper around [`grid_step`].
#[derive(Debug, Clone)]
pub struct GridEnv {
    pub spec: GridSpec,
}

impl GridEnv {
    pub fn new(spec: GridSpec) -> Self {
        GridEnv { spec }
    }
}

impl Env for GridEnv {
    type State = Cell;
    type Action = GridAction;

    fn reset<R: Rng + ?Sized>(&self, rng: &mut R) -> Cell {
        if self.spec.starts.len() == 1 {
            self.spec.starts[0]
        } else {
            self.spec.starts[rng.gen_range(0..self.spec.starts.len())]
        }
    }

    fn step(&self, state: &Cell, action: &GridAction) -> StepOutcome<Cell> {
        grid_step(*state, *action, &self.spec)
    }

    fn horizon(&self) -> usize {
        self.spec.horizon
    }

    fn features(&self, state: &Cell) -> Vec<f64> {
        vec![
            state.x as f64 / (self.spec.width - 1).max(1) as f64,
            state.y as f64 / (self.spec.height - 1).max(1) as f64,
        ]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny() -> GridSpec {
        // 3x3, start west, goal east, one hazard in the middle.
        GridSpec::new(
            3,
            3,
            vec![Cell::new(0, 1)],
            Cell::new(2, 1),
            [Cell::new(1, 1)],
            1.0,
            10.0,
            20,
        )
        .unwrap()
    }

    #[test]
    fn stepping_into_hazard_costs_one() {
        let g = tiny();
        let out = grid_step(Cell::new(0, 1), GridAction::East, &g);
        assert_eq!(out.next_state, Cell::new(1, 1));
        assert_eq!(out.cost, 1.0);
        assert!(!out.done);
    }

    #[test]
    fn entering_goal_rewards_and_terminates() {
        let g = tiny();
        let out = grid_step(Cell::new(1, 1), GridAction::East, &g);
        assert_eq!(out.next_state, g.goal);
        assert_eq!(out.reward, 10.0);
        assert_eq!(out.cost, 0.0);
        assert!(out.done);
    }

    #[test]
    fn off_grid_moves_are_no_ops_with_cost_of_the_cell() {
        let g = tiny();
        let out = grid_step(Cell::new(0, 1), GridAction::West, &g);
        assert_eq!(out.next_state, Cell::new(0, 1));
        assert_eq!(out.cost, 0.0);
        assert_eq!(out.reward, -1.0);
    }

    #[test]
    fn rejects_start_on_goal_or_hazard() {
        assert!(GridSpec::new(
            2,
            2,
            vec![Cell::new(0, 0)],
            Cell::new(0, 0),
            [],
            1.0,
            1.0,
            5
        )
        .is_err());
        assert!(GridSpec::new(
            2,
            2,
            vec![Cell::new(0, 0)],
            Cell::new(1, 1),
            [Cell::new(0, 0)],
            1.0,
            1.0,
            5
        )
        .is_err());
    }

    #[test]
    fn file_round_trip_preserves_spec() {
        let g = tiny();
        let text = g.to_file_string();
        let parsed = GridSpec::from_str(&text).unwrap();
        assert_eq!(parsed, g);
    }

    #[test]
    fn single_start_shorthand_parses() {
        let text = "width = 2\nheight = 2\nstart = [0, 0]\ngoal = [1, 1]\n\
                    hazard_cells = []\nstep_penalty = 1.0\ngoal_reward = 5.0\nhorizon = 4\n";
        let g = GridSpec::from_str(text).unwrap();
        assert_eq!(g.starts, vec![Cell::new(0, 0)]);
    }
}
