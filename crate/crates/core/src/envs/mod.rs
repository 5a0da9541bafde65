//! Exactly-specified desk-scale environments.
//!
//! Both environments are deterministic value types: stepping never mutates
//! the spec, so any number of rollouts may run concurrently. Stochasticity
//! enters only through the initial-state distribution and the policy.

mod grid;
mod pendulum;

pub use grid::{grid_step, Cell, GridAction, GridEnv, GridSpec};
pub use pendulum::{
    pendulum_cost, pendulum_reward, pendulum_step, InitRange, PendulumEnv, PendulumSpec,
    PendulumState,
};

use rand::Rng;

/// Result of one environment transition.
///
/// `cost` is the per-step safety cost and is nonnegative for every reachable
/// transition in both shipped environments.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepOutcome<S> {
    pub next_state: S,
    pub reward: f64,
    pub cost: f64,
    pub done: bool,
}

/// A deterministic episodic environment with a fixed horizon.
pub trait Env {
    type State: Clone;
    type Action: Clone;

    /// Draws an initial state. All randomness comes from `rng`.
    fn reset<R: Rng + ?Sized>(&self, rng: &mut R) -> Self::State;

    /// Advances one step. Deterministic in `(state, action)`.
    fn step(&self, state: &Self::State, action: &Self::Action) -> StepOutcome<Self::State>;

    /// Episode length cap, in steps.
    fn horizon(&self) -> usize;

    /// Observation vector fed to function-approximation learners.
    fn features(&self, state: &Self::State) -> Vec<f64>;
}
