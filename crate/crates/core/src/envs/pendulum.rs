//! Safe pendulum swing-up.
//!
//! A torque-limited pendulum must swing up to the upright position while
//! avoiding an unsafe angular region on one side. The reward is a quadratic
//! penalty on angle, velocity and torque, normalized into `[0, 1]`; the
//! safety cost ramps linearly inside the unsafe region and is zero outside.
//!
//! Unit convention: the state stores the angle in radians (measured from
//! upright, wrapped to `(-pi, pi]`), the reward formula works in radians,
//! while the cost formula and the unsafe-region parameter `delta_region`
//! work in degrees. The conversion happens inside [`pendulum_cost`].

use std::f64::consts::PI;

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{Env, StepOutcome};

/// Largest angular speed, rad/s. Velocities are clipped to this magnitude.
pub const MAX_SPEED: f64 = 8.0;

/// Velocity/torque part of the reward normalizer: `0.1 * 8^2 + 0.001 * 2^2`.
/// The full normalizer `pi^2 + 6.404` is the largest achievable penalty, so
/// the reward lies in `[0, 1]`.
const REWARD_NORM: f64 = 6.404;

/// Pendulum state: angle from upright (radians, wrapped to `(-pi, pi]`) and
/// angular velocity (rad/s, clipped to `[-8, 8]`).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PendulumState {
    pub theta: f64,
    pub theta_dot: f64,
}

impl PendulumState {
    /// Builds a state, enforcing the wrap/clip invariants.
    pub fn new(theta: f64, theta_dot: f64) -> Self {
        PendulumState {
            theta: wrap_angle(theta),
            theta_dot: theta_dot.clamp(-MAX_SPEED, MAX_SPEED),
        }
    }

    /// Hanging straight down, at rest.
    pub fn hanging() -> Self {
        PendulumState { theta: PI, theta_dot: 0.0 }
    }
}

/// Wraps an angle to `(-pi, pi]`.
pub fn wrap_angle(theta: f64) -> f64 {
    let w = (theta + PI).rem_euclid(2.0 * PI) - PI;
    if w == -PI {
        PI
    } else {
        w
    }
}

/// Closed interval an initial-state component is drawn from, uniformly.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InitRange {
    pub lo: f64,
    pub hi: f64,
}

impl InitRange {
    pub fn new(lo: f64, hi: f64) -> Self {
        InitRange { lo, hi }
    }

    fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        if self.lo == self.hi {
            self.lo
        } else {
            rng.gen_range(self.lo..=self.hi)
        }
    }
}

/// Physics constants and episode parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PendulumSpec {
    /// Integration timestep, seconds.
    pub dt: f64,
    pub mass: f64,
    pub length: f64,
    pub gravity: f64,
    /// Torque magnitude cap; actions are clipped to `[-torque_limit, torque_limit]`.
    pub torque_limit: f64,
    /// Steps per episode.
    pub horizon: usize,
    /// Center of the unsafe region, degrees from upright. The region support
    /// is fixed at `[-25, 75]` degrees; 25 is the only center for which the
    /// cost is continuous at both boundaries.
    pub delta_region: f64,
    /// Initial angle range, radians.
    pub init_theta: InitRange,
    /// Initial angular-velocity range, rad/s.
    pub init_theta_dot: InitRange,
}

impl Default for PendulumSpec {
    fn default() -> Self {
        PendulumSpec {
            dt: 0.05,
            mass: 1.0,
            length: 1.0,
            gravity: 10.0,
            torque_limit: 2.0,
            horizon: 200,
            delta_region: 25.0,
            init_theta: InitRange::new(-PI, PI),
            init_theta_dot: InitRange::new(-1.0, 1.0),
        }
    }
}

impl PendulumSpec {
    pub fn validate(&self) -> crate::Result<()> {
        if !(self.dt > 0.0) {
            return Err(crate::Error::InvalidConfig("pendulum dt must be > 0".into()));
        }
        if self.horizon < 1 {
            return Err(crate::Error::InvalidConfig("pendulum horizon must be >= 1".into()));
        }
        if !(self.torque_limit > 0.0) {
            return Err(crate::Error::InvalidConfig("pendulum torque_limit must be > 0".into()));
        }
        Ok(())
    }
}

/// Reward for taking torque `action` in `state`:
/// `1 - (theta^2 + 0.1 theta_dot^2 + 0.001 a^2) / (pi^2 + 6.404)`,
/// maximal (exactly 1) at the upright rest point with zero torque.
pub fn pendulum_reward(state: &PendulumState, action: f64) -> f64 {
    let penalty =
        state.theta.powi(2) + 0.1 * state.theta_dot.powi(2) + 0.001 * action.powi(2);
    1.0 - penalty / (PI * PI + REWARD_NORM)
}

/// Safety cost at angle `theta_deg` (degrees from upright):
/// `1 - |theta - delta_region| / 50` inside the fixed support
/// `[-25, 75]` degrees, zero outside, floored at zero.
pub fn pendulum_cost(theta_deg: f64, delta_region: f64) -> f64 {
    if (-25.0..=75.0).contains(&theta_deg) {
        (1.0 - (theta_deg - delta_region).abs() / 50.0).max(0.0)
    } else {
        0.0
    }
}

/// One step of the frictionless pendulum under clipped torque.
///
/// Dynamics follow the standard swing-up convention with the angle measured
/// from upright: `theta_ddot = (3 g / 2 l) sin(theta) + (3 / m l^2) a`,
/// integrated with semi-implicit Euler (velocity first, then position).
/// The reward is evaluated on the pre-step state and the clipped action; the
/// cost is evaluated on the post-step angle, i.e. you pay for where you land.
pub fn pendulum_step(
    state: &PendulumState,
    action: f64,
    spec: &PendulumSpec,
) -> StepOutcome<PendulumState> {
    let a = action.clamp(-spec.torque_limit, spec.torque_limit);
    let accel = 3.0 * spec.gravity / (2.0 * spec.length) * state.theta.sin()
        + 3.0 / (spec.mass * spec.length * spec.length) * a;
    let theta_dot = (state.theta_dot + accel * spec.dt).clamp(-MAX_SPEED, MAX_SPEED);
    let theta = wrap_angle(state.theta + theta_dot * spec.dt);
    let next_state = PendulumState { theta, theta_dot };

    StepOutcome {
        next_state,
        reward: pendulum_reward(state, a),
        cost: pendulum_cost(theta.to_degrees(), spec.delta_region),
        done: false,
    }
}

/// [`Env`] wrapper around the free functions.
#[derive(Debug, Clone, Copy)]
pub struct PendulumEnv {
    pub spec: PendulumSpec,
}

impl PendulumEnv {
    pub fn new(spec: PendulumSpec) -> Self {
        PendulumEnv { spec }
    }
}

impl Env for PendulumEnv {
    type State = PendulumState;
    type Action = f64;

    fn reset<R: Rng + ?Sized>(&self, rng: &mut R) -> PendulumState {
        let theta = self.spec.init_theta.sample(rng);
        let theta_dot = self.spec.init_theta_dot.sample(rng);
        PendulumState::new(theta, theta_dot)
    }

    fn step(&self, state: &PendulumState, action: &f64) -> StepOutcome<PendulumState> {
        pendulum_step(state, *action, &self.spec)
    }

    fn horizon(&self) -> usize {
        self.spec.horizon
    }

    fn features(&self, state: &PendulumState) -> Vec<f64> {
        vec![state.theta.cos(), state.theta.sin(), state.theta_dot]
    }
}
