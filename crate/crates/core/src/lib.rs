//! Constrained reinforcement learning with safety-state augmentation and
//! scheduled safety budgets.
//!
//! The constraint "discounted accumulated cost stays below a budget `d`" is
//! folded into the state space as a *safety state* `z` (the remaining
//! budget), updated as `z' = (z - l) / gamma_l`. Policies conditioned on `z`
//! can act differently depending on how much budget is left, which is
//! necessary for optimality in general ([`oracle`] contains an exact
//! demonstration). On top of the augmented problem, the training-time budget
//! itself is scheduled from a strict start value up to a target value --
//! either on a fixed ("naive") schedule, by a PI controller with anti-windup
//! ([`simmer::PiSimmer`]), or by a small meta-level Q-learner
//! ([`simmer::QSimmer`]).
//!
//! Module map:
//!
//! * [`envs`] -- the safe pendulum swing-up and a discrete crossing grid.
//! * [`saute`] -- safety-state dynamics and reward reshaping.
//! * [`learners`] -- clipped policy gradient, (PID-)Lagrangian wrappers, and
//!   a tabular learner for the grid.
//! * [`simmer`] -- the budget schedulers.
//! * [`harness`] -- the per-epoch training loop, statistics, persistence.
//! * [`oracle`] -- exact value iteration and policy enumeration used to
//!   verify the rest of the crate.

pub mod envs;
pub mod harness;
pub mod learners;
pub mod oracle;
pub mod saute;
pub mod simmer;

mod error;

pub use error::{Error, Result};
