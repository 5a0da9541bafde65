//! Safety-state augmentation.
//!
//! The safety state `z` starts at the budget `d` and evolves as
//! `z' = (z - l) / gamma_l`, where `l` is the per-step cost. By telescoping,
//! `gamma_l^(t+1) * z_{t+1} = d - sum_{k<=t} gamma_l^k * l_k`, so `z_T >= 0`
//! holds exactly when the discounted accumulated cost stays within budget.
//! Augmenting `z` into the state lets the policy condition on the remaining
//! budget; for probability-one constraints the reward is additionally
//! reshaped to `-delta_penalty` once `z` goes negative, which makes any
//! violating trajectory dominated for a large enough penalty.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::envs::{Env, StepOutcome};

/// Which statistic the constraint binds: the mean of the discounted cost
/// (`Average`) or its maximum over trajectories, i.e. every single
/// trajectory (`ProbOne`).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ConstraintMode {
    Average,
    ProbOne,
}

/// Parameters of the augmentation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SauteConfig {
    /// Safety discount factor, in `(0, 1]`.
    pub gamma_l: f64,
    /// Reward assigned (negated) while the budget is exhausted. Must be
    /// positive; the default is the episode horizon, which dominates any
    /// achievable return in both shipped environments (per-step reward <= 1).
    pub delta_penalty: f64,
    pub mode: ConstraintMode,
    /// The policy sees `z / z_normalizer` so the feature stays O(1) across
    /// scheduled budgets; the harness sets this to the target budget.
    pub z_normalizer: f64,
}

impl SauteConfig {
    pub fn new(gamma_l: f64, delta_penalty: f64, mode: ConstraintMode, z_normalizer: f64) -> Self {
        SauteConfig { gamma_l, delta_penalty, mode, z_normalizer }
    }

    pub fn validate(&self) -> crate::Result<()> {
        if !(self.gamma_l > 0.0 && self.gamma_l <= 1.0) {
            return Err(crate::Error::InvalidConfig("gamma_l must be in (0, 1]".into()));
        }
        if !(self.delta_penalty > 0.0) {
            return Err(crate::Error::InvalidConfig("delta_penalty must be > 0".into()));
        }
        if !(self.z_normalizer > 0.0) {
            return Err(crate::Error::InvalidConfig("z_normalizer must be > 0".into()));
        }
        Ok(())
    }
}

/// Environment state extended with the safety state and the step index.
#[derive(Debug, Clone, PartialEq)]
pub struct AugmentedState<S> {
    pub env_state: S,
    /// Remaining safety budget; `z = d` at `t = 0`.
    pub z: f64,
    pub t: usize,
}

impl<S> AugmentedState<S> {
    pub fn initial(env_state: S, budget: f64) -> Self {
        AugmentedState { env_state, z: budget, t: 0 }
    }
}

/// Safety-state update: `(z - l) / gamma_l`, exactly.
///
/// No clamping is applied once `z` is negative; repeated violations keep
/// deepening the penalty signal.
pub fn z_step(z: f64, cost: f64, gamma_l: f64) -> f64 {
    (z - cost) / gamma_l
}

/// Reshaped reward for probability-one constraints: the raw reward while
/// `z_t >= 0` (the pre-step safety state), `-delta_penalty` once `z_t < 0`.
/// In average mode this is the identity.
pub fn reshape_reward(reward: f64, z_t: f64, cfg: &SauteConfig) -> f64 {
    match cfg.mode {
        ConstraintMode::Average => reward,
        ConstraintMode::ProbOne => {
            if z_t >= 0.0 {
                reward
            } else {
                -cfg.delta_penalty
            }
        }
    }
}

/// Outcome of one augmented transition.
#[derive(Debug, Clone, PartialEq)]
pub struct AugmentedOutcome<S> {
    pub next: AugmentedState<S>,
    pub reshaped_reward: f64,
    pub raw_reward: f64,
    pub cost: f64,
    pub done: bool,
}

/// Steps the environment and advances the safety state.
///
/// The reshaped reward is computed from the pre-step `z_t`. Exceeding the
/// environment horizon is a contract violation and is reported as an error.
pub fn augmented_step<E: Env>(
    state: &AugmentedState<E::State>,
    action: &E::Action,
    env: &E,
    cfg: &SauteConfig,
) -> crate::Result<AugmentedOutcome<E::State>> {
    if state.t >= env.horizon() {
        return Err(crate::Error::HorizonExceeded { t: state.t, horizon: env.horizon() });
    }
    let StepOutcome { next_state, reward, cost, done } = env.step(&state.env_state, action);
    let next = AugmentedState {
        env_state: next_state,
        z: z_step(state.z, cost, cfg.gamma_l),
        t: state.t + 1,
    };
    Ok(AugmentedOutcome {
        next,
        reshaped_reward: reshape_reward(reward, state.z, cfg),
        raw_reward: reward,
        cost,
        done,
    })
}

/// Observation fed to a budget-conditioned policy: environment features plus
/// the scaled safety state.
pub fn augmented_features<E: Env>(
    env: &E,
    state: &AugmentedState<E::State>,
    cfg: &SauteConfig,
) -> Vec<f64> {
    let mut f = env.features(&state.env_state);
    f.push(state.z / cfg.z_normalizer);
    f
}

/// Draws a fresh augmented initial state with `z = budget`.
pub fn reset_augmented<E: Env, R: Rng + ?Sized>(
    env: &E,
    budget: f64,
    rng: &mut R,
) -> AugmentedState<E::State> {
    AugmentedState::initial(env.reset(rng), budget)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn po_cfg(delta: f64) -> SauteConfig {
        SauteConfig::new(1.0, delta, ConstraintMode::ProbOne, 1.0)
    }

    #[test]
    fn z_step_examples() {
        assert_eq!(z_step(10.0, 2.0, 1.0), 8.0);
        assert_eq!(z_step(10.0, 2.0, 0.5), 16.0);
        assert_eq!(z_step(0.0, 0.0, 0.9), 0.0);
    }

    #[test]
    fn reshape_reward_branches() {
        let cfg = po_cfg(200.0);
        assert_eq!(reshape_reward(0.7, 3.2, &cfg), 0.7);
        assert_eq!(reshape_reward(0.7, -0.5, &cfg), -200.0);
        // z_t = 0 belongs to the safe branch.
        assert_eq!(reshape_reward(0.7, 0.0, &cfg), 0.7);
        let avg = SauteConfig::new(1.0, 200.0, ConstraintMode::Average, 1.0);
        assert_eq!(reshape_reward(0.7, -5.0, &avg), 0.7);
    }

    #[test]
    fn zero_cost_trajectory_has_closed_form_z() {
        let gamma_l = 0.9;
        let d = 7.0;
        let mut z = d;
        for t in 1..=50usize {
            z = z_step(z, 0.0, gamma_l);
            let expected = d / gamma_l.powi(t as i32);
            assert!((z - expected).abs() < 1e-9 * expected.abs().max(1.0));
        }
    }

    #[test]
    fn costs_summing_to_budget_hit_zero_exactly_when_undiscounted() {
        let mut z = 6.0;
        for _ in 0..4 {
            z = z_step(z, 1.5, 1.0);
        }
        assert_eq!(z, 0.0);
    }

    proptest! {
        /// Telescoping identity: gamma^(t+1) z_{t+1} = d - sum gamma^k l_k.
        #[test]
        fn telescoping_identity(
            d in 0.0f64..50.0,
            gamma_l in prop::sample::select(vec![0.5f64, 0.9, 0.99, 1.0]),
            costs in prop::collection::vec(0.0f64..2.0, 1..60),
        ) {
            let mut z = d;
            let mut discounted = 0.0;
            for (t, &l) in costs.iter().enumerate() {
                z = z_step(z, l, gamma_l);
                discounted += gamma_l.powi(t as i32) * l;
                let lhs = gamma_l.powi(t as i32 + 1) * z;
                prop_assert!((lhs - (d - discounted)).abs() < 1e-9);
            }
        }

        /// z_T >= 0 iff the discounted accumulated cost is within budget.
        #[test]
        fn constraint_equivalence(
            d in 0.0f64..30.0,
            gamma_l in prop::sample::select(vec![0.5f64, 0.99, 1.0]),
            costs in prop::collection::vec(0.0f64..2.0, 1..60),
        ) {
            let mut z = d;
            let mut discounted = 0.0;
            for (t, &l) in costs.iter().enumerate() {
                z = z_step(z, l, gamma_l);
                discounted += gamma_l.powi(t as i32) * l;
            }
            prop_assert_eq!(z >= 0.0, discounted <= d + 1e-9 * d.max(1.0));
        }

        /// Monotone refinement: once z dips below zero it stays below
        /// (costs nonnegative, gamma_l <= 1).
        #[test]
        fn negative_z_is_absorbing(
            d in 0.0f64..10.0,
            gamma_l in 0.2f64..=1.0,
            costs in prop::collection::vec(0.0f64..3.0, 1..60),
        ) {
            let mut z = d;
            let mut went_negative = false;
            for &l in &costs {
                z = z_step(z, l, gamma_l);
                if z < 0.0 {
                    went_negative = true;
                }
                if went_negative {
                    prop_assert!(z < 0.0);
                }
            }
        }

        /// Reshaping is the identity on the safe branch.
        #[test]
        fn reshape_identity_when_safe(r in -5.0f64..5.0, z in 0.0f64..10.0) {
            prop_assert_eq!(reshape_reward(r, z, &po_cfg(100.0)), r);
        }
    }

    #[test]
    fn augmented_step_advances_z_and_t() {
        use crate::envs::{PendulumEnv, PendulumSpec, PendulumState};
        let env = PendulumEnv::new(PendulumSpec::default());
        let cfg = po_cfg(200.0);
        let s = AugmentedState::initial(PendulumState::hanging(), 5.0);
        let out = augmented_step(&s, &0.0, &env, &cfg).unwrap();
        assert_eq!(out.next.t, 1);
        assert_eq!(out.next.z, 5.0 - out.cost);
        assert_eq!(out.raw_reward, out.reshaped_reward);
    }

    #[test]
    fn horizon_overrun_is_reported() {
        use crate::envs::{PendulumEnv, PendulumSpec, PendulumState};
        let env = PendulumEnv::new(PendulumSpec { horizon: 3, ..PendulumSpec::default() });
        let cfg = po_cfg(200.0);
        let mut s = AugmentedState::initial(PendulumState::hanging(), 5.0);
        s.t = 3;
        assert!(matches!(
            augmented_step(&s, &0.0, &env, &cfg),
            Err(crate::Error::HorizonExceeded { .. })
        ));
    }
}
