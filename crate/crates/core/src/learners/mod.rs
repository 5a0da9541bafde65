//! Base safe-RL learners over (possibly augmented) transitions.

mod lagrangian;
mod mlp;
mod policy;
mod ppo;
mod tabular;

pub use lagrangian::{lagrangian_update, pid_lagrangian_update, LagrangianState};
pub use mlp::{Adam, Mlp, MlpCache};
pub use policy::GaussianPolicy;
pub use ppo::{
    gae, pg_update, surrogate_grad, surrogate_loss, PgConfig, PgStats, SurrogateData, TrajView,
};
pub use tabular::{TabularQ, TabularState, TabularTransition};

use rand::Rng;

use crate::envs::Env;
use crate::saute::{self, AugmentedState, SauteConfig};

/// One logged step of a rollout. `z` is the safety state *before* the step,
/// matching the reshaping convention.
#[derive(Debug, Clone)]
pub struct Transition<S, A> {
    pub obs: Vec<f64>,
    pub env_state: S,
    pub z: f64,
    pub t: usize,
    pub action: A,
    pub log_prob: f64,
    pub raw_reward: f64,
    pub reshaped_reward: f64,
    pub cost: f64,
    pub next_env_state: S,
    pub next_z: f64,
    pub done: bool,
}

/// One trajectory with its discounted summaries.
#[derive(Debug, Clone)]
pub struct Trajectory<S, A> {
    pub steps: Vec<Transition<S, A>>,
    /// Observation of the state the horizon cut reached, for value
    /// bootstrapping; `None` when the episode terminated on its own.
    pub final_obs: Option<Vec<f64>>,
    /// `sum_t gamma_r^t * raw_reward_t`.
    pub discounted_return: f64,
    /// `sum_t gamma_l^t * cost_t`.
    pub discounted_cost: f64,
}

/// The on-policy data set of one epoch. Emptied (dropped) after the single
/// learner update that consumes it.
#[derive(Debug, Clone)]
pub struct EpochBatch<S, A> {
    pub trajectories: Vec<Trajectory<S, A>>,
}

impl<S, A> EpochBatch<S, A> {
    pub fn n_transitions(&self) -> usize {
        self.trajectories.iter().map(|t| t.steps.len()).sum()
    }

    pub fn mean_return(&self) -> f64 {
        let n = self.trajectories.len().max(1) as f64;
        self.trajectories.iter().map(|t| t.discounted_return).sum::<f64>() / n
    }
}

/// Rolls out `n_traj` episodes with `z_0 = budget`.
///
/// The policy is any sampler mapping (features, augmented state) to an
/// action and its log-density; when `augment` is false the scaled `z` is
/// left out of the features but the safety state is still tracked for the
/// statistics. Episodes stop early when the environment reports `done` and
/// never exceed the horizon.
#[allow(clippy::too_many_arguments)]
pub fn collect<E, R, P>(
    env: &E,
    saute_cfg: &SauteConfig,
    augment: bool,
    budget: f64,
    n_traj: usize,
    gamma_r: f64,
    rng: &mut R,
    mut policy: P,
) -> crate::Result<EpochBatch<E::State, E::Action>>
where
    E: Env,
    R: Rng + ?Sized,
    P: FnMut(&[f64], &AugmentedState<E::State>, &mut R) -> (E::Action, f64),
{
    if n_traj == 0 {
        return Err(crate::Error::EmptyBatch);
    }
    let mut trajectories = Vec::with_capacity(n_traj);
    for _ in 0..n_traj {
        let mut state = saute::reset_augmented(env, budget, rng);
        let mut steps = Vec::with_capacity(env.horizon());
        let mut discounted_return = 0.0;
        let mut discounted_cost = 0.0;
        for t in 0..env.horizon() {
            let obs = if augment {
                saute::augmented_features(env, &state, saute_cfg)
            } else {
                env.features(&state.env_state)
            };
            let (action, log_prob) = policy(&obs, &state, rng);
            let out = saute::augmented_step(&state, &action, env, saute_cfg)?;
            discounted_return += gamma_r.powi(t as i32) * out.raw_reward;
            discounted_cost += saute_cfg.gamma_l.powi(t as i32) * out.cost;
            steps.push(Transition {
                obs,
                env_state: state.env_state.clone(),
                z: state.z,
                t,
                action,
                log_prob,
                raw_reward: out.raw_reward,
                reshaped_reward: out.reshaped_reward,
                cost: out.cost,
                next_env_state: out.next.env_state.clone(),
                next_z: out.next.z,
                done: out.done,
            });
            state = out.next;
            if steps.last().expect("just pushed").done {
                break;
            }
        }
        let final_obs = if steps.last().map(|s| s.done).unwrap_or(false) {
            None
        } else if augment {
            Some(saute::augmented_features(env, &state, saute_cfg))
        } else {
            Some(env.features(&state.env_state))
        };
        trajectories.push(Trajectory { steps, final_obs, discounted_return, discounted_cost });
    }
    Ok(EpochBatch { trajectories })
}
