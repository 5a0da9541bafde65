//! Clipped policy-gradient update with GAE advantages.
//!
//! One learner update runs a fixed number of full-batch ascent epochs on
//! the clipped surrogate, with a separate value network fitted to the GAE
//! returns. Advantages and value targets are computed once per update from
//! the pre-update value network.

use serde::{Deserialize, Serialize};

use super::mlp::{Adam, Mlp};
use super::policy::GaussianPolicy;

/// Policy-gradient hyper-parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PgConfig {
    /// Policy learning rate.
    pub lr: f64,
    /// Value-network learning rate.
    pub value_lr: f64,
    pub clip_ratio: f64,
    pub gamma_r: f64,
    pub gae_lambda: f64,
    /// Ascent epochs per update.
    pub inner_epochs: usize,
    /// Transitions per gradient step; `0` means one full-batch step per
    /// inner epoch.
    pub minibatch_size: usize,
    pub entropy_coef: f64,
    pub normalize_advantages: bool,
    /// Hidden layer widths of both networks.
    pub hidden: Vec<usize>,
    pub log_std_init: f64,
}

impl Default for PgConfig {
    fn default() -> Self {
        PgConfig {
            lr: 3e-4,
            value_lr: 1e-3,
            clip_ratio: 0.2,
            gamma_r: 0.99,
            gae_lambda: 0.95,
            inner_epochs: 10,
            minibatch_size: 256,
            entropy_coef: 0.0,
            normalize_advantages: true,
            hidden: vec![64, 64],
            log_std_init: -0.5,
        }
    }
}

/// Flat view of one trajectory as the update consumes it. `rewards` are the
/// learning rewards (already reshaped and/or Lagrangian-mixed);
/// `final_obs` is the horizon-cut state used to bootstrap the value, if the
/// episode did not terminate on its own.
pub struct TrajView<'a> {
    pub obs: &'a [Vec<f64>],
    pub actions: &'a [Vec<f64>],
    pub log_probs: &'a [f64],
    pub rewards: Vec<f64>,
    pub final_obs: Option<&'a [f64]>,
}

/// Fixed data the clipped surrogate is evaluated on.
pub struct SurrogateData {
    pub obs: Vec<Vec<f64>>,
    pub actions: Vec<Vec<f64>>,
    pub advantages: Vec<f64>,
    pub old_log_probs: Vec<f64>,
    pub clip_ratio: f64,
    pub entropy_coef: f64,
}

/// Mean clipped-surrogate loss `-E[min(r A, clip(r) A)] - c H(pi)`.
pub fn surrogate_loss(policy: &GaussianPolicy, data: &SurrogateData) -> f64 {
    let n = data.obs.len() as f64;
    let mut loss = 0.0;
    for i in 0..data.obs.len() {
        let (logp, _) = policy.log_prob(&data.obs[i], &data.actions[i]);
        let ratio = (logp - data.old_log_probs[i]).exp();
        let adv = data.advantages[i];
        let clipped = ratio.clamp(1.0 - data.clip_ratio, 1.0 + data.clip_ratio);
        loss -= (ratio * adv).min(clipped * adv);
    }
    loss / n - data.entropy_coef * policy.entropy()
}

/// Analytic gradient of [`surrogate_loss`] in the policy's flat layout.
///
/// Where the min picks the unclipped branch the gradient through `logp` is
/// `-A r`; where the clipped branch is strictly smaller the ratio sits in
/// the flat region of the clamp, so the contribution is zero.
pub fn surrogate_grad(policy: &GaussianPolicy, data: &SurrogateData) -> Vec<f64> {
    let idx: Vec<usize> = (0..data.obs.len()).collect();
    let mut grad = vec![0.0; policy.n_params()];
    surrogate_grad_indexed(policy, data, &idx, &mut grad);
    grad
}

/// Gradient over a subset of transitions; returns the subset's mean loss.
fn surrogate_grad_indexed(
    policy: &GaussianPolicy,
    data: &SurrogateData,
    idx: &[usize],
    grad: &mut [f64],
) -> f64 {
    let n = idx.len() as f64;
    let mut loss = 0.0;
    for &i in idx {
        let (logp, cache) = policy.log_prob(&data.obs[i], &data.actions[i]);
        let ratio = (logp - data.old_log_probs[i]).exp();
        let adv = data.advantages[i];
        let clipped = ratio.clamp(1.0 - data.clip_ratio, 1.0 + data.clip_ratio);
        loss -= (ratio * adv).min(clipped * adv);
        if ratio * adv <= clipped * adv {
            policy.log_prob_backward(&cache, &data.actions[i], -adv * ratio / n, grad);
        }
    }
    if data.entropy_coef != 0.0 {
        // d entropy / d log_std_i = 1.
        let n_mlp = policy.mlp.n_params();
        for g in grad[n_mlp..].iter_mut() {
            *g -= data.entropy_coef;
        }
    }
    loss / n - data.entropy_coef * policy.entropy()
}

/// GAE advantages and value targets for one trajectory. True terminals
/// bootstrap with zero; horizon cuts bootstrap with `v_last`, the value of
/// the state the cut reached (the observations carry no step index, so a
/// zero bootstrap there would give the value net conflicting targets).
pub fn gae(
    values: &[f64],
    rewards: &[f64],
    v_last: f64,
    gamma: f64,
    lambda: f64,
) -> (Vec<f64>, Vec<f64>) {
    let t_max = rewards.len();
    let mut adv = vec![0.0; t_max];
    let mut running = 0.0;
    for t in (0..t_max).rev() {
        let v_next = if t + 1 < t_max { values[t + 1] } else { v_last };
        let delta = rewards[t] + gamma * v_next - values[t];
        running = delta + gamma * lambda * running;
        adv[t] = running;
    }
    let targets: Vec<f64> = adv.iter().zip(values.iter()).map(|(a, v)| a + v).collect();
    (adv, targets)
}

/// Diagnostics from one update.
#[derive(Debug, Clone, Copy, Default)]
pub struct PgStats {
    pub pi_loss: f64,
    pub v_loss: f64,
}

/// One policy-gradient update over a batch of trajectories: `inner_epochs`
/// passes of shuffled-minibatch ascent on the clipped surrogate, with the
/// value network regressed toward the GAE targets alongside.
///
/// Returns an error (leaving the networks at whatever step they reached) if
/// a non-finite loss or parameter shows up.
pub fn pg_update<R: rand::Rng + ?Sized>(
    policy: &mut GaussianPolicy,
    value: &mut Mlp,
    adam_pi: &mut Adam,
    adam_v: &mut Adam,
    trajs: &[TrajView<'_>],
    cfg: &PgConfig,
    rng: &mut R,
) -> crate::Result<PgStats> {
    if trajs.is_empty() || trajs.iter().all(|t| t.obs.is_empty()) {
        return Err(crate::Error::EmptyBatch);
    }

    // Advantages and targets from the pre-update value function.
    let mut obs = Vec::new();
    let mut actions = Vec::new();
    let mut old_log_probs = Vec::new();
    let mut advantages = Vec::new();
    let mut targets = Vec::new();
    for traj in trajs {
        let values: Vec<f64> = traj.obs.iter().map(|o| value.eval(o)[0]).collect();
        let v_last = traj.final_obs.map(|o| value.eval(o)[0]).unwrap_or(0.0);
        let (adv, tgt) = gae(&values, &traj.rewards, v_last, cfg.gamma_r, cfg.gae_lambda);
        obs.extend(traj.obs.iter().cloned());
        actions.extend(traj.actions.iter().cloned());
        old_log_probs.extend_from_slice(traj.log_probs);
        advantages.extend(adv);
        targets.extend(tgt);
    }

    if cfg.normalize_advantages {
        let n = advantages.len() as f64;
        let mean = advantages.iter().sum::<f64>() / n;
        let var = advantages.iter().map(|a| (a - mean).powi(2)).sum::<f64>() / n;
        let std = var.sqrt();
        for a in &mut advantages {
            *a -= mean;
            if std > 1e-8 {
                *a /= std;
            }
        }
    }

    let data = SurrogateData {
        obs,
        actions,
        advantages,
        old_log_probs,
        clip_ratio: cfg.clip_ratio,
        entropy_coef: cfg.entropy_coef,
    };
    let n = data.obs.len();
    let mb = if cfg.minibatch_size == 0 { n } else { cfg.minibatch_size.min(n) };

    let mut stats = PgStats::default();
    let mut indices: Vec<usize> = (0..n).collect();
    for _ in 0..cfg.inner_epochs {
        use rand::seq::SliceRandom;
        indices.shuffle(rng);
        let mut pi_loss = 0.0;
        let mut v_loss = 0.0;
        let mut n_batches = 0.0;
        for chunk in indices.chunks(mb) {
            // Policy ascent step.
            let mut grad = vec![0.0; policy.n_params()];
            pi_loss += surrogate_grad_indexed(policy, &data, chunk, &mut grad);
            let mut params = policy.params_flat();
            adam_pi.step(&mut params, &grad);
            policy.set_params_flat(&params);
            policy.clamp_log_std();

            // Value regression step.
            let mut v_grad = vec![0.0; value.n_params()];
            let mut batch_v_loss = 0.0;
            for &i in chunk {
                let cache = value.forward(&data.obs[i]);
                let err = cache.output()[0] - targets[i];
                batch_v_loss += 0.5 * err * err;
                value.backward(&cache, &[err / chunk.len() as f64], &mut v_grad);
            }
            adam_v.step(value.params_mut(), &v_grad);
            v_loss += batch_v_loss / chunk.len() as f64;
            n_batches += 1.0;
        }
        stats.pi_loss = pi_loss / n_batches;
        stats.v_loss = v_loss / n_batches;
        if !stats.pi_loss.is_finite() || !stats.v_loss.is_finite() {
            return Err(crate::Error::NonFinite("policy-gradient loss".into()));
        }
    }

    if !policy.is_finite() || !value.is_finite() {
        return Err(crate::Error::NonFinite("network parameters".into()));
    }
    Ok(stats)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn tiny_policy(seed: u64) -> GaussianPolicy {
        // 2 -> 2 -> 1 with one log-std entry: exactly 10 parameters.
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        GaussianPolicy::new(vec![2, 2, 1], -0.4, &mut rng)
    }

    fn random_data(seed: u64, n: usize, policy: &GaussianPolicy) -> SurrogateData {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut obs = Vec::new();
        let mut actions = Vec::new();
        let mut advantages = Vec::new();
        let mut old_log_probs = Vec::new();
        for _ in 0..n {
            let o: Vec<f64> = (0..2).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let (a, logp) = policy.sample(&o, &mut rng);
            obs.push(o);
            actions.push(a);
            advantages.push(rng.gen_range(-2.0..2.0));
            old_log_probs.push(logp);
        }
        SurrogateData {
            obs,
            actions,
            advantages,
            old_log_probs,
            clip_ratio: 0.2,
            entropy_coef: 0.0,
        }
    }

    #[test]
    fn ten_parameter_policy_has_ten_parameters() {
        assert_eq!(tiny_policy(0).n_params(), 10);
    }

    #[test]
    fn surrogate_gradient_matches_finite_differences() {
        // The oracle: central differences at fp64 on a 10-parameter policy
        // over 5 transitions, evaluated at the collection policy where the
        // clipped surrogate is smooth.
        let mut pi = tiny_policy(3);
        let data = random_data(17, 5, &pi);
        let analytic = surrogate_grad(&pi, &data);
        let h = 1e-5;
        let mut p = pi.params_flat();
        let mut max_rel = 0.0f64;
        for i in 0..p.len() {
            let orig = p[i];
            p[i] = orig + h;
            pi.set_params_flat(&p);
            let up = surrogate_loss(&pi, &data);
            p[i] = orig - h;
            pi.set_params_flat(&p);
            let down = surrogate_loss(&pi, &data);
            p[i] = orig;
            pi.set_params_flat(&p);
            let numeric = (up - down) / (2.0 * h);
            let rel = (analytic[i] - numeric).abs() / analytic[i].abs().max(1e-8);
            max_rel = max_rel.max(rel);
        }
        assert!(max_rel < 1e-4, "max relative error {max_rel}");
    }

    #[test]
    fn gae_reduces_to_discounted_residuals() {
        // With lambda = 0, adv[t] = r + gamma v[t+1] - v[t].
        let values = vec![1.0, 2.0, 3.0];
        let rewards = vec![0.5, 0.5, 0.5];
        let (adv, _) = gae(&values, &rewards, 0.0, 0.9, 0.0);
        assert!((adv[0] - (0.5 + 0.9 * 2.0 - 1.0)).abs() < 1e-12);
        assert!((adv[2] - (0.5 - 3.0)).abs() < 1e-12);
        // With lambda = 1, adv[t] + v[t] is the discounted return-to-go.
        let (adv1, tgt) = gae(&values, &rewards, 0.0, 0.9, 1.0);
        let ret0 = 0.5 + 0.9 * 0.5 + 0.81 * 0.5;
        assert!((adv1[0] + values[0] - ret0).abs() < 1e-12);
        assert!((tgt[0] - ret0).abs() < 1e-12);
    }

    #[test]
    fn constant_advantage_batch_moves_only_the_value_head() {
        // All rewards equal and a constant (zero-init-bias) value network
        // give identical advantages; after centering they vanish, so the
        // policy parameters stay put while the value net still learns.
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let mut pi = GaussianPolicy::new(vec![2, 4, 1], -0.4, &mut rng);
        let mut vf = Mlp::new(vec![2, 4, 1], &mut rng);
        let mut adam_pi = Adam::new(1e-2, pi.n_params());
        let mut adam_v = Adam::new(1e-2, vf.n_params());

        // Single-step trajectories with the same observation and reward.
        let obs: Vec<Vec<f64>> = vec![vec![0.3, -0.2]; 4];
        let actions: Vec<Vec<f64>> = (0..4)
            .map(|_| pi.sample(&obs[0], &mut rng).0)
            .collect();
        let log_probs: Vec<f64> =
            actions.iter().map(|a| pi.log_prob(&obs[0], a).0).collect();
        let trajs: Vec<TrajView> = (0..4)
            .map(|i| TrajView {
                obs: &obs[i..=i],
                actions: &actions[i..=i],
                log_probs: &log_probs[i..=i],
                rewards: vec![1.0],
                final_obs: None,
            })
            .collect();

        let before_pi = pi.params_flat();
        let before_v = vf.params().to_vec();
        let cfg = PgConfig { inner_epochs: 3, ..Default::default() };
        pg_update(&mut pi, &mut vf, &mut adam_pi, &mut adam_v, &trajs, &cfg, &mut rng).unwrap();
        assert_eq!(pi.params_flat(), before_pi);
        assert_ne!(vf.params().to_vec(), before_v);
    }

    #[test]
    fn zero_learning_rate_is_a_null_update() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let mut pi = GaussianPolicy::new(vec![2, 4, 1], -0.4, &mut rng);
        let mut vf = Mlp::new(vec![2, 4, 1], &mut rng);
        let mut adam_pi = Adam::new(0.0, pi.n_params());
        let mut adam_v = Adam::new(0.0, vf.n_params());
        let obs = vec![vec![0.5, 0.1], vec![-0.3, 0.9]];
        let (a0, lp0) = pi.sample(&obs[0], &mut rng);
        let (a1, lp1) = pi.sample(&obs[1], &mut rng);
        let actions = vec![a0, a1];
        let log_probs = vec![lp0, lp1];
        let trajs = vec![TrajView {
            obs: &obs,
            actions: &actions,
            log_probs: &log_probs,
            rewards: vec![1.0, -0.5],
            final_obs: None,
        }];
        let before_pi = pi.params_flat();
        let before_v = vf.params().to_vec();
        pg_update(
            &mut pi,
            &mut vf,
            &mut adam_pi,
            &mut adam_v,
            &trajs,
            &PgConfig::default(),
            &mut rng,
        )
        .unwrap();
        for (a, b) in pi.params_flat().iter().zip(before_pi.iter()) {
            assert_eq!(a.to_bits(), b.to_bits());
        }
        for (a, b) in vf.params().iter().zip(before_v.iter()) {
            assert_eq!(a.to_bits(), b.to_bits());
        }
    }

    #[test]
    fn empty_batch_is_an_error() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let mut pi = GaussianPolicy::new(vec![2, 4, 1], -0.4, &mut rng);
        let mut vf = Mlp::new(vec![2, 4, 1], &mut rng);
        let mut adam_pi = Adam::new(1e-3, pi.n_params());
        let mut adam_v = Adam::new(1e-3, vf.n_params());
        let mut rng2 = ChaCha8Rng::seed_from_u64(3);
        let out = pg_update(
            &mut pi,
            &mut vf,
            &mut adam_pi,
            &mut adam_v,
            &[],
            &PgConfig::default(),
            &mut rng2,
        );
        assert!(matches!(out, Err(crate::Error::EmptyBatch)));
    }
}
