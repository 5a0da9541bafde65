//! Diagonal-Gaussian policy over a small MLP trunk.

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::mlp::{Mlp, MlpCache};

const LOG_STD_MIN: f64 = -20.0;
const LOG_STD_MAX: f64 = 2.0;
const HALF_LN_2PI: f64 = 0.918_938_533_204_672_7;

/// MLP -> action mean, plus a state-independent log-std vector.
///
/// Flat parameter order: MLP parameters first, then the log-std entries;
/// log-std stays clipped to `[-20, 2]`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GaussianPolicy {
    pub mlp: Mlp,
    pub log_std: Vec<f64>,
}

impl GaussianPolicy {
    /// `sizes` runs from observation dimension to action dimension, e.g.
    /// `[4, 64, 64, 1]`.
    pub fn new<R: Rng + ?Sized>(sizes: Vec<usize>, log_std_init: f64, rng: &mut R) -> Self {
        let act_dim = *sizes.last().expect("sizes nonempty");
        let mlp = Mlp::new(sizes, rng);
        GaussianPolicy {
            mlp,
            log_std: vec![log_std_init.clamp(LOG_STD_MIN, LOG_STD_MAX); act_dim],
        }
    }

    pub fn action_dim(&self) -> usize {
        self.log_std.len()
    }

    pub fn n_params(&self) -> usize {
        self.mlp.n_params() + self.log_std.len()
    }

    pub fn params_flat(&self) -> Vec<f64> {
        let mut p = self.mlp.params().to_vec();
        p.extend_from_slice(&self.log_std);
        p
    }

    pub fn set_params_flat(&mut self, p: &[f64]) {
        let n = self.mlp.n_params();
        self.mlp.set_params(&p[..n]);
        self.log_std.copy_from_slice(&p[n..]);
    }

    pub fn clamp_log_std(&mut self) {
        for s in &mut self.log_std {
            *s = s.clamp(LOG_STD_MIN, LOG_STD_MAX);
        }
    }

    pub fn is_finite(&self) -> bool {
        self.mlp.is_finite() && self.log_std.iter().all(|s| s.is_finite())
    }

    pub fn mean(&self, obs: &[f64]) -> Vec<f64> {
        self.mlp.eval(obs)
    }

    /// Samples an action and returns its log-density.
    pub fn sample<R: Rng + ?Sized>(&self, obs: &[f64], rng: &mut R) -> (Vec<f64>, f64) {
        let mean = self.mean(obs);
        let mut action = Vec::with_capacity(mean.len());
        for (m, ls) in mean.iter().zip(self.log_std.iter()) {
            let noise: f64 = rng.sample(StandardNormal);
            action.push(m + ls.exp() * noise);
        }
        let logp = log_prob_given_mean(&mean, &self.log_std, &action);
        (action, logp)
    }

    /// Log-density of `action`, with the forward cache for backprop.
    pub fn log_prob(&self, obs: &[f64], action: &[f64]) -> (f64, MlpCache) {
        let cache = self.mlp.forward(obs);
        let logp = log_prob_given_mean(cache.output(), &self.log_std, action);
        (logp, cache)
    }

    /// Accumulates `coeff * d logp / d params` into `grad` (flat layout:
    /// MLP then log-std).
    pub fn log_prob_backward(
        &self,
        cache: &MlpCache,
        action: &[f64],
        coeff: f64,
        grad: &mut [f64],
    ) {
        let mean = cache.output();
        let n_mlp = self.mlp.n_params();
        let mut d_mean = vec![0.0; mean.len()];
        for i in 0..mean.len() {
            let sigma = self.log_std[i].exp();
            let zscore = (action[i] - mean[i]) / sigma;
            // d logp / d mean_i and d logp / d log_std_i.
            d_mean[i] = coeff * zscore / sigma;
            grad[n_mlp + i] += coeff * (zscore * zscore - 1.0);
        }
        self.mlp.backward(cache, &d_mean, &mut grad[..n_mlp]);
    }

    /// Entropy of the Gaussian: `sum_i (log_std_i + 0.5 ln(2 pi e))`.
    pub fn entropy(&self) -> f64 {
        self.log_std.iter().map(|ls| ls + HALF_LN_2PI + 0.5).sum()
    }
}

fn log_prob_given_mean(mean: &[f64], log_std: &[f64], action: &[f64]) -> f64 {
    debug_assert_eq!(mean.len(), action.len());
    let mut logp = 0.0;
    for i in 0..mean.len() {
        let sigma = log_std[i].exp();
        let z = (action[i] - mean[i]) / sigma;
        logp += -0.5 * z * z - log_std[i] - HALF_LN_2PI;
    }
    logp
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn log_prob_gradient_matches_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let mut pi = GaussianPolicy::new(vec![3, 4, 2], -0.3, &mut rng);
        let obs = [0.2, -0.5, 0.9];
        let action = [0.7, -0.1];

        let (_, cache) = pi.log_prob(&obs, &action);
        let mut grad = vec![0.0; pi.n_params()];
        pi.log_prob_backward(&cache, &action, 1.0, &mut grad);

        let h = 1e-6;
        let mut p = pi.params_flat();
        for i in 0..p.len() {
            let orig = p[i];
            p[i] = orig + h;
            pi.set_params_flat(&p);
            let up = pi.log_prob(&obs, &action).0;
            p[i] = orig - h;
            pi.set_params_flat(&p);
            let down = pi.log_prob(&obs, &action).0;
            p[i] = orig;
            pi.set_params_flat(&p);
            let numeric = (up - down) / (2.0 * h);
            assert!(
                (grad[i] - numeric).abs() < 1e-6 * numeric.abs().max(1.0),
                "param {i}: analytic {} vs numeric {numeric}",
                grad[i]
            );
        }
    }

    #[test]
    fn sampling_is_reproducible_under_a_fixed_seed() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let pi = GaussianPolicy::new(vec![2, 4, 1], -0.5, &mut rng);
        let obs = [0.1, 0.2];
        let mut r1 = ChaCha8Rng::seed_from_u64(123);
        let mut r2 = ChaCha8Rng::seed_from_u64(123);
        for _ in 0..10 {
            let (a1, lp1) = pi.sample(&obs, &mut r1);
            let (a2, lp2) = pi.sample(&obs, &mut r2);
            assert_eq!(a1, a2);
            assert_eq!(lp1.to_bits(), lp2.to_bits());
        }
    }
}
