//! Minimal dense network with tanh hidden layers and hand-rolled
//! backpropagation, plus an Adam optimizer over flat parameter vectors.
//!
//! Everything runs at f64 so analytic gradients can be checked against
//! central finite differences tightly.

use rand::Rng;
use serde::{Deserialize, Serialize};

/// Fully-connected network, linear output. Parameters live in one flat
/// vector laid out as `[W0 (out x in, row-major), b0, W1, b1, ...]`, which
/// keeps the optimizer and the finite-difference checks trivial.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Mlp {
    sizes: Vec<usize>,
    params: Vec<f64>,
}

/// Per-layer activations from a forward pass, needed for the backward pass.
/// `acts[0]` is the input, `acts[l]` the post-tanh output of layer `l`
/// (post-linear for the last layer).
pub struct MlpCache {
    acts: Vec<Vec<f64>>,
}

impl MlpCache {
    pub fn output(&self) -> &[f64] {
        self.acts.last().expect("cache has at least the input")
    }
}

fn param_count(sizes: &[usize]) -> usize {
    sizes.windows(2).map(|w| w[0] * w[1] + w[1]).sum()
}

impl Mlp {
    /// Xavier-uniform initialization driven entirely by `rng`.
    pub fn new<R: Rng + ?Sized>(sizes: Vec<usize>, rng: &mut R) -> Self {
        assert!(sizes.len() >= 2, "need at least input and output sizes");
        let mut params = Vec::with_capacity(param_count(&sizes));
        for w in sizes.windows(2) {
            let (n_in, n_out) = (w[0], w[1]);
            let limit = (6.0 / (n_in + n_out) as f64).sqrt();
            for _ in 0..n_in * n_out {
                params.push(rng.gen_range(-limit..limit));
            }
            params.extend(std::iter::repeat(0.0).take(n_out));
        }
        Mlp { sizes, params }
    }

    pub fn sizes(&self) -> &[usize] {
        &self.sizes
    }

    pub fn n_params(&self) -> usize {
        self.params.len()
    }

    pub fn params(&self) -> &[f64] {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut [f64] {
        &mut self.params
    }

    pub fn set_params(&mut self, p: &[f64]) {
        assert_eq!(p.len(), self.params.len());
        self.params.copy_from_slice(p);
    }

    pub fn is_finite(&self) -> bool {
        self.params.iter().all(|p| p.is_finite())
    }

    /// Forward pass returning the cache for a later backward pass.
    pub fn forward(&self, input: &[f64]) -> MlpCache {
        assert_eq!(input.len(), self.sizes[0]);
        let n_layers = self.sizes.len() - 1;
        let mut acts = Vec::with_capacity(n_layers + 1);
        acts.push(input.to_vec());
        let mut offset = 0;
        for l in 0..n_layers {
            let (n_in, n_out) = (self.sizes[l], self.sizes[l + 1]);
            let w = &self.params[offset..offset + n_in * n_out];
            let b = &self.params[offset + n_in * n_out..offset + n_in * n_out + n_out];
            offset += n_in * n_out + n_out;
            let x = &acts[l];
            let mut y = vec![0.0; n_out];
            for (o, yo) in y.iter_mut().enumerate() {
                let row = &w[o * n_in..(o + 1) * n_in];
                let mut acc = b[o];
                for (wi, xi) in row.iter().zip(x.iter()) {
                    acc += wi * xi;
                }
                *yo = if l + 1 < n_layers { acc.tanh() } else { acc };
            }
            acts.push(y);
        }
        MlpCache { acts }
    }

    /// Output without keeping the cache.
    pub fn eval(&self, input: &[f64]) -> Vec<f64> {
        let mut cache = self.forward(input);
        cache.acts.pop().expect("forward always produces an output")
    }

    /// Backward pass: accumulates `d loss / d params` into `grad` (same
    /// layout as `params`) given `d loss / d output`.
    pub fn backward(&self, cache: &MlpCache, d_out: &[f64], grad: &mut [f64]) {
        let n_layers = self.sizes.len() - 1;
        assert_eq!(d_out.len(), *self.sizes.last().unwrap());
        assert_eq!(grad.len(), self.params.len());

        // Layer parameter offsets.
        let mut offsets = Vec::with_capacity(n_layers);
        let mut off = 0;
        for l in 0..n_layers {
            offsets.push(off);
            off += self.sizes[l] * self.sizes[l + 1] + self.sizes[l + 1];
        }

        let mut delta = d_out.to_vec();
        for l in (0..n_layers).rev() {
            let (n_in, n_out) = (self.sizes[l], self.sizes[l + 1]);
            let off = offsets[l];
            let x = &cache.acts[l];
            // tanh derivative on hidden layers (output layer is linear).
            if l + 1 < n_layers {
                for (d, a) in delta.iter_mut().zip(cache.acts[l + 1].iter()) {
                    *d *= 1.0 - a * a;
                }
            }
            let (gw, gb) = grad[off..off + n_in * n_out + n_out].split_at_mut(n_in * n_out);
            for (o, d) in delta.iter().enumerate() {
                let row = &mut gw[o * n_in..(o + 1) * n_in];
                for (g, xi) in row.iter_mut().zip(x.iter()) {
                    *g += d * xi;
                }
                gb[o] += d;
            }
            if l > 0 {
                let w = &self.params[off..off + n_in * n_out];
                let mut d_in = vec![0.0; n_in];
                for (o, d) in delta.iter().enumerate() {
                    let row = &w[o * n_in..(o + 1) * n_in];
                    for (di, wi) in d_in.iter_mut().zip(row.iter()) {
                        *di += d * wi;
                    }
                }
                delta = d_in;
            }
        }
    }
}

/// Adam over a flat parameter vector.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Adam {
    pub lr: f64,
    beta1: f64,
    beta2: f64,
    eps: f64,
    t: u64,
    m: Vec<f64>,
    v: Vec<f64>,
}

impl Adam {
    pub fn new(lr: f64, n_params: usize) -> Self {
        Adam {
            lr,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            t: 0,
            m: vec![0.0; n_params],
            v: vec![0.0; n_params],
        }
    }

    /// In-place parameter update from a gradient of the loss.
    pub fn step(&mut self, params: &mut [f64], grad: &[f64]) {
        assert_eq!(params.len(), self.m.len());
        assert_eq!(grad.len(), self.m.len());
        self.t += 1;
        let bc1 = 1.0 - self.beta1.powi(self.t as i32);
        let bc2 = 1.0 - self.beta2.powi(self.t as i32);
        for i in 0..params.len() {
            self.m[i] = self.beta1 * self.m[i] + (1.0 - self.beta1) * grad[i];
            self.v[i] = self.beta2 * self.v[i] + (1.0 - self.beta2) * grad[i] * grad[i];
            let m_hat = self.m[i] / bc1;
            let v_hat = self.v[i] / bc2;
            params[i] -= self.lr * m_hat / (v_hat.sqrt() + self.eps);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn forward_of_zero_init_biases_is_zero_on_zero_input() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let net = Mlp::new(vec![3, 8, 2], &mut rng);
        let out = net.eval(&[0.0, 0.0, 0.0]);
        // Biases start at zero, tanh(0) = 0, so the output is exactly zero.
        assert_eq!(out, vec![0.0, 0.0]);
    }

    #[test]
    fn backward_matches_finite_differences_on_scalar_loss() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let mut net = Mlp::new(vec![2, 4, 1], &mut rng);
        let x = [0.3, -0.7];
        // loss = output[0]; d loss / d out = 1.
        let cache = net.forward(&x);
        let mut grad = vec![0.0; net.n_params()];
        net.backward(&cache, &[1.0], &mut grad);

        let h = 1e-6;
        for i in 0..net.n_params() {
            let orig = net.params()[i];
            net.params_mut()[i] = orig + h;
            let up = net.eval(&x)[0];
            net.params_mut()[i] = orig - h;
            let down = net.eval(&x)[0];
            net.params_mut()[i] = orig;
            let numeric = (up - down) / (2.0 * h);
            assert!(
                (grad[i] - numeric).abs() < 1e-7 * numeric.abs().max(1.0),
                "param {i}: analytic {} vs numeric {numeric}",
                grad[i]
            );
        }
    }

    #[test]
    fn adam_zero_lr_leaves_params_bit_identical() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let mut net = Mlp::new(vec![2, 3, 1], &mut rng);
        let before = net.params().to_vec();
        let grad = vec![1.0; net.n_params()];
        let mut opt = Adam::new(0.0, net.n_params());
        opt.step(net.params_mut(), &grad);
        for (a, b) in net.params().iter().zip(before.iter()) {
            assert_eq!(a.to_bits(), b.to_bits());
        }
    }

    #[test]
    fn adam_descends_a_quadratic() {
        let mut p = vec![5.0, -3.0];
        let mut opt = Adam::new(0.1, 2);
        for _ in 0..2000 {
            let g: Vec<f64> = p.iter().map(|x| 2.0 * x).collect();
            opt.step(&mut p, &g);
        }
        assert!(p.iter().all(|x| x.abs() < 1e-3), "p = {p:?}");
    }
}
