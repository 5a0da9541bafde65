//! Browser bindings for the interactive demo page.
//!
//! Three operations, each pure and seed-driven so the page stays
//! deterministic: a PI-controlled budget trace against a synthetic cost
//! plant, a Q-learned budget trace on the same plant family, and a safe
//! pendulum rollout under a scripted energy-pumping controller. Results are
//! returned as JSON strings; the page parses and plots them on canvases.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use wasm_bindgen::prelude::*;

use simmer_core::envs::{pendulum_step, PendulumSpec, PendulumState};
use simmer_core::saute::{reshape_reward, z_step, ConstraintMode, SauteConfig};
use simmer_core::simmer::{PiSimmer, PiSimmerConfig, QSimmer, QSimmerConfig};

/// Synthetic per-epoch cost: tracks the current budget with lag, noise, and
/// a mid-run unsafe burst, mimicking how realized training cost follows the
/// allowed budget.
fn plant_cost<R: Rng>(
    budget: f64,
    epoch: usize,
    epochs: usize,
    burst: f64,
    noise: f64,
    rng: &mut R,
) -> f64 {
    let in_burst = epoch >= epochs / 3 && epoch < epochs / 2;
    let base = budget + if in_burst { burst } else { 0.0 };
    (base + noise * (rng.gen::<f64>() * 2.0 - 1.0)).max(0.0)
}

#[derive(Serialize)]
struct PiTrace {
    d_ref: Vec<f64>,
    budget: Vec<f64>,
    observed_cost: Vec<f64>,
    filtered_error: Vec<f64>,
}

/// PI Simmer on the synthetic plant. `d_ref` follows a staircase from
/// `d_start` to `d_target`; the observed cost chases the granted budget and
/// bursts above it for a stretch in the middle.
#[wasm_bindgen]
#[allow(clippy::too_many_arguments)]
pub fn pi_simmer_trace(
    kp: f64,
    ki: f64,
    kaw: f64,
    tau: f64,
    delta_d: f64,
    ti: usize,
    epochs: usize,
    d_start: f64,
    d_target: f64,
    burst: f64,
    noise: f64,
    seed: u32,
) -> String {
    let cfg = PiSimmerConfig {
        kp,
        ki,
        kaw,
        tau: tau.clamp(1e-3, 1.0),
        ti: ti.max(1),
        delta_d: delta_d.max(1e-6),
    };
    let mut pi = PiSimmer::new(cfg, d_start, d_target);
    let mut rng = ChaCha8Rng::seed_from_u64(seed as u64);
    let levels = 5usize;
    let mut trace = PiTrace {
        d_ref: Vec::new(),
        budget: Vec::new(),
        observed_cost: Vec::new(),
        filtered_error: Vec::new(),
    };
    for k in 0..epochs.min(5000) {
        let level = (k * levels / epochs.max(1)).min(levels - 1);
        let d_ref =
            d_start + (d_target - d_start) * level as f64 / (levels - 1) as f64;
        let cost = plant_cost(pi.budget(), k, epochs, burst, noise, &mut rng);
        pi.step(d_ref, cost);
        trace.d_ref.push(d_ref);
        trace.budget.push(pi.budget());
        trace.observed_cost.push(cost);
        trace.filtered_error.push(pi.filtered_error());
    }
    serde_json::to_string(&trace).expect("trace serializes")
}

#[derive(Serialize)]
struct QTrace {
    budget: Vec<f64>,
    observed_cost: Vec<f64>,
    filtered_cost: Vec<f64>,
    level: Vec<usize>,
    q_table: Vec<[f64; 3]>,
}

/// Q Simmer over evenly spaced budget levels on the same synthetic plant.
#[wasm_bindgen]
#[allow(clippy::too_many_arguments)]
pub fn q_simmer_trace(
    lr: f64,
    epsilon: f64,
    delta: f64,
    tau: f64,
    n_levels: usize,
    epochs: usize,
    d_start: f64,
    d_target: f64,
    burst: f64,
    noise: f64,
    seed: u32,
) -> String {
    let cfg = QSimmerConfig {
        lr: lr.clamp(0.0, 1.0),
        epsilon: epsilon.clamp(0.0, 1.0),
        delta: delta.max(0.0),
        tau: tau.clamp(1e-3, 1.0),
    };
    let n_levels = n_levels.clamp(2, 25);
    let levels: Vec<f64> = (0..n_levels)
        .map(|i| d_start + (d_target - d_start) * i as f64 / (n_levels - 1) as f64)
        .collect();
    let mut q = QSimmer::new(cfg, levels);
    let mut rng = ChaCha8Rng::seed_from_u64(seed as u64);
    let mut trace = QTrace {
        budget: Vec::new(),
        observed_cost: Vec::new(),
        filtered_cost: Vec::new(),
        level: Vec::new(),
        q_table: Vec::new(),
    };
    for k in 0..epochs.min(5000) {
        let cost = plant_cost(q.budget(), k, epochs, burst, noise, &mut rng);
        q.step(cost, &mut rng);
        trace.budget.push(q.budget());
        trace.observed_cost.push(cost);
        trace.filtered_cost.push(q.filtered_cost());
        trace.level.push(q.level());
    }
    trace.q_table = q.q_table().to_vec();
    serde_json::to_string(&trace).expect("trace serializes")
}

#[derive(Serialize)]
struct PendulumTrace {
    theta: Vec<f64>,
    theta_dot: Vec<f64>,
    torque: Vec<f64>,
    reward: Vec<f64>,
    cost: Vec<f64>,
    z: Vec<f64>,
    reshaped_reward: Vec<f64>,
    delta_region: f64,
}

/// Swing-up rollout under a scripted controller: energy pumping far from
/// upright, PD balance near the top, with the approach side selectable.
/// The safety state depletes as the pendulum grazes the unsafe region.
#[wasm_bindgen]
pub fn pendulum_rollout(
    budget: f64,
    gamma_l: f64,
    delta_penalty: f64,
    swing_direction: f64,
    torque_scale: f64,
    steps: usize,
) -> String {
    let spec = PendulumSpec::default();
    let saute = SauteConfig::new(
        gamma_l.clamp(0.05, 1.0),
        delta_penalty.max(1e-6),
        ConstraintMode::ProbOne,
        budget.abs().max(1.0),
    );
    let mut state = PendulumState::hanging();
    let mut z = budget;
    let mut trace = PendulumTrace {
        theta: vec![state.theta],
        theta_dot: vec![state.theta_dot],
        torque: Vec::new(),
        reward: Vec::new(),
        cost: Vec::new(),
        z: vec![z],
        reshaped_reward: Vec::new(),
        delta_region: spec.delta_region,
    };
    let dir = if swing_direction >= 0.0 { 1.0 } else { -1.0 };
    for _ in 0..steps.min(2000) {
        // Total mechanical energy relative to the upright rest point.
        let energy = 0.5 * state.theta_dot * state.theta_dot / 3.0
            + spec.gravity / spec.length * (state.theta.cos() - 1.0) / 2.0;
        let torque = if state.theta.abs() < 0.9 {
            // Near the top: PD balance, biased to hover on the chosen side.
            let target = -0.12 * dir;
            -4.0 * (state.theta - target) - 1.2 * state.theta_dot
        } else {
            // Pump energy toward zero, kicking in the chosen direction.
            let drive = if state.theta_dot.abs() < 0.3 {
                dir
            } else {
                state.theta_dot.signum()
            };
            -energy * drive * torque_scale
        };
        let out = pendulum_step(&state, torque, &spec);
        let reshaped = reshape_reward(out.reward, z, &saute);
        z = z_step(z, out.cost, saute.gamma_l);
        state = out.next_state;
        trace.theta.push(state.theta);
        trace.theta_dot.push(state.theta_dot);
        trace.torque.push(torque.clamp(-spec.torque_limit, spec.torque_limit));
        trace.reward.push(out.reward);
        trace.cost.push(out.cost);
        trace.z.push(z);
        trace.reshaped_reward.push(reshaped);
    }
    serde_json::to_string(&trace).expect("trace serializes")
}
