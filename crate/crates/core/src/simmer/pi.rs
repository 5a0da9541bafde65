//! PI-controlled safety budget.
//!
//! Per epoch the controller sees a scheduled reference `d_ref` and an
//! observed cost statistic, forms the error `e = d_ref - cost`, low-pass
//! filters it, and applies a PI step whose output (the budget *increment*)
//! is clipped to `[-delta_d, delta_d]`. Saturation feeds back through the
//! anti-windup term `k_aw * (u_prev - u_raw_prev)` so the integral path
//! cannot run away while the output is pinned. The budget itself is kept
//! inside `[d_start, d_target]`.

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

/// Controller gains and filter parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PiSimmerConfig {
    /// Proportional gain.
    pub kp: f64,
    /// Integral gain.
    pub ki: f64,
    /// Anti-windup gain; higher resets the integral more aggressively on
    /// saturation.
    pub kaw: f64,
    /// Low-pass (Polyak) coefficient of the error filter, in `(0, 1]`;
    /// `tau = 1` disables filtering.
    pub tau: f64,
    /// Integral window length, in epochs.
    pub ti: usize,
    /// Largest budget change per epoch.
    pub delta_d: f64,
}

impl Default for PiSimmerConfig {
    fn default() -> Self {
        PiSimmerConfig { kp: 0.01, ki: 0.005, kaw: 0.01, tau: 0.995, ti: 100, delta_d: 1.0 }
    }
}

impl PiSimmerConfig {
    pub fn validate(&self) -> crate::Result<()> {
        if self.kp < 0.0 || self.ki < 0.0 || self.kaw < 0.0 {
            return Err(crate::Error::InvalidConfig("PI gains must be nonnegative".into()));
        }
        if !(self.tau > 0.0 && self.tau <= 1.0) {
            return Err(crate::Error::InvalidConfig("PI tau must be in (0, 1]".into()));
        }
        if !(self.delta_d > 0.0) {
            return Err(crate::Error::InvalidConfig("PI delta_d must be > 0".into()));
        }
        if self.ti == 0 {
            return Err(crate::Error::InvalidConfig("PI ti must be >= 1".into()));
        }
        Ok(())
    }
}

/// Controller state. One instance drives one experiment; it is a sequential
/// state machine and is not meant to be shared across threads.
#[derive(Debug, Clone)]
pub struct PiSimmer {
    cfg: PiSimmerConfig,
    d_start: f64,
    d_target: f64,
    budget: f64,
    /// Filtered error.
    w: f64,
    /// Last `ti` filtered errors, oldest first.
    window: VecDeque<f64>,
    u_prev: f64,
    u_raw_prev: f64,
}

impl PiSimmer {
    /// Starts at `d_start` with empty memories.
    pub fn new(cfg: PiSimmerConfig, d_start: f64, d_target: f64) -> Self {
        PiSimmer {
            cfg,
            d_start,
            d_target,
            budget: d_start,
            w: 0.0,
            window: VecDeque::with_capacity(cfg.ti.saturating_add(1).min(4096)),
            u_prev: 0.0,
            u_raw_prev: 0.0,
        }
    }

    /// Moves the starting budget to `d0` (clamped into range); the
    /// controller initializes at the first scheduled reference, which only
    /// coincides with `d_start` when the schedule begins there.
    pub fn with_initial_budget(mut self, d0: f64) -> Self {
        self.budget = d0.clamp(self.d_start, self.d_target);
        self
    }

    /// Current training budget `d_k`.
    pub fn budget(&self) -> f64 {
        self.budget
    }

    /// Filtered error `w_k`.
    pub fn filtered_error(&self) -> f64 {
        self.w
    }

    /// Current integral-window sum.
    pub fn integral(&self) -> f64 {
        self.window.iter().sum()
    }

    /// One controller epoch; returns the new budget.
    ///
    /// `d_ref` is the scheduled reference for this epoch and `observed_cost`
    /// the epoch's cost statistic.
    pub fn step(&mut self, d_ref: f64, observed_cost: f64) -> f64 {
        let e = d_ref - observed_cost;
        self.w = (1.0 - self.cfg.tau) * self.w + self.cfg.tau * e;
        self.window.push_back(self.w);
        if self.window.len() > self.cfg.ti {
            self.window.pop_front();
        }
        let integral: f64 = self.window.iter().sum();
        let u_raw = self.cfg.kp * self.w
            + self.cfg.ki * integral
            + self.cfg.kaw * (self.u_prev - self.u_raw_prev);
        let u = u_raw.clamp(-self.cfg.delta_d, self.cfg.delta_d);
        self.budget = (self.budget + u).clamp(self.d_start, self.d_target);
        self.u_prev = u;
        self.u_raw_prev = u_raw;
        self.budget
    }
}
