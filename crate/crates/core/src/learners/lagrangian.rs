//! Lagrangian and PID-Lagrangian multiplier updates.
//!
//! The multiplier turns the constrained problem into reward mixing: the
//! learner maximizes `(r - lambda * l) / (1 + lambda)`; the normalization
//! keeps the mixed reward on a stable scale as `lambda` grows.

use serde::{Deserialize, Serialize};

/// Multiplier state. `lambda >= 0` always; `integral` is the clamped
/// accumulator of the PID variant.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct LagrangianState {
    pub lambda: f64,
    pub integral: f64,
}

impl LagrangianState {
    /// Mixed learning reward `(r - lambda * l) / (1 + lambda)`.
    pub fn mix(&self, reward: f64, cost: f64) -> f64 {
        (reward - self.lambda * cost) / (1.0 + self.lambda)
    }
}

/// Plain dual ascent: `lambda <- max(0, lambda + lr * (mean_cost - d))`.
pub fn lagrangian_update(
    state: LagrangianState,
    mean_cost: f64,
    budget: f64,
    lr_lambda: f64,
) -> LagrangianState {
    LagrangianState {
        lambda: (state.lambda + lr_lambda * (mean_cost - budget)).max(0.0),
        integral: state.integral,
    }
}

/// PI form of the multiplier (the derivative term is omitted):
/// `integral <- max(0, integral + ki * (mean_cost - d))`,
/// `lambda = max(0, kp * (mean_cost - d) + integral)`.
pub fn pid_lagrangian_update(
    state: LagrangianState,
    mean_cost: f64,
    budget: f64,
    kp: f64,
    ki: f64,
) -> LagrangianState {
    let error = mean_cost - budget;
    let integral = (state.integral + ki * error).max(0.0);
    LagrangianState { lambda: (kp * error + integral).max(0.0), integral }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn zero_error_keeps_lambda_zero() {
        let s = lagrangian_update(LagrangianState::default(), 5.0, 5.0, 0.1);
        assert_eq!(s.lambda, 0.0);
    }

    #[test]
    fn negative_error_clamps_at_zero() {
        let s = LagrangianState { lambda: 0.5, integral: 0.0 };
        let s = lagrangian_update(s, 10.0, 20.0, 0.1);
        assert_eq!(s.lambda, 0.0);
    }

    #[test]
    fn zero_lr_is_identity() {
        let s = LagrangianState { lambda: 0.7, integral: 0.0 };
        assert_eq!(lagrangian_update(s, 100.0, 0.0, 0.0).lambda, 0.7);
    }

    #[test]
    fn pid_constant_error_closed_form() {
        // Constant error e > 0 for n epochs from zero state:
        // lambda_n = kp * e + n * ki * e.
        let (kp, ki, e) = (0.3, 0.07, 4.0);
        let mut s = LagrangianState::default();
        for n in 1..=20 {
            s = pid_lagrangian_update(s, e, 0.0, kp, ki);
            let expected = kp * e + n as f64 * ki * e;
            assert!((s.lambda - expected).abs() < 1e-12, "n = {n}");
        }
    }

    #[test]
    fn pid_hand_value_with_reference_gains() {
        // kp = 0.1, ki = 0.01, first epoch error 5 -> lambda = 0.55.
        let s = pid_lagrangian_update(LagrangianState::default(), 5.0, 0.0, 0.1, 0.01);
        assert!((s.lambda - 0.55).abs() < 1e-15);
    }

    #[test]
    fn pid_zero_error_stays_zero() {
        let mut s = LagrangianState::default();
        for _ in 0..50 {
            s = pid_lagrangian_update(s, 7.0, 7.0, 0.1, 0.01);
            assert_eq!(s.lambda, 0.0);
        }
    }

    #[test]
    fn mixing_is_identity_at_lambda_zero() {
        let s = LagrangianState::default();
        assert_eq!(s.mix(0.8, 123.0), 0.8);
    }

    proptest! {
        /// lambda >= 0 after every update, for any input sequence.
        #[test]
        fn lambda_stays_nonnegative(
            costs in prop::collection::vec(-50.0f64..50.0, 1..100),
            budget in 0.0f64..20.0,
            lr in 0.0f64..1.0,
            kp in 0.0f64..1.0,
            ki in 0.0f64..0.5,
        ) {
            let mut plain = LagrangianState::default();
            let mut pid = LagrangianState::default();
            for &c in &costs {
                plain = lagrangian_update(plain, c, budget, lr);
                pid = pid_lagrangian_update(pid, c, budget, kp, ki);
                prop_assert!(plain.lambda >= 0.0);
                prop_assert!(pid.lambda >= 0.0);
                prop_assert!(pid.integral >= 0.0);
            }
        }
    }
}
