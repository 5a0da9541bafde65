//! Safety-budget meta-controllers.
//!
//! Three ways to drive the training-time budget `d_k` from a strict start
//! value toward the target: a fixed staircase schedule
//! ([`BudgetSchedule::naive`]), a PI controller with low-pass filtering and
//! anti-windup ([`PiSimmer`]), and a meta-level Q-learner over discrete
//! budget levels ([`QSimmer`]).

mod pi;
mod q;

pub use pi::{PiSimmer, PiSimmerConfig};
pub use q::{q_simmer_reward, QSimmer, QSimmerAction, QSimmerConfig};

use serde::{Deserialize, Serialize};

/// An ordered ladder of budget levels `d_0 <= ... <= d_{K-1}`, with
/// `d_start = levels[0]` and `d_target = levels[K-1]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BudgetSchedule {
    pub levels: Vec<f64>,
    /// Epochs spent on each level in naive mode.
    pub epochs_per_level: usize,
}

impl BudgetSchedule {
    pub fn new(levels: Vec<f64>, epochs_per_level: usize) -> crate::Result<Self> {
        if levels.is_empty() {
            return Err(crate::Error::InvalidConfig("budget levels must be nonempty".into()));
        }
        if levels.windows(2).any(|w| w[0] > w[1]) {
            return Err(crate::Error::InvalidConfig("budget levels must be nondecreasing".into()));
        }
        if epochs_per_level == 0 {
            return Err(crate::Error::InvalidConfig("epochs_per_level must be >= 1".into()));
        }
        Ok(BudgetSchedule { levels, epochs_per_level })
    }

    pub fn d_start(&self) -> f64 {
        self.levels[0]
    }

    pub fn d_target(&self) -> f64 {
        *self.levels.last().expect("levels nonempty")
    }

    pub fn n_levels(&self) -> usize {
        self.levels.len()
    }

    /// The naive staircase: `levels[min(k / epochs_per_level, K - 1)]`.
    /// Saturates at the target once every level has been visited.
    pub fn naive(&self, epoch: usize) -> f64 {
        let idx = (epoch / self.epochs_per_level).min(self.levels.len() - 1);
        self.levels[idx]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn naive_schedule_staircase() {
        let s = BudgetSchedule::new(vec![1.0, 5.0, 10.0, 15.0, 20.0], 200).unwrap();
        assert_eq!(s.naive(0), 1.0);
        assert_eq!(s.naive(199), 1.0);
        assert_eq!(s.naive(450), 10.0);
        assert_eq!(s.naive(999), 20.0);
        // Saturation: past the last switch the target holds forever.
        assert_eq!(s.naive(5 * 200), 20.0);
        assert_eq!(s.naive(1_000_000), 20.0);
    }

    #[test]
    fn schedule_rejects_decreasing_levels() {
        assert!(BudgetSchedule::new(vec![5.0, 1.0], 10).is_err());
        assert!(BudgetSchedule::new(vec![], 10).is_err());
        assert!(BudgetSchedule::new(vec![1.0], 0).is_err());
    }
}
