use serde::{Deserialize, Serialize};

use super::RewardWeights;

/// The four penalty terms of the shared reward for one timestep.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct RewardTerms {
    /// Σ over buildings of degrees outside the comfort band.
    pub discomfort: f64,
    /// max(0, district net consumption), kWh.
    pub consumption: f64,
    /// |consumption(t) − consumption(t−1)|, kWh.
    pub ramping: f64,
    /// max(0, district grid import − district solar generation), kWh.
    pub solar_penalty: f64,
}

/// −(α·d + β·e + γ·r + λ·s). Every agent receives this same value.
pub fn compute_reward(d: f64, e: f64, r: f64, s: f64, w: &RewardWeights) -> f64 {
    -(w.alpha * d + w.beta * e + w.gamma_w * r + w.lambda_w * s)
}

impl RewardTerms {
    pub fn reward(&self, w: &RewardWeights) -> f64 {
        compute_reward(self.discomfort, self.consumption, self.ramping, self.solar_penalty, w)
    }
}
