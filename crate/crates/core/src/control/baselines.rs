use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::Controller;
use crate::error::Result;
use crate::sim::{ActionTriple, District};

/// Storages idle; cooling covers the current demand.
#[derive(Debug, Clone, Default)]
pub struct NoControl;

fn demand_fraction(env: &District, b: usize) -> f64 {
    let t = env.t().min(env.window().end() - 1);
    let demand = env.bundle().buildings[b].cooling_demand.values[t];
    let nominal = env.params()[b].cooling_nominal_power;
    if nominal > 0.0 {
        (demand / nominal).clamp(0.0, 1.0)
    } else {
        0.0
    }
}

fn hour_and_outage(env: &District, b: usize) -> (u32, bool) {
    let t = env.t().min(env.window().end() - 1);
    (env.bundle().weather.hour.values[t] as u32, env.bundle().buildings[b].is_outage(t))
}

impl Controller for NoControl {
    fn name(&self) -> &str {
        "no_control"
    }

    fn act(&mut self, env: &District) -> Result<Vec<ActionTriple>> {
        Ok((0..env.n_agents())
            .map(|b| ActionTriple::new(0.5, 0.5, demand_fraction(env, b)))
            .collect())
    }
}

/// Uniform random actions from a seeded stream.
#[derive(Debug, Clone)]
pub struct RandomController {
    rng: ChaCha8Rng,
}

impl RandomController {
    pub fn new(seed: u64) -> Self {
        Self {
            rng: ChaCha8Rng::seed_from_u64(seed),
        }
    }
}

impl Controller for RandomController {
    fn name(&self) -> &str {
        "random"
    }

    fn act(&mut self, env: &District) -> Result<Vec<ActionTriple>> {
        Ok((0..env.n_agents())
            .map(|_| ActionTriple::new(self.rng.random(), self.rng.random(), self.rng.random()))
            .collect())
    }
}

/// Time-of-use schedule for the storages.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RbcConfig {
    /// Inclusive hour range (1–24) for charging.
    pub charge_hours: (u32, u32),
    pub discharge_hours: (u32, u32),
    pub charge_action: f64,
    pub discharge_action: f64,
}

impl Default for RbcConfig {
    fn default() -> Self {
        Self {
            charge_hours: (1, 6),
            discharge_hours: (18, 22),
            charge_action: 0.7,
            discharge_action: 0.3,
        }
    }
}

/// Rule-based storage command for one building. During an outage the
/// battery discharges regardless of the hour.
pub fn rbc_act(hour: u32, outage: bool, cooling_fraction: f64, config: &RbcConfig) -> ActionTriple {
    let within = |(lo, hi): (u32, u32)| (lo..=hi).contains(&hour);
    let storage = if within(config.charge_hours) {
        config.charge_action
    } else if within(config.discharge_hours) {
        config.discharge_action
    } else {
        0.5
    };
    let electrical = if outage { config.discharge_action } else { storage };
    ActionTriple::new(storage, electrical, cooling_fraction.clamp(0.0, 1.0))
}

#[derive(Debug, Clone, Default)]
pub struct RuleBased {
    pub config: RbcConfig,
}

impl Controller for RuleBased {
    fn name(&self) -> &str {
        "rbc"
    }

    fn act(&mut self, env: &District) -> Result<Vec<ActionTriple>> {
        Ok((0..env.n_agents())
            .map(|b| {
                let (hour, outage) = hour_and_outage(env, b);
                rbc_act(hour, outage, demand_fraction(env, b), &self.config)
            })
            .collect())
    }
}
