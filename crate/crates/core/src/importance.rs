//! Per-agent contribution scores from no-op counterfactuals.
//!
//! At every step the joint action is computed once; for each agent a clone
//! of the environment is stepped with that agent's action replaced by the
//! no-op, and the gap to the real team reward is accumulated.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sim::{ActionTriple, District};

/// Storages idle, cooling off.
pub fn no_op_action() -> ActionTriple {
    ActionTriple::new(0.5, 0.5, 0.0)
}

/// What the no-op does with the cooling device.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NoOpCooling {
    #[default]
    Off,
    /// Keep the agent's cooling command from its previous real step.
    HoldPrevious,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ImportanceConfig {
    pub retain_differences: bool,
    pub cooling: NoOpCooling,
}

/// Environment that can be cloned and stepped with a joint action.
pub trait CounterfactualEnv: Clone {
    fn n_agents(&self) -> usize;
    /// Steps with a joint action and returns the team reward.
    fn step_joint(&mut self, actions: &[ActionTriple]) -> Result<f64>;
}

impl CounterfactualEnv for District {
    fn n_agents(&self) -> usize {
        District::n_agents(self)
    }

    fn step_joint(&mut self, actions: &[ActionTriple]) -> Result<f64> {
        Ok(self.step(actions)?.reward)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImportanceRecord {
    pub scores: Vec<f64>,
    pub horizon: usize,
    /// `differences[t][i] = r_t − r_t^{−i}` when retention is on.
    pub differences: Option<Vec<Vec<f64>>>,
    /// Team reward of the real trajectory at every step.
    pub team_rewards: Vec<f64>,
    pub clones: usize,
}

impl ImportanceRecord {
    pub fn write_scores_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut wtr = csv::Writer::from_writer(w);
        wtr.write_record(["agent", "score"])?;
        for (i, s) in self.scores.iter().enumerate() {
            wtr.write_record([i.to_string(), s.to_string()])?;
        }
        wtr.flush().map_err(csv::Error::from)?;
        Ok(())
    }

    /// Equal-width histogram of the team rewards.
    pub fn reward_histogram(&self, bins: usize) -> Vec<(f64, f64, usize)> {
        if bins == 0 || self.team_rewards.is_empty() {
            return Vec::new();
        }
        let lo = self.team_rewards.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = self.team_rewards.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let width = if hi > lo { (hi - lo) / bins as f64 } else { 1.0 };
        let mut counts = vec![0usize; bins];
        for r in &self.team_rewards {
            let k = (((r - lo) / width) as usize).min(bins - 1);
            counts[k] += 1;
        }
        counts
            .into_iter()
            .enumerate()
            .map(|(k, c)| (lo + k as f64 * width, lo + (k + 1) as f64 * width, c))
            .collect()
    }

    pub fn write_histogram_csv<W: Write>(&self, w: W, bins: usize) -> Result<()> {
        let mut wtr = csv::Writer::from_writer(w);
        wtr.write_record(["bin_low", "bin_high", "count"])?;
        for (lo, hi, c) in self.reward_histogram(bins) {
            wtr.write_record([lo.to_string(), hi.to_string(), c.to_string()])?;
        }
        wtr.flush().map_err(csv::Error::from)?;
        Ok(())
    }
}

/// Runs `horizon` steps of `env` under `policy`, measuring every agent's
/// contribution along the way. `env` ends in the same state as an
/// unmeasured run.
pub fn agent_importance<E, P>(
    env: &mut E,
    mut policy: P,
    horizon: usize,
    config: ImportanceConfig,
) -> Result<ImportanceRecord>
where
    E: CounterfactualEnv,
    P: FnMut(&E) -> Result<Vec<ActionTriple>>,
{
    if horizon == 0 {
        return Err(Error::InvalidArgument("importance horizon must be at least 1".into()));
    }
    let n = env.n_agents();
    let mut sums = vec![0.0; n];
    let mut differences = config.retain_differences.then(|| Vec::with_capacity(horizon));
    let mut team_rewards = Vec::with_capacity(horizon);
    let mut previous_cooling = vec![0.0; n];
    let mut clones = 0;

    for _ in 0..horizon {
        let joint = policy(env)?;
        if joint.len() != n {
            return Err(Error::AgentCountMismatch {
                expected: n,
                found: joint.len(),
            });
        }
        let mut counterfactual = Vec::with_capacity(n);
        for i in 0..n {
            let mut actions = joint.clone();
            actions[i] = no_op_action();
            if config.cooling == NoOpCooling::HoldPrevious {
                actions[i].cooling_device = previous_cooling[i];
            }
            let mut clone = env.clone();
            clones += 1;
            counterfactual.push(clone.step_joint(&actions)?);
        }
        let r = env.step_joint(&joint)?;
        team_rewards.push(r);
        let step_diffs: Vec<f64> = counterfactual.iter().map(|rc| r - rc).collect();
        for (s, d) in sums.iter_mut().zip(&step_diffs) {
            *s += d;
        }
        if let Some(diffs) = differences.as_mut() {
            diffs.push(step_diffs);
        }
        for (p, a) in previous_cooling.iter_mut().zip(&joint) {
            *p = a.cooling_device;
        }
    }

    Ok(ImportanceRecord {
        scores: sums.into_iter().map(|s| s / horizon as f64).collect(),
        horizon,
        differences,
        team_rewards,
        clones,
    })
}
