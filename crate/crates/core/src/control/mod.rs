//! Controllers acting on a [`District`]: rule-based and random baselines,
//! trained policies, and the learners that produce them.

mod adam;
mod baselines;
pub mod dist;
mod gae;
pub mod gradcheck;
mod history;
mod nn;
mod normalizer;
mod policy;
mod ppo;
mod replay;
mod sac;
mod train;

pub use adam::Adam;
pub use baselines::{rbc_act, NoControl, RandomController, RbcConfig, RuleBased};
pub use gae::gae_advantages;
pub use history::HistoryStack;
pub use nn::{clip_global_norm, l2_norm, stack_rows, Mlp, MlpCache};
pub use normalizer::RunningNorm;
pub use policy::{ActorHead, Checkpoint, Policy, PolicyController, CHECKPOINT_VERSION};
pub use ppo::{
    ppo_actor_loss, value_loss, ActorLoss, CriticMode, PpoActor, PpoConfig, PpoDiagnostics, PpoLearner,
    RolloutBatch,
};
pub use replay::{ReplayBuffer, Transition};
pub use sac::{sac_actor_loss, temperature_loss, SacActor, SacActorLoss, SacConfig, SacDiagnostics, SacLearner};
pub use train::{train_run, AlgorithmConfig, AlgorithmSpec, EvalPoint, RunOutput, Schedule};

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::sim::{ActionTriple, District};

/// Number of action dimensions per agent.
pub const ACTION_DIM: usize = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    Stochastic,
    Deterministic,
}

/// Anything that maps the district's current state to one action per agent.
pub trait Controller {
    fn name(&self) -> &str;

    /// Called after the district is reset, before the first action.
    fn reset(&mut self, _env: &District) -> Result<()> {
        Ok(())
    }

    fn act(&mut self, env: &District) -> Result<Vec<ActionTriple>>;
}
