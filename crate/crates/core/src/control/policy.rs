use std::path::Path;

use ndarray::Array2;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::dist::squash;
use super::nn::stack_rows;
use super::{Controller, HistoryStack, Mode, PpoActor, RunningNorm, SacActor};
use crate::error::{Error, Result};
use crate::sim::{ActionTriple, District};

pub const CHECKPOINT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ActorHead {
    Gaussian(PpoActor),
    StateDependent(SacActor),
}

impl ActorHead {
    /// Actions in [0, 1] for a batch of normalized inputs.
    fn act(&self, x: &Array2<f64>, mode: Mode, rng: &mut ChaCha8Rng) -> Result<Array2<f64>> {
        match (self, mode) {
            (ActorHead::Gaussian(a), Mode::Deterministic) => Ok(a.mean(x.view())?.mapv_into(squash)),
            (ActorHead::Gaussian(a), Mode::Stochastic) => Ok(a.sample(x.view(), rng)?.0.mapv_into(squash)),
            (ActorHead::StateDependent(a), Mode::Deterministic) => Ok(a.mean(x.view())?.mapv_into(squash)),
            (ActorHead::StateDependent(a), Mode::Stochastic) => Ok(a.sample(x.view(), rng)?.0),
        }
    }

    pub fn input_dim(&self) -> usize {
        match self {
            ActorHead::Gaussian(a) => a.net.input_dim(),
            ActorHead::StateDependent(a) => a.net.input_dim(),
        }
    }
}

/// Trained actor parameters plus everything needed to build their inputs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Policy {
    pub algorithm: String,
    /// One head when parameters are shared, otherwise one per agent.
    pub heads: Vec<ActorHead>,
    pub shared: bool,
    pub history: usize,
    pub obs_dim: usize,
    pub normalizer: RunningNorm,
    pub schema_hash: String,
    pub trained_agents: usize,
}

impl Policy {
    fn head_for(&self, agent: usize) -> usize {
        if self.shared {
            0
        } else {
            agent
        }
    }

    pub fn check_agents(&self, n_agents: usize) -> Result<()> {
        if !self.shared && n_agents != self.heads.len() {
            return Err(Error::AgentCountMismatch {
                expected: self.heads.len(),
                found: n_agents,
            });
        }
        Ok(())
    }

    /// One action per agent from already stacked, unnormalized inputs.
    pub fn act_inputs(&self, inputs: &[Vec<f64>], mode: Mode, rng: &mut ChaCha8Rng) -> Result<Vec<ActionTriple>> {
        self.check_agents(inputs.len())?;
        let rows: Vec<Vec<f64>> = inputs.iter().map(|x| self.normalizer.normalize(x)).collect();
        let mut out = vec![ActionTriple::new(0.5, 0.5, 0.0); inputs.len()];
        if self.shared {
            let a = self.heads[0].act(&stack_rows(&rows)?, mode, rng)?;
            for (o, r) in out.iter_mut().zip(a.rows()) {
                *o = ActionTriple::from_slice(r.as_slice().expect("contiguous row"));
            }
        } else {
            for (i, row) in rows.into_iter().enumerate() {
                let a = self.heads[self.head_for(i)].act(&stack_rows(&[row])?, mode, rng)?;
                out[i] = ActionTriple::from_slice(a.row(0).as_slice().expect("contiguous row"));
            }
        }
        Ok(out)
    }
}

/// A [`Policy`] driving a district, keeping per-agent observation history.
#[derive(Debug, Clone)]
pub struct PolicyController {
    pub policy: Policy,
    pub mode: Mode,
    stack: HistoryStack,
    rng: ChaCha8Rng,
}

impl PolicyController {
    pub fn new(policy: Policy, mode: Mode, seed: u64) -> Self {
        let stack = HistoryStack::new(policy.history, policy.obs_dim);
        Self {
            policy,
            mode,
            stack,
            rng: ChaCha8Rng::seed_from_u64(seed),
        }
    }
}

impl Controller for PolicyController {
    fn name(&self) -> &str {
        &self.policy.algorithm
    }

    fn reset(&mut self, env: &District) -> Result<()> {
        self.policy.check_agents(env.n_agents())?;
        let found = env.schema().len();
        if found != self.policy.obs_dim {
            return Err(Error::DimensionMismatch {
                expected: self.policy.obs_dim,
                found,
            });
        }
        self.stack.reset(env.n_agents());
        Ok(())
    }

    fn act(&mut self, env: &District) -> Result<Vec<ActionTriple>> {
        let inputs = self.stack.push(env.observations());
        self.policy.act_inputs(&inputs, self.mode, &mut self.rng)
    }
}

/// Versioned, schema-tagged policy dump.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub version: u32,
    pub schema_hash: String,
    pub step: u64,
    pub policy: Policy,
}

impl Checkpoint {
    pub fn new(policy: Policy, step: u64) -> Self {
        Self {
            version: CHECKPOINT_VERSION,
            schema_hash: policy.schema_hash.clone(),
            step,
            policy,
        }
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let text = serde_json::to_string(self)?;
        std::fs::write(path, text).map_err(|e| Error::io(path, e))
    }

    /// Loads a checkpoint, refusing other versions and, when given, a
    /// different observation schema.
    pub fn load(path: &Path, expected_schema: Option<&str>) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let ck: Checkpoint = serde_json::from_str(&text)?;
        if ck.version != CHECKPOINT_VERSION {
            return Err(Error::Checkpoint(format!(
                "version {} is not supported (expected {CHECKPOINT_VERSION})",
                ck.version
            )));
        }
        if ck.schema_hash != ck.policy.schema_hash {
            return Err(Error::Checkpoint("schema hash does not match the embedded policy".into()));
        }
        if let Some(expected) = expected_schema {
            if expected != ck.schema_hash {
                return Err(Error::SchemaMismatch {
                    expected: expected.to_string(),
                    found: ck.schema_hash,
                });
            }
        }
        Ok(ck)
    }
}
