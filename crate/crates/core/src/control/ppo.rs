//! Clipped-surrogate policy optimization with a Gaussian policy whose
//! standard deviation does not depend on the state.

use ndarray::{Array2, ArrayView2, Axis};
use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::dist::{gaussian_entropy, gaussian_log_prob};
use super::nn::{clip_global_norm, Mlp};
use super::{Adam, ACTION_DIM};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CriticMode {
    /// Critic sees the agent's own input.
    Local,
    /// Critic sees the inputs of all agents concatenated.
    Concatenated,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PpoConfig {
    pub gamma: f64,
    pub gae_lambda: f64,
    pub clip: f64,
    pub entropy_coef: f64,
    pub epochs: usize,
    pub minibatches: usize,
    pub max_grad_norm: f64,
    pub actor_lr: f64,
    pub critic_lr: f64,
    pub actor_hidden: (usize, usize),
    pub critic_hidden: (usize, usize),
    /// Steps collected per environment copy between updates.
    pub rollout_len: usize,
    pub n_envs: usize,
    pub init_log_std: f64,
}

impl Default for PpoConfig {
    fn default() -> Self {
        Self {
            gamma: 0.99,
            gae_lambda: 0.95,
            clip: 0.2,
            entropy_coef: 0.0,
            epochs: 4,
            minibatches: 4,
            max_grad_norm: 0.5,
            actor_lr: 0.0025,
            critic_lr: 0.0025,
            actor_hidden: (256, 256),
            critic_hidden: (256, 256),
            rollout_len: 1024,
            n_envs: 8,
            init_log_std: -0.5,
        }
    }
}

impl PpoConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidArgument(format!("ppo config: {m}")));
        if !(0.0..=1.0).contains(&self.gamma) || !(0.0..=1.0).contains(&self.gae_lambda) {
            return bad("gamma and gae_lambda must lie in [0, 1]");
        }
        if !(self.clip > 0.0) || self.epochs == 0 || self.minibatches == 0 {
            return bad("clip, epochs and minibatches must be positive");
        }
        if self.rollout_len == 0 || self.n_envs == 0 {
            return bad("rollout_len and n_envs must be positive");
        }
        if !(self.actor_lr > 0.0 && self.critic_lr > 0.0 && self.max_grad_norm > 0.0) {
            return bad("learning rates and max_grad_norm must be positive");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PpoActor {
    pub net: Mlp,
    pub log_std: Vec<f64>,
}

impl PpoActor {
    pub fn new<R: Rng + ?Sized>(input: usize, hidden: (usize, usize), init_log_std: f64, rng: &mut R) -> Self {
        Self {
            net: Mlp::new(input, hidden, ACTION_DIM, 0.01, rng),
            log_std: vec![init_log_std; ACTION_DIM],
        }
    }

    pub fn mean(&self, x: ArrayView2<f64>) -> Result<Array2<f64>> {
        self.net.predict(x)
    }

    /// Samples pre-squash actions and their log-probabilities.
    pub fn sample<R: Rng + ?Sized>(&self, x: ArrayView2<f64>, rng: &mut R) -> Result<(Array2<f64>, Vec<f64>)> {
        let mean = self.mean(x)?;
        let mut u = mean.clone();
        for mut row in u.rows_mut() {
            for (j, v) in row.iter_mut().enumerate() {
                let z: f64 = rng.sample(StandardNormal);
                *v += self.log_std[j].exp() * z;
            }
        }
        let logp = self.log_prob(&mean, &u);
        Ok((u, logp))
    }

    pub fn log_prob(&self, mean: &Array2<f64>, u: &Array2<f64>) -> Vec<f64> {
        mean.rows()
            .into_iter()
            .zip(u.rows())
            .map(|(m, a)| (0..ACTION_DIM).map(|j| gaussian_log_prob(a[j], m[j], self.log_std[j])).sum())
            .collect()
    }

    pub fn entropy(&self) -> f64 {
        self.log_std.iter().map(|s| gaussian_entropy(*s)).sum()
    }
}

#[derive(Debug, Clone)]
pub struct ActorLoss {
    pub loss: f64,
    pub grad_net: Vec<f64>,
    pub grad_log_std: Vec<f64>,
    pub clip_fraction: f64,
    pub approx_kl: f64,
    pub entropy: f64,
}

/// Clipped surrogate loss with entropy bonus and its gradient.
/// `advantages` are used as given (normalize beforehand).
pub fn ppo_actor_loss(
    actor: &PpoActor,
    inputs: ArrayView2<f64>,
    u: ArrayView2<f64>,
    logp_old: &[f64],
    advantages: &[f64],
    clip: f64,
    entropy_coef: f64,
) -> Result<ActorLoss> {
    let n = inputs.nrows();
    if n == 0 {
        return Err(Error::EmptyInput("ppo minibatch"));
    }
    let (mean, cache) = actor.net.forward(inputs)?;
    let u = u.to_owned();
    let logp = actor.log_prob(&mean, &u);
    let inv_n = 1.0 / n as f64;
    let var: Vec<f64> = actor.log_std.iter().map(|s| (2.0 * s).exp()).collect();

    let mut loss = 0.0;
    let mut clipped = 0usize;
    let mut kl = 0.0;
    let mut d_mean = Array2::zeros((n, ACTION_DIM));
    let mut grad_log_std = vec![0.0; ACTION_DIM];
    for i in 0..n {
        let log_ratio = logp[i] - logp_old[i];
        let ratio = log_ratio.exp();
        let a = advantages[i];
        let unclipped = ratio * a;
        let bounded = ratio.clamp(1.0 - clip, 1.0 + clip) * a;
        loss -= unclipped.min(bounded) * inv_n;
        if (ratio - 1.0).abs() > clip {
            clipped += 1;
        }
        kl += ((ratio - 1.0) - log_ratio) * inv_n;
        if unclipped <= bounded {
            let g = -ratio * a * inv_n;
            for j in 0..ACTION_DIM {
                let diff = u[[i, j]] - mean[[i, j]];
                d_mean[[i, j]] = g * diff / var[j];
                grad_log_std[j] += g * (diff * diff / var[j] - 1.0);
            }
        }
    }
    let entropy = actor.entropy();
    loss -= entropy_coef * entropy;
    for g in &mut grad_log_std {
        *g -= entropy_coef;
    }
    if !loss.is_finite() {
        return Err(Error::NonFinite("actor loss"));
    }
    let (grad_net, _) = actor.net.backward(&cache, d_mean.view())?;
    Ok(ActorLoss {
        loss,
        grad_net,
        grad_log_std,
        clip_fraction: clipped as f64 * inv_n,
        approx_kl: kl,
        entropy,
    })
}

/// `0.5 · mean((v − target)²)` and its parameter gradient.
pub fn value_loss(net: &Mlp, inputs: ArrayView2<f64>, targets: &[f64]) -> Result<(f64, Vec<f64>)> {
    let n = inputs.nrows();
    if n == 0 {
        return Err(Error::EmptyInput("value minibatch"));
    }
    let (v, cache) = net.forward(inputs)?;
    let mut d = Array2::zeros((n, 1));
    let mut loss = 0.0;
    for i in 0..n {
        let e = v[[i, 0]] - targets[i];
        loss += 0.5 * e * e / n as f64;
        d[[i, 0]] = e / n as f64;
    }
    if !loss.is_finite() {
        return Err(Error::NonFinite("critic loss"));
    }
    let (grad, _) = net.backward(&cache, d.view())?;
    Ok((loss, grad))
}

/// Flattened rollout samples across time, environments and agents.
#[derive(Debug, Clone)]
pub struct RolloutBatch {
    pub actor_inputs: Array2<f64>,
    pub critic_inputs: Array2<f64>,
    /// Pre-squash actions.
    pub actions: Array2<f64>,
    pub log_probs: Vec<f64>,
    pub advantages: Vec<f64>,
    pub returns: Vec<f64>,
    /// Parameter set that produced each sample.
    pub groups: Vec<usize>,
}

impl RolloutBatch {
    pub fn len(&self) -> usize {
        self.log_probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.log_probs.is_empty()
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct PpoDiagnostics {
    pub actor_loss: f64,
    pub critic_loss: f64,
    pub clip_fraction: f64,
    pub approx_kl: f64,
    pub entropy: f64,
}

#[derive(Debug, Clone)]
pub struct PpoLearner {
    pub config: PpoConfig,
    pub critic_mode: CriticMode,
    pub actors: Vec<PpoActor>,
    pub critics: Vec<Mlp>,
    actor_opts: Vec<(Adam, Adam)>,
    critic_opts: Vec<Adam>,
}

impl PpoLearner {
    /// `n_sets` is 1 with parameter sharing, otherwise one per agent.
    pub fn new<R: Rng + ?Sized>(
        config: PpoConfig,
        critic_mode: CriticMode,
        actor_input: usize,
        critic_input: usize,
        n_sets: usize,
        rng: &mut R,
    ) -> Result<Self> {
        config.validate()?;
        let actors: Vec<PpoActor> = (0..n_sets)
            .map(|_| PpoActor::new(actor_input, config.actor_hidden, config.init_log_std, rng))
            .collect();
        let critics: Vec<Mlp> = (0..n_sets)
            .map(|_| Mlp::new(critic_input, config.critic_hidden, 1, 1.0, rng))
            .collect();
        let actor_opts = actors
            .iter()
            .map(|a| (Adam::new(a.net.n_params(), config.actor_lr), Adam::new(ACTION_DIM, config.actor_lr)))
            .collect();
        let critic_opts = critics.iter().map(|c| Adam::new(c.n_params(), config.critic_lr)).collect();
        Ok(Self {
            config,
            critic_mode,
            actors,
            critics,
            actor_opts,
            critic_opts,
        })
    }

    pub fn values(&self, group: usize, critic_inputs: ArrayView2<f64>) -> Result<Vec<f64>> {
        Ok(self.critics[group].predict(critic_inputs)?.column(0).to_vec())
    }

    /// Several epochs of minibatch updates over one rollout.
    pub fn update<R: Rng + ?Sized>(&mut self, batch: &RolloutBatch, rng: &mut R) -> Result<PpoDiagnostics> {
        let cfg = self.config.clone();
        let mut diag = PpoDiagnostics::default();
        let mut count = 0.0;
        for g in 0..self.actors.len() {
            let mut rows: Vec<usize> = (0..batch.len()).filter(|&i| batch.groups[i] == g).collect();
            if rows.is_empty() {
                continue;
            }
            let mb = rows.len().div_ceil(cfg.minibatches);
            for _ in 0..cfg.epochs {
                rows.shuffle(rng);
                for chunk in rows.chunks(mb) {
                    let d = self.minibatch_step(g, batch, chunk)?;
                    diag.actor_loss += d.actor_loss;
                    diag.critic_loss += d.critic_loss;
                    diag.clip_fraction += d.clip_fraction;
                    diag.approx_kl += d.approx_kl;
                    diag.entropy += d.entropy;
                    count += 1.0;
                }
            }
        }
        if count > 0.0 {
            diag.actor_loss /= count;
            diag.critic_loss /= count;
            diag.clip_fraction /= count;
            diag.approx_kl /= count;
            diag.entropy /= count;
        }
        Ok(diag)
    }

    fn minibatch_step(&mut self, g: usize, batch: &RolloutBatch, rows: &[usize]) -> Result<PpoDiagnostics> {
        let cfg = &self.config;
        let inputs = batch.actor_inputs.select(Axis(0), rows);
        let critic_inputs = batch.critic_inputs.select(Axis(0), rows);
        let u = batch.actions.select(Axis(0), rows);
        let logp_old: Vec<f64> = rows.iter().map(|&i| batch.log_probs[i]).collect();
        let returns: Vec<f64> = rows.iter().map(|&i| batch.returns[i]).collect();
        let mut adv: Vec<f64> = rows.iter().map(|&i| batch.advantages[i]).collect();
        normalize_in_place(&mut adv);

        let actor = &mut self.actors[g];
        let mut a = ppo_actor_loss(actor, inputs.view(), u.view(), &logp_old, &adv, cfg.clip, cfg.entropy_coef)?;
        clip_global_norm(&mut [&mut a.grad_net, &mut a.grad_log_std], cfg.max_grad_norm);
        let (net_opt, std_opt) = &mut self.actor_opts[g];
        net_opt.step(actor.net.params_mut(), &a.grad_net);
        std_opt.step(&mut actor.log_std, &a.grad_log_std);

        let critic = &mut self.critics[g];
        let (critic_loss, mut grad) = value_loss(critic, critic_inputs.view(), &returns)?;
        clip_global_norm(&mut [&mut grad], cfg.max_grad_norm);
        self.critic_opts[g].step(critic.params_mut(), &grad);

        Ok(PpoDiagnostics {
            actor_loss: a.loss,
            critic_loss,
            clip_fraction: a.clip_fraction,
            approx_kl: a.approx_kl,
            entropy: a.entropy,
        })
    }
}

fn normalize_in_place(v: &mut [f64]) {
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    let std = (v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n).sqrt();
    for x in v.iter_mut() {
        *x = (*x - mean) / (std + 1e-8);
    }
}
