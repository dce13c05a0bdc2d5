//! Soft actor-critic with twin critics, target networks and a learned
//! temperature.

use ndarray::{s, Array2, ArrayView2};
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::dist::{d_log_squash_jacobian, log_squash_jacobian, soft_clamp, squash, HALF_LN_2PI};
use super::nn::Mlp;
use super::ppo::value_loss;
use super::{Adam, ReplayBuffer, RunningNorm, ACTION_DIM};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SacConfig {
    pub gamma: f64,
    pub tau: f64,
    pub lr: f64,
    pub batch_size: usize,
    pub buffer_capacity: usize,
    pub learner_start: usize,
    pub actor_update_freq: usize,
    pub target_entropy: f64,
    pub init_log_alpha: f64,
    pub actor_hidden: (usize, usize),
    pub critic_hidden: (usize, usize),
    /// Gradient updates per environment step once learning has started.
    pub updates_per_step: usize,
    pub log_std_min: f64,
    pub log_std_max: f64,
}

impl Default for SacConfig {
    fn default() -> Self {
        Self {
            gamma: 0.95,
            tau: 0.001,
            lr: 0.0025,
            batch_size: 256,
            buffer_capacity: 1_000_000,
            learner_start: 23_040,
            actor_update_freq: 1,
            target_entropy: -(ACTION_DIM as f64),
            init_log_alpha: -1.0,
            actor_hidden: (256, 256),
            critic_hidden: (256, 256),
            updates_per_step: 1,
            log_std_min: -5.0,
            log_std_max: 2.0,
        }
    }
}

impl SacConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidArgument(format!("sac config: {m}")));
        if !(0.0..=1.0).contains(&self.gamma) || !(self.tau > 0.0 && self.tau <= 1.0) {
            return bad("gamma must lie in [0, 1] and tau in (0, 1]");
        }
        if self.batch_size == 0 || self.buffer_capacity == 0 || self.actor_update_freq == 0 {
            return bad("batch_size, buffer_capacity and actor_update_freq must be positive");
        }
        if !(self.lr > 0.0) || self.log_std_min >= self.log_std_max {
            return bad("lr must be positive and log_std_min below log_std_max");
        }
        Ok(())
    }
}

/// Network emitting per-dimension means and unbounded log-std parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SacActor {
    pub net: Mlp,
    pub log_std_min: f64,
    pub log_std_max: f64,
}

struct ActorSample {
    cache: super::MlpCache,
    u: Array2<f64>,
    actions: Array2<f64>,
    log_probs: Vec<f64>,
    sigma: Array2<f64>,
    dlog_std: Array2<f64>,
}

impl SacActor {
    pub fn new<R: Rng + ?Sized>(input: usize, hidden: (usize, usize), lo: f64, hi: f64, rng: &mut R) -> Self {
        Self {
            net: Mlp::new(input, hidden, 2 * ACTION_DIM, 0.01, rng),
            log_std_min: lo,
            log_std_max: hi,
        }
    }

    pub fn mean(&self, x: ArrayView2<f64>) -> Result<Array2<f64>> {
        Ok(self.net.predict(x)?.slice(s![.., ..ACTION_DIM]).to_owned())
    }

    /// Reparameterized sample with externally supplied standard normal noise.
    fn sample_with(&self, x: ArrayView2<f64>, eps: ArrayView2<f64>) -> Result<ActorSample> {
        let (out, cache) = self.net.forward(x)?;
        let n = x.nrows();
        let mut u = Array2::zeros((n, ACTION_DIM));
        let mut actions = Array2::zeros((n, ACTION_DIM));
        let mut sigma = Array2::zeros((n, ACTION_DIM));
        let mut dlog_std = Array2::zeros((n, ACTION_DIM));
        let mut log_probs = vec![0.0; n];
        for i in 0..n {
            for j in 0..ACTION_DIM {
                let (ls, d) = soft_clamp(out[[i, ACTION_DIM + j]], self.log_std_min, self.log_std_max);
                let sd = ls.exp();
                let e = eps[[i, j]];
                let uij = out[[i, j]] + sd * e;
                u[[i, j]] = uij;
                actions[[i, j]] = squash(uij);
                sigma[[i, j]] = sd;
                dlog_std[[i, j]] = d;
                log_probs[i] += -0.5 * e * e - ls - HALF_LN_2PI - log_squash_jacobian(uij);
            }
        }
        Ok(ActorSample {
            cache,
            u,
            actions,
            log_probs,
            sigma,
            dlog_std,
        })
    }

    /// Actions in [0, 1] and their log-probabilities.
    pub fn sample<R: Rng + ?Sized>(&self, x: ArrayView2<f64>, rng: &mut R) -> Result<(Array2<f64>, Vec<f64>)> {
        let eps = Array2::from_shape_simple_fn((x.nrows(), ACTION_DIM), || rng.sample(StandardNormal));
        let s = self.sample_with(x, eps.view())?;
        Ok((s.actions, s.log_probs))
    }
}

fn concat_cols(a: ArrayView2<f64>, b: ArrayView2<f64>) -> Array2<f64> {
    ndarray::concatenate(ndarray::Axis(1), &[a, b]).expect("equal row counts")
}

#[derive(Debug, Clone)]
pub struct SacActorLoss {
    pub loss: f64,
    pub grad: Vec<f64>,
    pub mean_log_prob: f64,
}

/// `mean(α·log π(a|s) − min(Q1, Q2)(s, a))` with `a` reparameterized by
/// `eps`, and its gradient with respect to the actor parameters.
pub fn sac_actor_loss(
    actor: &SacActor,
    q1: &Mlp,
    q2: &Mlp,
    obs: ArrayView2<f64>,
    eps: ArrayView2<f64>,
    alpha: f64,
) -> Result<SacActorLoss> {
    let n = obs.nrows();
    if n == 0 {
        return Err(Error::EmptyInput("sac minibatch"));
    }
    let inv_n = 1.0 / n as f64;
    let smp = actor.sample_with(obs, eps)?;
    let q_in = concat_cols(obs, smp.actions.view());
    let (v1, c1) = q1.forward(q_in.view())?;
    let (v2, c2) = q2.forward(q_in.view())?;
    let mut d1 = Array2::zeros((n, 1));
    let mut d2 = Array2::zeros((n, 1));
    let mut loss = 0.0;
    for i in 0..n {
        let (a, b) = (v1[[i, 0]], v2[[i, 0]]);
        loss += (alpha * smp.log_probs[i] - a.min(b)) * inv_n;
        if a <= b {
            d1[[i, 0]] = -inv_n;
        } else {
            d2[[i, 0]] = -inv_n;
        }
    }
    if !loss.is_finite() {
        return Err(Error::NonFinite("actor loss"));
    }
    let (_, dx1) = q1.backward(&c1, d1.view())?;
    let (_, dx2) = q2.backward(&c2, d2.view())?;
    let obs_dim = obs.ncols();
    let mut d_out = Array2::zeros((n, 2 * ACTION_DIM));
    for i in 0..n {
        for j in 0..ACTION_DIM {
            let u = smp.u[[i, j]];
            let t = u.tanh();
            let dq_da = dx1[[i, obs_dim + j]] + dx2[[i, obs_dim + j]];
            let dl_du = alpha * inv_n * -d_log_squash_jacobian(u) + dq_da * 0.5 * (1.0 - t * t);
            d_out[[i, j]] = dl_du;
            let dl_dlog_std = dl_du * smp.sigma[[i, j]] * eps[[i, j]] - alpha * inv_n;
            d_out[[i, ACTION_DIM + j]] = dl_dlog_std * smp.dlog_std[[i, j]];
        }
    }
    let (grad, _) = actor.net.backward(&smp.cache, d_out.view())?;
    Ok(SacActorLoss {
        loss,
        grad,
        mean_log_prob: smp.log_probs.iter().sum::<f64>() * inv_n,
    })
}

/// `−log α · (mean log π + target entropy)` and its derivative in `log α`.
pub fn temperature_loss(log_alpha: f64, mean_log_prob: f64, target_entropy: f64) -> (f64, f64) {
    let g = -(mean_log_prob + target_entropy);
    (log_alpha * g, g)
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct SacDiagnostics {
    pub critic_loss: f64,
    pub actor_loss: f64,
    pub alpha: f64,
    pub entropy: f64,
}

#[derive(Debug, Clone)]
pub struct SacLearner {
    pub config: SacConfig,
    pub actors: Vec<SacActor>,
    pub q1: Vec<Mlp>,
    pub q2: Vec<Mlp>,
    pub q1_target: Vec<Mlp>,
    pub q2_target: Vec<Mlp>,
    pub log_alpha: Vec<f64>,
    actor_opts: Vec<Adam>,
    q1_opts: Vec<Adam>,
    q2_opts: Vec<Adam>,
    alpha_opts: Vec<Adam>,
    critic_updates: usize,
}

impl SacLearner {
    pub fn new<R: Rng + ?Sized>(config: SacConfig, input: usize, n_sets: usize, rng: &mut R) -> Result<Self> {
        config.validate()?;
        let mut actors = Vec::new();
        let mut q1 = Vec::new();
        let mut q2 = Vec::new();
        for _ in 0..n_sets {
            actors.push(SacActor::new(input, config.actor_hidden, config.log_std_min, config.log_std_max, rng));
            q1.push(Mlp::new(input + ACTION_DIM, config.critic_hidden, 1, 1.0, rng));
            q2.push(Mlp::new(input + ACTION_DIM, config.critic_hidden, 1, 1.0, rng));
        }
        let lr = config.lr;
        Ok(Self {
            actor_opts: actors.iter().map(|a| Adam::new(a.net.n_params(), lr)).collect(),
            q1_opts: q1.iter().map(|q| Adam::new(q.n_params(), lr)).collect(),
            q2_opts: q2.iter().map(|q| Adam::new(q.n_params(), lr)).collect(),
            alpha_opts: (0..n_sets).map(|_| Adam::new(1, lr)).collect(),
            log_alpha: vec![config.init_log_alpha; n_sets],
            q1_target: q1.clone(),
            q2_target: q2.clone(),
            actors,
            q1,
            q2,
            config,
            critic_updates: 0,
        })
    }

    pub fn critic_updates(&self) -> usize {
        self.critic_updates
    }

    /// One gradient update of parameter set `g` from the rings of `agents`.
    pub fn update<R: Rng + ?Sized>(
        &mut self,
        g: usize,
        agents: &[usize],
        buffer: &ReplayBuffer,
        norm: &RunningNorm,
        rng: &mut R,
    ) -> Result<SacDiagnostics> {
        let cfg = self.config.clone();
        let batch = buffer.sample(agents, cfg.batch_size, cfg.learner_start, rng)?;
        let n = batch.len();
        let dim = batch[0].obs.len();
        let mut obs = Array2::zeros((n, dim));
        let mut next = Array2::zeros((n, dim));
        let mut act = Array2::zeros((n, ACTION_DIM));
        for (i, t) in batch.iter().enumerate() {
            obs.row_mut(i).assign(&ndarray::ArrayView1::from(&norm.normalize(&t.obs)[..]));
            next.row_mut(i).assign(&ndarray::ArrayView1::from(&norm.normalize(&t.next_obs)[..]));
            act.row_mut(i).assign(&ndarray::ArrayView1::from(&t.action[..]));
        }
        let alpha = self.log_alpha[g].exp();

        let (next_a, next_logp) = self.actors[g].sample(next.view(), rng)?;
        let next_in = concat_cols(next.view(), next_a.view());
        let t1 = self.q1_target[g].predict(next_in.view())?;
        let t2 = self.q2_target[g].predict(next_in.view())?;
        let targets: Vec<f64> = (0..n)
            .map(|i| {
                let live = if batch[i].done { 0.0 } else { 1.0 };
                let soft = t1[[i, 0]].min(t2[[i, 0]]) - alpha * next_logp[i];
                batch[i].reward + cfg.gamma * live * soft
            })
            .collect();
        let q_in = concat_cols(obs.view(), act.view());
        let (l1, g1) = value_loss(&self.q1[g], q_in.view(), &targets)?;
        let (l2, g2) = value_loss(&self.q2[g], q_in.view(), &targets)?;
        self.q1_opts[g].step(self.q1[g].params_mut(), &g1);
        self.q2_opts[g].step(self.q2[g].params_mut(), &g2);
        self.critic_updates += 1;

        let mut diag = SacDiagnostics {
            critic_loss: 0.5 * (l1 + l2),
            alpha,
            ..Default::default()
        };
        if self.critic_updates % cfg.actor_update_freq == 0 {
            let eps = Array2::from_shape_simple_fn((n, ACTION_DIM), || rng.sample(StandardNormal));
            let a = sac_actor_loss(&self.actors[g], &self.q1[g], &self.q2[g], obs.view(), eps.view(), alpha)?;
            self.actor_opts[g].step(self.actors[g].net.params_mut(), &a.grad);
            let (_, ga) = temperature_loss(self.log_alpha[g], a.mean_log_prob, cfg.target_entropy);
            let mut la = [self.log_alpha[g]];
            self.alpha_opts[g].step(&mut la, &[ga]);
            self.log_alpha[g] = la[0];
            diag.actor_loss = a.loss;
            diag.entropy = -a.mean_log_prob;
        }
        self.q1_target[g].soft_update_from(&self.q1[g], cfg.tau);
        self.q2_target[g].soft_update_from(&self.q2[g], cfg.tau);
        Ok(diag)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::control::Transition;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn temperature_stationary_at_target() {
        let (_, g) = temperature_loss(0.3, 3.0, -3.0);
        assert_eq!(g, 0.0);
        assert_ne!(temperature_loss(0.3, 1.0, -3.0).1, 0.0);
    }

    #[test]
    fn sampled_actions_in_unit_box() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let actor = SacActor::new(4, (8, 8), -5.0, 2.0, &mut rng);
        let x = Array2::from_shape_fn((500, 4), |_| rng.random_range(-3.0..3.0));
        let (a, logp) = actor.sample(x.view(), &mut rng).unwrap();
        assert!(a.iter().all(|v| (0.0..=1.0).contains(v)));
        assert!(logp.iter().all(|v| v.is_finite()));
    }

    fn filled_buffer(rng: &mut ChaCha8Rng, n: usize) -> ReplayBuffer {
        let mut b = ReplayBuffer::new(1, 1000);
        for _ in 0..n {
            let o: Vec<f64> = (0..3).map(|_| rng.random_range(-1.0..1.0)).collect();
            b.push(
                0,
                Transition {
                    obs: o.clone(),
                    action: [rng.random(), rng.random(), rng.random()],
                    reward: o[0],
                    next_obs: o,
                    done: false,
                },
            );
        }
        b
    }

    #[test]
    fn tau_one_copies_online_networks() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let cfg = SacConfig {
            tau: 1.0,
            batch_size: 16,
            learner_start: 16,
            actor_hidden: (8, 8),
            critic_hidden: (8, 8),
            ..Default::default()
        };
        let mut l = SacLearner::new(cfg, 3, 1, &mut rng).unwrap();
        let buf = filled_buffer(&mut rng, 32);
        l.update(0, &[0], &buf, &RunningNorm::new(3), &mut rng).unwrap();
        assert_eq!(l.q1_target[0], l.q1[0]);
        assert_eq!(l.q2_target[0], l.q2[0]);
    }

    #[test]
    fn targets_converge_geometrically() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let online = Mlp::new(2, (4, 4), 1, 1.0, &mut rng);
        let mut target = Mlp::zeros(2, (4, 4), 1);
        let tau = 0.1;
        let gap0 = super::super::l2_norm(online.params());
        for k in 1..=20 {
            target.soft_update_from(&online, tau);
            let gap: Vec<f64> = online.params().iter().zip(target.params()).map(|(a, b)| a - b).collect();
            let expected = gap0 * (1.0 - tau).powi(k);
            assert!((super::super::l2_norm(&gap) - expected).abs() <= 1e-12 * gap0);
        }
    }

    #[test]
    fn refuses_before_learner_start() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let cfg = SacConfig {
            learner_start: 100,
            actor_hidden: (8, 8),
            critic_hidden: (8, 8),
            ..Default::default()
        };
        let mut l = SacLearner::new(cfg, 3, 1, &mut rng).unwrap();
        let buf = filled_buffer(&mut rng, 10);
        assert!(matches!(
            l.update(0, &[0], &buf, &RunningNorm::new(3), &mut rng),
            Err(Error::LearnerNotStarted { .. })
        ));
    }
}
