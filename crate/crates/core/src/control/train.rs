//! Training runs: rollouts, periodic deterministic evaluation and
//! checkpoints.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::dist::squash;
use super::nn::stack_rows;
use super::{
    gae_advantages, ActorHead, Checkpoint, Controller, CriticMode, HistoryStack, Mode, NoControl, Policy,
    PolicyController, PpoConfig, PpoLearner, RandomController, RbcConfig, ReplayBuffer, RolloutBatch, RuleBased,
    RunningNorm, SacConfig, SacLearner, Transition,
};
use crate::episode::{random_window, EnvSpec, EvalSummary, Evaluator, EPISODE_HOURS};
use crate::error::{Error, Result};
use crate::sim::{ActionTriple, District};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum AlgorithmConfig {
    Ippo(PpoConfig),
    Mappo(PpoConfig),
    Isac(SacConfig),
    Rbc(RbcConfig),
    Random,
    NoControl,
}

fn one() -> usize {
    1
}

fn yes() -> bool {
    true
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlgorithmSpec {
    pub name: String,
    #[serde(flatten)]
    pub config: AlgorithmConfig,
    /// Number of stacked observations fed to the networks.
    #[serde(default = "one")]
    pub history: usize,
    #[serde(default = "yes")]
    pub shared: bool,
}

impl AlgorithmSpec {
    pub fn new(name: impl Into<String>, config: AlgorithmConfig) -> Self {
        Self {
            name: name.into(),
            config,
            history: 1,
            shared: true,
        }
    }

    pub fn with_history(mut self, k: usize) -> Self {
        self.history = k;
        self
    }

    pub fn is_learner(&self) -> bool {
        matches!(
            self.config,
            AlgorithmConfig::Ippo(_) | AlgorithmConfig::Mappo(_) | AlgorithmConfig::Isac(_)
        )
    }

    /// Short stable hash of the full configuration.
    pub fn config_hash(&self) -> String {
        let json = serde_json::to_string(self).expect("spec serializes");
        hex::encode(&Sha256::digest(json.as_bytes())[..8])
    }

    pub fn validate(&self) -> Result<()> {
        if self.history == 0 {
            return Err(Error::InvalidArgument(format!("{}: history must be at least 1", self.name)));
        }
        match &self.config {
            AlgorithmConfig::Ippo(c) | AlgorithmConfig::Mappo(c) => c.validate(),
            AlgorithmConfig::Isac(c) => c.validate(),
            _ => Ok(()),
        }
    }

    /// Controller for non-learning algorithms.
    pub fn baseline_controller(&self, seed: u64) -> Option<Box<dyn Controller>> {
        match &self.config {
            AlgorithmConfig::Rbc(c) => Some(Box::new(RuleBased { config: *c })),
            AlgorithmConfig::Random => Some(Box::new(RandomController::new(seed))),
            AlgorithmConfig::NoControl => Some(Box::new(NoControl)),
            _ => None,
        }
    }

    pub fn ppo_desk() -> PpoConfig {
        PpoConfig {
            actor_lr: 5e-4,
            critic_lr: 5e-4,
            actor_hidden: (64, 64),
            critic_hidden: (64, 64),
            rollout_len: 256,
            n_envs: 4,
            epochs: 8,
            minibatches: 4,
            ..PpoConfig::default()
        }
    }

    pub fn sac_desk() -> SacConfig {
        SacConfig {
            lr: 5e-4,
            tau: 0.005,
            batch_size: 64,
            buffer_capacity: 100_000,
            learner_start: 2_048,
            actor_hidden: (64, 64),
            critic_hidden: (64, 64),
            ..SacConfig::default()
        }
    }

    /// Desk-scale preset by name: `ippo`, `mappo`, `isac`, their `rec_`
    /// variants with a four-step history, `rbc`, `random`, `no_control`.
    pub fn desk(name: &str) -> Result<Self> {
        Self::preset(name, Self::ppo_desk(), Self::sac_desk())
    }

    /// Full-scale preset by name.
    pub fn full(name: &str) -> Result<Self> {
        let ppo = PpoConfig::default();
        let mut sac = SacConfig::default();
        if name == "rec_isac" {
            sac.learner_start = 46_080;
            sac.lr = 0.0005;
        }
        Self::preset(name, ppo, sac)
    }

    fn preset(name: &str, ppo: PpoConfig, sac: SacConfig) -> Result<Self> {
        let (base, history) = match name.strip_prefix("rec_") {
            Some(b) => (b, 4),
            None => (name, 1),
        };
        let config = match base {
            "ippo" => AlgorithmConfig::Ippo(ppo),
            "mappo" => AlgorithmConfig::Mappo(ppo),
            "isac" => AlgorithmConfig::Isac(sac),
            "rbc" if history == 1 => AlgorithmConfig::Rbc(RbcConfig::default()),
            "random" if history == 1 => AlgorithmConfig::Random,
            "no_control" if history == 1 => AlgorithmConfig::NoControl,
            _ => return Err(Error::InvalidArgument(format!("unknown algorithm preset {name}"))),
        };
        Ok(Self::new(name, config).with_history(history))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Schedule {
    pub total_steps: u64,
    pub eval_interval: u64,
    pub eval_episodes: usize,
    pub episode_len: usize,
    pub seed: u64,
}

impl Default for Schedule {
    fn default() -> Self {
        Self::desk()
    }
}

impl Schedule {
    pub fn desk() -> Self {
        Self {
            total_steps: 200_000,
            eval_interval: 20_000,
            eval_episodes: 8,
            episode_len: EPISODE_HOURS,
            seed: 0,
        }
    }

    pub fn full() -> Self {
        Self {
            total_steps: 6_000_000,
            eval_interval: 81_920,
            eval_episodes: 64,
            episode_len: EPISODE_HOURS,
            seed: 0,
        }
    }

    /// Extended evaluation episodes for the best checkpoint.
    pub fn absolute_episodes(&self) -> usize {
        10 * self.eval_episodes
    }

    /// Steps at which evaluations happen: zero, every interval, and the end.
    pub fn eval_points(&self) -> Vec<u64> {
        let mut pts: Vec<u64> = (0..)
            .map(|k| k * self.eval_interval.max(1))
            .take_while(|s| *s < self.total_steps)
            .collect();
        pts.push(self.total_steps);
        pts
    }

    pub fn validate(&self) -> Result<()> {
        if self.total_steps == 0 || self.eval_interval == 0 || self.eval_episodes == 0 {
            return Err(Error::InvalidArgument(
                "total_steps, eval_interval and eval_episodes must be positive".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalPoint {
    pub step: u64,
    pub summary: EvalSummary,
}

#[derive(Debug, Clone)]
pub struct RunOutput {
    pub evals: Vec<EvalPoint>,
    /// Policy snapshot at every eval point, for learners.
    pub checkpoints: Vec<Checkpoint>,
}

impl RunOutput {
    /// Index of the eval point with the lowest average score.
    pub fn best_index(&self) -> usize {
        let mut best = 0;
        for (i, e) in self.evals.iter().enumerate() {
            if e.summary.score < self.evals[best].summary.score {
                best = i;
            }
        }
        best
    }
}

/// Trains (or, for baselines, just evaluates) one algorithm with one seed.
pub fn train_run(
    spec: &AlgorithmSpec,
    env: &EnvSpec,
    schedule: &Schedule,
    on_eval: &mut dyn FnMut(&EvalPoint),
) -> Result<RunOutput> {
    spec.validate()?;
    schedule.validate()?;
    let evaluator = env.evaluator(schedule.episode_len, schedule.eval_episodes, schedule.seed)?;
    match &spec.config {
        AlgorithmConfig::Ippo(c) => train_ppo(spec, c, CriticMode::Local, env, schedule, &evaluator, on_eval),
        AlgorithmConfig::Mappo(c) => train_ppo(spec, c, CriticMode::Concatenated, env, schedule, &evaluator, on_eval),
        AlgorithmConfig::Isac(c) => train_sac(spec, c, env, schedule, &evaluator, on_eval),
        _ => {
            let mut evals = Vec::new();
            for step in schedule.eval_points() {
                let mut ctrl = spec.baseline_controller(schedule.seed ^ step).expect("baseline");
                let point = EvalPoint {
                    step,
                    summary: evaluator.evaluate(ctrl.as_mut())?,
                };
                on_eval(&point);
                evals.push(point);
            }
            Ok(RunOutput {
                evals,
                checkpoints: Vec::new(),
            })
        }
    }
}

/// Bookkeeping shared by both learner loops.
struct Progress<'a> {
    points: Vec<u64>,
    next: usize,
    evals: Vec<EvalPoint>,
    checkpoints: Vec<Checkpoint>,
    evaluator: &'a Evaluator,
    seed: u64,
}

impl Progress<'_> {
    fn due(&self, steps: u64) -> bool {
        self.next < self.points.len() && self.points[self.next] <= steps
    }

    fn finished(&self) -> bool {
        self.next >= self.points.len()
    }

    fn record(&mut self, policy: Policy, on_eval: &mut dyn FnMut(&EvalPoint)) -> Result<()> {
        let step = self.points[self.next];
        let mut ctrl = PolicyController::new(policy.clone(), Mode::Deterministic, self.seed);
        let point = EvalPoint {
            step,
            summary: self.evaluator.evaluate(&mut ctrl)?,
        };
        on_eval(&point);
        self.evals.push(point);
        self.checkpoints.push(Checkpoint::new(policy, step));
        self.next += 1;
        Ok(())
    }
}

struct Lane {
    env: District,
    stack: HistoryStack,
    inputs: Vec<Vec<f64>>,
}

impl Lane {
    fn start<R: Rng>(env: &mut District, stack: &mut HistoryStack, len: usize, rng: &mut R) -> Result<Vec<Vec<f64>>> {
        let w = random_window(rng, env.bundle().horizon(), len)?;
        let obs = env.reset(w, rng.next_u64())?;
        stack.reset(obs.len());
        Ok(stack.push(&obs))
    }

    fn new<R: Rng>(spec: &EnvSpec, k: usize, len: usize, rng: &mut R) -> Result<Self> {
        let mut env = spec.district()?;
        let mut stack = HistoryStack::new(k, spec.schema.len());
        let inputs = Self::start(&mut env, &mut stack, len, rng)?;
        Ok(Self { env, stack, inputs })
    }
}

fn normalized(norm: &RunningNorm, rows: &[Vec<f64>]) -> Vec<Vec<f64>> {
    rows.iter().map(|r| norm.normalize(r)).collect()
}

fn critic_rows(mode: CriticMode, inputs: &[Vec<f64>]) -> Vec<Vec<f64>> {
    match mode {
        CriticMode::Local => inputs.to_vec(),
        CriticMode::Concatenated => {
            let joint: Vec<f64> = inputs.concat();
            vec![joint; inputs.len()]
        }
    }
}

fn group_of(shared: bool, agent: usize) -> usize {
    if shared {
        0
    } else {
        agent
    }
}

fn frozen(norm: &RunningNorm) -> RunningNorm {
    let mut n = norm.clone();
    n.freeze();
    n
}

fn train_ppo(
    spec: &AlgorithmSpec,
    cfg: &PpoConfig,
    mode: CriticMode,
    env_spec: &EnvSpec,
    schedule: &Schedule,
    evaluator: &Evaluator,
    on_eval: &mut dyn FnMut(&EvalPoint),
) -> Result<RunOutput> {
    let mut rng = ChaCha8Rng::seed_from_u64(schedule.seed);
    let n_agents = env_spec.bundle.n_buildings();
    let base = env_spec.schema.len();
    let actor_in = spec.history * base;
    let critic_in = match mode {
        CriticMode::Local => actor_in,
        CriticMode::Concatenated => actor_in * n_agents,
    };
    let n_sets = if spec.shared { 1 } else { n_agents };
    let mut learner = PpoLearner::new(cfg.clone(), mode, actor_in, critic_in, n_sets, &mut rng)?;
    let mut norm = RunningNorm::new(base);
    let mut lanes: Vec<Lane> = (0..cfg.n_envs)
        .map(|_| Lane::new(env_spec, spec.history, schedule.episode_len, &mut rng))
        .collect::<Result<_>>()?;
    let snapshot = |learner: &PpoLearner, norm: &RunningNorm| Policy {
        algorithm: spec.name.clone(),
        heads: learner.actors.iter().cloned().map(ActorHead::Gaussian).collect(),
        shared: spec.shared,
        history: spec.history,
        obs_dim: base,
        normalizer: frozen(norm),
        schema_hash: env_spec.schema.hash(),
        trained_agents: n_agents,
    };
    let mut progress = Progress {
        points: schedule.eval_points(),
        next: 0,
        evals: Vec::new(),
        checkpoints: Vec::new(),
        evaluator,
        seed: schedule.seed,
    };
    progress.record(snapshot(&learner, &norm), on_eval)?;

    let (n_envs, t_len) = (cfg.n_envs, cfg.rollout_len);
    let width = n_envs * n_agents;
    let mut steps: u64 = 0;
    while !progress.finished() {
        // Samples are laid out [t][env][agent].
        let mut actor_rows = Vec::with_capacity(t_len * width);
        let mut critic_in_rows = Vec::with_capacity(t_len * width);
        let mut us = Vec::with_capacity(t_len * width);
        let mut logps = Vec::with_capacity(t_len * width);
        let mut values = Vec::with_capacity(t_len * width);
        let mut rewards = Vec::with_capacity(t_len * width);
        let mut dones = Vec::with_capacity(t_len * width);
        let mut groups = Vec::with_capacity(t_len * width);

        for _ in 0..t_len {
            for lane in &lanes {
                norm.update(lane.env.observations());
            }
            for lane in lanes.iter_mut() {
                let a_in = normalized(&norm, &lane.inputs);
                let c_in = critic_rows(mode, &a_in);
                let mut joint = Vec::with_capacity(n_agents);
                for agent in 0..n_agents {
                    let g = group_of(spec.shared, agent);
                    let x = stack_rows(std::slice::from_ref(&a_in[agent]))?;
                    let (u, lp) = learner.actors[g].sample(x.view(), &mut rng)?;
                    let v = learner.values(g, stack_rows(std::slice::from_ref(&c_in[agent]))?.view())?[0];
                    let u_row: Vec<f64> = u.row(0).to_vec();
                    joint.push(ActionTriple::from_slice(&u_row.iter().map(|x| squash(*x)).collect::<Vec<_>>()));
                    us.push(u_row);
                    logps.push(lp[0]);
                    values.push(v);
                    groups.push(g);
                }
                actor_rows.extend(a_in);
                critic_in_rows.extend(c_in);
                let out = lane.env.step(&joint)?;
                let next_inputs = lane.stack.push(&out.observations);
                let reward = out.reward;
                if out.done {
                    // Time-limit truncation: fold the bootstrap value into the reward.
                    let nc = critic_rows(mode, &normalized(&norm, &next_inputs));
                    for agent in 0..n_agents {
                        let g = group_of(spec.shared, agent);
                        let v = learner.values(g, stack_rows(std::slice::from_ref(&nc[agent]))?.view())?[0];
                        rewards.push(reward + cfg.gamma * v);
                        dones.push(true);
                    }
                    lane.inputs = Lane::start(&mut lane.env, &mut lane.stack, schedule.episode_len, &mut rng)?;
                } else {
                    for _ in 0..n_agents {
                        rewards.push(reward);
                        dones.push(false);
                    }
                    lane.inputs = next_inputs;
                }
            }
            steps += n_envs as u64;
        }

        let mut bootstrap = Vec::with_capacity(width);
        for lane in &lanes {
            let c = critic_rows(mode, &normalized(&norm, &lane.inputs));
            for (agent, row) in c.iter().enumerate() {
                let g = group_of(spec.shared, agent);
                bootstrap.push(learner.values(g, stack_rows(std::slice::from_ref(row))?.view())?[0]);
            }
        }
        let mut advantages = vec![0.0; t_len * width];
        let mut returns = vec![0.0; t_len * width];
        for col in 0..width {
            let idx: Vec<usize> = (0..t_len).map(|t| t * width + col).collect();
            let r: Vec<f64> = idx.iter().map(|&i| rewards[i]).collect();
            let v: Vec<f64> = idx.iter().map(|&i| values[i]).collect();
            let d: Vec<bool> = idx.iter().map(|&i| dones[i]).collect();
            let (a, ret) = gae_advantages(&r, &v, &d, bootstrap[col], cfg.gamma, cfg.gae_lambda)?;
            for (k, &i) in idx.iter().enumerate() {
                advantages[i] = a[k];
                returns[i] = ret[k];
            }
        }
        let batch = RolloutBatch {
            actor_inputs: stack_rows(&actor_rows)?,
            critic_inputs: stack_rows(&critic_in_rows)?,
            actions: stack_rows(&us)?,
            log_probs: logps,
            advantages,
            returns,
            groups,
        };
        learner.update(&batch, &mut rng)?;

        while progress.due(steps) || (steps >= schedule.total_steps && !progress.finished()) {
            progress.record(snapshot(&learner, &norm), on_eval)?;
        }
    }
    Ok(RunOutput {
        evals: progress.evals,
        checkpoints: progress.checkpoints,
    })
}

fn train_sac(
    spec: &AlgorithmSpec,
    cfg: &SacConfig,
    env_spec: &EnvSpec,
    schedule: &Schedule,
    evaluator: &Evaluator,
    on_eval: &mut dyn FnMut(&EvalPoint),
) -> Result<RunOutput> {
    let mut rng = ChaCha8Rng::seed_from_u64(schedule.seed);
    let n_agents = env_spec.bundle.n_buildings();
    let base = env_spec.schema.len();
    let input = spec.history * base;
    let n_sets = if spec.shared { 1 } else { n_agents };
    let mut learner = SacLearner::new(cfg.clone(), input, n_sets, &mut rng)?;
    let mut buffer = ReplayBuffer::new(n_agents, cfg.buffer_capacity);
    let mut norm = RunningNorm::new(base);
    let mut lane = Lane::new(env_spec, spec.history, schedule.episode_len, &mut rng)?;
    let set_agents: Vec<Vec<usize>> = if spec.shared {
        vec![(0..n_agents).collect()]
    } else {
        (0..n_agents).map(|a| vec![a]).collect()
    };
    let snapshot = |learner: &SacLearner, norm: &RunningNorm| Policy {
        algorithm: spec.name.clone(),
        heads: learner.actors.iter().cloned().map(ActorHead::StateDependent).collect(),
        shared: spec.shared,
        history: spec.history,
        obs_dim: base,
        normalizer: frozen(norm),
        schema_hash: env_spec.schema.hash(),
        trained_agents: n_agents,
    };
    let mut progress = Progress {
        points: schedule.eval_points(),
        next: 0,
        evals: Vec::new(),
        checkpoints: Vec::new(),
        evaluator,
        seed: schedule.seed,
    };
    progress.record(snapshot(&learner, &norm), on_eval)?;

    let mut steps: u64 = 0;
    while !progress.finished() {
        norm.update(lane.env.observations());
        let warm = buffer.inserted() < cfg.learner_start;
        let mut joint = Vec::with_capacity(n_agents);
        for agent in 0..n_agents {
            let a = if warm {
                [rng.random(), rng.random(), rng.random()]
            } else {
                let g = group_of(spec.shared, agent);
                let x = stack_rows(&[norm.normalize(&lane.inputs[agent])])?;
                let (a, _) = learner.actors[g].sample(x.view(), &mut rng)?;
                let r = a.row(0);
                [r[0], r[1], r[2]]
            };
            joint.push(a);
        }
        let actions: Vec<ActionTriple> = joint.iter().map(|a| ActionTriple::from_slice(a)).collect();
        let out = lane.env.step(&actions)?;
        let next_inputs = lane.stack.push(&out.observations);
        for agent in 0..n_agents {
            buffer.push(
                agent,
                Transition {
                    obs: lane.inputs[agent].clone(),
                    action: joint[agent],
                    reward: out.reward,
                    next_obs: next_inputs[agent].clone(),
                    done: false,
                },
            );
        }
        lane.inputs = if out.done {
            Lane::start(&mut lane.env, &mut lane.stack, schedule.episode_len, &mut rng)?
        } else {
            next_inputs
        };
        steps += 1;

        if buffer.inserted() >= cfg.learner_start {
            for _ in 0..cfg.updates_per_step {
                for (g, agents) in set_agents.iter().enumerate() {
                    learner.update(g, agents, &buffer, &norm, &mut rng)?;
                }
            }
        }
        while progress.due(steps) {
            progress.record(snapshot(&learner, &norm), on_eval)?;
        }
    }
    Ok(RunOutput {
        evals: progress.evals,
        checkpoints: progress.checkpoints,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::generate_synthetic_dataset;
    use std::sync::Arc;

    fn env() -> EnvSpec {
        EnvSpec::new(Arc::new(generate_synthetic_dataset(11, 2, 24 * 21).unwrap()))
    }

    fn tiny_schedule(total: u64, interval: u64) -> Schedule {
        Schedule {
            total_steps: total,
            eval_interval: interval,
            eval_episodes: 1,
            episode_len: 48,
            seed: 3,
        }
    }

    fn tiny_ppo() -> PpoConfig {
        PpoConfig {
            actor_hidden: (8, 8),
            critic_hidden: (8, 8),
            rollout_len: 32,
            n_envs: 2,
            epochs: 2,
            minibatches: 2,
            ..PpoConfig::default()
        }
    }

    #[test]
    fn eval_points_boundary() {
        assert_eq!(tiny_schedule(100, 100).eval_points(), vec![0, 100]);
        assert_eq!(tiny_schedule(100, 40).eval_points(), vec![0, 40, 80, 100]);
        assert_eq!(Schedule::desk().eval_points().len(), 11);
        assert_eq!(Schedule::full().absolute_episodes(), 640);
    }

    #[test]
    fn ppo_runs_are_deterministic() {
        let spec = AlgorithmSpec::new("ippo", AlgorithmConfig::Ippo(tiny_ppo()));
        let a = train_run(&spec, &env(), &tiny_schedule(128, 64), &mut |_| {}).unwrap();
        let b = train_run(&spec, &env(), &tiny_schedule(128, 64), &mut |_| {}).unwrap();
        assert_eq!(a.evals, b.evals);
        assert_eq!(a.evals.len(), 3);
        assert_eq!(a.checkpoints.len(), 3);
    }

    #[test]
    fn mappo_and_history_run() {
        let spec = AlgorithmSpec::new("rec_mappo", AlgorithmConfig::Mappo(tiny_ppo())).with_history(4);
        let out = train_run(&spec, &env(), &tiny_schedule(64, 64), &mut |_| {}).unwrap();
        assert_eq!(out.evals.len(), 2);
        let unshared = AlgorithmSpec {
            shared: false,
            ..AlgorithmSpec::new("mappo", AlgorithmConfig::Mappo(tiny_ppo()))
        };
        let out = train_run(&unshared, &env(), &tiny_schedule(64, 64), &mut |_| {}).unwrap();
        assert_eq!(out.checkpoints[0].policy.heads.len(), 2);
    }

    #[test]
    fn sac_runs() {
        let cfg = SacConfig {
            actor_hidden: (8, 8),
            critic_hidden: (8, 8),
            batch_size: 16,
            learner_start: 32,
            ..SacConfig::default()
        };
        let spec = AlgorithmSpec::new("isac", AlgorithmConfig::Isac(cfg));
        let mut seen = Vec::new();
        let out = train_run(&spec, &env(), &tiny_schedule(60, 30), &mut |p| seen.push(p.step)).unwrap();
        assert_eq!(seen, vec![0, 30, 60]);
        assert_eq!(out.evals.len(), 3);
    }

    #[test]
    fn baselines_evaluate_only() {
        let spec = AlgorithmSpec::desk("rbc").unwrap();
        let out = train_run(&spec, &env(), &tiny_schedule(100, 50), &mut |_| {}).unwrap();
        assert_eq!(out.evals.len(), 3);
        assert!(out.checkpoints.is_empty());
        assert!(AlgorithmSpec::desk("rec_rbc").is_err());
        assert_eq!(AlgorithmSpec::desk("rec_ippo").unwrap().history, 4);
    }

    #[test]
    fn spec_serialization_round_trip() {
        let spec = AlgorithmSpec::desk("isac").unwrap();
        let text = toml::to_string(&spec).unwrap();
        let back: AlgorithmSpec = toml::from_str(&text).unwrap();
        assert_eq!(back, spec);
        assert_eq!(back.config_hash(), spec.config_hash());
        assert_ne!(spec.config_hash(), AlgorithmSpec::desk("ippo").unwrap().config_hash());
    }
}
