//! Hyperparameter sweeps: grid expansion, per-configuration training over a
//! few seeds, and selection of the configuration with the lowest mean final
//! average score.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use districtbench_core::control::{train_run, AlgorithmConfig, AlgorithmSpec, PpoConfig, SacConfig, Schedule};
use districtbench_core::episode::EnvSpec;
use log::{info, warn};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::CampaignConfig;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PpoGrid {
    pub epochs: Vec<usize>,
    pub learning_rate: Vec<f64>,
    pub clip: Vec<f64>,
    pub entropy_coef: Vec<f64>,
    pub max_grad_norm: Vec<f64>,
    pub minibatches: Vec<usize>,
    pub hidden: Vec<(usize, usize)>,
}

impl Default for PpoGrid {
    fn default() -> Self {
        Self {
            epochs: vec![2, 4, 8],
            learning_rate: vec![1e-4, 2.5e-4, 5e-4],
            clip: vec![0.2, 0.1, 0.05],
            entropy_coef: vec![0.0, 1e-2, 1e-55],
            max_grad_norm: vec![0.5, 5.0, 10.0],
            minibatches: vec![2, 4, 8],
            hidden: vec![(128, 128), (256, 256)],
        }
    }
}

impl PpoGrid {
    pub fn expand(&self, base: &PpoConfig) -> Vec<PpoConfig> {
        let mut out = Vec::new();
        for &epochs in &self.epochs {
            for &lr in &self.learning_rate {
                for &clip in &self.clip {
                    for &entropy_coef in &self.entropy_coef {
                        for &max_grad_norm in &self.max_grad_norm {
                            for &minibatches in &self.minibatches {
                                for &hidden in &self.hidden {
                                    out.push(PpoConfig {
                                        epochs,
                                        actor_lr: lr,
                                        critic_lr: lr,
                                        clip,
                                        entropy_coef,
                                        max_grad_norm,
                                        minibatches,
                                        actor_hidden: hidden,
                                        critic_hidden: hidden,
                                        ..base.clone()
                                    });
                                }
                            }
                        }
                    }
                }
            }
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SacGrid {
    pub batch_size: Vec<usize>,
    pub learning_rate: Vec<f64>,
    pub buffer_capacity: Vec<usize>,
    pub actor_update_freq: Vec<usize>,
    pub learner_start: Vec<usize>,
    pub hidden: Vec<(usize, usize)>,
}

impl Default for SacGrid {
    fn default() -> Self {
        Self {
            batch_size: vec![64, 128, 256, 512],
            learning_rate: vec![1e-4, 2.5e-4, 5e-4],
            buffer_capacity: vec![1_000_000, 5_000_000],
            actor_update_freq: vec![1, 2, 4],
            learner_start: vec![23_040, 46_080],
            hidden: vec![(128, 128), (256, 256)],
        }
    }
}

impl SacGrid {
    pub fn expand(&self, base: &SacConfig) -> Vec<SacConfig> {
        let mut out = Vec::new();
        for &batch_size in &self.batch_size {
            for &lr in &self.learning_rate {
                for &buffer_capacity in &self.buffer_capacity {
                    for &actor_update_freq in &self.actor_update_freq {
                        for &learner_start in &self.learner_start {
                            for &hidden in &self.hidden {
                                out.push(SacConfig {
                                    batch_size,
                                    lr,
                                    buffer_capacity,
                                    actor_update_freq,
                                    learner_start,
                                    actor_hidden: hidden,
                                    critic_hidden: hidden,
                                    ..base.clone()
                                });
                            }
                        }
                    }
                }
            }
        }
        out
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SweepGrid {
    pub ppo: PpoGrid,
    pub sac: SacGrid,
}

impl SweepGrid {
    /// Every grid point for a learner; a single point for baselines.
    pub fn candidates(&self, base: &AlgorithmSpec) -> Vec<AlgorithmSpec> {
        let with = |config| AlgorithmSpec {
            config,
            ..base.clone()
        };
        match &base.config {
            AlgorithmConfig::Ippo(c) => self.ppo.expand(c).into_iter().map(AlgorithmConfig::Ippo).map(with).collect(),
            AlgorithmConfig::Mappo(c) => self.ppo.expand(c).into_iter().map(AlgorithmConfig::Mappo).map(with).collect(),
            AlgorithmConfig::Isac(c) => self.sac.expand(c).into_iter().map(AlgorithmConfig::Isac).map(with).collect(),
            _ => vec![base.clone()],
        }
    }
}

/// Draws `count` distinct candidates in a seeded order (all of them if the
/// grid is smaller).
pub fn subsample(mut candidates: Vec<AlgorithmSpec>, count: usize, seed: u64) -> Vec<AlgorithmSpec> {
    if count >= candidates.len() {
        return candidates;
    }
    candidates.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    candidates.truncate(count);
    candidates
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CandidateResult {
    pub config_hash: String,
    pub spec: AlgorithmSpec,
    /// Final average score per seed; `None` for seeds whose run failed.
    pub scores: BTreeMap<u64, Option<f64>>,
    pub mean_score: Option<f64>,
}

impl CandidateResult {
    fn complete(&self) -> bool {
        self.scores.values().all(Option::is_some)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Selection {
    pub algorithm: String,
    pub selected: AlgorithmSpec,
    pub config_hash: String,
    pub mean_score: f64,
    pub tied_with: Vec<String>,
    pub seeds: Vec<u64>,
    pub schedule: Schedule,
    pub candidates: Vec<CandidateResult>,
}

/// Picks the complete candidate with the lowest mean score; ties go to the
/// lexicographically smallest config hash.
pub fn select(algorithm: &str, candidates: Vec<CandidateResult>, seeds: &[u64], schedule: &Schedule) -> Result<Selection> {
    let mut complete: Vec<(f64, &CandidateResult)> = Vec::new();
    for c in &candidates {
        match c.mean_score {
            Some(m) if c.complete() => complete.push((m, c)),
            _ => warn!("{algorithm}: configuration {} lacks seed runs; excluded", c.config_hash),
        }
    }
    let Some(mean_score) = complete.iter().map(|c| c.0).reduce(f64::min) else {
        bail!("{algorithm}: no configuration completed every sweep seed");
    };
    let mut tied: Vec<&CandidateResult> = complete.iter().filter(|c| c.0 == mean_score).map(|c| c.1).collect();
    tied.sort_by(|a, b| a.config_hash.cmp(&b.config_hash));
    let (config_hash, selected) = (tied[0].config_hash.clone(), tied[0].spec.clone());
    let ties: Vec<String> = tied[1..].iter().map(|c| c.config_hash.clone()).collect();
    if !ties.is_empty() {
        info!("{algorithm}: tie at mean score {mean_score}; kept {config_hash} over {ties:?}");
    }
    Ok(Selection {
        algorithm: algorithm.to_string(),
        selected,
        config_hash,
        mean_score,
        tied_with: ties,
        seeds: seeds.to_vec(),
        schedule: schedule.clone(),
        candidates,
    })
}

pub fn selection_path(dir: &Path, algorithm: &str) -> PathBuf {
    dir.join(format!("{algorithm}.selection.json"))
}

pub fn load_selection(dir: &Path, algorithm: &str) -> Result<Option<Selection>> {
    let path = selection_path(dir, algorithm);
    if !path.exists() {
        return Ok(None);
    }
    let text = fs::read_to_string(&path).with_context(|| format!("reading {}", path.display()))?;
    Ok(Some(serde_json::from_str(&text)?))
}

fn final_score(spec: &AlgorithmSpec, env: &EnvSpec, schedule: &Schedule, seed: u64) -> Option<f64> {
    let schedule = Schedule {
        seed,
        ..schedule.clone()
    };
    let run = std::panic::catch_unwind(std::panic::AssertUnwindSafe(|| train_run(spec, env, &schedule, &mut |_| {})));
    match run {
        Ok(Ok(out)) => out.evals.last().map(|e| e.summary.score),
        Ok(Err(e)) => {
            warn!("{} seed {seed}: {e}", spec.name);
            None
        }
        Err(_) => {
            warn!("{} seed {seed}: run panicked", spec.name);
            None
        }
    }
}

/// Runs the sweep for every configured algorithm and writes one selection
/// file per algorithm into `<output_dir>/sweep`.
pub fn cmd_sweep(cfg: &CampaignConfig) -> Result<Vec<Selection>> {
    if cfg.sweep.seeds.is_empty() || cfg.sweep.configurations == 0 {
        bail!("sweep needs seeds and a positive configuration count");
    }
    let env = cfg.env()?;
    let schedule = cfg.sweep_schedule();
    let dir = cfg.output_dir.join("sweep");
    fs::create_dir_all(&dir).with_context(|| format!("creating {}", dir.display()))?;
    let mut selections = Vec::new();
    for base in cfg.algorithm_specs()? {
        let grid = cfg.sweep.grid.candidates(&base);
        if grid.is_empty() {
            bail!("{}: sweep grid is empty", base.name);
        }
        let picked = subsample(grid, cfg.sweep.configurations, cfg.stats_seed);
        info!("{}: sweeping {} configurations x {} seeds", base.name, picked.len(), cfg.sweep.seeds.len());
        let cells: Vec<(usize, u64)> = (0..picked.len())
            .flat_map(|i| cfg.sweep.seeds.iter().map(move |&s| (i, s)))
            .collect();
        let scores: Vec<Option<f64>> = crate::pool(cfg.workers)?
            .install(|| cells.par_iter().map(|&(i, s)| final_score(&picked[i], &env, &schedule, s)).collect());
        let candidates: Vec<CandidateResult> = picked
            .into_iter()
            .enumerate()
            .map(|(i, spec)| {
                let per_seed: BTreeMap<u64, Option<f64>> = cells
                    .iter()
                    .zip(&scores)
                    .filter(|((ci, _), _)| *ci == i)
                    .map(|((_, s), v)| (*s, *v))
                    .collect();
                let vals: Vec<f64> = per_seed.values().flatten().copied().collect();
                let mean_score = (vals.len() == per_seed.len()).then(|| vals.iter().sum::<f64>() / vals.len() as f64);
                CandidateResult {
                    config_hash: spec.config_hash(),
                    spec,
                    scores: per_seed,
                    mean_score,
                }
            })
            .collect();
        let sel = select(&base.name, candidates, &cfg.sweep.seeds, &schedule)?;
        let path = selection_path(&dir, &base.name);
        fs::write(&path, serde_json::to_string_pretty(&sel)?).with_context(|| format!("writing {}", path.display()))?;
        info!("{}: selected {} (mean score {:.4})", base.name, sel.config_hash, sel.mean_score);
        selections.push(sel);
    }
    Ok(selections)
}
