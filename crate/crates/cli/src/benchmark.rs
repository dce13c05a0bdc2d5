//! Benchmark campaigns: every algorithm x seed cell is trained with periodic
//! evaluation, then its best checkpoint is re-evaluated on ten times as many
//! episodes.

use std::fs;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{anyhow, Context, Result};
use districtbench_core::control::{
    train_run, AlgorithmSpec, Checkpoint, Controller, EvalPoint, Mode, PolicyController, Schedule,
};
use districtbench_core::episode::{EnvSpec, EvalSummary};
use districtbench_core::stats::Block;
use log::{error, info};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::CampaignConfig;
use crate::records::{now, RecordWriter, RunManifest, RunRecord, RunStatus, MANIFEST_FILE, RECORDS_FILE};
use crate::sweep::load_selection;

pub const BEST_CHECKPOINT: &str = "checkpoint_best.json";
pub const FINAL_CHECKPOINT: &str = "checkpoint_final.json";
/// Extended evaluation of the best checkpoint.
pub const ABSOLUTE_EVAL: &str = "absolute_eval.json";

pub fn run_dir(root: &Path, algorithm: &str, seed: u64) -> PathBuf {
    root.join("runs").join(algorithm).join(format!("seed_{seed}"))
}

fn records_for(spec: &AlgorithmSpec, schema_hash: &str, seed: u64, block: Block, step: u64, s: &EvalSummary) -> Vec<RunRecord> {
    let config_hash = spec.config_hash();
    s.metrics()
        .into_iter()
        .map(|(metric, value)| RunRecord {
            algorithm: spec.name.clone(),
            config_hash: config_hash.clone(),
            schema_hash: schema_hash.to_string(),
            seed,
            eval_point: step,
            block,
            metric,
            value,
        })
        .collect()
}

/// Trains one cell and writes its records, checkpoints and manifest under
/// `dir`. Returns the best eval step.
pub fn run_cell(spec: &AlgorithmSpec, env: &EnvSpec, schedule: &Schedule, seed: u64, dir: &Path) -> Result<u64> {
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    let schema_hash = env.schema.hash();
    let schedule = Schedule {
        seed,
        ..schedule.clone()
    };
    let mut writer = RecordWriter::create(&dir.join(RECORDS_FILE))?;
    let mut write_err: Option<anyhow::Error> = None;
    let out = train_run(spec, env, &schedule, &mut |p: &EvalPoint| {
        if write_err.is_none() {
            let recs = records_for(spec, &schema_hash, seed, Block::Standard, p.step, &p.summary);
            if let Err(e) = writer.write_batch(&recs) {
                write_err = Some(e);
            }
        }
    })?;
    if let Some(e) = write_err {
        return Err(e);
    }
    let best = out.best_index();
    let best_step = out.evals[best].step;

    let absolute = env.evaluator(schedule.episode_len, schedule.absolute_episodes(), seed)?;
    let mut controller: Box<dyn Controller> = match spec.baseline_controller(seed) {
        Some(c) => c,
        None => {
            let ckpt = &out.checkpoints[best];
            ckpt.save(&dir.join(BEST_CHECKPOINT))?;
            out.checkpoints.last().expect("final checkpoint").save(&dir.join(FINAL_CHECKPOINT))?;
            Box::new(PolicyController::new(ckpt.policy.clone(), Mode::Deterministic, seed))
        }
    };
    let summary = absolute.evaluate(controller.as_mut())?;
    let path = dir.join(ABSOLUTE_EVAL);
    fs::write(&path, serde_json::to_string_pretty(&summary)?).with_context(|| format!("writing {}", path.display()))?;
    writer.write_batch(&records_for(spec, &schema_hash, seed, Block::Absolute, best_step, &summary))?;
    Ok(best_step)
}

fn panic_message(p: Box<dyn std::any::Any + Send>) -> String {
    p.downcast_ref::<&str>()
        .map(|s| s.to_string())
        .or_else(|| p.downcast_ref::<String>().cloned())
        .unwrap_or_else(|| "panic".into())
}

/// Runs a cell with crash isolation; failures end up in its manifest.
pub fn run_cell_isolated(spec: &AlgorithmSpec, env: &EnvSpec, schedule: &Schedule, seed: u64, dir: &Path) -> CellOutcome {
    let started = Instant::now();
    let mut manifest = RunManifest {
        algorithm: spec.name.clone(),
        config_hash: spec.config_hash(),
        seed,
        status: RunStatus::Running,
        error: None,
        started_at: now(),
        finished_at: None,
        wall_clock_secs: None,
        best_eval_point: None,
    };
    let prepared = fs::create_dir_all(dir).map_err(anyhow::Error::from).and_then(|_| manifest.write(dir));
    let result = prepared.and_then(|_| {
        catch_unwind(AssertUnwindSafe(|| run_cell(spec, env, schedule, seed, dir)))
            .unwrap_or_else(|p| Err(anyhow!("run panicked: {}", panic_message(p))))
    });
    match &result {
        Ok(step) => {
            manifest.status = RunStatus::Completed;
            manifest.best_eval_point = Some(*step);
            info!("{} seed {seed}: done, best eval point {step}", spec.name);
        }
        Err(e) => {
            manifest.status = RunStatus::Failed;
            manifest.error = Some(format!("{e:#}"));
            error!("{} seed {seed}: {e:#}", spec.name);
        }
    }
    manifest.finished_at = Some(now());
    manifest.wall_clock_secs = Some(started.elapsed().as_secs_f64());
    if let Err(e) = manifest.write(dir) {
        error!("{} seed {seed}: cannot write {MANIFEST_FILE}: {e:#}", spec.name);
    }
    CellOutcome {
        algorithm: spec.name.clone(),
        seed,
        status: manifest.status,
        error: manifest.error,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellOutcome {
    pub algorithm: String,
    pub seed: u64,
    pub status: RunStatus,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CampaignManifest {
    pub started_at: String,
    pub finished_at: String,
    pub schema_hash: String,
    pub schedule: Schedule,
    pub algorithms: Vec<AlgorithmSpec>,
    pub cells: Vec<CellOutcome>,
}

impl CampaignManifest {
    pub fn all_completed(&self) -> bool {
        self.cells.iter().all(|c| c.status == RunStatus::Completed)
    }
}

/// Replaces configured specs with sweep selections found in `sweep_dir`.
pub fn apply_selections(specs: Vec<AlgorithmSpec>, sweep_dir: &Path) -> Result<Vec<AlgorithmSpec>> {
    specs
        .into_iter()
        .map(|spec| match load_selection(sweep_dir, &spec.name)? {
            Some(sel) => {
                info!("{}: using sweep selection {}", spec.name, sel.config_hash);
                Ok(sel.selected)
            }
            None => Ok(spec),
        })
        .collect()
}

pub fn cmd_benchmark(cfg: &CampaignConfig, sweep_dir: Option<&Path>) -> Result<CampaignManifest> {
    let started_at = now();
    let env = cfg.env()?;
    let schedule = cfg.schedule();
    let mut specs = cfg.algorithm_specs()?;
    if let Some(dir) = sweep_dir {
        specs = apply_selections(specs, dir)?;
    }
    let cells: Vec<(usize, u64)> = (0..specs.len())
        .flat_map(|i| cfg.seeds.iter().map(move |&s| (i, s)))
        .collect();
    info!("benchmark: {} algorithms x {} seeds", specs.len(), cfg.seeds.len());
    let outcomes: Vec<CellOutcome> = crate::pool(cfg.workers)?.install(|| {
        cells
            .par_iter()
            .map(|&(i, seed)| {
                let dir = run_dir(&cfg.output_dir, &specs[i].name, seed);
                run_cell_isolated(&specs[i], &env, &schedule, seed, &dir)
            })
            .collect()
    });
    let manifest = CampaignManifest {
        started_at,
        finished_at: now(),
        schema_hash: env.schema.hash(),
        schedule,
        algorithms: specs,
        cells: outcomes,
    };
    let path = cfg.output_dir.join(MANIFEST_FILE);
    fs::write(&path, serde_json::to_string_pretty(&manifest)?).with_context(|| format!("writing {}", path.display()))?;
    Ok(manifest)
}

/// Loads the best checkpoint of a finished learner run.
pub fn load_best_checkpoint(root: &Path, algorithm: &str, seed: u64) -> Result<Checkpoint> {
    let path = run_dir(root, algorithm, seed).join(BEST_CHECKPOINT);
    Ok(Checkpoint::load(&path, None)?)
}
