//! Stand-alone evaluation of a checkpoint or baseline: other district sizes,
//! masked forecasts, and agent importance.

use std::fs;
use std::path::PathBuf;
use std::sync::Arc;

use anyhow::{bail, Context, Result};
use districtbench_core::control::{AlgorithmSpec, Checkpoint, Controller, Mode, PolicyController};
use districtbench_core::data::{mask_forecast_features, ObservationSchema};
use districtbench_core::episode::{EnvSpec, EvalSummary, EPISODE_HOURS};
use districtbench_core::importance::{agent_importance, ImportanceConfig, ImportanceRecord};
use districtbench_core::EpisodeWindow;
use serde::{Deserialize, Serialize};

use crate::config::{parse_leads, DatasetSource};

/// What to evaluate: a saved policy or a named baseline preset.
#[derive(Debug, Clone, PartialEq)]
pub enum Subject {
    Checkpoint(PathBuf),
    Baseline(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvaluateOptions {
    pub subject: Subject,
    pub dataset: DatasetSource,
    /// District size; the dataset's own size when `None`.
    pub agents: Option<usize>,
    pub mask_forecasts: Vec<u32>,
    pub episodes: usize,
    pub episode_len: usize,
    pub seed: u64,
    /// Agent-importance horizon in hours; no importance pass when `None`.
    pub importance_horizon: Option<usize>,
    pub out_dir: PathBuf,
}

impl EvaluateOptions {
    pub fn new(subject: Subject, dataset: DatasetSource, out_dir: PathBuf) -> Self {
        Self {
            subject,
            dataset,
            agents: None,
            mask_forecasts: Vec::new(),
            episodes: 8,
            episode_len: EPISODE_HOURS,
            seed: 0,
            importance_horizon: None,
            out_dir,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluationReport {
    pub controller: String,
    pub agents: usize,
    pub trained_agents: Option<usize>,
    pub features: Vec<String>,
    pub schema_hash: String,
    pub summary: EvalSummary,
    pub importance: Option<ImportanceRecord>,
}

fn build_env(opts: &EvaluateOptions) -> Result<EnvSpec> {
    let bundle = match opts.agents {
        Some(0) => bail!("agent count must be positive"),
        Some(n) => opts.dataset.load_with_buildings(n)?,
        None => opts.dataset.load()?,
    };
    let schema = mask_forecast_features(&ObservationSchema::full(), &parse_leads(&opts.mask_forecasts)?);
    Ok(EnvSpec::new(Arc::new(bundle)).with_schema(schema))
}

fn controller(opts: &EvaluateOptions, env: &EnvSpec) -> Result<(String, Option<usize>, Box<dyn Controller>)> {
    match &opts.subject {
        Subject::Checkpoint(path) => {
            let ckpt = Checkpoint::load(path, Some(&env.schema.hash()))
                .with_context(|| format!("loading checkpoint {}", path.display()))?;
            ckpt.policy.check_agents(env.bundle.n_buildings())?;
            let name = ckpt.policy.algorithm.clone();
            let trained = ckpt.policy.trained_agents;
            Ok((name, Some(trained), Box::new(PolicyController::new(ckpt.policy, Mode::Deterministic, opts.seed))))
        }
        Subject::Baseline(name) => {
            let spec = AlgorithmSpec::desk(name)?;
            match spec.baseline_controller(opts.seed) {
                Some(c) => Ok((spec.name, None, c)),
                None => bail!("{name} is a learner; evaluate one of its checkpoints instead"),
            }
        }
    }
}

/// Evaluates the subject and writes `evaluation.json`, `kpis.csv` and, with
/// importance enabled, `importance_scores.csv` and
/// `importance_reward_histogram.csv` into the output directory.
pub fn cmd_evaluate(opts: &EvaluateOptions) -> Result<EvaluationReport> {
    let env = build_env(opts)?;
    let (name, trained_agents, mut ctrl) = controller(opts, &env)?;
    let evaluator = env.evaluator(opts.episode_len, opts.episodes, opts.seed)?;
    let summary = evaluator.evaluate(ctrl.as_mut())?;

    let importance = match opts.importance_horizon {
        Some(h) => {
            let mut district = env.district()?;
            district.reset(EpisodeWindow::new(0, h.min(env.bundle.horizon())), opts.seed)?;
            ctrl.reset(&district)?;
            let cfg = ImportanceConfig {
                retain_differences: true,
                ..ImportanceConfig::default()
            };
            Some(agent_importance(&mut district, |d| ctrl.act(d), h, cfg)?)
        }
        None => None,
    };

    let report = EvaluationReport {
        controller: name,
        agents: env.bundle.n_buildings(),
        trained_agents,
        features: env.schema.names(),
        schema_hash: env.schema.hash(),
        summary,
        importance,
    };
    write_report(opts, &report)?;
    Ok(report)
}

fn write_report(opts: &EvaluateOptions, report: &EvaluationReport) -> Result<()> {
    let dir = &opts.out_dir;
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    fs::write(dir.join("evaluation.json"), serde_json::to_string_pretty(report)?)?;
    let mut w = csv::Writer::from_path(dir.join("kpis.csv"))?;
    w.write_record(["metric", "value"])?;
    for (m, v) in report.summary.metrics() {
        w.write_record([m, v.to_string()])?;
    }
    w.flush()?;
    if let Some(imp) = &report.importance {
        imp.write_scores_csv(fs::File::create(dir.join("importance_scores.csv"))?)?;
        imp.write_histogram_csv(fs::File::create(dir.join("importance_reward_histogram.csv"))?, 20)?;
    }
    Ok(())
}
