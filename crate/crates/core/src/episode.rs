//! Running controllers over episode windows and scoring them against the
//! no-control baseline.

use std::sync::Arc;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::battery::{district_battery_kpis, BatteryKpis};
use crate::control::{Controller, NoControl};
use crate::data::{DatasetBundle, ObservationSchema};
use crate::error::{Error, Result};
use crate::kpi::{average_score, compute_kpis, normalize_kpis, EpisodeTrace, KpiReport, NormalizedKpis, ScoreWeights, TraceBuilder};
use crate::sim::{District, EpisodeWindow, SimConfig};

/// Default episode length in hours.
pub const EPISODE_HOURS: usize = 168;

/// Dataset, simulator settings, observation schema and score weights.
#[derive(Debug, Clone)]
pub struct EnvSpec {
    pub bundle: Arc<DatasetBundle>,
    pub sim: SimConfig,
    pub schema: ObservationSchema,
    pub weights: ScoreWeights,
}

impl EnvSpec {
    pub fn new(bundle: Arc<DatasetBundle>) -> Self {
        Self {
            bundle,
            sim: SimConfig::default(),
            schema: ObservationSchema::full(),
            weights: ScoreWeights::default(),
        }
    }

    pub fn with_schema(mut self, schema: ObservationSchema) -> Self {
        self.schema = schema;
        self
    }

    pub fn district(&self) -> Result<District> {
        District::new(self.bundle.clone(), self.bundle.params.clone(), self.sim, self.schema.clone())
    }

    pub fn evaluator(&self, episode_len: usize, episodes: usize, seed: u64) -> Result<Evaluator> {
        let windows = eval_windows(self.bundle.horizon(), episode_len, episodes)?;
        Evaluator::new(self.district()?, windows, self.weights, seed)
    }
}

#[derive(Debug, Clone)]
pub struct EpisodeResult {
    pub trace: EpisodeTrace,
    pub total_reward: f64,
}

/// Resets `env` to `window` and lets `controller` act until the window ends.
pub fn run_episode(
    env: &mut District,
    controller: &mut dyn Controller,
    window: EpisodeWindow,
    seed: u64,
) -> Result<EpisodeResult> {
    env.reset(window, seed)?;
    controller.reset(env)?;
    let bundle = env.bundle().clone();
    let mut builder = TraceBuilder::new(&bundle, env.params());
    let mut total_reward = 0.0;
    while !env.done() {
        let actions = controller.act(env)?;
        let out = env.step(&actions)?;
        total_reward += out.reward;
        builder.push(&out);
    }
    Ok(EpisodeResult {
        trace: builder.finish(),
        total_reward,
    })
}

fn check_window_fits(horizon: usize, len: usize) -> Result<()> {
    if len == 0 || len % 24 != 0 || len > horizon {
        return Err(Error::InvalidWindow(format!(
            "episode length {len} must be a positive number of days within horizon {horizon}"
        )));
    }
    Ok(())
}

/// `count` day-aligned windows spread evenly over the horizon.
pub fn eval_windows(horizon: usize, len: usize, count: usize) -> Result<Vec<EpisodeWindow>> {
    check_window_fits(horizon, len)?;
    if count == 0 {
        return Err(Error::InvalidArgument("at least one evaluation episode is required".into()));
    }
    let last_day = (horizon - len) / 24;
    Ok((0..count)
        .map(|k| {
            let day = if count == 1 { 0 } else { k * last_day / (count - 1) };
            EpisodeWindow::new(day * 24, len)
        })
        .collect())
}

/// Window starting at a random day boundary.
pub fn random_window<R: Rng + ?Sized>(rng: &mut R, horizon: usize, len: usize) -> Result<EpisodeWindow> {
    check_window_fits(horizon, len)?;
    let day = rng.random_range(0..=(horizon - len) / 24);
    Ok(EpisodeWindow::new(day * 24, len))
}

/// Mean performance of a controller over a set of episodes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalSummary {
    pub score: f64,
    pub normalized: NormalizedKpis,
    pub kpis: KpiReport,
    pub battery: BatteryKpis,
    pub episodes: usize,
}

impl EvalSummary {
    /// Flat metric list as logged in run records.
    pub fn metrics(&self) -> Vec<(String, f64)> {
        let mut out = vec![("average_score".to_string(), self.score)];
        out.extend(self.normalized.entries().map(|(k, v)| (k.to_string(), v)));
        out.extend(self.kpis.entries().map(|(k, v)| (format!("raw.{k}"), v)));
        out.push(("avg_dod".into(), self.battery.avg_dod));
        out.push(("avg_discharge_duration".into(), self.battery.avg_discharge_duration));
        out
    }
}

/// Evaluates controllers on fixed windows; baseline KPIs are computed once.
#[derive(Debug, Clone)]
pub struct Evaluator {
    env: District,
    windows: Vec<EpisodeWindow>,
    baselines: Vec<KpiReport>,
    weights: ScoreWeights,
    seed: u64,
}

impl Evaluator {
    pub fn new(env: District, windows: Vec<EpisodeWindow>, weights: ScoreWeights, seed: u64) -> Result<Self> {
        if windows.is_empty() {
            return Err(Error::InvalidArgument("evaluator needs at least one window".into()));
        }
        let mut probe = env.clone();
        let baselines = windows
            .iter()
            .enumerate()
            .map(|(k, w)| compute_kpis(&run_episode(&mut probe, &mut NoControl, *w, seed + k as u64)?.trace))
            .collect::<Result<_>>()?;
        Ok(Self {
            env,
            windows,
            baselines,
            weights,
            seed,
        })
    }

    pub fn windows(&self) -> &[EpisodeWindow] {
        &self.windows
    }

    pub fn env(&self) -> &District {
        &self.env
    }

    pub fn evaluate(&self, controller: &mut dyn Controller) -> Result<EvalSummary> {
        let mut env = self.env.clone();
        let mut raw = Vec::with_capacity(self.windows.len());
        let mut normalized = Vec::with_capacity(self.windows.len());
        let mut scores = 0.0;
        let mut battery = BatteryKpis::default();
        for (k, (w, base)) in self.windows.iter().zip(&self.baselines).enumerate() {
            let ep = run_episode(&mut env, controller, *w, self.seed + k as u64)?;
            let kpis = compute_kpis(&ep.trace)?;
            let norm = normalize_kpis(&kpis, base)?;
            scores += average_score(&norm, &self.weights);
            let b = district_battery_kpis(&ep.trace)?;
            battery.avg_dod += b.avg_dod;
            battery.avg_discharge_duration += b.avg_discharge_duration;
            raw.push(kpis);
            normalized.push(norm);
        }
        let n = self.windows.len() as f64;
        battery.avg_dod /= n;
        battery.avg_discharge_duration /= n;
        Ok(EvalSummary {
            score: scores / n,
            normalized: NormalizedKpis::mean(&normalized)?,
            kpis: KpiReport::mean(&raw)?,
            battery,
            episodes: self.windows.len(),
        })
    }
}
