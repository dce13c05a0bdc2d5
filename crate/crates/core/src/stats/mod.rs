//! Robust aggregate statistics over training runs.

mod bootstrap;
mod matrix;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use bootstrap::{
    bootstrap_ci, probability_of_improvement, rank_distribution, stratified_bootstrap_ci, BootstrapConfig,
    StatSummary,
};
pub use matrix::{absolute_metric, best_per_run, Block, RunMatrix};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MetricDirection {
    LowerIsBetter,
    HigherIsBetter,
}

impl MetricDirection {
    /// Direction of a named metric. Everything is lower-is-better except the
    /// discharge duration and the raw zero-net-energy fraction.
    pub fn for_metric(name: &str) -> Self {
        match name.strip_prefix("raw.").unwrap_or(name) {
            "avg_discharge_duration" | "zero_net_energy" => MetricDirection::HigherIsBetter,
            _ => MetricDirection::LowerIsBetter,
        }
    }

    pub fn is_better(self, a: f64, b: f64) -> bool {
        match self {
            MetricDirection::LowerIsBetter => a < b,
            MetricDirection::HigherIsBetter => a > b,
        }
    }

    /// The better of two values.
    pub fn best(self, a: f64, b: f64) -> f64 {
        if self.is_better(b, a) {
            b
        } else {
            a
        }
    }
}

/// Mean after discarding the lowest and highest `floor(n/4)` samples.
pub fn iqm(samples: &[f64]) -> Result<f64> {
    if samples.is_empty() {
        return Err(Error::EmptyInput("iqm samples"));
    }
    let mut v = samples.to_vec();
    v.sort_by(f64::total_cmp);
    let k = v.len() / 4;
    let kept = &v[k..v.len() - k];
    Ok(kept.iter().sum::<f64>() / kept.len() as f64)
}

/// Mean of the worst `ceil(alpha·n)` samples.
pub fn cvar(samples: &[f64], alpha: f64, direction: MetricDirection) -> Result<f64> {
    if samples.is_empty() {
        return Err(Error::EmptyInput("cvar samples"));
    }
    if !(alpha > 0.0 && alpha <= 1.0) {
        return Err(Error::InvalidArgument(format!("cvar alpha {alpha} outside (0, 1]")));
    }
    let mut v = samples.to_vec();
    v.sort_by(f64::total_cmp);
    if direction == MetricDirection::LowerIsBetter {
        v.reverse();
    }
    let k = ((alpha * v.len() as f64).ceil() as usize).clamp(1, v.len());
    Ok(v[..k].iter().sum::<f64>() / k as f64)
}

pub fn mean(samples: &[f64]) -> Result<f64> {
    if samples.is_empty() {
        return Err(Error::EmptyInput("mean samples"));
    }
    Ok(samples.iter().sum::<f64>() / samples.len() as f64)
}

pub const DEFAULT_CVAR_ALPHA: f64 = 0.25;

/// Point estimator applied to a set of per-seed values.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Statistic {
    Mean,
    Iqm,
    Cvar { alpha: f64 },
}

impl Statistic {
    pub fn apply(self, samples: &[f64], direction: MetricDirection) -> Result<f64> {
        match self {
            Statistic::Mean => mean(samples),
            Statistic::Iqm => iqm(samples),
            Statistic::Cvar { alpha } => cvar(samples, alpha, direction),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Statistic::Mean => "mean",
            Statistic::Iqm => "iqm",
            Statistic::Cvar { .. } => "cvar",
        }
    }
}
