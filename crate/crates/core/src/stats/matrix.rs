use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use super::MetricDirection;
use crate::error::{Error, Result};

/// Standard periodic evaluation or the extended re-evaluation of each run's
/// best checkpoint.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Block {
    Standard,
    Absolute,
}

type Key = (String, u64, u64, String);

/// Metric values indexed by (algorithm, seed, eval point, metric).
#[derive(Debug, Clone, Default)]
pub struct RunMatrix {
    standard: BTreeMap<Key, f64>,
    absolute: BTreeMap<Key, f64>,
    directions: BTreeMap<String, MetricDirection>,
}

impl RunMatrix {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, block: Block, algorithm: &str, seed: u64, eval_point: u64, metric: &str, value: f64) {
        self.directions
            .entry(metric.to_string())
            .or_insert_with(|| MetricDirection::for_metric(metric));
        let key = (algorithm.to_string(), seed, eval_point, metric.to_string());
        match block {
            Block::Standard => self.standard.insert(key, value),
            Block::Absolute => self.absolute.insert(key, value),
        };
    }

    pub fn set_direction(&mut self, metric: &str, direction: MetricDirection) {
        self.directions.insert(metric.to_string(), direction);
    }

    pub fn direction(&self, metric: &str) -> MetricDirection {
        self.directions
            .get(metric)
            .copied()
            .unwrap_or_else(|| MetricDirection::for_metric(metric))
    }

    pub fn algorithms(&self) -> Vec<String> {
        let set: BTreeSet<&String> = self.standard.keys().chain(self.absolute.keys()).map(|k| &k.0).collect();
        set.into_iter().cloned().collect()
    }

    pub fn seeds(&self, algorithm: &str) -> Vec<u64> {
        let set: BTreeSet<u64> = self.standard.keys().filter(|k| k.0 == algorithm).map(|k| k.1).collect();
        set.into_iter().collect()
    }

    pub fn eval_points(&self, algorithm: &str) -> Vec<u64> {
        let set: BTreeSet<u64> = self.standard.keys().filter(|k| k.0 == algorithm).map(|k| k.2).collect();
        set.into_iter().collect()
    }

    pub fn metrics(&self) -> Vec<String> {
        let set: BTreeSet<&String> = self.standard.keys().map(|k| &k.3).collect();
        set.into_iter().cloned().collect()
    }

    pub fn get(&self, algorithm: &str, seed: u64, eval_point: u64, metric: &str) -> Option<f64> {
        self.standard
            .get(&(algorithm.to_string(), seed, eval_point, metric.to_string()))
            .copied()
    }

    /// Checks that every (seed, eval point, metric) combination of an
    /// algorithm is present.
    pub fn validate(&self) -> Result<()> {
        let metrics = self.metrics();
        for alg in self.algorithms() {
            for seed in self.seeds(&alg) {
                for ep in self.eval_points(&alg) {
                    for m in &metrics {
                        if self.get(&alg, seed, ep, m).is_none() {
                            return Err(Error::InvalidArgument(format!(
                                "run matrix is not rectangular: {alg} seed {seed} eval point {ep} lacks {m}"
                            )));
                        }
                    }
                }
            }
        }
        Ok(())
    }

    /// Per-seed values of a metric at one eval point.
    pub fn samples(&self, algorithm: &str, eval_point: u64, metric: &str) -> Result<Vec<f64>> {
        let seeds = self.seeds(algorithm);
        if seeds.is_empty() {
            return Err(Error::InvalidArgument(format!("unknown algorithm {algorithm}")));
        }
        seeds
            .into_iter()
            .map(|s| {
                self.get(algorithm, s, eval_point, metric).ok_or_else(|| {
                    Error::InvalidArgument(format!("{algorithm} seed {s} has no {metric} at eval point {eval_point}"))
                })
            })
            .collect()
    }

    /// Per-seed values at the last eval point of an algorithm.
    pub fn final_samples(&self, algorithm: &str, metric: &str) -> Result<Vec<f64>> {
        let last = *self
            .eval_points(algorithm)
            .last()
            .ok_or_else(|| Error::InvalidArgument(format!("unknown algorithm {algorithm}")))?;
        self.samples(algorithm, last, metric)
    }

    /// Eval point with the lowest value of `selector` for one run; ties go to
    /// the earliest.
    pub fn best_eval_point(&self, algorithm: &str, seed: u64, selector: &str) -> Option<u64> {
        let mut best: Option<(u64, f64)> = None;
        for ep in self.eval_points(algorithm) {
            if let Some(v) = self.get(algorithm, seed, ep, selector) {
                if best.is_none_or(|(_, b)| v < b) {
                    best = Some((ep, v));
                }
            }
        }
        best.map(|(ep, _)| ep)
    }

    pub fn absolute_values(&self, algorithm: &str, metric: &str) -> Vec<(u64, f64)> {
        self.absolute
            .iter()
            .filter(|(k, _)| k.0 == algorithm && k.3 == metric)
            .map(|(k, v)| (k.1, *v))
            .collect()
    }
}

/// Mean over seeds of the extended evaluation of each seed's best checkpoint.
pub fn absolute_metric(matrix: &RunMatrix, metric: &str) -> Result<BTreeMap<String, f64>> {
    let mut out = BTreeMap::new();
    for alg in matrix.algorithms() {
        let vals = matrix.absolute_values(&alg, metric);
        if vals.is_empty() {
            return Err(Error::InvalidArgument(format!("absolute block missing for {alg} / {metric}")));
        }
        out.insert(alg, vals.iter().map(|v| v.1).sum::<f64>() / vals.len() as f64);
    }
    Ok(out)
}

/// Best value of a metric across eval points for every seed of an
/// algorithm, in seed order.
pub fn best_per_run(matrix: &RunMatrix, algorithm: &str, metric: &str) -> Result<Vec<(u64, f64)>> {
    let direction = matrix.direction(metric);
    let seeds = matrix.seeds(algorithm);
    if seeds.is_empty() {
        return Err(Error::InvalidArgument(format!("unknown algorithm {algorithm}")));
    }
    let mut out = Vec::with_capacity(seeds.len());
    for seed in seeds {
        let best = matrix
            .eval_points(algorithm)
            .into_iter()
            .filter_map(|ep| matrix.get(algorithm, seed, ep, metric))
            .reduce(|a, b| direction.best(a, b))
            .ok_or_else(|| Error::InvalidArgument(format!("{algorithm} seed {seed} has no {metric}")))?;
        out.push((seed, best));
    }
    Ok(out)
}
