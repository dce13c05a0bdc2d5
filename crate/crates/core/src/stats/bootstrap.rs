use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{MetricDirection, RunMatrix, Statistic};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BootstrapConfig {
    pub n_resamples: usize,
    pub level: f64,
    pub seed: u64,
}

impl Default for BootstrapConfig {
    fn default() -> Self {
        Self {
            n_resamples: 2000,
            level: 0.95,
            seed: 0,
        }
    }
}

impl BootstrapConfig {
    fn validate(&self) -> Result<()> {
        if self.n_resamples == 0 {
            return Err(Error::InvalidArgument("bootstrap needs at least one resample".into()));
        }
        if !(self.level > 0.0 && self.level < 1.0) {
            return Err(Error::InvalidArgument(format!("confidence level {} outside (0, 1)", self.level)));
        }
        Ok(())
    }

    /// Independent generator for one stratum.
    fn rng(&self, stream: u64) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(stream);
        rng
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StatSummary {
    pub point: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub estimator: String,
    pub n_resamples: usize,
}

fn resample_into(rng: &mut ChaCha8Rng, samples: &[f64], out: &mut Vec<f64>) {
    out.clear();
    out.extend((0..samples.len()).map(|_| samples[rng.random_range(0..samples.len())]));
}

/// Linear-interpolated quantile of sorted data.
fn quantile(sorted: &[f64], q: f64) -> f64 {
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (sorted[hi] - sorted[lo]) * (pos - lo as f64)
}

fn percentile_interval(mut stats: Vec<f64>, level: f64) -> (f64, f64) {
    stats.sort_by(f64::total_cmp);
    let tail = (1.0 - level) / 2.0;
    (quantile(&stats, tail), quantile(&stats, 1.0 - tail))
}

fn require_seeds(samples: &[f64]) -> Result<()> {
    if samples.len() < 2 {
        return Err(Error::InvalidArgument(format!(
            "bootstrap interval needs at least 2 seeds, got {}",
            samples.len()
        )));
    }
    Ok(())
}

/// Percentile bootstrap interval of `statistic` over one set of seeds.
pub fn bootstrap_ci(
    samples: &[f64],
    statistic: Statistic,
    direction: MetricDirection,
    config: &BootstrapConfig,
) -> Result<StatSummary> {
    bootstrap_stream(samples, statistic, direction, config, 0)
}

fn bootstrap_stream(
    samples: &[f64],
    statistic: Statistic,
    direction: MetricDirection,
    config: &BootstrapConfig,
    stream: u64,
) -> Result<StatSummary> {
    config.validate()?;
    require_seeds(samples)?;
    let point = statistic.apply(samples, direction)?;
    let mut rng = config.rng(stream);
    let mut buf = Vec::with_capacity(samples.len());
    let mut stats = Vec::with_capacity(config.n_resamples);
    for _ in 0..config.n_resamples {
        resample_into(&mut rng, samples, &mut buf);
        stats.push(statistic.apply(&buf, direction)?);
    }
    let (ci_low, ci_high) = percentile_interval(stats, config.level);
    Ok(StatSummary {
        point,
        ci_low,
        ci_high,
        estimator: statistic.name().to_string(),
        n_resamples: config.n_resamples,
    })
}

/// Per-algorithm intervals at one eval point, resampling seeds within each
/// algorithm independently.
pub fn stratified_bootstrap_ci(
    matrix: &RunMatrix,
    metric: &str,
    eval_point: Option<u64>,
    statistic: Statistic,
    config: &BootstrapConfig,
) -> Result<BTreeMap<String, StatSummary>> {
    let direction = matrix.direction(metric);
    let mut out = BTreeMap::new();
    for (k, alg) in matrix.algorithms().into_iter().enumerate() {
        let samples = match eval_point {
            Some(ep) => matrix.samples(&alg, ep, metric)?,
            None => matrix.final_samples(&alg, metric)?,
        };
        let summary = bootstrap_stream(&samples, statistic, direction, config, k as u64)?;
        out.insert(alg, summary);
    }
    Ok(out)
}

fn improvement(x: &[f64], y: &[f64], direction: MetricDirection) -> f64 {
    let mut score = 0.0;
    for a in x {
        for b in y {
            if direction.is_better(*a, *b) {
                score += 1.0;
            } else if a == b {
                score += 0.5;
            }
        }
    }
    score / (x.len() * y.len()) as f64
}

/// Probability that a run of `x` beats a run of `y`, ties counted half,
/// with a bootstrap interval resampling each side independently.
pub fn probability_of_improvement(
    x: &[f64],
    y: &[f64],
    direction: MetricDirection,
    config: &BootstrapConfig,
) -> Result<StatSummary> {
    if x.is_empty() || y.is_empty() {
        return Err(Error::EmptyInput("probability of improvement runs"));
    }
    config.validate()?;
    let point = improvement(x, y, direction);
    let (mut rx, mut ry) = (config.rng(0), config.rng(1));
    let (mut bx, mut by) = (Vec::new(), Vec::new());
    let mut stats = Vec::with_capacity(config.n_resamples);
    for _ in 0..config.n_resamples {
        resample_into(&mut rx, x, &mut bx);
        resample_into(&mut ry, y, &mut by);
        stats.push(improvement(&bx, &by, direction));
    }
    let (ci_low, ci_high) = percentile_interval(stats, config.level);
    Ok(StatSummary {
        point,
        ci_low,
        ci_high,
        estimator: "probability_of_improvement".into(),
        n_resamples: config.n_resamples,
    })
}

/// Probability of each algorithm landing at each rank (index 0 = best)
/// across bootstrap resamples. Tied algorithms share their ranks' mass
/// evenly, so every row sums to one.
pub fn rank_distribution(
    matrix: &RunMatrix,
    metric: &str,
    eval_point: Option<u64>,
    statistic: Statistic,
    config: &BootstrapConfig,
) -> Result<BTreeMap<String, Vec<f64>>> {
    config.validate()?;
    let algorithms = matrix.algorithms();
    let n = algorithms.len();
    if n < 2 {
        return Err(Error::InvalidArgument(format!("rank distribution needs at least 2 algorithms, got {n}")));
    }
    let direction = matrix.direction(metric);
    let samples: Vec<Vec<f64>> = algorithms
        .iter()
        .map(|alg| match eval_point {
            Some(ep) => matrix.samples(alg, ep, metric),
            None => matrix.final_samples(alg, metric),
        })
        .collect::<Result<_>>()?;
    let mut rngs: Vec<ChaCha8Rng> = (0..n as u64).map(|k| config.rng(k)).collect();
    let mut counts = vec![vec![0.0; n]; n];
    let mut buf = Vec::new();
    let mut stats = vec![0.0; n];
    let mut order: Vec<usize> = (0..n).collect();
    for _ in 0..config.n_resamples {
        for k in 0..n {
            resample_into(&mut rngs[k], &samples[k], &mut buf);
            stats[k] = statistic.apply(&buf, direction)?;
        }
        order.sort_by(|&a, &b| {
            let c = stats[a].total_cmp(&stats[b]);
            match direction {
                MetricDirection::LowerIsBetter => c,
                MetricDirection::HigherIsBetter => c.reverse(),
            }
        });
        let mut i = 0;
        while i < n {
            let mut j = i + 1;
            while j < n && stats[order[j]] == stats[order[i]] {
                j += 1;
            }
            let share = 1.0 / (j - i) as f64;
            for &alg in &order[i..j] {
                for rank in i..j {
                    counts[alg][rank] += share;
                }
            }
            i = j;
        }
    }
    let total = config.n_resamples as f64;
    Ok(algorithms
        .into_iter()
        .zip(counts)
        .map(|(alg, row)| (alg, row.into_iter().map(|c| c / total).collect()))
        .collect())
}

#[cfg(test)]
mod tests {
    use super::super::Block;
    use super::*;
    use proptest::prelude::*;
    use rand_distr::{Distribution, Normal};

    const LOWER: MetricDirection = MetricDirection::LowerIsBetter;

    #[test]
    fn degenerate_interval() {
        let s = bootstrap_ci(&[3.0; 6], Statistic::Iqm, LOWER, &BootstrapConfig::default()).unwrap();
        assert_eq!((s.ci_low, s.point, s.ci_high), (3.0, 3.0, 3.0));
    }

    #[test]
    fn single_seed_rejected() {
        assert!(bootstrap_ci(&[3.0], Statistic::Mean, LOWER, &BootstrapConfig::default()).is_err());
    }

    #[test]
    fn deterministic_under_seed() {
        let data: Vec<f64> = (1..=12).map(|i| (i as f64).sqrt().sin()).collect();
        let cfg = BootstrapConfig { seed: 11, ..Default::default() };
        let a = bootstrap_ci(&data, Statistic::Mean, LOWER, &cfg).unwrap();
        let b = bootstrap_ci(&data, Statistic::Mean, LOWER, &cfg).unwrap();
        assert_eq!(a, b);
        let c = bootstrap_ci(&data, Statistic::Mean, LOWER, &BootstrapConfig { seed: 12, ..cfg }).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn coverage_on_normal_data() {
        let normal = Normal::new(2.0, 1.5).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(2024);
        let mut hits = 0;
        for trial in 0..100 {
            let data: Vec<f64> = (0..30).map(|_| normal.sample(&mut rng)).collect();
            let cfg = BootstrapConfig { seed: trial, ..Default::default() };
            let s = bootstrap_ci(&data, Statistic::Mean, LOWER, &cfg).unwrap();
            if s.ci_low <= 2.0 && 2.0 <= s.ci_high {
                hits += 1;
            }
        }
        assert!(hits >= 90, "coverage {hits}/100");
    }

    #[test]
    fn improvement_cases() {
        let cfg = BootstrapConfig::default();
        assert_eq!(probability_of_improvement(&[1.0, 2.0], &[3.0, 4.0], LOWER, &cfg).unwrap().point, 1.0);
        assert_eq!(probability_of_improvement(&[1.0, 2.0], &[1.0, 2.0], LOWER, &cfg).unwrap().point, 0.5);
        assert_eq!(probability_of_improvement(&[1.0, 4.0], &[2.0, 3.0], LOWER, &cfg).unwrap().point, 0.5);
        assert!(probability_of_improvement(&[], &[1.0], LOWER, &cfg).is_err());
    }

    fn two_algorithms(a: &[f64], b: &[f64]) -> RunMatrix {
        let mut m = RunMatrix::new();
        for (seed, (x, y)) in a.iter().zip(b).enumerate() {
            m.insert(Block::Standard, "a", seed as u64, 1, "ramping", *x);
            m.insert(Block::Standard, "b", seed as u64, 1, "ramping", *y);
        }
        m
    }

    #[test]
    fn ranks_of_dominant_pair() {
        let m = two_algorithms(&[1.0, 1.1, 1.2], &[5.0, 5.1, 5.2]);
        let r = rank_distribution(&m, "ramping", None, Statistic::Iqm, &BootstrapConfig::default()).unwrap();
        assert_eq!(r["a"], vec![1.0, 0.0]);
        assert_eq!(r["b"], vec![0.0, 1.0]);
    }

    #[test]
    fn ranks_of_identical_pair() {
        let vals = [0.2, 0.8, 0.5, 0.9, 0.1, 0.4, 0.6, 0.3, 0.7, 0.55];
        let m = two_algorithms(&vals, &vals);
        let r = rank_distribution(&m, "ramping", None, Statistic::Mean, &BootstrapConfig::default()).unwrap();
        for row in r.values() {
            assert!((row.iter().sum::<f64>() - 1.0).abs() < 1e-12);
            for p in row {
                assert!((p - 0.5).abs() <= 0.1, "{row:?}");
            }
        }
    }

    #[test]
    fn ranks_need_two_algorithms() {
        let mut m = RunMatrix::new();
        m.insert(Block::Standard, "a", 1, 1, "x", 1.0);
        m.insert(Block::Standard, "a", 2, 1, "x", 2.0);
        assert!(rank_distribution(&m, "x", None, Statistic::Mean, &BootstrapConfig::default()).is_err());
    }

    #[test]
    fn stratified_per_algorithm() {
        let m = two_algorithms(&[1.0, 2.0, 3.0], &[4.0, 4.0, 4.0]);
        let cfg = BootstrapConfig { n_resamples: 500, ..Default::default() };
        let out = stratified_bootstrap_ci(&m, "ramping", Some(1), Statistic::Mean, &cfg).unwrap();
        assert_eq!(out["b"].ci_low, 4.0);
        assert!(out["a"].ci_low < 2.0 && out["a"].ci_high > 2.0);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]
        #[test]
        fn improvement_is_complementary(
            x in prop::collection::vec(0u8..20, 1..8),
            y in prop::collection::vec(0u8..20, 1..8),
        ) {
            let x: Vec<f64> = x.into_iter().map(f64::from).collect();
            let y: Vec<f64> = y.into_iter().map(f64::from).collect();
            let cfg = BootstrapConfig { n_resamples: 10, ..Default::default() };
            let ab = probability_of_improvement(&x, &y, LOWER, &cfg).unwrap().point;
            let ba = probability_of_improvement(&y, &x, LOWER, &cfg).unwrap().point;
            prop_assert_eq!(ab + ba, 1.0);
        }
    }
}
