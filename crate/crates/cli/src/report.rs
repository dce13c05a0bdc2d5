//! Plot-data emission from run records: one CSV per figure family.

use std::collections::BTreeSet;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use districtbench_core::kpi::{minmax_normalize_matrix, KpiReport, NormalizedKpis};
use districtbench_core::stats::{
    absolute_metric, best_per_run, bootstrap_ci, probability_of_improvement, rank_distribution, BootstrapConfig,
    MetricDirection, RunMatrix, Statistic, DEFAULT_CVAR_ALPHA,
};
use log::warn;
use serde::{Deserialize, Serialize};

use crate::records::{collect_records, to_matrix, RunRecord};

pub const SCORE: &str = "average_score";

pub const SAMPLE_EFFICIENCY: &str = "sample_efficiency.csv";
pub const AGGREGATE: &str = "aggregate_intervals.csv";
pub const ABSOLUTE: &str = "absolute_metrics.csv";
pub const IMPROVEMENT: &str = "probability_of_improvement.csv";
pub const RANKS: &str = "rank_stacks.csv";
pub const TRADEOFF: &str = "tradeoff_matrix.csv";
pub const BEST_PER_KPI: &str = "best_per_kpi.csv";
pub const SUMMARY: &str = "report.json";

/// All data files a report writes, in order.
pub const REPORT_FILES: [&str; 8] = [SAMPLE_EFFICIENCY, AGGREGATE, ABSOLUTE, IMPROVEMENT, RANKS, TRADEOFF, BEST_PER_KPI, SUMMARY];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportSummary {
    pub algorithms: Vec<String>,
    pub schema_hash: String,
    pub records: usize,
    pub files: Vec<PathBuf>,
    pub notices: Vec<String>,
}

/// Normalized KPIs plus the headline score.
fn headline_metrics() -> Vec<String> {
    std::iter::once(SCORE.to_string())
        .chain(NormalizedKpis::KEYS.iter().map(|k| k.to_string()))
        .collect()
}

/// Every KPI-like metric a best-per-KPI table covers.
pub fn kpi_metrics() -> Vec<String> {
    NormalizedKpis::KEYS
        .iter()
        .map(|k| k.to_string())
        .chain(KpiReport::KEYS.iter().map(|k| format!("raw.{k}")))
        .chain(["avg_dod".to_string(), "avg_discharge_duration".to_string()])
        .collect()
}

fn direction_name(d: MetricDirection) -> &'static str {
    match d {
        MetricDirection::LowerIsBetter => "lower",
        MetricDirection::HigherIsBetter => "higher",
    }
}

fn require_metrics(matrix: &RunMatrix, metrics: &[String]) -> Result<()> {
    let present: BTreeSet<String> = matrix.metrics().into_iter().collect();
    for m in metrics {
        if !present.contains(m) {
            bail!("records lack metric {m}");
        }
    }
    Ok(())
}

fn schema_hash(records: &[RunRecord]) -> Result<String> {
    let hashes: BTreeSet<&str> = records.iter().map(|r| r.schema_hash.as_str()).collect();
    match hashes.len() {
        0 => bail!("no run records found"),
        1 => Ok(hashes.into_iter().next().unwrap().to_string()),
        _ => bail!("records mix observation schemas {hashes:?}; report them separately"),
    }
}

fn writer(dir: &Path, name: &str, files: &mut Vec<PathBuf>) -> Result<csv::Writer<fs::File>> {
    let path = dir.join(name);
    files.push(path.clone());
    csv::Writer::from_path(&path).with_context(|| format!("creating {}", path.display()))
}

/// IQM of the score at every eval point, with intervals.
pub fn write_sample_efficiency(m: &RunMatrix, dir: &Path, cfg: &BootstrapConfig, files: &mut Vec<PathBuf>) -> Result<()> {
    let mut w = writer(dir, SAMPLE_EFFICIENCY, files)?;
    w.write_record(["algorithm", "eval_point", "metric", "estimator", "point", "ci_low", "ci_high"])?;
    let dir_ = m.direction(SCORE);
    for alg in m.algorithms() {
        for ep in m.eval_points(&alg) {
            let s = bootstrap_ci(&m.samples(&alg, ep, SCORE)?, Statistic::Iqm, dir_, cfg)
                .with_context(|| format!("{alg} at {ep}"))?;
            w.serialize((&alg, ep, SCORE, &s.estimator, s.point, s.ci_low, s.ci_high))?;
        }
    }
    w.flush()?;
    Ok(())
}

/// IQM and CVaR of each headline metric at the final eval point.
pub fn write_aggregates(m: &RunMatrix, dir: &Path, cfg: &BootstrapConfig, files: &mut Vec<PathBuf>) -> Result<()> {
    let mut w = writer(dir, AGGREGATE, files)?;
    w.write_record(["algorithm", "metric", "estimator", "point", "ci_low", "ci_high"])?;
    for alg in m.algorithms() {
        for metric in headline_metrics() {
            let samples = m.final_samples(&alg, &metric)?;
            for stat in [
                Statistic::Iqm,
                Statistic::Cvar {
                    alpha: DEFAULT_CVAR_ALPHA,
                },
            ] {
                let s = bootstrap_ci(&samples, stat, m.direction(&metric), cfg)
                    .with_context(|| format!("{alg} / {metric}"))?;
                w.serialize((&alg, &metric, &s.estimator, s.point, s.ci_low, s.ci_high))?;
            }
        }
    }
    w.flush()?;
    Ok(())
}

pub fn write_absolute(m: &RunMatrix, dir: &Path, files: &mut Vec<PathBuf>) -> Result<()> {
    let mut w = writer(dir, ABSOLUTE, files)?;
    w.write_record(["algorithm", "metric", "mean_over_seeds"])?;
    for metric in headline_metrics() {
        for (alg, v) in absolute_metric(m, &metric)? {
            w.serialize((alg, &metric, v))?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Pairwise probability of improvement on the final score. Writes only the
/// header and returns a notice when there is a single algorithm.
pub fn write_improvement(m: &RunMatrix, dir: &Path, cfg: &BootstrapConfig, files: &mut Vec<PathBuf>) -> Result<Option<String>> {
    let mut w = writer(dir, IMPROVEMENT, files)?;
    w.write_record(["algorithm_x", "algorithm_y", "metric", "point", "ci_low", "ci_high"])?;
    let algs = m.algorithms();
    let notice = (algs.len() < 2).then(|| "probability of improvement: fewer than two algorithms, no pairs".to_string());
    for x in &algs {
        for y in &algs {
            if x == y {
                continue;
            }
            let s = probability_of_improvement(
                &m.final_samples(x, SCORE)?,
                &m.final_samples(y, SCORE)?,
                m.direction(SCORE),
                cfg,
            )?;
            w.serialize((x, y, SCORE, s.point, s.ci_low, s.ci_high))?;
        }
    }
    w.flush()?;
    Ok(notice)
}

/// Rank probabilities per headline metric; columns `rank_1` (best) onward.
pub fn write_ranks(m: &RunMatrix, dir: &Path, cfg: &BootstrapConfig, files: &mut Vec<PathBuf>) -> Result<Option<String>> {
    let mut w = writer(dir, RANKS, files)?;
    let algs = m.algorithms();
    let mut header = vec!["metric".to_string(), "algorithm".to_string()];
    header.extend((1..=algs.len()).map(|r| format!("rank_{r}")));
    w.write_record(&header)?;
    if algs.len() < 2 {
        w.flush()?;
        return Ok(Some("rank stacks: fewer than two algorithms".into()));
    }
    for metric in headline_metrics() {
        for (alg, row) in rank_distribution(m, &metric, None, Statistic::Iqm, cfg)? {
            let mut rec = vec![metric.clone(), alg];
            rec.extend(row.iter().map(|p| p.to_string()));
            w.write_record(&rec)?;
        }
    }
    w.flush()?;
    Ok(None)
}

/// Min-max normalized matrix of algorithms x normalized KPIs, built from the
/// mean final value over seeds. Constant columns are reported at 0.5.
pub fn write_tradeoff(m: &RunMatrix, dir: &Path, files: &mut Vec<PathBuf>) -> Result<()> {
    let algs = m.algorithms();
    let mut rows = Vec::with_capacity(algs.len());
    for alg in &algs {
        let mut row = Vec::with_capacity(NormalizedKpis::KEYS.len());
        for k in NormalizedKpis::KEYS {
            let s = m.final_samples(alg, k)?;
            row.push(s.iter().sum::<f64>() / s.len() as f64);
        }
        rows.push(row);
    }
    let mm = minmax_normalize_matrix(&rows)?;
    let mut w = writer(dir, TRADEOFF, files)?;
    let mut header = vec!["algorithm".to_string()];
    header.extend(NormalizedKpis::KEYS.iter().map(|k| k.to_string()));
    w.write_record(&header)?;
    for (alg, row) in algs.iter().zip(&mm.values) {
        let mut rec = vec![alg.clone()];
        rec.extend(row.iter().map(|v| v.to_string()));
        w.write_record(&rec)?;
    }
    let mut flags = vec!["constant_column".to_string()];
    flags.extend(mm.constant_columns.iter().map(|c| c.to_string()));
    w.write_record(&flags)?;
    w.flush()?;
    Ok(())
}

/// One row per (algorithm, metric, seed) with the best value that run
/// reached across eval points, chosen by the metric's direction.
pub fn best_per_kpi_rows(m: &RunMatrix, metrics: &[String]) -> Result<Vec<(String, String, &'static str, u64, f64)>> {
    let mut out = Vec::new();
    for alg in m.algorithms() {
        for metric in metrics {
            let dir = direction_name(m.direction(metric));
            for (seed, v) in best_per_run(m, &alg, metric)? {
                out.push((alg.clone(), metric.clone(), dir, seed, v));
            }
        }
    }
    Ok(out)
}

pub fn write_best_per_kpi(m: &RunMatrix, metrics: &[String], dir: &Path, files: &mut Vec<PathBuf>) -> Result<()> {
    let mut w = writer(dir, BEST_PER_KPI, files)?;
    w.write_record(["algorithm", "metric", "direction", "seed", "best_value"])?;
    for row in best_per_kpi_rows(m, metrics)? {
        w.serialize(row)?;
    }
    w.flush()?;
    Ok(())
}

/// Reads every records file below `records_root` and writes the report into
/// `out_dir`.
pub fn cmd_report(records_root: &Path, out_dir: &Path, stats_seed: u64) -> Result<ReportSummary> {
    let records = collect_records(records_root)?;
    let schema_hash = schema_hash(&records)?;
    let m = to_matrix(&records);
    m.validate()?;
    let present: BTreeSet<String> = m.metrics().into_iter().collect();
    let headline = headline_metrics();
    require_metrics(&m, &headline)?;
    let kpis: Vec<String> = kpi_metrics().into_iter().filter(|k| present.contains(k)).collect();

    fs::create_dir_all(out_dir).with_context(|| format!("creating {}", out_dir.display()))?;
    let cfg = BootstrapConfig {
        seed: stats_seed,
        ..BootstrapConfig::default()
    };
    let mut files = Vec::new();
    let mut notices = Vec::new();
    write_sample_efficiency(&m, out_dir, &cfg, &mut files)?;
    write_aggregates(&m, out_dir, &cfg, &mut files)?;
    write_absolute(&m, out_dir, &mut files)?;
    notices.extend(write_improvement(&m, out_dir, &cfg, &mut files)?);
    notices.extend(write_ranks(&m, out_dir, &cfg, &mut files)?);
    write_tradeoff(&m, out_dir, &mut files)?;
    write_best_per_kpi(&m, &kpis, out_dir, &mut files)?;
    for n in &notices {
        warn!("{n}");
    }
    let summary_path = out_dir.join(SUMMARY);
    files.push(summary_path.clone());
    let summary = ReportSummary {
        algorithms: m.algorithms(),
        schema_hash,
        records: records.len(),
        files,
        notices,
    };
    fs::write(&summary_path, serde_json::to_string_pretty(&summary)?)?;
    Ok(summary)
}
