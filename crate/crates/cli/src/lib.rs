//! Campaign orchestration for districtbench: configuration, hyperparameter
//! sweeps, benchmark runs, stand-alone evaluation and report emission.

pub mod benchmark;
pub mod config;
pub mod evaluate;
pub mod records;
pub mod report;
pub mod sweep;

pub use benchmark::{cmd_benchmark, CampaignManifest};
pub use config::{CampaignConfig, DatasetSource, Scale};
pub use evaluate::{cmd_evaluate, EvaluateOptions, EvaluationReport, Subject};
pub use records::{RunManifest, RunRecord};
pub use report::{cmd_report, ReportSummary};
pub use sweep::{cmd_sweep, Selection};

/// Thread pool for campaign cells; `workers == 0` uses every core.
pub fn pool(workers: usize) -> anyhow::Result<rayon::ThreadPool> {
    Ok(rayon::ThreadPoolBuilder::new().num_threads(workers).build()?)
}
