use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};
use districtbench_cli::config::{CampaignConfig, DatasetSource, Scale};
use districtbench_cli::evaluate::{cmd_evaluate, EvaluateOptions, Subject};
use districtbench_cli::{cmd_benchmark, cmd_report, cmd_sweep};
use districtbench_core::data::{write_dataset, SyntheticSpec};
use log::info;

#[derive(Parser)]
#[command(name = "districtbench", version, about = "Multi-agent district energy control benchmark")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct CampaignArgs {
    /// Campaign TOML file; built-in defaults when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory (overrides the config).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Comma-separated seeds (overrides the config).
    #[arg(long, value_delimiter = ',')]
    seeds: Option<Vec<u64>>,
    /// Desk-scale schedule and presets.
    #[arg(long, conflicts_with = "full_scale")]
    desk_scale: bool,
    /// Full-scale schedule, presets and ten seeds.
    #[arg(long = "paper-scale", alias = "full-scale")]
    full_scale: bool,
    #[arg(long)]
    stats_seed: Option<u64>,
    /// Parallel campaign cells (0 = all cores).
    #[arg(long)]
    workers: Option<usize>,
}

impl CampaignArgs {
    fn load(&self) -> Result<CampaignConfig> {
        let mut cfg = match &self.config {
            Some(p) => CampaignConfig::from_path(p)?,
            None if self.full_scale => CampaignConfig::full(),
            None => CampaignConfig::default(),
        };
        if self.full_scale {
            cfg.scale = Scale::Full;
        } else if self.desk_scale {
            cfg.scale = Scale::Desk;
        }
        if let Some(out) = &self.out {
            cfg.output_dir = out.clone();
        }
        if let Some(seeds) = &self.seeds {
            cfg.seeds = seeds.clone();
        }
        if let Some(s) = self.stats_seed {
            cfg.stats_seed = s;
        }
        if let Some(w) = self.workers {
            cfg.workers = w;
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

#[derive(Args)]
struct EvalArgs {
    /// Checkpoint to evaluate.
    #[arg(long, conflicts_with = "baseline", required_unless_present = "baseline")]
    checkpoint: Option<PathBuf>,
    /// Baseline preset to evaluate instead (`rbc`, `random`, `no_control`).
    #[arg(long)]
    baseline: Option<String>,
    /// Campaign TOML supplying the dataset; the default synthetic district otherwise.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Dataset directory (overrides the config).
    #[arg(long)]
    dataset: Option<PathBuf>,
    #[arg(long)]
    out: PathBuf,
    /// District size to evaluate on.
    #[arg(long)]
    agents: Option<usize>,
    /// Forecast leads to remove, e.g. 6,12,24.
    #[arg(long, value_delimiter = ',')]
    mask_forecasts: Option<Vec<u32>>,
    #[arg(long, default_value_t = 8)]
    episodes: usize,
    #[arg(long, default_value_t = 168)]
    episode_len: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

impl EvalArgs {
    fn options(&self, importance_horizon: Option<usize>) -> Result<EvaluateOptions> {
        let cfg = match &self.config {
            Some(p) => CampaignConfig::from_path(p)?,
            None => CampaignConfig::default(),
        };
        let dataset = match &self.dataset {
            Some(p) => DatasetSource::Path { path: p.clone() },
            None => cfg.dataset.clone(),
        };
        let subject = match (&self.checkpoint, &self.baseline) {
            (Some(p), _) => Subject::Checkpoint(p.clone()),
            (None, Some(b)) => Subject::Baseline(b.clone()),
            (None, None) => unreachable!("clap requires one of them"),
        };
        let mut opts = EvaluateOptions::new(subject, dataset, self.out.clone());
        opts.agents = self.agents.or(cfg.experiment.eval_buildings);
        opts.mask_forecasts = self
            .mask_forecasts
            .clone()
            .unwrap_or_else(|| cfg.experiment.mask_forecasts.clone());
        opts.episodes = self.episodes;
        opts.episode_len = self.episode_len;
        opts.seed = self.seed;
        opts.importance_horizon = importance_horizon;
        Ok(opts)
    }
}

#[derive(Subcommand)]
enum Command {
    /// Train grid points over the sweep seeds and select one configuration per algorithm.
    Sweep(CampaignArgs),
    /// Train every algorithm x seed, log records and re-evaluate best checkpoints.
    Benchmark {
        #[command(flatten)]
        campaign: CampaignArgs,
        /// Use sweep selections from this directory where present.
        #[arg(long)]
        from_sweep: Option<PathBuf>,
    },
    /// Evaluate a checkpoint or baseline, optionally on another district size
    /// or with forecasts masked.
    Evaluate {
        #[command(flatten)]
        eval: EvalArgs,
        /// Also compute agent importance over this many hours.
        #[arg(long)]
        importance_horizon: Option<usize>,
    },
    /// Agent-importance scores of a checkpoint or baseline.
    Importance {
        #[command(flatten)]
        eval: EvalArgs,
        #[arg(long, default_value_t = 168)]
        horizon: usize,
    },
    /// Emit plot data from the records below a directory.
    Report {
        /// Campaign output directory holding run records.
        #[arg(long)]
        records: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 0)]
        stats_seed: u64,
    },
    /// Write a seeded synthetic dataset to disk.
    SynthData {
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 7)]
        seed: u64,
        #[arg(long, default_value_t = 2)]
        buildings: usize,
        #[arg(long, default_value_t = 8760)]
        hours: usize,
    },
}

fn print_json<T: serde::Serialize>(value: &T) -> Result<()> {
    println!("{}", serde_json::to_string_pretty(value)?);
    Ok(())
}

fn run(cli: Cli) -> Result<bool> {
    match cli.command {
        Command::Sweep(args) => {
            let cfg = args.load()?;
            let sel = cmd_sweep(&cfg)?;
            for s in &sel {
                println!("{}\t{}\t{:.6}", s.algorithm, s.config_hash, s.mean_score);
            }
            Ok(true)
        }
        Command::Benchmark { campaign, from_sweep } => {
            let cfg = campaign.load()?;
            let manifest = cmd_benchmark(&cfg, from_sweep.as_deref())?;
            for c in &manifest.cells {
                println!("{}\t{}\t{:?}", c.algorithm, c.seed, c.status);
            }
            Ok(manifest.all_completed())
        }
        Command::Evaluate {
            eval,
            importance_horizon,
        } => {
            let report = cmd_evaluate(&eval.options(importance_horizon)?)?;
            print_json(&report.summary)?;
            Ok(true)
        }
        Command::Importance { eval, horizon } => {
            let report = cmd_evaluate(&eval.options(Some(horizon))?)?;
            print_json(&report.importance.map(|i| i.scores))?;
            Ok(true)
        }
        Command::Report {
            records,
            out,
            stats_seed,
        } => {
            let summary = cmd_report(&records, &out, stats_seed)?;
            for n in &summary.notices {
                println!("notice: {n}");
            }
            for f in &summary.files {
                println!("{}", f.display());
            }
            Ok(true)
        }
        Command::SynthData {
            out,
            seed,
            buildings,
            hours,
        } => {
            let bundle = SyntheticSpec {
                seed,
                n_buildings: buildings,
                horizon: hours,
            }
            .generate()?;
            write_dataset(&bundle, &out).with_context(|| format!("writing {}", Path::new(&out).display()))?;
            info!("wrote {buildings} buildings x {hours} h to {}", out.display());
            Ok(true)
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
