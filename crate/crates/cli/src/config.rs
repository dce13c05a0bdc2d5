//! Campaign configuration, read from TOML.

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use anyhow::{bail, Context, Result};
use districtbench_core::control::{AlgorithmSpec, Schedule};
use districtbench_core::data::{load_dataset, mask_forecast_features, ObservationSchema, SyntheticSpec};
use districtbench_core::episode::EnvSpec;
use districtbench_core::{DatasetBundle, ForecastLead};
use serde::{Deserialize, Serialize};

use crate::sweep::SweepGrid;

/// Seeds used for full-scale benchmarks.
pub const FULL_SEEDS: [u64; 10] = [1, 100, 432, 700, 1500, 1800, 4000, 6200, 7000, 8000];

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Scale {
    #[default]
    Desk,
    Full,
}

/// Where the district data comes from: a dataset directory or a seeded
/// synthetic generator.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum DatasetSource {
    Path { path: PathBuf },
    Synthetic { synthetic: SyntheticSpec },
}

impl Default for DatasetSource {
    fn default() -> Self {
        DatasetSource::Synthetic {
            synthetic: SyntheticSpec {
                seed: 7,
                n_buildings: 2,
                horizon: 24 * 365,
            },
        }
    }
}

impl DatasetSource {
    pub fn load(&self) -> Result<DatasetBundle> {
        match self {
            DatasetSource::Path { path } => {
                load_dataset(path).with_context(|| format!("loading dataset {}", path.display()))
            }
            DatasetSource::Synthetic { synthetic } => Ok(synthetic.generate()?),
        }
    }

    /// Loads the dataset sized to `n` buildings. Synthetic districts are
    /// regenerated; on-disk datasets keep their first `n` buildings.
    pub fn load_with_buildings(&self, n: usize) -> Result<DatasetBundle> {
        match self {
            DatasetSource::Synthetic { synthetic } => Ok(SyntheticSpec {
                n_buildings: n,
                ..*synthetic
            }
            .generate()?),
            DatasetSource::Path { .. } => Ok(self.load()?.with_buildings(n)?),
        }
    }
}

/// An algorithm given either by preset name or as a full spec.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum AlgorithmEntry {
    Preset(String),
    Spec(AlgorithmSpec),
}

impl AlgorithmEntry {
    pub fn resolve(&self, scale: Scale) -> Result<AlgorithmSpec> {
        match self {
            AlgorithmEntry::Preset(name) => Ok(match scale {
                Scale::Desk => AlgorithmSpec::desk(name)?,
                Scale::Full => AlgorithmSpec::full(name)?,
            }),
            AlgorithmEntry::Spec(spec) => Ok(spec.clone()),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ExperimentFlags {
    /// Building count used by `evaluate` when none is given on the command line.
    pub eval_buildings: Option<usize>,
    /// Forecast leads (hours) removed from the observation schema.
    pub mask_forecasts: Vec<u32>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SweepConfig {
    pub seeds: Vec<u64>,
    /// Number of grid points trained per algorithm, drawn without
    /// replacement from the full grid.
    pub configurations: usize,
    pub schedule: Option<Schedule>,
    pub grid: SweepGrid,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            seeds: vec![1, 100, 432],
            configurations: 21,
            schedule: None,
            grid: SweepGrid::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CampaignConfig {
    pub output_dir: PathBuf,
    pub scale: Scale,
    pub dataset: DatasetSource,
    pub algorithms: Vec<AlgorithmEntry>,
    pub seeds: Vec<u64>,
    /// Overrides the scale's default schedule.
    pub schedule: Option<Schedule>,
    pub stats_seed: u64,
    /// Parallel campaign cells; 0 uses every core.
    pub workers: usize,
    pub sweep: SweepConfig,
    pub experiment: ExperimentFlags,
}

impl Default for CampaignConfig {
    fn default() -> Self {
        Self {
            output_dir: PathBuf::from("campaign"),
            scale: Scale::Desk,
            dataset: DatasetSource::default(),
            algorithms: ["ippo", "isac", "rbc"]
                .into_iter()
                .map(|s| AlgorithmEntry::Preset(s.into()))
                .collect(),
            seeds: FULL_SEEDS[..5].to_vec(),
            schedule: None,
            stats_seed: 0,
            workers: 0,
            sweep: SweepConfig::default(),
            experiment: ExperimentFlags::default(),
        }
    }
}

impl CampaignConfig {
    pub fn from_path(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        Self::from_toml(&text).with_context(|| format!("parsing {}", path.display()))
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Full-scale defaults: ten seeds and the long schedule.
    pub fn full() -> Self {
        Self {
            scale: Scale::Full,
            seeds: FULL_SEEDS.to_vec(),
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        check_distinct("seeds", &self.seeds)?;
        check_distinct("sweep seeds", &self.sweep.seeds)?;
        if self.algorithms.is_empty() {
            bail!("no algorithms configured");
        }
        let mut names = BTreeSet::new();
        for entry in &self.algorithms {
            let spec = entry.resolve(self.scale)?;
            if !names.insert(spec.name.clone()) {
                bail!("algorithm name {} appears twice", spec.name);
            }
        }
        self.mask_leads()?;
        Ok(())
    }

    pub fn algorithm_specs(&self) -> Result<Vec<AlgorithmSpec>> {
        self.algorithms.iter().map(|a| a.resolve(self.scale)).collect()
    }

    pub fn schedule(&self) -> Schedule {
        self.schedule.clone().unwrap_or_else(|| match self.scale {
            Scale::Desk => Schedule::desk(),
            Scale::Full => Schedule::full(),
        })
    }

    pub fn sweep_schedule(&self) -> Schedule {
        self.sweep.schedule.clone().unwrap_or_else(|| self.schedule())
    }

    pub fn mask_leads(&self) -> Result<Vec<ForecastLead>> {
        parse_leads(&self.experiment.mask_forecasts)
    }

    pub fn schema(&self) -> Result<ObservationSchema> {
        Ok(mask_forecast_features(&ObservationSchema::full(), &self.mask_leads()?))
    }

    pub fn env(&self) -> Result<EnvSpec> {
        Ok(EnvSpec::new(Arc::new(self.dataset.load()?)).with_schema(self.schema()?))
    }
}

pub fn parse_leads(hours: &[u32]) -> Result<Vec<ForecastLead>> {
    let leads: Vec<ForecastLead> = hours
        .iter()
        .map(|h| ForecastLead::from_hours(*h))
        .collect::<std::result::Result<_, _>>()?;
    Ok(leads)
}

fn check_distinct(what: &str, seeds: &[u64]) -> Result<()> {
    let set: BTreeSet<u64> = seeds.iter().copied().collect();
    if set.len() != seeds.len() {
        bail!("{what} must be distinct: {seeds:?}");
    }
    Ok(())
}
