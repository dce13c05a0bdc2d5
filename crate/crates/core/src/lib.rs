//! Benchmark harness for multi-agent control of a simulated multi-building
//! energy district.
//!
//! The crate is organized bottom-up:
//!
//! - [`data`]: dataset bundles, on-disk layout, synthetic generation and
//!   observation schemas.
//! - [`sim`]: the district simulator and its shared reward.
//! - [`kpi`]: episode KPIs, baseline normalization and the average score.
//! - [`battery`]: rainflow cycle counting and depth-of-discharge metrics.
//! - [`importance`]: per-agent contribution via no-op counterfactuals.
//! - [`stats`]: IQM, CVaR, stratified bootstrap, probability of improvement
//!   and rank distributions.
//! - [`control`]: baseline controllers, networks with analytic gradients and
//!   the IPPO / MAPPO / ISAC learners.

pub mod battery;
pub mod control;
pub mod data;
pub mod episode;
pub mod error;
pub mod importance;
pub mod kpi;
pub mod sim;
pub mod stats;

pub use data::{DatasetBundle, ForecastLead, ObservationSchema};
pub use error::{Error, Result};
pub use sim::{ActionTriple, BuildingParams, District, EpisodeWindow, RewardWeights, SimConfig};
