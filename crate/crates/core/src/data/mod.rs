//! Dataset layer: the aligned hourly time series that drive the district
//! simulator, their on-disk layout, and a seeded synthetic generator.
//!
//! A dataset directory contains `schema.txt` (building count and device
//! parameters), `weather.csv`, `pricing.csv`, `carbon_intensity.csv` and one
//! `building_<i>.csv` per building.

mod features;
mod io;
mod synth;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sim::BuildingParams;

pub use features::{mask_forecast_features, Feature, ForecastLead, ObservationSchema};
pub use io::{load_dataset, write_dataset, SchemaDescriptor};
pub use synth::{generate_synthetic_dataset, SyntheticSpec};

/// Physical unit attached to a column.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Unit {
    Celsius,
    WattsPerSquareMetre,
    KgCo2PerKwh,
    DollarsPerKwh,
    Kwh,
    Kw,
    Count,
    Flag,
}

/// A named, unit-tagged hourly series.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimeSeriesColumn {
    pub name: String,
    pub unit: Unit,
    pub values: Vec<f64>,
}

impl TimeSeriesColumn {
    pub fn new(name: impl Into<String>, unit: Unit, values: Vec<f64>) -> Self {
        Self {
            name: name.into(),
            unit,
            values,
        }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Value at `t`, shifted forward by `lead` hours with the tail held at the
    /// last entry.
    pub fn shifted(&self, t: usize, lead: usize) -> f64 {
        let last = self.values.len() - 1;
        self.values[(t + lead).min(last)]
    }

    /// Materializes the forecast variant at `lead` hours.
    pub fn forecast_column(&self, lead: usize) -> Vec<f64> {
        (0..self.values.len()).map(|t| self.shifted(t, lead)).collect()
    }

    fn validate(&self, file: &str, horizon: usize) -> Result<()> {
        if self.values.len() != horizon {
            return Err(Error::LengthMismatch {
                file: file.to_string(),
                column: self.name.clone(),
                expected: horizon,
                found: self.values.len(),
            });
        }
        for (row, v) in self.values.iter().enumerate() {
            let bad = if !v.is_finite() {
                Some("non-finite value")
            } else if self.unit == Unit::Flag && *v != 0.0 && *v != 1.0 {
                Some("flag column must contain only 0 or 1")
            } else if self.must_be_nonnegative() && *v < 0.0 {
                Some("negative value")
            } else {
                None
            };
            if let Some(message) = bad {
                return Err(Error::InvalidCell {
                    file: file.to_string(),
                    row,
                    column: self.name.clone(),
                    message: message.to_string(),
                });
            }
        }
        Ok(())
    }

    fn must_be_nonnegative(&self) -> bool {
        !matches!(self.unit, Unit::Celsius)
    }
}

/// Weather and calendar series shared by every building.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeatherSeries {
    /// Hour of day, 1..=24.
    pub hour: TimeSeriesColumn,
    /// Day type, 1..=7 (Monday = 1).
    pub day_type: TimeSeriesColumn,
    pub outdoor_temp: TimeSeriesColumn,
    pub diffuse_irradiance: TimeSeriesColumn,
    pub direct_irradiance: TimeSeriesColumn,
}

/// Per-building demand, generation and occupancy series.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BuildingSeries {
    pub non_shiftable_load: TimeSeriesColumn,
    pub solar_generation: TimeSeriesColumn,
    pub cooling_demand: TimeSeriesColumn,
    pub dhw_demand: TimeSeriesColumn,
    pub occupant_count: TimeSeriesColumn,
    pub setpoint: TimeSeriesColumn,
    pub power_outage: TimeSeriesColumn,
}

impl BuildingSeries {
    pub(crate) fn columns(&self) -> [&TimeSeriesColumn; 7] {
        [
            &self.non_shiftable_load,
            &self.solar_generation,
            &self.cooling_demand,
            &self.dhw_demand,
            &self.occupant_count,
            &self.setpoint,
            &self.power_outage,
        ]
    }

    pub fn is_outage(&self, t: usize) -> bool {
        self.power_outage.values[t] > 0.5
    }
}

/// Validated, immutable collection of every series the simulator reads.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetBundle {
    horizon: usize,
    pub weather: WeatherSeries,
    pub pricing: TimeSeriesColumn,
    pub carbon_intensity: TimeSeriesColumn,
    pub buildings: Vec<BuildingSeries>,
    pub params: Vec<BuildingParams>,
}

impl DatasetBundle {
    /// Assembles a bundle and checks every invariant.
    pub fn new(
        weather: WeatherSeries,
        pricing: TimeSeriesColumn,
        carbon_intensity: TimeSeriesColumn,
        buildings: Vec<BuildingSeries>,
        params: Vec<BuildingParams>,
    ) -> Result<Self> {
        let bundle = Self {
            horizon: weather.outdoor_temp.len(),
            weather,
            pricing,
            carbon_intensity,
            buildings,
            params,
        };
        bundle.validate()?;
        Ok(bundle)
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    pub fn n_buildings(&self) -> usize {
        self.buildings.len()
    }

    /// Keeps the first `n` buildings. Used to build smaller districts from a
    /// larger dataset.
    pub fn with_buildings(&self, n: usize) -> Result<Self> {
        if n == 0 || n > self.n_buildings() {
            return Err(Error::InvalidArgument(format!(
                "cannot take {n} buildings from a bundle of {}",
                self.n_buildings()
            )));
        }
        let mut out = self.clone();
        out.buildings.truncate(n);
        out.params.truncate(n);
        Ok(out)
    }

    fn validate(&self) -> Result<()> {
        let t = self.horizon;
        if t == 0 {
            return Err(Error::InvalidDataset("zero-length horizon".into()));
        }
        if self.buildings.is_empty() {
            return Err(Error::InvalidDataset("no buildings".into()));
        }
        if self.params.len() != self.buildings.len() {
            return Err(Error::BuildingCountMismatch {
                expected: self.buildings.len(),
                found: self.params.len(),
            });
        }
        let w = &self.weather;
        for col in [
            &w.hour,
            &w.day_type,
            &w.outdoor_temp,
            &w.diffuse_irradiance,
            &w.direct_irradiance,
        ] {
            col.validate("weather.csv", t)?;
        }
        for (row, h) in w.hour.values.iter().enumerate() {
            if !(1.0..=24.0).contains(h) || h.fract() != 0.0 {
                return Err(Error::InvalidCell {
                    file: "weather.csv".into(),
                    row,
                    column: w.hour.name.clone(),
                    message: format!("hour {h} outside 1..=24"),
                });
            }
        }
        self.pricing.validate("pricing.csv", t)?;
        self.carbon_intensity.validate("carbon_intensity.csv", t)?;
        for (i, b) in self.buildings.iter().enumerate() {
            let file = format!("building_{}.csv", i + 1);
            for col in b.columns() {
                col.validate(&file, t)?;
            }
        }
        for p in &self.params {
            p.validate()?;
        }
        Ok(())
    }
}
