use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

/// Forecast horizon of a predicted feature.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum ForecastLead {
    H6,
    H12,
    H24,
}

impl ForecastLead {
    pub const ALL: [ForecastLead; 3] = [ForecastLead::H6, ForecastLead::H12, ForecastLead::H24];

    pub fn hours(self) -> usize {
        match self {
            ForecastLead::H6 => 6,
            ForecastLead::H12 => 12,
            ForecastLead::H24 => 24,
        }
    }

    pub fn from_hours(h: u32) -> Result<Self> {
        match h {
            6 => Ok(ForecastLead::H6),
            12 => Ok(ForecastLead::H12),
            24 => Ok(ForecastLead::H24),
            other => Err(Error::InvalidArgument(format!(
                "forecast lead {other}h not in {{6, 12, 24}}"
            ))),
        }
    }
}

/// One entry of an agent observation vector.
///
/// Features carrying an `Option<ForecastLead>` are the current value when the
/// lead is `None` and the perfect-foresight prediction otherwise.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Feature {
    DayType,
    Hour,
    OutdoorDryBulbTemperature(Option<ForecastLead>),
    DiffuseSolarIrradiance(Option<ForecastLead>),
    DirectSolarIrradiance(Option<ForecastLead>),
    CarbonIntensity,
    IndoorDryBulbTemperature,
    NonShiftableLoad,
    SolarGeneration,
    DhwStorageSoc,
    ElectricalStorageSoc,
    NetElectricityConsumption,
    ElectricityPricing(Option<ForecastLead>),
    CoolingDemand,
    DhwDemand,
    OccupantCount,
    IndoorDryBulbTemperatureSetPoint,
    PowerOutage,
}

fn with_lead(base: &str, lead: Option<ForecastLead>) -> String {
    match lead {
        None => base.to_string(),
        Some(l) => format!("{base}_predicted_{}h", l.hours()),
    }
}

impl Feature {
    pub fn name(&self) -> String {
        use Feature::*;
        match *self {
            DayType => "day_type".into(),
            Hour => "hour".into(),
            OutdoorDryBulbTemperature(l) => with_lead("outdoor_dry_bulb_temperature", l),
            DiffuseSolarIrradiance(l) => with_lead("diffuse_solar_irradiance", l),
            DirectSolarIrradiance(l) => with_lead("direct_solar_irradiance", l),
            CarbonIntensity => "carbon_intensity".into(),
            IndoorDryBulbTemperature => "indoor_dry_bulb_temperature".into(),
            NonShiftableLoad => "non_shiftable_load".into(),
            SolarGeneration => "solar_generation".into(),
            DhwStorageSoc => "dhw_storage_soc".into(),
            ElectricalStorageSoc => "electrical_storage_soc".into(),
            NetElectricityConsumption => "net_electricity_consumption".into(),
            ElectricityPricing(l) => with_lead("electricity_pricing", l),
            CoolingDemand => "cooling_demand".into(),
            DhwDemand => "dhw_demand".into(),
            OccupantCount => "occupant_count".into(),
            IndoorDryBulbTemperatureSetPoint => "indoor_dry_bulb_temperature_set_point".into(),
            PowerOutage => "power_outage".into(),
        }
    }

    /// True for the temperature and pricing predictions removed by
    /// [`mask_forecast_features`].
    fn masked_by(&self, leads: &[ForecastLead]) -> bool {
        match *self {
            Feature::OutdoorDryBulbTemperature(Some(l)) | Feature::ElectricityPricing(Some(l)) => {
                leads.contains(&l)
            }
            _ => false,
        }
    }
}

impl fmt::Display for Feature {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.name())
    }
}

impl FromStr for Feature {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        ObservationSchema::full()
            .features()
            .iter()
            .copied()
            .find(|f| f.name() == s)
            .ok_or_else(|| Error::UnknownFeature(s.to_string()))
    }
}

/// Ordered list of features making up each agent's observation.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ObservationSchema {
    features: Vec<Feature>,
}

impl ObservationSchema {
    /// The complete 30-feature observation.
    pub fn full() -> Self {
        use Feature::*;
        let mut features = vec![DayType, Hour];
        for ctor in [
            OutdoorDryBulbTemperature as fn(Option<ForecastLead>) -> Feature,
            DiffuseSolarIrradiance,
            DirectSolarIrradiance,
        ] {
            features.push(ctor(None));
            features.extend(ForecastLead::ALL.iter().map(|l| ctor(Some(*l))));
        }
        features.extend([
            CarbonIntensity,
            IndoorDryBulbTemperature,
            NonShiftableLoad,
            SolarGeneration,
            DhwStorageSoc,
            ElectricalStorageSoc,
            NetElectricityConsumption,
            ElectricityPricing(None),
        ]);
        features.extend(ForecastLead::ALL.iter().map(|l| ElectricityPricing(Some(*l))));
        features.extend([
            CoolingDemand,
            DhwDemand,
            OccupantCount,
            IndoorDryBulbTemperatureSetPoint,
            PowerOutage,
        ]);
        Self { features }
    }

    /// Builds a schema from feature names, rejecting unknown names.
    pub fn from_names<S: AsRef<str>>(names: &[S]) -> Result<Self> {
        let features = names
            .iter()
            .map(|n| n.as_ref().parse())
            .collect::<Result<Vec<Feature>>>()?;
        Ok(Self { features })
    }

    pub fn features(&self) -> &[Feature] {
        &self.features
    }

    pub fn len(&self) -> usize {
        self.features.len()
    }

    pub fn is_empty(&self) -> bool {
        self.features.is_empty()
    }

    pub fn index_of(&self, feature: Feature) -> Option<usize> {
        self.features.iter().position(|f| *f == feature)
    }

    pub fn names(&self) -> Vec<String> {
        self.features.iter().map(Feature::name).collect()
    }

    /// Stable short hash of the ordered feature names; embedded in checkpoints
    /// and run records.
    pub fn hash(&self) -> String {
        let mut h = Sha256::new();
        for name in self.names() {
            h.update(name.as_bytes());
            h.update(b"\n");
        }
        hex::encode(&h.finalize()[..8])
    }
}

impl Default for ObservationSchema {
    fn default() -> Self {
        Self::full()
    }
}

/// Removes outdoor-temperature and electricity-pricing predictions at the
/// given leads. Current-value features are never touched.
pub fn mask_forecast_features(schema: &ObservationSchema, leads: &[ForecastLead]) -> ObservationSchema {
    ObservationSchema {
        features: schema
            .features
            .iter()
            .copied()
            .filter(|f| !f.masked_by(leads))
            .collect(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn full_schema_has_thirty_unique_features() {
        let s = ObservationSchema::full();
        assert_eq!(s.len(), 30);
        let mut names = s.names();
        names.sort();
        names.dedup();
        assert_eq!(names.len(), 30);
    }

    #[test]
    fn masking_all_leads_drops_six() {
        let full = ObservationSchema::full();
        let masked = mask_forecast_features(&full, &ForecastLead::ALL);
        assert_eq!(masked.len(), full.len() - 6);
        assert!(masked.index_of(Feature::OutdoorDryBulbTemperature(None)).is_some());
        assert!(masked.index_of(Feature::ElectricityPricing(None)).is_some());
        assert!(masked.index_of(Feature::DiffuseSolarIrradiance(Some(ForecastLead::H6))).is_some());
        assert_ne!(masked.hash(), full.hash());
    }

    #[test]
    fn masking_no_leads_is_identity() {
        let full = ObservationSchema::full();
        assert_eq!(mask_forecast_features(&full, &[]), full);
    }

    #[test]
    fn masking_one_lead_drops_two() {
        let full = ObservationSchema::full();
        let masked = mask_forecast_features(&full, &[ForecastLead::H12]);
        assert_eq!(masked.len(), full.len() - 2);
        assert!(masked.index_of(Feature::ElectricityPricing(Some(ForecastLead::H12))).is_none());
    }

    #[test]
    fn names_round_trip_and_unknown_rejected() {
        let full = ObservationSchema::full();
        assert_eq!(ObservationSchema::from_names(&full.names()).unwrap(), full);
        let err = ObservationSchema::from_names(&["hour", "wind_speed"]).unwrap_err();
        assert!(matches!(err, Error::UnknownFeature(ref n) if n == "wind_speed"));
    }

    #[test]
    fn lead_parsing() {
        assert_eq!(ForecastLead::from_hours(12).unwrap(), ForecastLead::H12);
        assert!(ForecastLead::from_hours(3).is_err());
    }
}
