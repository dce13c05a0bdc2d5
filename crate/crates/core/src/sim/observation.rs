use super::{BuildingParams, DistrictState};
use crate::data::{DatasetBundle, Feature, ObservationSchema};

/// Assembles building `b`'s observation at bundle index `t` in schema order.
/// Storage states are reported as fractions of capacity.
pub fn build_observation(
    state: &DistrictState,
    bundle: &DatasetBundle,
    params: &[BuildingParams],
    b: usize,
    t: usize,
    schema: &ObservationSchema,
) -> Vec<f64> {
    let t = t.min(bundle.horizon() - 1);
    let w = &bundle.weather;
    let bs = &bundle.buildings[b];
    let params = &params[b];
    let st = &state.buildings[b];
    let lead = |l: Option<crate::data::ForecastLead>| l.map_or(0, |l| l.hours());
    schema
        .features()
        .iter()
        .map(|f| match *f {
            Feature::DayType => w.day_type.values[t],
            Feature::Hour => w.hour.values[t],
            Feature::OutdoorDryBulbTemperature(l) => w.outdoor_temp.shifted(t, lead(l)),
            Feature::DiffuseSolarIrradiance(l) => w.diffuse_irradiance.shifted(t, lead(l)),
            Feature::DirectSolarIrradiance(l) => w.direct_irradiance.shifted(t, lead(l)),
            Feature::CarbonIntensity => bundle.carbon_intensity.values[t],
            Feature::IndoorDryBulbTemperature => st.indoor_temp,
            Feature::NonShiftableLoad => bs.non_shiftable_load.values[t],
            Feature::SolarGeneration => bs.solar_generation.values[t],
            Feature::DhwStorageSoc => st.dhw_soc / params.dhw_capacity,
            Feature::ElectricalStorageSoc => st.elec_soc / params.battery_capacity,
            Feature::NetElectricityConsumption => st.net_consumption,
            Feature::ElectricityPricing(l) => bundle.pricing.shifted(t, lead(l)),
            Feature::CoolingDemand => bs.cooling_demand.values[t],
            Feature::DhwDemand => bs.dhw_demand.values[t],
            Feature::OccupantCount => bs.occupant_count.values[t],
            Feature::IndoorDryBulbTemperatureSetPoint => bs.setpoint.values[t],
            Feature::PowerOutage => bs.power_outage.values[t],
        })
        .collect()
}
