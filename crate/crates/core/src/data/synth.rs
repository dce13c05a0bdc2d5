use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::{BuildingSeries, DatasetBundle, TimeSeriesColumn, Unit, WeatherSeries};
use crate::error::{Error, Result};
use crate::sim::BuildingParams;
use crate::sim::INTERNAL_GAIN_KW_PER_OCCUPANT;

/// Parameters of a synthetic district, as referenced from campaign configs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SyntheticSpec {
    pub seed: u64,
    pub n_buildings: usize,
    pub horizon: usize,
}

impl SyntheticSpec {
    pub fn generate(&self) -> Result<DatasetBundle> {
        generate_synthetic_dataset(self.seed, self.n_buildings, self.horizon)
    }
}

const MIN_HORIZON: usize = 48;

/// Daylight shape in [0, 1] for hour-of-day index `h` (0..24).
fn sun_shape(h: usize) -> f64 {
    let h = h as f64;
    if h <= 6.0 || h >= 18.0 {
        0.0
    } else {
        (PI * (h - 6.0) / 12.0).sin()
    }
}

fn tou_price(hour: usize, weekend: bool) -> f64 {
    match hour {
        1..=6 => 0.08,
        17..=21 if weekend => 0.25,
        17..=21 => 0.40,
        _ => 0.18,
    }
}

/// Generates a deterministic district dataset standing in for a real
/// measured one: diurnal temperature and irradiance, time-of-use prices,
/// occupancy schedules and at least one outage window per building.
pub fn generate_synthetic_dataset(seed: u64, n_buildings: usize, horizon: usize) -> Result<DatasetBundle> {
    if n_buildings == 0 {
        return Err(Error::InvalidArgument("n_buildings must be at least 1".into()));
    }
    if horizon < MIN_HORIZON {
        return Err(Error::InvalidArgument(format!(
            "horizon {horizon} shorter than {MIN_HORIZON} hours"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let noise = Normal::new(0.0, 1.0).expect("unit normal");
    let n_days = horizon.div_ceil(24);

    // Day-level weather drivers.
    let mut day_mean = Vec::with_capacity(n_days);
    let mut drift = 0.0;
    for d in 0..n_days {
        drift = 0.7 * drift + 0.8 * noise.sample(&mut rng);
        day_mean.push(27.0 + 2.0 * (2.0 * PI * d as f64 / 30.0).sin() + drift);
    }
    let cloud: Vec<f64> = (0..n_days).map(|_| rng.random_range(0.55..1.0)).collect();

    let mut hour = Vec::with_capacity(horizon);
    let mut day_type = Vec::with_capacity(horizon);
    let mut outdoor = Vec::with_capacity(horizon);
    let mut diffuse = Vec::with_capacity(horizon);
    let mut direct = Vec::with_capacity(horizon);
    let mut pricing = Vec::with_capacity(horizon);
    let mut carbon = Vec::with_capacity(horizon);
    for t in 0..horizon {
        let h = t % 24;
        let d = t / 24;
        hour.push((h + 1) as f64);
        day_type.push((d % 7 + 1) as f64);
        let temp = day_mean[d] + 5.0 * (2.0 * PI * (h as f64 - 9.0) / 24.0).sin()
            + 0.3 * noise.sample(&mut rng);
        outdoor.push(temp);
        let sun = sun_shape(h);
        direct.push(850.0 * sun * cloud[d]);
        diffuse.push(if sun > 0.0 {
            (120.0 * sun + 60.0 * (1.0 - cloud[d]) * sun).max(0.0)
        } else {
            0.0
        });
        pricing.push(tou_price(h + 1, d % 7 >= 5));
        let ci = 0.42 + 0.08 * (2.0 * PI * (h as f64 - 19.0) / 24.0).cos() - 0.1 * sun
            + 0.01 * noise.sample(&mut rng);
        carbon.push(ci.max(0.05));
    }

    let mut params = Vec::with_capacity(n_buildings);
    let mut buildings = Vec::with_capacity(n_buildings);
    for _ in 0..n_buildings {
        let battery_capacity: f64 = rng.random_range(4.0..8.0);
        let p = BuildingParams {
            battery_capacity,
            battery_max_power: battery_capacity * rng.random_range(0.7..1.0),
            battery_round_trip_efficiency: 0.9,
            dhw_capacity: rng.random_range(2.0..4.0),
            dhw_heater_cop: rng.random_range(2.5..3.2),
            cooling_nominal_power: 8.0,
            cooling_cop: rng.random_range(2.8..3.5),
            thermal_resistance: rng.random_range(2.0..3.0),
            thermal_capacitance: rng.random_range(2.5..4.0),
            comfort_band: 1.0,
        };
        let pv_kw: f64 = rng.random_range(2.5..5.0);
        let household: f64 = rng.random_range(2.0f64..4.5).floor();
        let base_setpoint: f64 = rng.random_range(22.5..24.0);
        let load_scale: f64 = rng.random_range(0.8..1.2);

        let mut nsl = Vec::with_capacity(horizon);
        let mut solar = Vec::with_capacity(horizon);
        let mut cooling = Vec::with_capacity(horizon);
        let mut dhw = Vec::with_capacity(horizon);
        let mut occ = Vec::with_capacity(horizon);
        let mut setpoint = Vec::with_capacity(horizon);
        for t in 0..horizon {
            let h = t % 24;
            let weekend = (t / 24) % 7 >= 5;
            let home = weekend || !(8..17).contains(&h);
            let o = if home { household } else { (household - 2.0).max(0.0) };
            occ.push(o);
            let sp = if o > 0.0 { base_setpoint } else { base_setpoint + 2.0 };
            setpoint.push(sp);

            let evening = if (17..22).contains(&h) { 0.6 } else { 0.0 };
            let load = load_scale * (0.35 + 0.15 * o + evening) + 0.05 * noise.sample(&mut rng);
            nsl.push(load.max(0.05));

            let gen = if direct[t] > 0.0 {
                pv_kw * 0.85 * (direct[t] + diffuse[t]) / 1000.0
            } else {
                0.0
            };
            solar.push(gen);

            let gain = (outdoor[t] - sp) / p.thermal_resistance + INTERNAL_GAIN_KW_PER_OCCUPANT * o;
            cooling.push(gain.max(0.0));

            let peak = if (6..9).contains(&h) || (18..22).contains(&h) { 0.25 } else { 0.02 };
            let draw = peak * o * (1.0 + 0.2 * noise.sample(&mut rng));
            dhw.push(draw.max(0.0));
        }

        let mut outage = vec![0.0; horizon];
        let windows = (horizon / 720).max(1);
        for _ in 0..windows {
            let len = rng.random_range(2..=6usize);
            let start = rng.random_range(12..horizon - len);
            for v in &mut outage[start..start + len] {
                *v = 1.0;
            }
        }

        params.push(p);
        buildings.push(BuildingSeries {
            non_shiftable_load: TimeSeriesColumn::new("non_shiftable_load", Unit::Kwh, nsl),
            solar_generation: TimeSeriesColumn::new("solar_generation", Unit::Kwh, solar),
            cooling_demand: TimeSeriesColumn::new("cooling_demand", Unit::Kwh, cooling),
            dhw_demand: TimeSeriesColumn::new("dhw_demand", Unit::Kwh, dhw),
            occupant_count: TimeSeriesColumn::new("occupant_count", Unit::Count, occ),
            setpoint: TimeSeriesColumn::new(
                "indoor_dry_bulb_temperature_set_point",
                Unit::Celsius,
                setpoint,
            ),
            power_outage: TimeSeriesColumn::new("power_outage", Unit::Flag, outage),
        });
    }

    DatasetBundle::new(
        WeatherSeries {
            hour: TimeSeriesColumn::new("hour", Unit::Count, hour),
            day_type: TimeSeriesColumn::new("day_type", Unit::Count, day_type),
            outdoor_temp: TimeSeriesColumn::new("outdoor_dry_bulb_temperature", Unit::Celsius, outdoor),
            diffuse_irradiance: TimeSeriesColumn::new(
                "diffuse_solar_irradiance",
                Unit::WattsPerSquareMetre,
                diffuse,
            ),
            direct_irradiance: TimeSeriesColumn::new(
                "direct_solar_irradiance",
                Unit::WattsPerSquareMetre,
                direct,
            ),
        },
        TimeSeriesColumn::new("electricity_pricing", Unit::DollarsPerKwh, pricing),
        TimeSeriesColumn::new("carbon_intensity", Unit::KgCo2PerKwh, carbon),
        buildings,
        params,
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn deterministic_per_seed() {
        let a = generate_synthetic_dataset(7, 2, 168).unwrap();
        let b = generate_synthetic_dataset(7, 2, 168).unwrap();
        assert_eq!(a, b);
        let c = generate_synthetic_dataset(8, 2, 168).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn too_short_rejected() {
        assert!(generate_synthetic_dataset(1, 1, 47).is_err());
        assert!(generate_synthetic_dataset(1, 0, 48).is_err());
    }

    #[test]
    fn no_solar_without_direct_irradiance_and_outage_present() {
        let b = generate_synthetic_dataset(11, 4, 400).unwrap();
        for bs in &b.buildings {
            for t in 0..b.horizon() {
                if b.weather.direct_irradiance.values[t] == 0.0 {
                    assert_eq!(bs.solar_generation.values[t], 0.0);
                }
            }
            assert!(bs.power_outage.values.iter().any(|v| *v == 1.0));
        }
        assert_eq!(b.weather.hour.values[0], 1.0);
        assert_eq!(b.weather.hour.values[23], 24.0);
    }
}
