use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Device and envelope parameters of one building.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BuildingParams {
    /// kWh
    pub battery_capacity: f64,
    /// kW, applied to the bus-side charge/discharge energy per hour.
    pub battery_max_power: f64,
    /// Round-trip efficiency in (0, 1]; each direction uses its square root.
    pub battery_round_trip_efficiency: f64,
    /// kWh thermal
    pub dhw_capacity: f64,
    pub dhw_heater_cop: f64,
    /// kW thermal at full command.
    pub cooling_nominal_power: f64,
    pub cooling_cop: f64,
    /// °C per kW
    pub thermal_resistance: f64,
    /// kWh per °C
    pub thermal_capacitance: f64,
    /// Half-width of the comfort band around the setpoint, °C.
    pub comfort_band: f64,
}

impl Default for BuildingParams {
    fn default() -> Self {
        Self {
            battery_capacity: 6.0,
            battery_max_power: 6.0,
            battery_round_trip_efficiency: 0.9,
            dhw_capacity: 3.0,
            dhw_heater_cop: 3.0,
            cooling_nominal_power: 8.0,
            cooling_cop: 3.0,
            thermal_resistance: 2.5,
            thermal_capacitance: 3.0,
            comfort_band: 1.0,
        }
    }
}

impl BuildingParams {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("battery_capacity", self.battery_capacity),
            ("battery_max_power", self.battery_max_power),
            ("battery_round_trip_efficiency", self.battery_round_trip_efficiency),
            ("dhw_capacity", self.dhw_capacity),
            ("dhw_heater_cop", self.dhw_heater_cop),
            ("cooling_nominal_power", self.cooling_nominal_power),
            ("cooling_cop", self.cooling_cop),
            ("thermal_resistance", self.thermal_resistance),
            ("thermal_capacitance", self.thermal_capacitance),
        ];
        for (name, v) in positive {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::InvalidSchema(format!("{name} must be positive, got {v}")));
            }
        }
        if self.battery_round_trip_efficiency > 1.0 {
            return Err(Error::InvalidSchema(format!(
                "battery_round_trip_efficiency {} exceeds 1",
                self.battery_round_trip_efficiency
            )));
        }
        if !(self.comfort_band.is_finite() && self.comfort_band >= 0.0) {
            return Err(Error::InvalidSchema(format!(
                "comfort_band must be nonnegative, got {}",
                self.comfort_band
            )));
        }
        Ok(())
    }

    /// One-way efficiency applied on both charge and discharge.
    pub fn one_way_efficiency(&self) -> f64 {
        self.battery_round_trip_efficiency.sqrt()
    }
}

/// Weights of the four penalty terms in the shared reward.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RewardWeights {
    pub alpha: f64,
    pub beta: f64,
    pub gamma_w: f64,
    pub lambda_w: f64,
}

impl Default for RewardWeights {
    fn default() -> Self {
        Self {
            alpha: 0.1,
            beta: 0.1,
            gamma_w: 0.1,
            lambda_w: 0.1,
        }
    }
}

impl RewardWeights {
    pub fn validate(&self) -> Result<()> {
        for v in [self.alpha, self.beta, self.gamma_w, self.lambda_w] {
            if !(v.is_finite() && v >= 0.0) {
                return Err(Error::InvalidArgument(format!(
                    "reward weights must be finite and nonnegative, got {v}"
                )));
            }
        }
        Ok(())
    }
}
