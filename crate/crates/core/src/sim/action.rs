use serde::{Deserialize, Serialize};

use super::BuildingParams;

/// Normalized control triple emitted by every agent. Each entry lives in
/// [0, 1]; out-of-range inputs are clamped and non-finite inputs decode as
/// idle.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ActionTriple {
    pub dhw_storage: f64,
    pub electrical_storage: f64,
    pub cooling_device: f64,
}

fn clamp_unit(v: f64, idle: f64) -> f64 {
    if v.is_nan() {
        idle
    } else {
        v.clamp(0.0, 1.0)
    }
}

impl ActionTriple {
    pub fn new(dhw_storage: f64, electrical_storage: f64, cooling_device: f64) -> Self {
        Self {
            dhw_storage,
            electrical_storage,
            cooling_device,
        }
    }

    pub fn clamped(self) -> Self {
        Self {
            dhw_storage: clamp_unit(self.dhw_storage, 0.5),
            electrical_storage: clamp_unit(self.electrical_storage, 0.5),
            cooling_device: clamp_unit(self.cooling_device, 0.0),
        }
    }

    pub fn to_array(self) -> [f64; 3] {
        [self.dhw_storage, self.electrical_storage, self.cooling_device]
    }

    pub fn from_slice(v: &[f64]) -> Self {
        Self::new(v[0], v[1], v[2])
    }
}

/// Physical set-points for one hour. Storage powers are signed: positive
/// charges, negative discharges.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhysicalCommand {
    /// kW on the electrical bus.
    pub battery_power: f64,
    /// kW thermal into (or out of) the hot-water tank.
    pub dhw_power: f64,
    /// kW thermal removed by the cooling device.
    pub cooling_power: f64,
}

/// Storage fraction in [-1, 1]: 0.5 is idle, 0 is full-rate discharge and 1
/// is full-rate charge.
fn storage_fraction(a: f64) -> f64 {
    (a - 0.5) / 0.5
}

/// Decodes a normalized action into physical commands for `params`.
pub fn decode_action(action: ActionTriple, params: &BuildingParams) -> PhysicalCommand {
    let a = action.clamped();
    let battery = (storage_fraction(a.electrical_storage) * params.battery_capacity)
        .clamp(-params.battery_max_power, params.battery_max_power);
    PhysicalCommand {
        battery_power: battery,
        dhw_power: storage_fraction(a.dhw_storage) * params.dhw_capacity,
        cooling_power: a.cooling_device * params.cooling_nominal_power,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn point_two_discharges_sixty_percent() {
        let p = BuildingParams {
            battery_capacity: 10.0,
            battery_max_power: 10.0,
            ..Default::default()
        };
        let c = decode_action(ActionTriple::new(0.2, 0.2, 0.0), &p);
        assert_relative_eq!(c.battery_power, -6.0, epsilon = 1e-12);
        assert_relative_eq!(c.dhw_power, -0.6 * p.dhw_capacity, epsilon = 1e-12);
    }

    #[test]
    fn midpoint_is_idle_and_cooling_is_linear() {
        let p = BuildingParams::default();
        let c = decode_action(ActionTriple::new(0.5, 0.5, 0.25), &p);
        assert_eq!(c.battery_power, 0.0);
        assert_eq!(c.dhw_power, 0.0);
        assert_relative_eq!(c.cooling_power, 0.25 * p.cooling_nominal_power);
    }

    #[test]
    fn battery_capped_by_max_power_and_inputs_clamped() {
        let p = BuildingParams {
            battery_capacity: 10.0,
            battery_max_power: 3.0,
            ..Default::default()
        };
        let c = decode_action(ActionTriple::new(7.0, -3.0, 2.0), &p);
        assert_eq!(c.battery_power, -3.0);
        assert_eq!(c.dhw_power, p.dhw_capacity);
        assert_eq!(c.cooling_power, p.cooling_nominal_power);
        let nan = decode_action(ActionTriple::new(f64::NAN, f64::NAN, f64::NAN), &p);
        assert_eq!((nan.battery_power, nan.dhw_power, nan.cooling_power), (0.0, 0.0, 0.0));
    }
}
