//! Deterministic hourly simulator of a multi-building district.
//!
//! Each building owns a battery, a hot-water (DHW) tank and a cooling device
//! driving a first-order RC thermal envelope. Agents emit one
//! [`ActionTriple`] per building; all agents share one reward.
//!
//! Per-building step order: decode actions, DHW tank (tank serves demand
//! first, the heater covers the shortfall), battery, cooling and envelope,
//! net consumption, outage resolution (no grid exchange; loads served by
//! solar first, then battery; the remainder is unserved), then district
//! aggregation and reward.

mod action;
mod observation;
mod params;
mod reward;

use std::sync::Arc;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

pub use action::{decode_action, ActionTriple, PhysicalCommand};
pub use observation::build_observation;
pub use params::{BuildingParams, RewardWeights};
pub use reward::{compute_reward, RewardTerms};

use crate::data::{DatasetBundle, Feature, ObservationSchema};
use crate::error::{Error, Result};

/// Internal heat gain per occupant, kW.
pub const INTERNAL_GAIN_KW_PER_OCCUPANT: f64 = 0.1;

/// Simulation settings that are not part of the dataset.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub weights: RewardWeights,
    /// Initial state of charge of both storages as a fraction of capacity.
    pub initial_soc_fraction: f64,
    /// Relative standard deviation of multiplicative noise applied to the
    /// forecast features. Zero gives perfect foresight.
    pub forecast_noise_std: f64,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            weights: RewardWeights::default(),
            initial_soc_fraction: 0.5,
            forecast_noise_std: 0.0,
        }
    }
}

/// Contiguous slice of the dataset simulated as one episode.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct EpisodeWindow {
    pub start: usize,
    pub len: usize,
}

impl EpisodeWindow {
    pub fn new(start: usize, len: usize) -> Self {
        Self { start, len }
    }

    pub fn full(bundle: &DatasetBundle) -> Self {
        Self::new(0, bundle.horizon())
    }

    pub fn end(&self) -> usize {
        self.start + self.len
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BuildingState {
    /// °C
    pub indoor_temp: f64,
    /// kWh, within [0, battery_capacity].
    pub elec_soc: f64,
    /// kWh thermal, within [0, dhw_capacity].
    pub dhw_soc: f64,
    /// Signed grid exchange of the previous step, kWh.
    pub net_consumption: f64,
}

/// Complete mutable simulator state. Cloning yields a fully independent copy.
#[derive(Debug, Clone, PartialEq)]
pub struct DistrictState {
    pub t: usize,
    pub buildings: Vec<BuildingState>,
    /// District consumption term of the previous step; `None` before the
    /// first step so that ramping starts at zero.
    pub prev_consumption: Option<f64>,
    rng: ChaCha8Rng,
    observations: Vec<Vec<f64>>,
}

/// Energy flows of one building over one step, kWh unless noted.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct FlowRecord {
    /// Signed exchange with the grid; negative is export.
    pub grid_exchange: f64,
    pub grid_import: f64,
    pub solar_generation: f64,
    pub solar_used: f64,
    pub non_shiftable_load: f64,
    pub cooling_electricity: f64,
    pub heater_electricity: f64,
    pub battery_charge_input: f64,
    pub battery_discharge_output: f64,
    pub unserved: f64,
    /// Electrical demand that had to be met while the grid was down.
    pub outage_demand: f64,
    pub cooling_delivered: f64,
    pub dhw_tank_draw: f64,
    pub battery_delta: f64,
    pub dhw_delta: f64,
    pub outage: bool,
    /// Post-step indoor temperature, °C.
    pub indoor_temp: f64,
    /// Post-step state of charge as a fraction of capacity.
    pub elec_soc_fraction: f64,
    pub dhw_soc_fraction: f64,
}

impl FlowRecord {
    /// Electrical loads attached to the building bus.
    pub fn load(&self) -> f64 {
        self.non_shiftable_load + self.cooling_electricity + self.heater_electricity
    }

    /// Supply minus demand on the building bus; zero up to rounding.
    pub fn ledger_residual(&self) -> f64 {
        (self.grid_exchange + self.solar_used + self.battery_discharge_output + self.unserved)
            - (self.load() + self.battery_charge_input)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StepOutcome {
    /// Dataset index of the simulated hour.
    pub t: usize,
    pub observations: Vec<Vec<f64>>,
    /// Team reward, identical for every agent.
    pub reward: f64,
    pub terms: RewardTerms,
    pub flows: Vec<FlowRecord>,
    /// District net consumption e(t), signed, kWh.
    pub net_consumption: f64,
    pub done: bool,
}

impl StepOutcome {
    pub fn agent_rewards(&self) -> Vec<f64> {
        vec![self.reward; self.flows.len()]
    }
}

struct HourInputs {
    non_shiftable_load: f64,
    solar: f64,
    dhw_demand: f64,
    occupants: f64,
    outdoor_temp: f64,
    outage: bool,
}

fn simulate_building(
    p: &BuildingParams,
    st: &mut BuildingState,
    cmd: PhysicalCommand,
    x: &HourInputs,
) -> FlowRecord {
    let eta = p.one_way_efficiency();

    // DHW: a discharge command lets the tank serve demand; the heater covers
    // the rest. A charge command heats the tank up to its headroom.
    let tank_draw = if cmd.dhw_power < 0.0 {
        (-cmd.dhw_power).min(st.dhw_soc).min(x.dhw_demand)
    } else {
        0.0
    };
    let tank_charge_cmd = if cmd.dhw_power > 0.0 {
        cmd.dhw_power.min(p.dhw_capacity - st.dhw_soc).max(0.0)
    } else {
        0.0
    };
    let shortfall = x.dhw_demand - tank_draw;

    let charge_cmd = if cmd.battery_power > 0.0 {
        cmd.battery_power.min((p.battery_capacity - st.elec_soc) / eta).max(0.0)
    } else {
        0.0
    };
    let discharge_cmd = if cmd.battery_power < 0.0 {
        (-cmd.battery_power).min(st.elec_soc * eta)
    } else {
        0.0
    };

    let cooling_elec = cmd.cooling_power / p.cooling_cop;
    let base_load = x.non_shiftable_load + cooling_elec + shortfall / p.dhw_heater_cop;

    let mut f = FlowRecord {
        solar_generation: x.solar,
        non_shiftable_load: x.non_shiftable_load,
        cooling_electricity: cooling_elec,
        dhw_tank_draw: tank_draw,
        outage: x.outage,
        ..Default::default()
    };

    let tank_charge;
    let served_fraction;
    if x.outage {
        // Solar first, then the battery; charging only from surplus solar.
        let solar_to_load = x.solar.min(base_load);
        let mut surplus = x.solar - solar_to_load;
        let mut need = base_load - solar_to_load;
        f.battery_discharge_output = discharge_cmd.min(need);
        need -= f.battery_discharge_output;
        let tank_elec = (tank_charge_cmd / p.dhw_heater_cop).min(surplus);
        surplus -= tank_elec;
        tank_charge = tank_elec * p.dhw_heater_cop;
        f.battery_charge_input = charge_cmd.min(surplus);
        f.unserved = need;
        f.outage_demand = base_load;
        f.solar_used = solar_to_load + tank_elec + f.battery_charge_input;
        f.heater_electricity = shortfall / p.dhw_heater_cop + tank_elec;
        f.grid_exchange = 0.0;
        served_fraction = if base_load > 0.0 {
            (base_load - f.unserved) / base_load
        } else {
            1.0
        };
    } else {
        tank_charge = tank_charge_cmd;
        f.battery_charge_input = charge_cmd;
        f.battery_discharge_output = discharge_cmd;
        f.heater_electricity = (shortfall + tank_charge) / p.dhw_heater_cop;
        f.solar_used = x.solar;
        f.grid_exchange = x.non_shiftable_load + f.heater_electricity + cooling_elec
            + f.battery_charge_input
            - f.battery_discharge_output
            - x.solar;
        served_fraction = 1.0;
    }
    f.grid_import = f.grid_exchange.max(0.0);

    let dhw_before = st.dhw_soc;
    st.dhw_soc = (st.dhw_soc - tank_draw + tank_charge).clamp(0.0, p.dhw_capacity);
    f.dhw_delta = st.dhw_soc - dhw_before;

    let elec_before = st.elec_soc;
    let stored = f.battery_charge_input * eta - f.battery_discharge_output / eta;
    st.elec_soc = (st.elec_soc + stored).clamp(0.0, p.battery_capacity);
    f.battery_delta = st.elec_soc - elec_before;

    f.cooling_delivered = cmd.cooling_power * served_fraction;
    let gain = (x.outdoor_temp - st.indoor_temp) / p.thermal_resistance
        + INTERNAL_GAIN_KW_PER_OCCUPANT * x.occupants
        - f.cooling_delivered;
    st.indoor_temp += gain / p.thermal_capacitance;
    st.net_consumption = f.grid_exchange;

    f.indoor_temp = st.indoor_temp;
    f.elec_soc_fraction = st.elec_soc / p.battery_capacity;
    f.dhw_soc_fraction = st.dhw_soc / p.dhw_capacity;
    f
}

/// A district simulation: shared read-only data plus one owned
/// [`DistrictState`]. `Clone` is a deep copy of the state; dataset and
/// parameters are shared immutably.
#[derive(Debug, Clone)]
pub struct District {
    bundle: Arc<DatasetBundle>,
    params: Arc<[BuildingParams]>,
    config: SimConfig,
    schema: Arc<ObservationSchema>,
    window: EpisodeWindow,
    state: DistrictState,
}

impl District {
    /// Builds a district positioned at the start of the full horizon.
    pub fn new(
        bundle: Arc<DatasetBundle>,
        params: Vec<BuildingParams>,
        config: SimConfig,
        schema: ObservationSchema,
    ) -> Result<Self> {
        if params.len() != bundle.n_buildings() {
            return Err(Error::BuildingCountMismatch {
                expected: bundle.n_buildings(),
                found: params.len(),
            });
        }
        for p in &params {
            p.validate()?;
        }
        config.weights.validate()?;
        if !(0.0..=1.0).contains(&config.initial_soc_fraction) {
            return Err(Error::InvalidArgument(format!(
                "initial_soc_fraction {} outside [0, 1]",
                config.initial_soc_fraction
            )));
        }
        let window = EpisodeWindow::full(&bundle);
        let state = DistrictState {
            t: 0,
            buildings: Vec::new(),
            prev_consumption: None,
            rng: ChaCha8Rng::seed_from_u64(0),
            observations: Vec::new(),
        };
        let mut d = Self {
            bundle,
            params: params.into(),
            config,
            schema: Arc::new(schema),
            window,
            state,
        };
        d.reset(window, 0)?;
        Ok(d)
    }

    /// Convenience constructor using the bundle's own building parameters
    /// and the full observation schema.
    pub fn from_bundle(bundle: Arc<DatasetBundle>, config: SimConfig) -> Result<Self> {
        let params = bundle.params.clone();
        Self::new(bundle, params, config, ObservationSchema::full())
    }

    /// Starts a new episode over `window`; returns per-agent observations.
    pub fn reset(&mut self, window: EpisodeWindow, seed: u64) -> Result<Vec<Vec<f64>>> {
        if window.len == 0 || window.end() > self.bundle.horizon() {
            return Err(Error::InvalidWindow(format!(
                "[{}, {}) not inside horizon {}",
                window.start,
                window.end(),
                self.bundle.horizon()
            )));
        }
        self.window = window;
        let frac = self.config.initial_soc_fraction;
        self.state = DistrictState {
            t: window.start,
            buildings: self
                .params
                .iter()
                .zip(&self.bundle.buildings)
                .map(|(p, b)| BuildingState {
                    indoor_temp: b.setpoint.values[window.start],
                    elec_soc: frac * p.battery_capacity,
                    dhw_soc: frac * p.dhw_capacity,
                    net_consumption: 0.0,
                })
                .collect(),
            prev_consumption: None,
            rng: ChaCha8Rng::seed_from_u64(seed),
            observations: Vec::new(),
        };
        self.refresh_observations();
        Ok(self.observations().to_vec())
    }

    fn refresh_observations(&mut self) {
        let t = self.state.t.min(self.window.end() - 1);
        let mut obs: Vec<Vec<f64>> = (0..self.n_agents())
            .map(|b| build_observation(&self.state, &self.bundle, &self.params, b, t, &self.schema))
            .collect();
        if self.config.forecast_noise_std > 0.0 {
            let std = self.config.forecast_noise_std;
            for o in &mut obs {
                for (v, f) in o.iter_mut().zip(self.schema.features()) {
                    if is_forecast(f) {
                        let z: f64 = StandardNormal.sample(&mut self.state.rng);
                        *v += std * v.abs() * z;
                    }
                }
            }
        }
        self.state.observations = obs;
    }

    /// Advances one hour under the joint action (one triple per building).
    pub fn step(&mut self, actions: &[ActionTriple]) -> Result<StepOutcome> {
        if self.done() {
            return Err(Error::EpisodeDone(self.state.t));
        }
        if actions.len() != self.n_agents() {
            return Err(Error::AgentCountMismatch {
                expected: self.n_agents(),
                found: actions.len(),
            });
        }
        let t = self.state.t;
        let w = &self.bundle.weather;
        let mut flows = Vec::with_capacity(actions.len());
        let mut discomfort = 0.0;
        for (b, action) in actions.iter().enumerate() {
            let p = &self.params[b];
            let bs = &self.bundle.buildings[b];
            let inputs = HourInputs {
                non_shiftable_load: bs.non_shiftable_load.values[t],
                solar: bs.solar_generation.values[t],
                dhw_demand: bs.dhw_demand.values[t],
                occupants: bs.occupant_count.values[t],
                outdoor_temp: w.outdoor_temp.values[t],
                outage: bs.is_outage(t),
            };
            let cmd = decode_action(*action, p);
            let flow = simulate_building(p, &mut self.state.buildings[b], cmd, &inputs);
            let deviation = (flow.indoor_temp - bs.setpoint.values[t]).abs();
            discomfort += (deviation - p.comfort_band).max(0.0);
            flows.push(flow);
        }

        let net: f64 = flows.iter().map(|f| f.grid_exchange).sum();
        let consumption = net.max(0.0);
        let import: f64 = flows.iter().map(|f| f.grid_import).sum();
        let solar: f64 = flows.iter().map(|f| f.solar_generation).sum();
        let terms = RewardTerms {
            discomfort,
            consumption,
            ramping: self
                .state
                .prev_consumption
                .map_or(0.0, |prev| (consumption - prev).abs()),
            solar_penalty: (import - solar).max(0.0),
        };
        let reward = terms.reward(&self.config.weights);

        self.state.prev_consumption = Some(consumption);
        self.state.t += 1;
        self.refresh_observations();

        Ok(StepOutcome {
            t,
            observations: self.state.observations.clone(),
            reward,
            terms,
            flows,
            net_consumption: net,
            done: self.done(),
        })
    }

    pub fn observations(&self) -> &[Vec<f64>] {
        &self.state.observations
    }

    pub fn n_agents(&self) -> usize {
        self.params.len()
    }

    pub fn done(&self) -> bool {
        self.state.t >= self.window.end()
    }

    /// Current dataset index.
    pub fn t(&self) -> usize {
        self.state.t
    }

    pub fn window(&self) -> EpisodeWindow {
        self.window
    }

    pub fn state(&self) -> &DistrictState {
        &self.state
    }

    /// Independent copy of the mutable state.
    pub fn clone_state(&self) -> DistrictState {
        self.state.clone()
    }

    /// Replaces the mutable state, e.g. to replay from a saved snapshot.
    pub fn restore_state(&mut self, state: DistrictState) {
        self.state = state;
    }

    pub fn bundle(&self) -> &Arc<DatasetBundle> {
        &self.bundle
    }

    pub fn params(&self) -> &[BuildingParams] {
        &self.params
    }

    pub fn schema(&self) -> &ObservationSchema {
        &self.schema
    }

    pub fn config(&self) -> &SimConfig {
        &self.config
    }
}

fn is_forecast(f: &Feature) -> bool {
    matches!(
        f,
        Feature::OutdoorDryBulbTemperature(Some(_))
            | Feature::DiffuseSolarIrradiance(Some(_))
            | Feature::DirectSolarIrradiance(Some(_))
            | Feature::ElectricityPricing(Some(_))
    )
}

#[cfg(test)]
mod tests;
