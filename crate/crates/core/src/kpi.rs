//! District KPIs computed from an episode trace, baseline normalization and
//! the scalar average score (lower is better).

use serde::{Deserialize, Serialize};

use crate::data::DatasetBundle;
use crate::error::{Error, Result};
use crate::sim::{BuildingParams, StepOutcome};

/// Hours per KPI "month" window.
pub const MONTH_HOURS: usize = 730;

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct BuildingTrace {
    pub comfort_band: f64,
    pub indoor_temp: Vec<f64>,
    pub setpoint: Vec<f64>,
    pub occupant_count: Vec<f64>,
    pub outage: Vec<bool>,
    pub unserved: Vec<f64>,
    pub outage_demand: Vec<f64>,
    pub solar_generation: Vec<f64>,
    /// Fractions of capacity.
    pub elec_soc: Vec<f64>,
    pub dhw_soc: Vec<f64>,
}

/// Everything the KPI engine reads about one simulated episode.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct EpisodeTrace {
    /// District net consumption e(t), signed, kWh.
    pub net_consumption: Vec<f64>,
    pub carbon_intensity: Vec<f64>,
    pub price: Vec<f64>,
    pub buildings: Vec<BuildingTrace>,
}

impl EpisodeTrace {
    pub fn len(&self) -> usize {
        self.net_consumption.len()
    }

    pub fn is_empty(&self) -> bool {
        self.net_consumption.is_empty()
    }

    pub fn validate(&self) -> Result<()> {
        let t = self.len();
        if t == 0 {
            return Err(Error::EmptyInput("episode trace"));
        }
        if t % 24 != 0 {
            return Err(Error::InvalidTrace(format!(
                "length {t} is not a whole number of days"
            )));
        }
        let check = |name: &str, n: usize| {
            if n != t {
                Err(Error::InvalidTrace(format!("series {name} has {n} entries, expected {t}")))
            } else {
                Ok(())
            }
        };
        check("carbon_intensity", self.carbon_intensity.len())?;
        check("price", self.price.len())?;
        for b in &self.buildings {
            check("indoor_temp", b.indoor_temp.len())?;
            check("setpoint", b.setpoint.len())?;
            check("occupant_count", b.occupant_count.len())?;
            check("outage", b.outage.len())?;
            check("unserved", b.unserved.len())?;
            check("outage_demand", b.outage_demand.len())?;
            check("solar_generation", b.solar_generation.len())?;
            check("elec_soc", b.elec_soc.len())?;
            check("dhw_soc", b.dhw_soc.len())?;
            if b
                .elec_soc
                .iter()
                .chain(&b.dhw_soc)
                .any(|v| !(0.0..=1.0).contains(v))
            {
                return Err(Error::InvalidTrace("state of charge outside [0, 1]".into()));
            }
        }
        Ok(())
    }
}

/// Accumulates [`StepOutcome`]s into an [`EpisodeTrace`].
pub struct TraceBuilder<'a> {
    bundle: &'a DatasetBundle,
    trace: EpisodeTrace,
}

impl<'a> TraceBuilder<'a> {
    pub fn new(bundle: &'a DatasetBundle, params: &[BuildingParams]) -> Self {
        let buildings = params
            .iter()
            .map(|p| BuildingTrace {
                comfort_band: p.comfort_band,
                ..Default::default()
            })
            .collect();
        Self {
            bundle,
            trace: EpisodeTrace {
                buildings,
                ..Default::default()
            },
        }
    }

    pub fn push(&mut self, out: &StepOutcome) {
        let t = out.t;
        let tr = &mut self.trace;
        tr.net_consumption.push(out.net_consumption);
        tr.carbon_intensity.push(self.bundle.carbon_intensity.values[t]);
        tr.price.push(self.bundle.pricing.values[t]);
        for ((bt, f), bs) in tr.buildings.iter_mut().zip(&out.flows).zip(&self.bundle.buildings) {
            bt.indoor_temp.push(f.indoor_temp);
            bt.setpoint.push(bs.setpoint.values[t]);
            bt.occupant_count.push(bs.occupant_count.values[t]);
            bt.outage.push(f.outage);
            bt.unserved.push(f.unserved);
            bt.outage_demand.push(f.outage_demand);
            bt.solar_generation.push(f.solar_generation);
            bt.elec_soc.push(f.elec_soc_fraction);
            bt.dhw_soc.push(f.dhw_soc_fraction);
        }
    }

    pub fn finish(self) -> EpisodeTrace {
        self.trace
    }
}

/// Raw KPI values of one episode. Field names are the serialized keys.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct KpiReport {
    /// kgCO2e from imported electricity.
    pub carbon_emissions: f64,
    pub discomfort_proportion: f64,
    /// $
    pub cost: f64,
    /// Mean absolute hour-to-hour change of e(t), kWh.
    pub ramping: f64,
    pub one_minus_load_factor_daily: f64,
    pub one_minus_load_factor_monthly: f64,
    pub daily_peak: f64,
    pub annual_peak: f64,
    pub one_minus_thermal_resilience: f64,
    pub unserved_energy: f64,
    /// Fraction of hours with e(t) ≤ 0 (higher is better).
    pub zero_net_energy: f64,
    pub electricity_consumption: f64,
}

impl KpiReport {
    pub const KEYS: [&'static str; 12] = [
        "carbon_emissions",
        "discomfort_proportion",
        "cost",
        "ramping",
        "one_minus_load_factor_daily",
        "one_minus_load_factor_monthly",
        "daily_peak",
        "annual_peak",
        "one_minus_thermal_resilience",
        "unserved_energy",
        "zero_net_energy",
        "electricity_consumption",
    ];

    pub fn values(&self) -> [f64; 12] {
        [
            self.carbon_emissions,
            self.discomfort_proportion,
            self.cost,
            self.ramping,
            self.one_minus_load_factor_daily,
            self.one_minus_load_factor_monthly,
            self.daily_peak,
            self.annual_peak,
            self.one_minus_thermal_resilience,
            self.unserved_energy,
            self.zero_net_energy,
            self.electricity_consumption,
        ]
    }

    pub fn entries(&self) -> impl Iterator<Item = (&'static str, f64)> {
        Self::KEYS.into_iter().zip(self.values())
    }

    /// Element-wise mean of several reports.
    pub fn mean(reports: &[KpiReport]) -> Result<KpiReport> {
        if reports.is_empty() {
            return Err(Error::EmptyInput("kpi reports"));
        }
        let n = reports.len() as f64;
        let mut acc = [0.0; 12];
        for r in reports {
            for (a, v) in acc.iter_mut().zip(r.values()) {
                *a += v;
            }
        }
        Ok(Self::from_values(acc.map(|v| v / n)))
    }

    fn from_values(v: [f64; 12]) -> Self {
        KpiReport {
            carbon_emissions: v[0],
            discomfort_proportion: v[1],
            cost: v[2],
            ramping: v[3],
            one_minus_load_factor_daily: v[4],
            one_minus_load_factor_monthly: v[5],
            daily_peak: v[6],
            annual_peak: v[7],
            one_minus_thermal_resilience: v[8],
            unserved_energy: v[9],
            zero_net_energy: v[10],
            electricity_consumption: v[11],
        }
    }
}

fn one_minus_load_factor(chunk: &[f64]) -> f64 {
    let peak = chunk.iter().fold(0.0f64, |m, v| m.max(v.max(0.0)));
    if peak <= 0.0 {
        return 0.0;
    }
    let mean = chunk.iter().map(|v| v.max(0.0)).sum::<f64>() / chunk.len() as f64;
    1.0 - mean / peak
}

fn mean_or_zero(xs: impl Iterator<Item = f64>) -> f64 {
    let (sum, n) = xs.fold((0.0, 0usize), |(s, n), x| (s + x, n + 1));
    if n == 0 {
        0.0
    } else {
        sum / n as f64
    }
}

/// Fraction of the selected hours with the indoor temperature outside the
/// comfort band; zero when no hour is selected.
fn outside_band_fraction(b: &BuildingTrace, select: impl Fn(usize) -> bool) -> f64 {
    let mut total = 0usize;
    let mut outside = 0usize;
    for t in 0..b.indoor_temp.len() {
        if select(t) {
            total += 1;
            if (b.indoor_temp[t] - b.setpoint[t]).abs() > b.comfort_band {
                outside += 1;
            }
        }
    }
    if total == 0 {
        0.0
    } else {
        outside as f64 / total as f64
    }
}

/// Computes every KPI of an episode. The trace must span whole days.
pub fn compute_kpis(trace: &EpisodeTrace) -> Result<KpiReport> {
    trace.validate()?;
    let e = &trace.net_consumption;
    let t_len = e.len();
    let imported: Vec<f64> = e.iter().map(|v| v.max(0.0)).collect();

    let carbon_emissions = imported.iter().zip(&trace.carbon_intensity).map(|(a, b)| a * b).sum();
    let cost = imported.iter().zip(&trace.price).map(|(a, b)| a * b).sum();
    let electricity_consumption = imported.iter().sum();
    let ramping = if t_len > 1 {
        e.windows(2).map(|w| (w[1] - w[0]).abs()).sum::<f64>() / (t_len - 1) as f64
    } else {
        0.0
    };
    let one_minus_load_factor_daily = mean_or_zero(e.chunks(24).map(one_minus_load_factor));
    let one_minus_load_factor_monthly = mean_or_zero(e.chunks(MONTH_HOURS).map(one_minus_load_factor));
    let daily_peak = mean_or_zero(
        imported
            .chunks(24)
            .map(|c| c.iter().copied().fold(0.0, f64::max)),
    );
    let annual_peak = imported.iter().copied().fold(0.0, f64::max);
    let zero_net_energy = e.iter().filter(|v| **v <= 0.0).count() as f64 / t_len as f64;

    let discomfort_proportion = mean_or_zero(trace.buildings.iter().map(|b| {
        outside_band_fraction(b, |t| b.occupant_count[t] > 0.0 && !b.outage[t])
    }));
    let one_minus_thermal_resilience = mean_or_zero(trace.buildings.iter().map(|b| {
        outside_band_fraction(b, |t| b.occupant_count[t] > 0.0 && b.outage[t])
    }));
    let unserved: f64 = trace.buildings.iter().flat_map(|b| &b.unserved).sum();
    let demand: f64 = trace.buildings.iter().flat_map(|b| &b.outage_demand).sum();
    let unserved_energy = if demand > 0.0 { unserved / demand } else { 0.0 };

    Ok(KpiReport {
        carbon_emissions,
        discomfort_proportion,
        cost,
        ramping,
        one_minus_load_factor_daily,
        one_minus_load_factor_monthly,
        daily_peak,
        annual_peak,
        one_minus_thermal_resilience,
        unserved_energy,
        zero_net_energy,
        electricity_consumption,
    })
}

/// KPIs expressed relative to a baseline, all oriented lower-is-better.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct NormalizedKpis {
    pub carbon_emissions: f64,
    pub discomfort_proportion: f64,
    pub cost: f64,
    pub ramping: f64,
    pub one_minus_load_factor_daily: f64,
    pub one_minus_load_factor_monthly: f64,
    pub daily_peak: f64,
    pub annual_peak: f64,
    pub one_minus_thermal_resilience: f64,
    pub unserved_energy: f64,
    pub one_minus_zero_net_energy: f64,
    pub electricity_consumption: f64,
}

impl NormalizedKpis {
    pub const KEYS: [&'static str; 12] = [
        "carbon_emissions",
        "discomfort_proportion",
        "cost",
        "ramping",
        "one_minus_load_factor_daily",
        "one_minus_load_factor_monthly",
        "daily_peak",
        "annual_peak",
        "one_minus_thermal_resilience",
        "unserved_energy",
        "one_minus_zero_net_energy",
        "electricity_consumption",
    ];

    pub fn values(&self) -> [f64; 12] {
        [
            self.carbon_emissions,
            self.discomfort_proportion,
            self.cost,
            self.ramping,
            self.one_minus_load_factor_daily,
            self.one_minus_load_factor_monthly,
            self.daily_peak,
            self.annual_peak,
            self.one_minus_thermal_resilience,
            self.unserved_energy,
            self.one_minus_zero_net_energy,
            self.electricity_consumption,
        ]
    }

    pub fn entries(&self) -> impl Iterator<Item = (&'static str, f64)> {
        Self::KEYS.into_iter().zip(self.values())
    }

    /// Element-wise mean of several normalized reports.
    pub fn mean(items: &[NormalizedKpis]) -> Result<NormalizedKpis> {
        if items.is_empty() {
            return Err(Error::EmptyInput("normalized kpis"));
        }
        let n = items.len() as f64;
        let mut acc = [0.0; 12];
        for r in items {
            for (a, v) in acc.iter_mut().zip(r.values()) {
                *a += v;
            }
        }
        let v = acc.map(|x| x / n);
        Ok(NormalizedKpis {
            carbon_emissions: v[0],
            discomfort_proportion: v[1],
            cost: v[2],
            ramping: v[3],
            one_minus_load_factor_daily: v[4],
            one_minus_load_factor_monthly: v[5],
            daily_peak: v[6],
            annual_peak: v[7],
            one_minus_thermal_resilience: v[8],
            unserved_energy: v[9],
            one_minus_zero_net_energy: v[10],
            electricity_consumption: v[11],
        })
    }
}

/// Divides the ratio KPIs by the baseline; proportions pass through, with
/// zero-net-energy flipped to 1 − N.
pub fn normalize_kpis(report: &KpiReport, baseline: &KpiReport) -> Result<NormalizedKpis> {
    let ratio = |name: &'static str, v: f64, base: f64| {
        if base == 0.0 {
            Err(Error::ZeroBaseline(name))
        } else {
            Ok(v / base)
        }
    };
    Ok(NormalizedKpis {
        carbon_emissions: ratio("carbon_emissions", report.carbon_emissions, baseline.carbon_emissions)?,
        cost: ratio("cost", report.cost, baseline.cost)?,
        ramping: ratio("ramping", report.ramping, baseline.ramping)?,
        one_minus_load_factor_daily: ratio(
            "one_minus_load_factor_daily",
            report.one_minus_load_factor_daily,
            baseline.one_minus_load_factor_daily,
        )?,
        one_minus_load_factor_monthly: ratio(
            "one_minus_load_factor_monthly",
            report.one_minus_load_factor_monthly,
            baseline.one_minus_load_factor_monthly,
        )?,
        daily_peak: ratio("daily_peak", report.daily_peak, baseline.daily_peak)?,
        annual_peak: ratio("annual_peak", report.annual_peak, baseline.annual_peak)?,
        electricity_consumption: ratio(
            "electricity_consumption",
            report.electricity_consumption,
            baseline.electricity_consumption,
        )?,
        discomfort_proportion: report.discomfort_proportion,
        one_minus_thermal_resilience: report.one_minus_thermal_resilience,
        unserved_energy: report.unserved_energy,
        one_minus_zero_net_energy: 1.0 - report.zero_net_energy,
    })
}

/// Group weights of the average score.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScoreWeights {
    pub comfort: f64,
    pub emissions: f64,
    pub grid: f64,
    pub resilience: f64,
}

impl Default for ScoreWeights {
    fn default() -> Self {
        Self {
            comfort: 0.3,
            emissions: 0.1,
            grid: 0.3,
            resilience: 0.3,
        }
    }
}

/// Weighted sum of normalized KPIs: comfort (U), emissions (G), grid
/// (mean of R, L_daily, P_d, P_n) and resilience (mean of M, S).
pub fn average_score(n: &NormalizedKpis, w: &ScoreWeights) -> f64 {
    let grid = (n.ramping + n.one_minus_load_factor_daily + n.daily_peak + n.annual_peak) / 4.0;
    let resilience = (n.one_minus_thermal_resilience + n.unserved_energy) / 2.0;
    w.comfort * n.discomfort_proportion + w.emissions * n.carbon_emissions + w.grid * grid
        + w.resilience * resilience
}

/// Column-wise min-max normalization of an algorithm × KPI matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct MinMaxMatrix {
    pub values: Vec<Vec<f64>>,
    /// Columns whose entries were all equal; they map to 0.5.
    pub constant_columns: Vec<bool>,
}

pub fn minmax_normalize_matrix(rows: &[Vec<f64>]) -> Result<MinMaxMatrix> {
    let Some(first) = rows.first() else {
        return Err(Error::EmptyInput("min-max matrix"));
    };
    let cols = first.len();
    if let Some(bad) = rows.iter().find(|r| r.len() != cols) {
        return Err(Error::DimensionMismatch {
            expected: cols,
            found: bad.len(),
        });
    }
    let mut values = vec![vec![0.0; cols]; rows.len()];
    let mut constant_columns = vec![false; cols];
    for j in 0..cols {
        let (lo, hi) = rows
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), r| (lo.min(r[j]), hi.max(r[j])));
        let span = hi - lo;
        constant_columns[j] = span == 0.0;
        for (i, r) in rows.iter().enumerate() {
            values[i][j] = if span == 0.0 { 0.5 } else { (r[j] - lo) / span };
        }
    }
    Ok(MinMaxMatrix {
        values,
        constant_columns,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn flat_trace(e: Vec<f64>) -> EpisodeTrace {
        let t = e.len();
        EpisodeTrace {
            carbon_intensity: vec![0.5; t],
            price: vec![0.2; t],
            net_consumption: e,
            buildings: vec![BuildingTrace {
                comfort_band: 1.0,
                indoor_temp: vec![23.0; t],
                setpoint: vec![23.0; t],
                occupant_count: vec![2.0; t],
                outage: vec![false; t],
                unserved: vec![0.0; t],
                outage_demand: vec![0.0; t],
                solar_generation: vec![0.0; t],
                elec_soc: vec![0.5; t],
                dhw_soc: vec![0.5; t],
            }],
        }
    }

    #[test]
    fn null_trace() {
        let k = compute_kpis(&flat_trace(vec![0.0; 24])).unwrap();
        assert_eq!(k.carbon_emissions, 0.0);
        assert_eq!(k.ramping, 0.0);
        assert_eq!(k.discomfort_proportion, 0.0);
        assert_eq!(k.zero_net_energy, 1.0);
        assert_eq!(k.electricity_consumption, 0.0);
    }

    #[test]
    fn constant_load_day() {
        let k = compute_kpis(&flat_trace(vec![2.5; 24])).unwrap();
        assert_eq!(k.one_minus_load_factor_daily, 0.0);
        assert_eq!(k.daily_peak, 2.5);
        assert_eq!(k.annual_peak, 2.5);
        assert_relative_eq!(k.electricity_consumption, 60.0);
        assert_relative_eq!(k.cost, 12.0);
    }

    #[test]
    fn short_pattern_ramping() {
        let mut e = vec![0.0; 24];
        e[..3].copy_from_slice(&[1.0, 3.0, 2.0]);
        let k = compute_kpis(&flat_trace(e)).unwrap();
        // |1-3| + |3-2| + |2-0| over 23 transitions.
        assert_relative_eq!(k.ramping, 5.0 / 23.0, epsilon = 1e-15);
        assert_relative_eq!(k.one_minus_load_factor_daily, 1.0 - (6.0 / 24.0) / 3.0);
    }

    #[test]
    fn partial_day_rejected() {
        assert!(compute_kpis(&flat_trace(vec![1.0; 25])).is_err());
        assert!(matches!(compute_kpis(&flat_trace(vec![])), Err(Error::EmptyInput(_))));
    }

    #[test]
    fn normalization_rules() {
        let base = compute_kpis(&flat_trace((0..48).map(|i| (i % 5) as f64).collect())).unwrap();
        let n = normalize_kpis(&base, &base).unwrap();
        for v in [n.carbon_emissions, n.cost, n.ramping, n.daily_peak, n.annual_peak, n.electricity_consumption] {
            assert_relative_eq!(v, 1.0);
        }
        let mut half = base;
        half.carbon_emissions /= 2.0;
        half.ramping /= 2.0;
        let n = normalize_kpis(&half, &base).unwrap();
        assert_relative_eq!(n.carbon_emissions, 0.5);
        assert_relative_eq!(n.ramping, 0.5);
        let mut zero = base;
        zero.carbon_emissions = 0.0;
        assert!(matches!(normalize_kpis(&base, &zero), Err(Error::ZeroBaseline("carbon_emissions"))));
    }

    fn uniform(v: f64) -> NormalizedKpis {
        NormalizedKpis {
            carbon_emissions: v,
            discomfort_proportion: v,
            cost: v,
            ramping: v,
            one_minus_load_factor_daily: v,
            one_minus_load_factor_monthly: v,
            daily_peak: v,
            annual_peak: v,
            one_minus_thermal_resilience: v,
            unserved_energy: v,
            one_minus_zero_net_energy: v,
            electricity_consumption: v,
        }
    }

    #[test]
    fn average_score_cases() {
        let w = ScoreWeights::default();
        assert_relative_eq!(average_score(&uniform(1.0), &w), 1.0, epsilon = 1e-15);
        assert_eq!(average_score(&uniform(0.0), &w), 0.0);
        let mut n = uniform(1.0);
        n.discomfort_proportion = 0.5;
        assert_relative_eq!(average_score(&n, &w), 0.85, epsilon = 1e-15);
    }

    #[test]
    fn minmax_cases() {
        let m = minmax_normalize_matrix(&[vec![2.0, 1.0, 5.0], vec![4.0, 2.0, 5.0], vec![3.0, 3.0, 5.0]]).unwrap();
        assert_eq!(m.values[0], vec![0.0, 0.0, 0.5]);
        assert_eq!(m.values[1], vec![1.0, 0.5, 0.5]);
        assert_eq!(m.values[2], vec![0.5, 1.0, 0.5]);
        assert_eq!(m.constant_columns, vec![false, false, true]);
    }
}
