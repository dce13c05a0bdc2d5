//! Rainflow cycle counting over battery state-of-charge series and the
//! depth-of-discharge metrics derived from it.
//!
//! Counting runs in two stages. A single pass over the turning points
//! extracts every range enclosed by larger neighbours, never consuming the
//! first point. What remains diverges then converges; it is closed into a
//! loop at its highest point and counted again, so the residue also yields
//! full cycles. A residue that cannot be closed without discarding a
//! turning point is reported as half cycles instead.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kpi::EpisodeTrace;

/// Alternating local extrema of a series, tagged with their source index.
#[derive(Debug, Clone, PartialEq)]
pub struct TurningPointSeries {
    pub indices: Vec<usize>,
    pub values: Vec<f64>,
}

impl TurningPointSeries {
    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CycleKind {
    Full,
    Half,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    Charge,
    Discharge,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RainflowCycle {
    pub from_index: usize,
    pub to_index: usize,
    pub from_value: f64,
    pub to_value: f64,
    pub range: f64,
    pub kind: CycleKind,
    pub direction: Direction,
}

impl RainflowCycle {
    fn between(a: Point, b: Point, kind: CycleKind) -> Self {
        let (from, to) = if a.index <= b.index { (a, b) } else { (b, a) };
        RainflowCycle {
            from_index: from.index,
            to_index: to.index,
            from_value: from.value,
            to_value: to.value,
            range: (to.value - from.value).abs(),
            kind,
            direction: if to.value > from.value {
                Direction::Charge
            } else {
                Direction::Discharge
            },
        }
    }

    pub fn duration(&self) -> usize {
        self.to_index - self.from_index
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct CycleSet {
    pub cycles: Vec<RainflowCycle>,
}

impl CycleSet {
    /// Reversal ranges: two per full cycle, one per half cycle.
    pub fn reversals(&self) -> Vec<f64> {
        let mut out = Vec::new();
        for c in &self.cycles {
            out.push(c.range);
            if c.kind == CycleKind::Full {
                out.push(c.range);
            }
        }
        out
    }

    pub fn discharges(&self) -> impl Iterator<Item = &RainflowCycle> {
        self.cycles.iter().filter(|c| c.direction == Direction::Discharge)
    }

    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut wtr = csv::Writer::from_writer(w);
        for c in &self.cycles {
            wtr.serialize(c)?;
        }
        wtr.flush().map_err(csv::Error::from)?;
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct Point {
    index: usize,
    value: f64,
}

/// Keeps local extrema plus both endpoints; plateaus collapse to their first
/// index.
pub fn extract_turning_points(soc: &[f64]) -> Result<TurningPointSeries> {
    if soc.len() < 2 {
        return Err(Error::InvalidArgument(format!(
            "turning points need at least 2 samples, got {}",
            soc.len()
        )));
    }
    let points: Vec<Point> = soc
        .iter()
        .enumerate()
        .map(|(index, &value)| Point { index, value })
        .collect();
    let last = *points.last().unwrap();
    let mut tp = turning(&points);
    // A series ending on a plateau still reports its last sample.
    if tp.last().map(|p| p.index) != Some(last.index) {
        if tp.len() >= 2 && tp[tp.len() - 1].value == last.value {
            tp.pop();
        }
        tp.push(last);
    }
    Ok(TurningPointSeries {
        indices: tp.iter().map(|p| p.index).collect(),
        values: tp.iter().map(|p| p.value).collect(),
    })
}

/// Reduces a sequence to alternating extrema, keeping the first point and the
/// last distinct value.
fn turning(points: &[Point]) -> Vec<Point> {
    let mut out: Vec<Point> = Vec::with_capacity(points.len());
    for &p in points {
        match out.len() {
            0 => out.push(p),
            1 => {
                if p.value != out[0].value {
                    out.push(p);
                }
            }
            n => {
                let (a, b) = (out[n - 2].value, out[n - 1].value);
                if p.value == b {
                    continue;
                }
                if (b - a) * (p.value - b) > 0.0 {
                    // Still moving the same way; extend the run.
                    out[n - 1] = p;
                } else {
                    out.push(p);
                }
            }
        }
    }
    if out.len() == 1 && points.len() > 1 {
        out.push(*points.last().unwrap());
    }
    out
}

/// Counts cycles over a turning point series.
pub fn rainflow_cycles(tp: &TurningPointSeries) -> CycleSet {
    let points: Vec<Point> = tp
        .indices
        .iter()
        .zip(&tp.values)
        .map(|(&index, &value)| Point { index, value })
        .collect();
    let mut cycles = Vec::new();

    let mut stack: Vec<Point> = Vec::with_capacity(points.len());
    for &p in &points {
        stack.push(p);
        while stack.len() >= 3 {
            let n = stack.len();
            let x = (stack[n - 1].value - stack[n - 2].value).abs();
            let y = (stack[n - 2].value - stack[n - 3].value).abs();
            if x < y || n == 3 {
                break;
            }
            cycles.push(RainflowCycle::between(stack[n - 3], stack[n - 2], CycleKind::Full));
            stack.drain(n - 3..n - 1);
        }
    }

    match stack.len() {
        0 | 1 => {}
        2 => cycles.push(RainflowCycle::between(stack[0], stack[1], CycleKind::Half)),
        _ => match close_residue(&stack) {
            Some(mut closed) => cycles.append(&mut closed),
            None => cycles.extend(
                stack
                    .windows(2)
                    .map(|w| RainflowCycle::between(w[0], w[1], CycleKind::Half)),
            ),
        },
    }
    CycleSet { cycles }
}

/// Counts the residue as a closed loop starting and ending at its maximum.
/// Returns `None` when closing the loop would drop a turning point.
fn close_residue(residue: &[Point]) -> Option<Vec<RainflowCycle>> {
    if residue[0].value == residue[residue.len() - 1].value {
        return None;
    }
    let start = residue
        .iter()
        .enumerate()
        .fold(0, |best, (i, p)| if p.value > residue[best].value { i } else { best });
    let mut looped: Vec<Point> = residue[start..].iter().chain(&residue[..start]).copied().collect();
    looped.push(residue[start]);
    let reduced = turning(&looped);
    if reduced.len() != looped.len() {
        return None;
    }

    let mut cycles = Vec::new();
    let mut stack: Vec<Point> = Vec::with_capacity(looped.len());
    for p in looped {
        stack.push(p);
        while stack.len() >= 3 {
            let n = stack.len();
            let x = (stack[n - 1].value - stack[n - 2].value).abs();
            let y = (stack[n - 2].value - stack[n - 3].value).abs();
            if x < y {
                break;
            }
            cycles.push(RainflowCycle::between(stack[n - 3], stack[n - 2], CycleKind::Full));
            stack.drain(n - 3..n - 1);
        }
    }
    if stack.len() > 1 {
        return None;
    }
    Some(cycles)
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct BatteryKpis {
    /// Mean range of discharge cycles, as a fraction of capacity.
    pub avg_dod: f64,
    /// Mean length of discharge cycles, in timesteps.
    pub avg_discharge_duration: f64,
}

/// Depth-of-discharge metrics of one SoC series (fractions of `capacity`).
pub fn battery_kpis(soc: &[f64], capacity: f64) -> Result<BatteryKpis> {
    if !(capacity > 0.0) {
        return Err(Error::InvalidArgument(format!("battery capacity {capacity} must be positive")));
    }
    if soc.iter().any(|v| !(0.0..=1.0).contains(v)) {
        return Err(Error::InvalidArgument("state of charge outside [0, 1]".into()));
    }
    if soc.len() < 2 {
        return Ok(BatteryKpis::default());
    }
    let set = rainflow_cycles(&extract_turning_points(soc)?);
    let (mut n, mut dod, mut dur) = (0usize, 0.0, 0.0);
    for c in set.discharges() {
        n += 1;
        dod += c.range;
        dur += c.duration() as f64;
    }
    if n == 0 {
        return Ok(BatteryKpis::default());
    }
    Ok(BatteryKpis {
        avg_dod: dod / n as f64,
        avg_discharge_duration: dur / n as f64,
    })
}

/// Battery metrics of every building in a trace, averaged over buildings.
pub fn district_battery_kpis(trace: &EpisodeTrace) -> Result<BatteryKpis> {
    if trace.buildings.is_empty() {
        return Err(Error::EmptyInput("buildings"));
    }
    let mut acc = BatteryKpis::default();
    for b in &trace.buildings {
        let k = battery_kpis(&b.elec_soc, 1.0)?;
        acc.avg_dod += k.avg_dod;
        acc.avg_discharge_duration += k.avg_discharge_duration;
    }
    let n = trace.buildings.len() as f64;
    acc.avg_dod /= n;
    acc.avg_discharge_duration /= n;
    Ok(acc)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    const EXAMPLE: [f64; 8] = [0.1, 0.5, 0.3, 0.8, 0.2, 0.6, 0.4, 0.7];

    fn sorted(mut v: Vec<f64>) -> Vec<f64> {
        v.sort_by(|a, b| a.partial_cmp(b).unwrap());
        v
    }

    fn rounded(v: Vec<f64>) -> Vec<i64> {
        v.into_iter().map(|x| (x * 100.0).round() as i64).collect()
    }

    #[test]
    fn example_turning_points() {
        let tp = extract_turning_points(&EXAMPLE).unwrap();
        assert_eq!(tp.indices, (0..8).collect::<Vec<_>>());
    }

    #[test]
    fn monotone_and_flat() {
        let mono: Vec<f64> = (0..=10).map(|i| i as f64 / 10.0).collect();
        assert_eq!(extract_turning_points(&mono).unwrap().indices, vec![0, 10]);
        assert_eq!(extract_turning_points(&[0.5, 0.5, 0.5]).unwrap().indices, vec![0, 2]);
        assert!(extract_turning_points(&[0.5]).is_err());
    }

    #[test]
    fn plateau_takes_first_index() {
        let tp = extract_turning_points(&[0.2, 0.6, 0.6, 0.6, 0.1]).unwrap();
        assert_eq!(tp.indices, vec![0, 1, 4]);
    }

    #[test]
    fn example_cycles() {
        let set = rainflow_cycles(&extract_turning_points(&EXAMPLE).unwrap());
        let mut pairs: Vec<(usize, usize, i64)> = set
            .cycles
            .iter()
            .map(|c| (c.from_index, c.to_index, (c.range * 100.0).round() as i64))
            .collect();
        pairs.sort();
        assert_eq!(pairs, vec![(0, 3, 70), (1, 2, 20), (4, 7, 50), (5, 6, 20)]);
        assert!(set.cycles.iter().all(|c| c.kind == CycleKind::Full));
        assert_eq!(rounded(sorted(set.reversals())), vec![20, 20, 20, 20, 50, 50, 70, 70]);
    }

    #[test]
    fn example_kpis() {
        let k = battery_kpis(&EXAMPLE, 1.0).unwrap();
        assert_relative_eq!(k.avg_dod, 0.2, epsilon = 1e-12);
        assert_relative_eq!(k.avg_discharge_duration, 1.0);
    }

    #[test]
    fn degenerate_series() {
        let set = rainflow_cycles(&extract_turning_points(&[0.0, 1.0]).unwrap());
        assert_eq!(set.cycles.len(), 1);
        assert_eq!(set.cycles[0].kind, CycleKind::Half);
        assert_eq!(set.cycles[0].range, 1.0);
        let mono: Vec<f64> = (0..=10).map(|i| i as f64 / 10.0).collect();
        assert_eq!(battery_kpis(&mono, 6.0).unwrap(), BatteryKpis::default());
    }

    #[test]
    fn single_discharge() {
        let k = battery_kpis(&[1.0, 0.4, 1.0], 6.0).unwrap();
        assert_relative_eq!(k.avg_dod, 0.6, epsilon = 1e-12);
        assert_eq!(k.avg_discharge_duration, 1.0);
    }

    #[test]
    fn csv_columns() {
        let set = rainflow_cycles(&extract_turning_points(&EXAMPLE).unwrap());
        let mut buf = Vec::new();
        set.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("from_index,to_index,from_value,to_value,range,kind,direction\n"));
        assert!(text.contains(",full,discharge"));
    }

    #[test]
    fn rejects_bad_input() {
        assert!(battery_kpis(&[0.2, 1.2], 1.0).is_err());
        assert!(battery_kpis(&[0.2, 0.4], 0.0).is_err());
    }

    fn soc_series() -> impl Strategy<Value = Vec<f64>> {
        prop::collection::vec(0.0f64..=1.0, 2..120)
    }

    fn quantized() -> impl Strategy<Value = Vec<f64>> {
        prop::collection::vec(0u8..=10, 2..60).prop_map(|v| v.into_iter().map(|x| x as f64 / 10.0).collect())
    }

    proptest! {
        #[test]
        fn ranges_within_amplitude(soc in soc_series()) {
            let set = rainflow_cycles(&extract_turning_points(&soc).unwrap());
            let hi = soc.iter().copied().fold(f64::MIN, f64::max);
            let lo = soc.iter().copied().fold(f64::MAX, f64::min);
            for c in &set.cycles {
                prop_assert!(c.range <= hi - lo + 1e-12);
                prop_assert!(c.from_index < c.to_index);
            }
        }

        #[test]
        fn reversals_pair_up(soc in soc_series()) {
            let set = rainflow_cycles(&extract_turning_points(&soc).unwrap());
            let revs = set.reversals();
            for c in set.cycles.iter().filter(|c| c.kind == CycleKind::Full) {
                prop_assert!(revs.iter().filter(|r| **r == c.range).count() >= 2);
            }
        }

        #[test]
        fn every_turning_point_used(soc in soc_series()) {
            let tp = extract_turning_points(&soc).unwrap();
            let set = rainflow_cycles(&tp);
            for i in &tp.indices {
                prop_assert!(set.cycles.iter().any(|c| c.from_index == *i || c.to_index == *i));
            }
        }

        #[test]
        fn turning_points_alternate(soc in quantized()) {
            let tp = extract_turning_points(&soc).unwrap();
            prop_assert_eq!(tp.indices[0], 0);
            prop_assert_eq!(*tp.indices.last().unwrap(), soc.len() - 1);
            for w in tp.values.windows(3) {
                prop_assert!((w[1] - w[0]) * (w[2] - w[1]) < 0.0);
            }
        }

        #[test]
        fn translation_invariant(v in prop::collection::vec(0u8..=50, 2..60), shift in 0u8..=50) {
            let base: Vec<f64> = v.iter().map(|x| *x as f64 / 100.0).collect();
            let moved: Vec<f64> = v.iter().map(|x| (*x + shift) as f64 / 100.0).collect();
            let a = rainflow_cycles(&extract_turning_points(&base).unwrap());
            let b = rainflow_cycles(&extract_turning_points(&moved).unwrap());
            prop_assert_eq!(rounded(sorted(a.reversals())), rounded(sorted(b.reversals())));
        }

        #[test]
        fn reflection_swaps_direction(soc in quantized()) {
            let flipped: Vec<f64> = soc.iter().map(|x| 1.0 - x).collect();
            let a = rainflow_cycles(&extract_turning_points(&soc).unwrap());
            let b = rainflow_cycles(&extract_turning_points(&flipped).unwrap());
            prop_assert_eq!(rounded(sorted(a.reversals())), rounded(sorted(b.reversals())));
            let ranges = |s: &CycleSet, d: Direction| {
                rounded(sorted(s.cycles.iter().filter(|c| c.range > 0.0 && c.direction == d).map(|c| c.range).collect()))
            };
            prop_assert_eq!(ranges(&a, Direction::Charge), ranges(&b, Direction::Discharge));
            prop_assert_eq!(ranges(&a, Direction::Discharge), ranges(&b, Direction::Charge));
        }
    }
}
