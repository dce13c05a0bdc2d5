use std::collections::HashMap;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{BuildingSeries, DatasetBundle, ForecastLead, TimeSeriesColumn, Unit, WeatherSeries};
use crate::error::{Error, Result};
use crate::sim::BuildingParams;

const SCHEMA_FILE: &str = "schema.txt";
const WEATHER_FILE: &str = "weather.csv";
const PRICING_FILE: &str = "pricing.csv";
const CARBON_FILE: &str = "carbon_intensity.csv";

/// Contents of `schema.txt`: a TOML document declaring the district layout.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SchemaDescriptor {
    pub format_version: u32,
    pub timestep_hours: u32,
    pub building_count: usize,
    pub buildings: Vec<BuildingParams>,
}

fn building_file(i: usize) -> String {
    format!("building_{}.csv", i + 1)
}

/// Parsed CSV keyed by header name, with source positions for diagnostics.
struct Table {
    file: String,
    columns: HashMap<String, Vec<f64>>,
}

impl Table {
    fn read(dir: &Path, file: &str) -> Result<Self> {
        let path = dir.join(file);
        if !path.is_file() {
            return Err(Error::MissingFile(path));
        }
        let mut reader = csv::ReaderBuilder::new()
            .has_headers(true)
            .trim(csv::Trim::All)
            .flexible(true)
            .from_path(&path)?;
        let headers: Vec<String> = reader.headers()?.iter().map(str::to_string).collect();
        let mut values: Vec<Vec<f64>> = vec![Vec::new(); headers.len()];
        for (row, record) in reader.records().enumerate() {
            let record = record?;
            for (j, name) in headers.iter().enumerate() {
                // Short rows leave the trailing columns short; the length
                // check below reports them by name.
                let Some(cell) = record.get(j) else { continue };
                if cell.is_empty() {
                    continue;
                }
                let v: f64 = cell.parse().map_err(|_| Error::InvalidCell {
                    file: file.to_string(),
                    row: row + 1,
                    column: name.clone(),
                    message: format!("cannot parse `{cell}` as a number"),
                })?;
                values[j].push(v);
            }
        }
        Ok(Self {
            file: file.to_string(),
            columns: headers.into_iter().zip(values).collect(),
        })
    }

    fn take(&mut self, name: &str, unit: Unit) -> Result<TimeSeriesColumn> {
        let values = self.columns.remove(name).ok_or_else(|| Error::MissingColumn {
            file: self.file.clone(),
            column: name.to_string(),
        })?;
        Ok(TimeSeriesColumn::new(name, unit, values))
    }

    /// Checks that the materialized forecast columns agree with the shifted
    /// base column, when present.
    fn check_forecasts(&mut self, base: &TimeSeriesColumn) -> Result<()> {
        for lead in ForecastLead::ALL {
            let name = format!("{}_predicted_{}h", base.name, lead.hours());
            let Some(values) = self.columns.remove(&name) else {
                continue;
            };
            if values.len() != base.len() {
                return Err(Error::LengthMismatch {
                    file: self.file.clone(),
                    column: name,
                    expected: base.len(),
                    found: values.len(),
                });
            }
            let expected = base.forecast_column(lead.hours());
            if let Some(row) = values
                .iter()
                .zip(&expected)
                .position(|(a, b)| (a - b).abs() > 1e-9)
            {
                return Err(Error::InvalidCell {
                    file: self.file.clone(),
                    row: row + 1,
                    column: name,
                    message: "forecast column is not the base column shifted by its lead".into(),
                });
            }
        }
        Ok(())
    }
}

/// Reads and validates a dataset directory.
pub fn load_dataset(root: impl AsRef<Path>) -> Result<DatasetBundle> {
    let dir = root.as_ref();

    let mut weather = Table::read(dir, WEATHER_FILE)?;
    let mut pricing_t = Table::read(dir, PRICING_FILE)?;
    let mut carbon_t = Table::read(dir, CARBON_FILE)?;

    let schema_path = dir.join(SCHEMA_FILE);
    let schema_text =
        fs::read_to_string(&schema_path).map_err(|e| match e.kind() {
            std::io::ErrorKind::NotFound => Error::MissingFile(schema_path.clone()),
            _ => Error::io(&schema_path, e),
        })?;
    let schema: SchemaDescriptor =
        toml::from_str(&schema_text).map_err(|e| Error::InvalidSchema(e.to_string()))?;
    if schema.timestep_hours != 1 {
        return Err(Error::InvalidSchema(format!(
            "timestep_hours = {}, only hourly data is supported",
            schema.timestep_hours
        )));
    }

    let hour = weather.take("hour", Unit::Count)?;
    let day_type = weather.take("day_type", Unit::Count)?;
    let outdoor_temp = weather.take("outdoor_dry_bulb_temperature", Unit::Celsius)?;
    let diffuse = weather.take("diffuse_solar_irradiance", Unit::WattsPerSquareMetre)?;
    let direct = weather.take("direct_solar_irradiance", Unit::WattsPerSquareMetre)?;
    let horizon = outdoor_temp.len();
    for col in [&hour, &day_type, &outdoor_temp, &diffuse, &direct] {
        check_len(WEATHER_FILE, col, horizon)?;
        weather.check_forecasts(col)?;
    }

    let pricing = pricing_t.take("electricity_pricing", Unit::DollarsPerKwh)?;
    check_len(PRICING_FILE, &pricing, horizon)?;
    pricing_t.check_forecasts(&pricing)?;
    let carbon = carbon_t.take("carbon_intensity", Unit::KgCo2PerKwh)?;
    check_len(CARBON_FILE, &carbon, horizon)?;

    let mut buildings = Vec::new();
    while dir.join(building_file(buildings.len())).is_file() {
        let file = building_file(buildings.len());
        let mut t = Table::read(dir, &file)?;
        let b = BuildingSeries {
            non_shiftable_load: t.take("non_shiftable_load", Unit::Kwh)?,
            solar_generation: t.take("solar_generation", Unit::Kwh)?,
            cooling_demand: t.take("cooling_demand", Unit::Kwh)?,
            dhw_demand: t.take("dhw_demand", Unit::Kwh)?,
            occupant_count: t.take("occupant_count", Unit::Count)?,
            setpoint: t.take("indoor_dry_bulb_temperature_set_point", Unit::Celsius)?,
            power_outage: t.take("power_outage", Unit::Flag)?,
        };
        for col in b.columns() {
            check_len(&file, col, horizon)?;
        }
        buildings.push(b);
    }
    if buildings.is_empty() {
        return Err(Error::MissingFile(dir.join(building_file(0))));
    }
    if schema.building_count != buildings.len() || schema.buildings.len() != buildings.len() {
        return Err(Error::InvalidSchema(format!(
            "schema declares {} buildings ({} parameter blocks) but {} building files exist",
            schema.building_count,
            schema.buildings.len(),
            buildings.len()
        )));
    }

    DatasetBundle::new(
        WeatherSeries {
            hour,
            day_type,
            outdoor_temp,
            diffuse_irradiance: diffuse,
            direct_irradiance: direct,
        },
        pricing,
        carbon,
        buildings,
        schema.buildings,
    )
}

fn check_len(file: &str, col: &TimeSeriesColumn, expected: usize) -> Result<()> {
    if col.len() != expected {
        return Err(Error::LengthMismatch {
            file: file.to_string(),
            column: col.name.clone(),
            expected,
            found: col.len(),
        });
    }
    Ok(())
}

fn write_table(path: &Path, columns: &[(String, Vec<f64>)]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(columns.iter().map(|(n, _)| n.as_str()))?;
    let rows = columns.first().map_or(0, |(_, v)| v.len());
    for t in 0..rows {
        w.write_record(columns.iter().map(|(_, v)| v[t].to_string()))?;
    }
    w.flush().map_err(|e| Error::io(path, e))?;
    Ok(())
}

fn with_forecasts(col: &TimeSeriesColumn) -> Vec<(String, Vec<f64>)> {
    let mut out = vec![(col.name.clone(), col.values.clone())];
    for lead in ForecastLead::ALL {
        out.push((
            format!("{}_predicted_{}h", col.name, lead.hours()),
            col.forecast_column(lead.hours()),
        ));
    }
    out
}

fn plain(col: &TimeSeriesColumn) -> (String, Vec<f64>) {
    (col.name.clone(), col.values.clone())
}

/// Writes `bundle` in the directory layout read by [`load_dataset`].
pub fn write_dataset(bundle: &DatasetBundle, root: impl AsRef<Path>) -> Result<()> {
    let dir = root.as_ref();
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;

    let schema = SchemaDescriptor {
        format_version: 1,
        timestep_hours: 1,
        building_count: bundle.n_buildings(),
        buildings: bundle.params.clone(),
    };
    let text = toml::to_string(&schema).map_err(|e| Error::InvalidSchema(e.to_string()))?;
    let schema_path = dir.join(SCHEMA_FILE);
    fs::write(&schema_path, text).map_err(|e| Error::io(&schema_path, e))?;

    let w = &bundle.weather;
    let mut weather = vec![plain(&w.hour), plain(&w.day_type)];
    weather.extend(with_forecasts(&w.outdoor_temp));
    weather.extend(with_forecasts(&w.diffuse_irradiance));
    weather.extend(with_forecasts(&w.direct_irradiance));
    write_table(&dir.join(WEATHER_FILE), &weather)?;
    write_table(&dir.join(PRICING_FILE), &with_forecasts(&bundle.pricing))?;
    write_table(&dir.join(CARBON_FILE), &[plain(&bundle.carbon_intensity)])?;
    for (i, b) in bundle.buildings.iter().enumerate() {
        let cols: Vec<_> = b.columns().iter().map(|c| plain(c)).collect();
        write_table(&dir.join(building_file(i)), &cols)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::generate_synthetic_dataset;

    #[test]
    fn round_trip_preserves_values() {
        let bundle = generate_synthetic_dataset(3, 3, 96).unwrap();
        let dir = tempfile::tempdir().unwrap();
        write_dataset(&bundle, dir.path()).unwrap();
        let loaded = load_dataset(dir.path()).unwrap();
        assert_eq!(loaded.n_buildings(), 3);
        assert_eq!(loaded.horizon(), 96);
        assert_eq!(loaded, bundle);
    }

    #[test]
    fn empty_directory_names_weather_csv() {
        let dir = tempfile::tempdir().unwrap();
        let err = load_dataset(dir.path()).unwrap_err();
        assert!(err.to_string().contains("weather.csv"), "{err}");
    }

    #[test]
    fn short_column_reports_length_mismatch() {
        let bundle = generate_synthetic_dataset(1, 2, 48).unwrap();
        let dir = tempfile::tempdir().unwrap();
        write_dataset(&bundle, dir.path()).unwrap();
        let path = dir.path().join("building_2.csv");
        let text = fs::read_to_string(&path).unwrap();
        let mut lines: Vec<String> = text.lines().map(str::to_string).collect();
        // Blank the last cell (power_outage) of the final row.
        let last = lines.last_mut().unwrap();
        let cut = last.rfind(',').unwrap();
        last.truncate(cut + 1);
        fs::write(&path, lines.join("\n") + "\n").unwrap();
        match load_dataset(dir.path()).unwrap_err() {
            Error::LengthMismatch { file, column, expected, found } => {
                assert_eq!(file, "building_2.csv");
                assert_eq!(column, "power_outage");
                assert_eq!((expected, found), (48, 47));
            }
            other => panic!("unexpected error {other}"),
        }
    }

    #[test]
    fn unparseable_cell_is_located() {
        let bundle = generate_synthetic_dataset(1, 1, 48).unwrap();
        let dir = tempfile::tempdir().unwrap();
        write_dataset(&bundle, dir.path()).unwrap();
        let path = dir.path().join("carbon_intensity.csv");
        let text = fs::read_to_string(&path).unwrap();
        let mut lines: Vec<&str> = text.lines().collect();
        lines[3] = "abc";
        fs::write(&path, lines.join("\n")).unwrap();
        match load_dataset(dir.path()).unwrap_err() {
            Error::InvalidCell { file, row, column, .. } => {
                assert_eq!(file, "carbon_intensity.csv");
                assert_eq!(row, 3);
                assert_eq!(column, "carbon_intensity");
            }
            other => panic!("unexpected error {other}"),
        }
    }

    #[test]
    fn negative_price_rejected() {
        let bundle = generate_synthetic_dataset(1, 1, 48).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let mut bad = bundle.clone();
        bad.pricing.values[5] = -0.1;
        // Bypass constructor validation by writing directly.
        write_dataset(&bad, dir.path()).unwrap();
        let err = load_dataset(dir.path()).unwrap_err();
        assert!(matches!(err, Error::InvalidCell { ref column, .. } if column == "electricity_pricing"), "{err}");
    }
}
