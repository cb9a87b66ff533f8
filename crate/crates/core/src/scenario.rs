//! Problem instances: airports, fleet, flight connections, demand and
//! irradiance on a uniform time grid.
//!
//! A scenario is read from a JSON document (see [`ScenarioDocument`]) and
//! checked field by field before anything downstream sees it. Internal units
//! are kW, kWh and minutes throughout; irradiance stays in W/m² until the
//! airport model converts it.

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::path::Path;

use chrono::{NaiveDate, NaiveDateTime, Timelike};
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const MINUTES_PER_DAY: u32 = 24 * 60;

const DEFAULT_BESS_INIT_SOC: f64 = 0.5;
const DEFAULT_K_MAX: u32 = 1;

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("parse error at line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("invalid value for `{field}`: {message}")]
    Invalid { field: String, message: String },
    #[error("`{field}` references unknown {kind} `{id}`")]
    UnknownReference {
        field: String,
        kind: &'static str,
        id: String,
    },
    #[error("irradiance: {0}")]
    Irradiance(String),
}

fn invalid(field: impl Into<String>, message: impl Into<String>) -> ScenarioError {
    ScenarioError::Invalid {
        field: field.into(),
        message: message.into(),
    }
}

/// Uniform discretization of one day plus the contiguous operations window.
///
/// Power quantities live on the `day_steps` intervals of the day; energy
/// states live on the `day_steps + 1` boundaries between them. The
/// operations window covers steps `ops_start_index..ops_end_index`, so the
/// flight graph has `ops_end_index - ops_start_index + 1` time layers.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct TimeGrid {
    pub dt_minutes: u32,
    pub day_steps: usize,
    pub ops_start_index: usize,
    pub ops_end_index: usize,
}

impl TimeGrid {
    pub fn new(dt_minutes: u32, ops_start_index: usize, ops_end_index: usize) -> Result<Self, ScenarioError> {
        if dt_minutes == 0 || MINUTES_PER_DAY % dt_minutes != 0 {
            return Err(invalid(
                "time.dt_minutes",
                format!("{dt_minutes} must be positive and divide 1440 exactly"),
            ));
        }
        let day_steps = (MINUTES_PER_DAY / dt_minutes) as usize;
        if ops_start_index >= ops_end_index || ops_end_index > day_steps {
            return Err(invalid(
                "time.ops_end_index",
                format!(
                    "operations window {ops_start_index}..{ops_end_index} must satisfy \
                     0 <= start < end <= {day_steps}"
                ),
            ));
        }
        Ok(Self {
            dt_minutes,
            day_steps,
            ops_start_index,
            ops_end_index,
        })
    }

    pub fn dt_hours(&self) -> f64 {
        f64::from(self.dt_minutes) / 60.0
    }

    /// Number of time layers in the operations window (|T|).
    pub fn ops_layers(&self) -> usize {
        self.ops_end_index - self.ops_start_index + 1
    }

    /// Number of steps between consecutive operations layers (|T| - 1).
    pub fn ops_steps(&self) -> usize {
        self.ops_end_index - self.ops_start_index
    }

    pub fn is_ops_step(&self, day_step: usize) -> bool {
        (self.ops_start_index..self.ops_end_index).contains(&day_step)
    }

    /// Day step of operations layer transition `layer_step`.
    pub fn day_step(&self, layer_step: usize) -> usize {
        self.ops_start_index + layer_step
    }

    pub fn step_midpoint_minutes(&self, day_step: usize) -> f64 {
        (day_step as f64 + 0.5) * f64::from(self.dt_minutes)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AirportSpec {
    pub id: String,
    pub solar_area_m2: f64,
    pub solar_efficiency: f64,
    pub bess_capacity_kwh: f64,
    pub bess_min_kwh: f64,
    pub bess_power_min_kw: f64,
    pub bess_power_max_kw: f64,
    pub bess_efficiency: f64,
    pub apron_power_max_kw: f64,
    #[serde(default)]
    pub aux_power_kw: f64,
    #[serde(default = "default_bess_init_soc")]
    pub bess_init_soc_frac: f64,
}

fn default_bess_init_soc() -> f64 {
    DEFAULT_BESS_INIT_SOC
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AircraftSpec {
    pub id: String,
    pub mass_kg: f64,
    pub lift_over_drag: f64,
    pub eta_takeoff: f64,
    pub eta_cruise: f64,
    pub cruise_altitude_m: f64,
    pub battery_capacity_kwh: f64,
    pub charge_power_max_kw: f64,
    pub initial_energy_kwh: f64,
    pub origin_airport: String,
    pub destination_airport: String,
    /// Optional lower bound on the energy left at the end of operations.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub final_energy_min_kwh: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FlightConnection {
    pub id: String,
    pub origin: String,
    pub destination: String,
    pub distance_km: f64,
    pub block_time_minutes: f64,
    pub demand_per_day: u32,
}

/// Solar irradiance per airport id, W/m², one value per day step.
pub type IrradianceSeries = BTreeMap<String, Vec<f64>>;

/// One movement of a given timetable, used by the fixed-schedule baseline.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FixedMovement {
    pub flight: String,
    /// Day step at which the aircraft leaves the origin.
    pub departure_step: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub aircraft: Option<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub name: Option<String>,
    pub time_grid: TimeGrid,
    pub airports: Vec<AirportSpec>,
    pub fleet: Vec<AircraftSpec>,
    pub flights: Vec<FlightConnection>,
    pub irradiance: IrradianceSeries,
    pub k_max: u32,
    pub fixed_schedule: Option<Vec<FixedMovement>>,
}

// ---------------------------------------------------------------------------
// File schema
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TimeDocument {
    pub dt_minutes: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub day_steps: Option<usize>,
    pub ops_start_index: usize,
    pub ops_end_index: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FlightDocument {
    pub id: String,
    pub origin: String,
    pub destination: String,
    pub distance_km: f64,
    pub block_time_minutes: f64,
}

/// On-disk JSON layout of a scenario.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioDocument {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    pub time: TimeDocument,
    pub airports: Vec<AirportSpec>,
    pub fleet: Vec<AircraftSpec>,
    pub flights: Vec<FlightDocument>,
    #[serde(default)]
    pub demand: BTreeMap<String, serde_json::Number>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub k_max: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub irradiance: Option<IrradianceSeries>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fixed_schedule: Option<Vec<FixedMovement>>,
}

pub fn load_scenario(path: impl AsRef<Path>) -> Result<Scenario, ScenarioError> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|source| ScenarioError::Io {
        path: path.display().to_string(),
        source,
    })?;
    parse_scenario(&text)
}

pub fn parse_scenario(text: &str) -> Result<Scenario, ScenarioError> {
    let doc: ScenarioDocument = serde_json::from_str(text).map_err(|e| ScenarioError::Parse {
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    })?;
    Scenario::from_document(doc)
}

impl Scenario {
    pub fn from_document(doc: ScenarioDocument) -> Result<Self, ScenarioError> {
        let time_grid = TimeGrid::new(
            doc.time.dt_minutes,
            doc.time.ops_start_index,
            doc.time.ops_end_index,
        )?;
        if let Some(day_steps) = doc.time.day_steps {
            if day_steps != time_grid.day_steps {
                return Err(invalid(
                    "time.day_steps",
                    format!(
                        "{day_steps} disagrees with dt_minutes (expected {})",
                        time_grid.day_steps
                    ),
                ));
            }
        }

        let flight_ids: BTreeSet<&str> = doc.flights.iter().map(|f| f.id.as_str()).collect();
        let mut demand = BTreeMap::new();
        for (id, value) in &doc.demand {
            if !flight_ids.contains(id.as_str()) {
                return Err(ScenarioError::UnknownReference {
                    field: format!("demand.{id}"),
                    kind: "flight",
                    id: id.clone(),
                });
            }
            demand.insert(id.clone(), parse_demand(id, value)?);
        }

        let flights = doc
            .flights
            .into_iter()
            .map(|f| FlightConnection {
                demand_per_day: demand.get(&f.id).copied().unwrap_or(0),
                id: f.id,
                origin: f.origin,
                destination: f.destination,
                distance_km: f.distance_km,
                block_time_minutes: f.block_time_minutes,
            })
            .collect();

        let scenario = Scenario {
            name: doc.name,
            time_grid,
            airports: doc.airports,
            fleet: doc.fleet,
            flights,
            irradiance: doc.irradiance.unwrap_or_default(),
            k_max: doc.k_max.unwrap_or(DEFAULT_K_MAX),
            fixed_schedule: doc.fixed_schedule,
        };
        scenario.validate()?;
        Ok(scenario)
    }

    pub fn to_document(&self) -> ScenarioDocument {
        ScenarioDocument {
            name: self.name.clone(),
            time: TimeDocument {
                dt_minutes: self.time_grid.dt_minutes,
                day_steps: Some(self.time_grid.day_steps),
                ops_start_index: self.time_grid.ops_start_index,
                ops_end_index: self.time_grid.ops_end_index,
            },
            airports: self.airports.clone(),
            fleet: self.fleet.clone(),
            flights: self
                .flights
                .iter()
                .map(|f| FlightDocument {
                    id: f.id.clone(),
                    origin: f.origin.clone(),
                    destination: f.destination.clone(),
                    distance_km: f.distance_km,
                    block_time_minutes: f.block_time_minutes,
                })
                .collect(),
            demand: self
                .flights
                .iter()
                .map(|f| (f.id.clone(), serde_json::Number::from(f.demand_per_day)))
                .collect(),
            k_max: Some(self.k_max),
            irradiance: (!self.irradiance.is_empty()).then(|| self.irradiance.clone()),
            fixed_schedule: self.fixed_schedule.clone(),
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.to_document()).expect("scenario serializes")
    }

    pub fn airport_index(&self, id: &str) -> Option<usize> {
        self.airports.iter().position(|a| a.id == id)
    }

    pub fn flight_index(&self, id: &str) -> Option<usize> {
        self.flights.iter().position(|f| f.id == id)
    }

    pub fn aircraft_index(&self, id: &str) -> Option<usize> {
        self.fleet.iter().position(|k| k.id == id)
    }

    /// Irradiance for airport `index`, or an error when the series is
    /// missing or has the wrong length.
    pub fn irradiance_for(&self, index: usize) -> Result<&[f64], ScenarioError> {
        let id = &self.airports[index].id;
        let series = self
            .irradiance
            .get(id)
            .ok_or_else(|| ScenarioError::Irradiance(format!("no irradiance series for airport `{id}`")))?;
        Ok(series.as_slice())
    }

    /// Replace the irradiance table; lengths and signs are re-checked.
    pub fn with_irradiance(mut self, irradiance: IrradianceSeries) -> Result<Self, ScenarioError> {
        self.irradiance = irradiance;
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<(), ScenarioError> {
        let mut airport_ids = BTreeSet::new();
        for (i, a) in self.airports.iter().enumerate() {
            let field = |name: &str| format!("airports[{i}].{name}");
            if !airport_ids.insert(a.id.as_str()) {
                return Err(invalid(field("id"), format!("duplicate airport `{}`", a.id)));
            }
            for (name, value) in [
                ("solar_area_m2", a.solar_area_m2),
                ("bess_capacity_kwh", a.bess_capacity_kwh),
                ("bess_min_kwh", a.bess_min_kwh),
                ("apron_power_max_kw", a.apron_power_max_kw),
                ("aux_power_kw", a.aux_power_kw),
            ] {
                non_negative(&field(name), value)?;
            }
            unit_efficiency(&field("solar_efficiency"), a.solar_efficiency)?;
            unit_efficiency(&field("bess_efficiency"), a.bess_efficiency)?;
            if !(0.0..=1.0).contains(&a.bess_init_soc_frac) {
                return Err(invalid(field("bess_init_soc_frac"), "must lie in [0, 1]"));
            }
            if !(a.bess_power_min_kw <= 0.0 && a.bess_power_max_kw >= 0.0) {
                return Err(invalid(
                    field("bess_power_min_kw"),
                    "battery power limits must satisfy min <= 0 <= max",
                ));
            }
            let floor = a.bess_init_soc_frac * a.bess_capacity_kwh;
            if a.bess_min_kwh > floor + 1e-9 || a.bess_min_kwh > a.bess_capacity_kwh {
                return Err(invalid(
                    field("bess_min_kwh"),
                    "need bess_min_kwh <= bess_init_soc_frac * bess_capacity_kwh <= bess_capacity_kwh",
                ));
            }
        }

        let mut aircraft_ids = BTreeSet::new();
        for (i, k) in self.fleet.iter().enumerate() {
            let field = |name: &str| format!("fleet[{i}].{name}");
            if !aircraft_ids.insert(k.id.as_str()) {
                return Err(invalid(field("id"), format!("duplicate aircraft `{}`", k.id)));
            }
            positive(&field("mass_kg"), k.mass_kg)?;
            positive(&field("lift_over_drag"), k.lift_over_drag)?;
            unit_efficiency(&field("eta_takeoff"), k.eta_takeoff)?;
            unit_efficiency(&field("eta_cruise"), k.eta_cruise)?;
            non_negative(&field("cruise_altitude_m"), k.cruise_altitude_m)?;
            non_negative(&field("battery_capacity_kwh"), k.battery_capacity_kwh)?;
            non_negative(&field("charge_power_max_kw"), k.charge_power_max_kw)?;
            if !(0.0..=k.battery_capacity_kwh).contains(&k.initial_energy_kwh) {
                return Err(invalid(
                    field("initial_energy_kwh"),
                    "must lie in [0, battery_capacity_kwh]",
                ));
            }
            if let Some(min) = k.final_energy_min_kwh {
                if !(0.0..=k.battery_capacity_kwh).contains(&min) {
                    return Err(invalid(
                        field("final_energy_min_kwh"),
                        "must lie in [0, battery_capacity_kwh]",
                    ));
                }
            }
            for (name, id) in [
                ("origin_airport", &k.origin_airport),
                ("destination_airport", &k.destination_airport),
            ] {
                if !airport_ids.contains(id.as_str()) {
                    return Err(ScenarioError::UnknownReference {
                        field: field(name),
                        kind: "airport",
                        id: id.clone(),
                    });
                }
            }
        }

        let mut flight_ids = BTreeSet::new();
        for (i, f) in self.flights.iter().enumerate() {
            let field = |name: &str| format!("flights[{i}].{name}");
            if !flight_ids.insert(f.id.as_str()) {
                return Err(invalid(field("id"), format!("duplicate flight `{}`", f.id)));
            }
            for (name, id) in [("origin", &f.origin), ("destination", &f.destination)] {
                if !airport_ids.contains(id.as_str()) {
                    return Err(ScenarioError::UnknownReference {
                        field: field(name),
                        kind: "airport",
                        id: id.clone(),
                    });
                }
            }
            if f.origin == f.destination {
                return Err(invalid(field("destination"), "origin ≠ destination violated"));
            }
            positive(&field("distance_km"), f.distance_km)?;
            positive(&field("block_time_minutes"), f.block_time_minutes)?;
        }

        for (id, series) in &self.irradiance {
            if !airport_ids.contains(id.as_str()) {
                return Err(ScenarioError::UnknownReference {
                    field: format!("irradiance.{id}"),
                    kind: "airport",
                    id: id.clone(),
                });
            }
            if series.len() != self.time_grid.day_steps {
                return Err(ScenarioError::Irradiance(format!(
                    "series for `{id}` has {} values, expected {}",
                    series.len(),
                    self.time_grid.day_steps
                )));
            }
            if let Some(v) = series.iter().find(|v| !(v.is_finite() && **v >= 0.0)) {
                return Err(ScenarioError::Irradiance(format!(
                    "series for `{id}` contains invalid value {v}"
                )));
            }
        }

        if let Some(schedule) = &self.fixed_schedule {
            for (i, m) in schedule.iter().enumerate() {
                if !flight_ids.contains(m.flight.as_str()) {
                    return Err(ScenarioError::UnknownReference {
                        field: format!("fixed_schedule[{i}].flight"),
                        kind: "flight",
                        id: m.flight.clone(),
                    });
                }
                if let Some(k) = &m.aircraft {
                    if !aircraft_ids.contains(k.as_str()) {
                        return Err(ScenarioError::UnknownReference {
                            field: format!("fixed_schedule[{i}].aircraft"),
                            kind: "aircraft",
                            id: k.clone(),
                        });
                    }
                }
            }
        }
        Ok(())
    }
}

fn parse_demand(id: &str, value: &serde_json::Number) -> Result<u32, ScenarioError> {
    let field = format!("demand.{id}");
    if let Some(v) = value.as_u64() {
        return u32::try_from(v).map_err(|_| invalid(field, "demand too large"));
    }
    match value.as_f64() {
        Some(v) if v >= 0.0 && v.fract() == 0.0 && v <= f64::from(u32::MAX) => Ok(v as u32),
        Some(v) if v < 0.0 => Err(invalid(field, format!("negative demand {v}"))),
        _ => Err(invalid(
            field,
            format!("fractional demand {value} (demand must be an integer)"),
        )),
    }
}

fn positive(field: &str, value: f64) -> Result<(), ScenarioError> {
    if value.is_finite() && value > 0.0 {
        Ok(())
    } else {
        Err(invalid(field, format!("{value} must be > 0")))
    }
}

fn non_negative(field: &str, value: f64) -> Result<(), ScenarioError> {
    if value.is_finite() && value >= 0.0 {
        Ok(())
    } else {
        Err(invalid(field, format!("{value} must be >= 0")))
    }
}

fn unit_efficiency(field: &str, value: f64) -> Result<(), ScenarioError> {
    if value > 0.0 && value <= 1.0 {
        Ok(())
    } else {
        Err(invalid(field, format!("{value} must lie in (0, 1]")))
    }
}

/// Daily demand per flight id.
pub fn demand_total(scenario: &Scenario) -> BTreeMap<String, u32> {
    scenario
        .flights
        .iter()
        .map(|f| (f.id.clone(), f.demand_per_day))
        .collect()
}

// ---------------------------------------------------------------------------
// Irradiance input
// ---------------------------------------------------------------------------

/// Raw timestamped irradiance samples, minutes since local midnight.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct IrradianceSamples {
    pub minutes: Vec<f64>,
    pub by_airport: BTreeMap<String, Vec<f64>>,
}

const TIMESTAMP_FORMATS: [&str; 4] = [
    "%Y-%m-%dT%H:%M:%S",
    "%Y-%m-%dT%H:%M",
    "%Y-%m-%d %H:%M:%S",
    "%Y-%m-%d %H:%M",
];

fn parse_timestamp(text: &str) -> Option<NaiveDateTime> {
    TIMESTAMP_FORMATS
        .iter()
        .find_map(|fmt| NaiveDateTime::parse_from_str(text.trim(), fmt).ok())
}

/// Read `timestamp,<airport>...` CSV. Minutes are counted from midnight of
/// the first sample's date, so a trailing `next-day 00:00` row maps to 1440.
pub fn read_irradiance_csv(reader: impl std::io::Read) -> Result<IrradianceSamples, ScenarioError> {
    let mut csv = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let headers = csv
        .headers()
        .map_err(|e| ScenarioError::Irradiance(e.to_string()))?
        .clone();
    if headers.get(0) != Some("timestamp") || headers.len() < 2 {
        return Err(ScenarioError::Irradiance(
            "header must be `timestamp,<airport_id>...`".into(),
        ));
    }
    let airports: Vec<String> = headers.iter().skip(1).map(str::to_owned).collect();
    let mut samples = IrradianceSamples {
        minutes: Vec::new(),
        by_airport: airports.iter().map(|a| (a.clone(), Vec::new())).collect(),
    };
    let mut day: Option<NaiveDate> = None;
    for (row, record) in csv.records().enumerate() {
        let line = row + 2;
        let record = record.map_err(|e| ScenarioError::Irradiance(format!("line {line}: {e}")))?;
        let raw_ts = record.get(0).unwrap_or_default();
        let ts = parse_timestamp(raw_ts)
            .ok_or_else(|| ScenarioError::Irradiance(format!("line {line}: bad timestamp `{raw_ts}`")))?;
        let midnight = *day.get_or_insert(ts.date());
        let days = (ts.date() - midnight).num_days() as f64;
        let minute = days * f64::from(MINUTES_PER_DAY)
            + f64::from(ts.time().hour() * 60 + ts.time().minute())
            + f64::from(ts.time().second()) / 60.0;
        samples.minutes.push(minute);
        for (col, airport) in airports.iter().enumerate() {
            let cell = record.get(col + 1).unwrap_or_default();
            let value: f64 = cell.parse().map_err(|_| {
                ScenarioError::Irradiance(format!("line {line}: bad value `{cell}` for {airport}"))
            })?;
            samples
                .by_airport
                .get_mut(airport)
                .expect("column registered")
                .push(value);
        }
    }
    Ok(samples)
}

pub fn load_irradiance_csv(
    path: impl AsRef<Path>,
    grid: &TimeGrid,
) -> Result<IrradianceSeries, ScenarioError> {
    let path = path.as_ref();
    let file = fs::File::open(path).map_err(|source| ScenarioError::Io {
        path: path.display().to_string(),
        source,
    })?;
    resample_irradiance(&read_irradiance_csv(file)?, grid)
}

/// Interpolate raw samples onto the midpoints of the grid's day steps.
pub fn resample_irradiance(
    raw: &IrradianceSamples,
    grid: &TimeGrid,
) -> Result<IrradianceSeries, ScenarioError> {
    raw.by_airport
        .iter()
        .map(|(id, values)| {
            resample_series(&raw.minutes, values, grid)
                .map(|series| (id.clone(), series))
                .map_err(|e| match e {
                    ScenarioError::Irradiance(msg) => {
                        ScenarioError::Irradiance(format!("airport `{id}`: {msg}"))
                    }
                    other => other,
                })
        })
        .collect()
}

pub fn resample_series(minutes: &[f64], values: &[f64], grid: &TimeGrid) -> Result<Vec<f64>, ScenarioError> {
    if minutes.is_empty() || minutes.len() != values.len() {
        return Err(ScenarioError::Irradiance(
            "need one value per timestamp and at least one sample".into(),
        ));
    }
    if minutes.windows(2).any(|w| w[1] <= w[0]) {
        return Err(ScenarioError::Irradiance(
            "timestamps must be strictly increasing".into(),
        ));
    }
    if let Some(v) = values.iter().find(|v| !(v.is_finite() && **v >= 0.0)) {
        return Err(ScenarioError::Irradiance(format!(
            "negative or invalid sample {v}"
        )));
    }
    let allowed = 2.0 * f64::from(grid.dt_minutes);
    let lead = minutes[0];
    let tail = f64::from(MINUTES_PER_DAY) - minutes[minutes.len() - 1];
    if lead > allowed || tail > allowed {
        return Err(ScenarioError::Irradiance(format!(
            "samples leave a coverage gap of {:.1} min (more than 2·Δt = {allowed} min)",
            lead.max(tail)
        )));
    }
    Ok((0..grid.day_steps)
        .map(|s| interpolate_at(minutes, values, grid.step_midpoint_minutes(s)).max(0.0))
        .collect())
}

/// Piecewise-linear interpolation, held constant beyond the first and last
/// samples. `minutes` must be strictly increasing and non-empty.
pub fn interpolate_at(minutes: &[f64], values: &[f64], at: f64) -> f64 {
    let upper = minutes.partition_point(|&m| m < at);
    if upper == 0 {
        return values[0];
    }
    if upper == minutes.len() {
        return values[values.len() - 1];
    }
    let (m0, m1) = (minutes[upper - 1], minutes[upper]);
    let (v0, v1) = (values[upper - 1], values[upper]);
    v0 + (v1 - v0) * (at - m0) / (m1 - m0)
}
