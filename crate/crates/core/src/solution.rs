//! Extracted schedules: one path and charge profile per aircraft plus the
//! power profile of every airport.

use std::fs;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::airport_energy::{fmt_value, AirportPowerProfile};
use crate::graph::EdgeId;
use crate::scenario::{Scenario, ScenarioError, TimeGrid};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Activity {
    Ground,
    Flight,
    Virtual,
}

impl Activity {
    pub fn as_str(self) -> &'static str {
        match self {
            Activity::Ground => "ground",
            Activity::Flight => "flight",
            Activity::Virtual => "virtual",
        }
    }
}

/// What one aircraft does during one operations step.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepRecord {
    pub day_step: usize,
    pub activity: Activity,
    /// Airport id for ground steps, flight id for flight and virtual steps.
    pub location: String,
    pub charging_kw: f64,
    /// Pack energy at the end of the step.
    pub energy_kwh: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AircraftSchedule {
    pub aircraft: String,
    /// Selected edges in time order.
    pub edges: Vec<EdgeId>,
    /// `[step][airport]`, kW.
    pub charging_kw: Vec<Vec<f64>>,
    /// Pack energy at every operations layer.
    pub energy_kwh: Vec<f64>,
    pub steps: Vec<StepRecord>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Solution {
    pub objective_kwh: f64,
    pub aircraft: Vec<AircraftSchedule>,
    pub airports: Vec<AirportPowerProfile>,
}

impl Solution {
    pub fn grid_energy_kwh(&self, grid: &TimeGrid) -> f64 {
        self.airports.iter().map(|a| a.grid_energy_kwh(grid)).sum()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("solution serializes")
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, ScenarioError> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|source| ScenarioError::Io {
            path: path.display().to_string(),
            source,
        })?;
        serde_json::from_str(&text).map_err(|e| ScenarioError::Parse {
            line: e.line(),
            column: e.column(),
            message: e.to_string(),
        })
    }

    /// `aircraft,t,activity,airport_or_flight,P_c_kw,E_p_kwh`, one row per
    /// aircraft and operations step; `t` is the day step and `E_p_kwh` the
    /// energy at the end of the step.
    pub fn write_schedule_csv(&self, out: impl Write) -> csv::Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record([
            "aircraft",
            "t",
            "activity",
            "airport_or_flight",
            "P_c_kw",
            "E_p_kwh",
        ])?;
        for a in &self.aircraft {
            for s in &a.steps {
                w.write_record([
                    a.aircraft.clone(),
                    s.day_step.to_string(),
                    s.activity.as_str().to_string(),
                    s.location.clone(),
                    fmt_value(s.charging_kw),
                    fmt_value(s.energy_kwh),
                ])?;
            }
        }
        w.flush()?;
        Ok(())
    }

    /// Check the solution's dimensions against a scenario.
    pub fn matches(&self, scenario: &Scenario) -> Result<(), String> {
        let grid = &scenario.time_grid;
        if self.aircraft.len() != scenario.fleet.len() {
            return Err(format!(
                "solution has {} aircraft, scenario {}",
                self.aircraft.len(),
                scenario.fleet.len()
            ));
        }
        if self.airports.len() != scenario.airports.len() {
            return Err(format!(
                "solution has {} airports, scenario {}",
                self.airports.len(),
                scenario.airports.len()
            ));
        }
        for (a, spec) in self.aircraft.iter().zip(&scenario.fleet) {
            if a.aircraft != spec.id {
                return Err(format!("aircraft `{}` where `{}` expected", a.aircraft, spec.id));
            }
            if a.energy_kwh.len() != grid.ops_layers()
                || a.charging_kw.len() != grid.ops_steps()
                || a.charging_kw.iter().any(|c| c.len() != scenario.airports.len())
            {
                return Err(format!("aircraft `{}` has wrong trajectory lengths", a.aircraft));
            }
        }
        for (p, spec) in self.airports.iter().zip(&scenario.airports) {
            if p.airport != spec.id {
                return Err(format!("airport `{}` where `{}` expected", p.airport, spec.id));
            }
            let n = grid.day_steps;
            if [&p.grid_kw, &p.renewable_kw, &p.bess_kw, &p.apron_kw]
                .iter()
                .any(|v| v.len() != n)
                || p.bess_energy_kwh.len() != n + 1
            {
                return Err(format!("airport `{}` has wrong profile lengths", p.airport));
            }
        }
        Ok(())
    }
}
