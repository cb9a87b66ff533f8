//! Run summaries, baseline comparisons and the on-disk run directory.

use std::collections::BTreeMap;
use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::Path;

use serde::Serialize;

use crate::pipeline::RunOutcome;
use crate::scenario::Scenario;
use crate::solution::{Activity, Solution};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FlightCount {
    pub flight: String,
    pub flown: u32,
    pub demanded: u32,
}

/// First departure and last arrival, as day steps.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AircraftWindow {
    pub aircraft: String,
    pub first_departure: Option<usize>,
    pub last_arrival: Option<usize>,
    pub flights: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunSummary {
    pub scenario: Option<String>,
    pub status: String,
    pub objective_kwh: Option<f64>,
    pub gap: Option<f64>,
    pub grid_energy_kwh: BTreeMap<String, f64>,
    pub total_grid_energy_kwh: Option<f64>,
    pub flights: Vec<FlightCount>,
    pub aircraft: Vec<AircraftWindow>,
    pub validation_passed: Option<bool>,
    /// Wall-clock figures; kept out of `summary.json` so it stays
    /// reproducible and written to `timing.json` instead.
    #[serde(skip)]
    pub build_seconds: f64,
    #[serde(skip)]
    pub solve_seconds: f64,
}

pub fn flight_counts(scenario: &Scenario, solution: &Solution) -> Vec<FlightCount> {
    let mut flown: BTreeMap<&str, u32> = BTreeMap::new();
    for a in &solution.aircraft {
        for s in a.steps.iter().filter(|s| s.activity == Activity::Flight) {
            *flown.entry(s.location.as_str()).or_default() += 1;
        }
    }
    scenario
        .flights
        .iter()
        .map(|f| FlightCount {
            flight: f.id.clone(),
            flown: flown.get(f.id.as_str()).copied().unwrap_or(0),
            demanded: f.demand_per_day,
        })
        .collect()
}

pub fn aircraft_windows(solution: &Solution) -> Vec<AircraftWindow> {
    solution
        .aircraft
        .iter()
        .map(|a| {
            let first_departure = a
                .steps
                .iter()
                .find(|s| s.activity == Activity::Flight)
                .map(|s| s.day_step);
            let last_arrival = a
                .steps
                .iter()
                .rev()
                .find(|s| s.activity != Activity::Ground)
                .map(|s| s.day_step + 1);
            AircraftWindow {
                aircraft: a.aircraft.clone(),
                first_departure,
                last_arrival,
                flights: a.steps.iter().filter(|s| s.activity == Activity::Flight).count(),
            }
        })
        .collect()
}

pub fn summarize(scenario: &Scenario, outcome: &RunOutcome) -> RunSummary {
    let grid = &scenario.time_grid;
    let (grid_energy, total, flights, aircraft) = match &outcome.solution {
        Some(sol) => {
            let per: BTreeMap<String, f64> = sol
                .airports
                .iter()
                .map(|p| (p.airport.clone(), p.grid_energy_kwh(grid)))
                .collect();
            let total = per.values().sum();
            (
                per,
                Some(total),
                flight_counts(scenario, sol),
                aircraft_windows(sol),
            )
        }
        None => (BTreeMap::new(), None, Vec::new(), Vec::new()),
    };
    RunSummary {
        scenario: scenario.name.clone(),
        status: outcome.status.as_str().to_string(),
        objective_kwh: outcome.objective_kwh(),
        gap: outcome.gap,
        grid_energy_kwh: grid_energy,
        total_grid_energy_kwh: total,
        flights,
        aircraft,
        validation_passed: outcome.validation.as_ref().map(|v| v.passed),
        build_seconds: outcome.build_time.as_secs_f64(),
        solve_seconds: outcome.solve_time.as_secs_f64(),
    }
}

/// Percent reduction of grid energy relative to the baseline:
/// `100 * (1 - optimized / baseline)`. Undefined when the baseline needs no
/// grid energy.
pub fn reduction_percent(optimized_kwh: f64, baseline_kwh: f64) -> Option<f64> {
    if baseline_kwh <= 0.0 {
        None
    } else if optimized_kwh == 0.0 {
        Some(100.0)
    } else {
        Some(100.0 * (1.0 - optimized_kwh / baseline_kwh))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Comparison {
    pub baseline: RunSummary,
    pub optimized: RunSummary,
    pub reduction_percent: Option<f64>,
    pub optimized_not_worse: Option<bool>,
}

pub fn compare(baseline: RunSummary, optimized: RunSummary) -> Comparison {
    let (reduction_percent, optimized_not_worse) =
        match (optimized.total_grid_energy_kwh, baseline.total_grid_energy_kwh) {
            (Some(o), Some(b)) => (reduction_percent(o, b), Some(o <= b + 1e-6 * b.abs().max(1.0))),
            _ => (None, None),
        };
    Comparison {
        baseline,
        optimized,
        reduction_percent,
        optimized_not_worse,
    }
}

fn write_file(path: &Path, body: impl FnOnce(&mut BufWriter<File>) -> io::Result<()>) -> io::Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    body(&mut w)?;
    w.flush()
}

fn csv_err(e: csv::Error) -> io::Error {
    io::Error::other(e)
}

/// Write `schedule.csv`, `airport_<id>.csv`, `solution.json`,
/// `summary.json`, `validation.json`, `timing.json` and optionally
/// `model.lp` into `dir`.
pub fn write_run_dir(
    dir: &Path,
    outcome: &RunOutcome,
    summary: &RunSummary,
    export_lp: bool,
) -> io::Result<()> {
    fs::create_dir_all(dir)?;
    if let Some(sol) = &outcome.solution {
        write_file(&dir.join("schedule.csv"), |w| {
            sol.write_schedule_csv(w).map_err(csv_err)
        })?;
        for p in &sol.airports {
            write_file(&dir.join(format!("airport_{}.csv", p.airport)), |w| {
                p.write_csv(w).map_err(csv_err)
            })?;
        }
        fs::write(dir.join("solution.json"), sol.to_json() + "\n")?;
    }
    if let Some(v) = &outcome.validation {
        fs::write(dir.join("validation.json"), v.to_json() + "\n")?;
    }
    fs::write(
        dir.join("summary.json"),
        serde_json::to_string_pretty(summary).expect("summary serializes") + "\n",
    )?;
    let timing = serde_json::json!({
        "build_seconds": summary.build_seconds,
        "solve_seconds": summary.solve_seconds,
    });
    fs::write(
        dir.join("timing.json"),
        serde_json::to_string_pretty(&timing)? + "\n",
    )?;
    if export_lp {
        write_file(&dir.join("model.lp"), |w| outcome.model.write_lp(w))?;
    }
    Ok(())
}

pub fn summary_text(summary: &RunSummary) -> String {
    let mut out = String::new();
    let name = summary.scenario.as_deref().unwrap_or("scenario");
    out.push_str(&format!("{name}: {}\n", summary.status));
    if let Some(total) = summary.total_grid_energy_kwh {
        out.push_str(&format!("  grid energy {total:.3} kWh"));
        if let Some(gap) = summary.gap {
            out.push_str(&format!(" (gap {gap:.2e})"));
        }
        out.push('\n');
        for (a, e) in &summary.grid_energy_kwh {
            out.push_str(&format!("    {a:<8} {e:>12.3} kWh\n"));
        }
    }
    for f in &summary.flights {
        out.push_str(&format!(
            "  {:<10} flown {:>3} / {:>3}\n",
            f.flight, f.flown, f.demanded
        ));
    }
    out.push_str(&format!(
        "  build {:.2} s, solve {:.2} s\n",
        summary.build_seconds, summary.solve_seconds
    ));
    out
}
