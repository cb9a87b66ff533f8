//! Deterministic three-island network used for the weekly study: Aruba,
//! Curaçao and Bonaire with a homogeneous fleet based at Curaçao, weekday
//! demand, clear-sky irradiance scaled per day, and an airline-style
//! baseline timetable.

use chrono::Weekday;

use crate::graph::flight_steps;
use crate::scenario::{
    AircraftSpec, AirportSpec, FixedMovement, FlightConnection, IrradianceSeries, Scenario, TimeGrid,
};

pub const HUB: &str = "CUR";
pub const DT_MINUTES: u32 = 10;
pub const FLEET_SIZE: usize = 8;

pub const WEEK: [Weekday; 7] = [
    Weekday::Mon,
    Weekday::Tue,
    Weekday::Wed,
    Weekday::Thu,
    Weekday::Fri,
    Weekday::Sat,
    Weekday::Sun,
];

const AUA_DEMAND: [u32; 7] = [8, 5, 5, 8, 8, 6, 5];
const BON_DEMAND: [u32; 7] = [11, 10, 9, 10, 11, 9, 8];

/// Daily clear-sky fraction; Sunday is the bright day.
const SKY_FACTOR: [f64; 7] = [0.55, 0.8, 0.65, 0.5, 0.9, 0.75, 1.1];

fn day_index(day: Weekday) -> usize {
    day.num_days_from_monday() as usize
}

/// Flights per direction on the Aruba and Bonaire links.
pub fn weekday_demand(day: Weekday) -> (u32, u32) {
    let i = day_index(day);
    (AUA_DEMAND[i], BON_DEMAND[i])
}

pub fn island_airport(id: &str) -> AirportSpec {
    AirportSpec {
        id: id.into(),
        solar_area_m2: 2000.0,
        solar_efficiency: 0.2,
        bess_capacity_kwh: 1000.0,
        bess_min_kwh: 0.0,
        bess_power_min_kw: -500.0,
        bess_power_max_kw: 500.0,
        bess_efficiency: 0.95,
        apron_power_max_kw: 1600.0,
        aux_power_kw: 0.0,
        bess_init_soc_frac: 0.5,
    }
}

/// Nine-seat battery-electric commuter. It starts the operating window half
/// charged and has to end it at least as full.
pub fn nine_seater(id: &str) -> AircraftSpec {
    AircraftSpec {
        id: id.into(),
        mass_kg: 6350.0,
        lift_over_drag: 17.0,
        eta_takeoff: 0.85,
        eta_cruise: 0.9,
        cruise_altitude_m: 3000.0,
        battery_capacity_kwh: 820.0,
        charge_power_max_kw: 400.0,
        initial_energy_kwh: 410.0,
        origin_airport: HUB.into(),
        destination_airport: HUB.into(),
        final_energy_min_kwh: Some(410.0),
    }
}

fn connection(
    id: &str,
    origin: &str,
    destination: &str,
    km: f64,
    minutes: f64,
    demand: u32,
) -> FlightConnection {
    FlightConnection {
        id: id.into(),
        origin: origin.into(),
        destination: destination.into(),
        distance_km: km,
        block_time_minutes: minutes,
        demand_per_day: demand,
    }
}

/// Clear-sky bell between sunrise and sunset, W/m², evaluated at the
/// midpoint of every step.
pub fn clear_sky(grid: &TimeGrid, peak_w_m2: f64, sunrise_min: f64, sunset_min: f64) -> Vec<f64> {
    (0..grid.day_steps)
        .map(|t| {
            let m = grid.step_midpoint_minutes(t);
            if m <= sunrise_min || m >= sunset_min {
                0.0
            } else {
                let x = (m - sunrise_min) / (sunset_min - sunrise_min);
                peak_w_m2 * (std::f64::consts::PI * x).sin().powf(1.2)
            }
        })
        .collect()
}

pub fn island_irradiance(grid: &TimeGrid, sky_factor: f64) -> IrradianceSeries {
    // slightly different peaks per island, same daylight window
    [("AUA", 1.0), ("CUR", 0.97), ("BON", 1.02)]
        .iter()
        .map(|&(id, local)| {
            (
                id.to_string(),
                clear_sky(grid, 1000.0 * sky_factor * local, 375.0, 1125.0),
            )
        })
        .collect()
}

pub fn operations_grid() -> TimeGrid {
    // 06:00 to 20:00
    TimeGrid::new(DT_MINUTES, 36, 120).expect("static grid")
}

pub fn abc_scenario(day: Weekday) -> Scenario {
    let (aua, bon) = weekday_demand(day);
    let grid = operations_grid();
    let s = Scenario {
        name: Some(format!("abc-{}", day.to_string().to_lowercase())),
        time_grid: grid,
        airports: ["AUA", "CUR", "BON"]
            .iter()
            .map(|id| island_airport(id))
            .collect(),
        fleet: (1..=FLEET_SIZE).map(|i| nine_seater(&format!("P{i}"))).collect(),
        flights: vec![
            connection("AUA-CUR", "AUA", "CUR", 115.0, 30.0, aua),
            connection("CUR-AUA", "CUR", "AUA", 115.0, 30.0, aua),
            connection("BON-CUR", "BON", "CUR", 70.0, 25.0, bon),
            connection("CUR-BON", "CUR", "BON", 70.0, 25.0, bon),
        ],
        irradiance: island_irradiance(&grid, SKY_FACTOR[day_index(day)]),
        k_max: 1,
        fixed_schedule: None,
    };
    s.validate().expect("synthetic scenario is valid");
    s
}

pub fn abc_week() -> Vec<Scenario> {
    WEEK.iter().map(|&d| abc_scenario(d)).collect()
}

/// Airline-style timetable: out-and-back rotations from the hub spread
/// evenly over the first eleven hours of operations, each rotation flown by
/// the aircraft that has been back at the hub the longest.
pub fn baseline_timetable(scenario: &Scenario) -> Vec<FixedMovement> {
    let grid = &scenario.time_grid;
    let steps = grid.ops_steps();
    let turnaround = 3;
    let leg = |id: &str| {
        let f = &scenario.flights[scenario.flight_index(id).expect("synthetic flight")];
        (
            f.demand_per_day,
            flight_steps(f.block_time_minutes, grid.dt_minutes),
        )
    };

    // (outbound departure step, outbound id, return id, leg steps)
    let mut rotations = Vec::new();
    for (out, back, offset) in [("CUR-AUA", "AUA-CUR", 0usize), ("CUR-BON", "BON-CUR", 2)] {
        let (n, tf) = leg(out);
        if n == 0 {
            continue;
        }
        let length = 2 * tf + turnaround;
        let latest = (steps * 11 / 14).saturating_sub(length);
        for i in 0..n as usize {
            let s = if n == 1 {
                offset
            } else {
                offset + i * (latest - offset) / (n as usize - 1)
            };
            rotations.push((s, out, back, tf));
        }
    }
    rotations.sort();

    let mut free_from = vec![0usize; scenario.fleet.len()];
    let mut movements = Vec::new();
    for (s, out, back, tf) in rotations {
        let k = (0..scenario.fleet.len())
            .filter(|&k| free_from[k] <= s)
            .min_by_key(|&k| (free_from[k], k))
            .expect("fleet covers the timetable");
        let id = scenario.fleet[k].id.clone();
        let back_step = s + tf + turnaround;
        movements.push(FixedMovement {
            flight: out.into(),
            departure_step: grid.day_step(s),
            aircraft: Some(id.clone()),
        });
        movements.push(FixedMovement {
            flight: back.into(),
            departure_step: grid.day_step(back_step),
            aircraft: Some(id),
        });
        free_from[k] = back_step + tf + turnaround;
    }
    movements.sort_by(|a, b| (a.departure_step, &a.flight).cmp(&(b.departure_step, &b.flight)));
    movements
}
