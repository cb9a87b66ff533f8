//! Small fixtures shared by unit tests.

use crate::scenario::{AircraftSpec, AirportSpec, FlightConnection, Scenario, TimeGrid};

pub fn airport(id: &str) -> AirportSpec {
    AirportSpec {
        id: id.into(),
        solar_area_m2: 500.0,
        solar_efficiency: 0.2,
        bess_capacity_kwh: 200.0,
        bess_min_kwh: 0.0,
        bess_power_min_kw: -100.0,
        bess_power_max_kw: 100.0,
        bess_efficiency: 0.9,
        apron_power_max_kw: 400.0,
        aux_power_kw: 0.0,
        bess_init_soc_frac: 0.5,
    }
}

pub fn aircraft(id: &str, base: &str) -> AircraftSpec {
    AircraftSpec {
        id: id.into(),
        mass_kg: 7000.0,
        lift_over_drag: 16.0,
        eta_takeoff: 0.85,
        eta_cruise: 0.9,
        cruise_altitude_m: 3000.0,
        battery_capacity_kwh: 800.0,
        charge_power_max_kw: 300.0,
        initial_energy_kwh: 600.0,
        origin_airport: base.into(),
        destination_airport: base.into(),
        final_energy_min_kwh: None,
    }
}

pub fn flight(id: &str, origin: &str, destination: &str, block: f64, demand: u32) -> FlightConnection {
    FlightConnection {
        id: id.into(),
        origin: origin.into(),
        destination: destination.into(),
        distance_km: 80.0,
        block_time_minutes: block,
        demand_per_day: demand,
    }
}

/// Scenario with flat 600 W/m² irradiance everywhere.
pub fn scenario_with(
    time_grid: TimeGrid,
    airports: Vec<AirportSpec>,
    fleet: Vec<AircraftSpec>,
    flights: Vec<FlightConnection>,
) -> Scenario {
    let irradiance = airports
        .iter()
        .map(|a| (a.id.clone(), vec![600.0; time_grid.day_steps]))
        .collect();
    let s = Scenario {
        name: None,
        time_grid,
        airports,
        fleet,
        flights,
        irradiance,
        k_max: 1,
        fixed_schedule: None,
    };
    s.validate().expect("fixture is valid");
    s
}

/// Two airports, one aircraft based at A, hourly grid with ops 08:00-12:00
/// (five layers), one single-step flight A->B and its return.
pub fn tiny_round_trip() -> Scenario {
    scenario_with(
        TimeGrid::new(60, 8, 12).unwrap(),
        vec![airport("A"), airport("B")],
        vec![aircraft("P1", "A")],
        vec![flight("AB", "A", "B", 60.0, 1), flight("BA", "B", "A", 60.0, 1)],
    )
}
