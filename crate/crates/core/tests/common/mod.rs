#![allow(dead_code)]

use aerogrid::scenario::{AircraftSpec, AirportSpec, FlightConnection, Scenario, TimeGrid};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub const IDS: [&str; 3] = ["A", "B", "C"];

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

pub fn flat_scenario(
    grid: TimeGrid,
    airports: Vec<AirportSpec>,
    fleet: Vec<AircraftSpec>,
    flights: Vec<FlightConnection>,
    irradiance_w_m2: f64,
) -> Scenario {
    let irradiance = airports
        .iter()
        .map(|a| (a.id.clone(), vec![irradiance_w_m2; grid.day_steps]))
        .collect();
    let s = Scenario {
        name: None,
        time_grid: grid,
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

/// Two airports, one aircraft at A, hourly grid with ops 08:00-12:00, one
/// single-step flight each way.
pub fn round_trip() -> Scenario {
    flat_scenario(
        TimeGrid::new(60, 8, 12).unwrap(),
        vec![airport("A"), airport("B")],
        vec![aircraft("P1", "A")],
        vec![flight("AB", "A", "B", 60.0, 1), flight("BA", "B", "A", 60.0, 1)],
        600.0,
    )
}

/// Random instance small enough for the enumeration oracle: two-hour steps,
/// at most five operations steps, at most two aircraft, demand of 0 or 1 per
/// connection and randomized energy parameters and irradiance.
pub fn random_tiny(seed: u64) -> Scenario {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let two_aircraft = rng.gen_bool(0.5);
    let num_airports = if two_aircraft { 2 } else { rng.gen_range(2..=3) };
    let steps = if two_aircraft || num_airports == 3 {
        rng.gen_range(3..=4)
    } else {
        rng.gen_range(3..=5)
    };
    let start = rng.gen_range(2..=4);
    let grid = TimeGrid::new(120, start, start + steps).unwrap();

    let airports: Vec<AirportSpec> = IDS[..num_airports]
        .iter()
        .map(|id| {
            let mut a = airport(id);
            a.solar_area_m2 = rng.gen_range(0.0..800.0);
            a.bess_capacity_kwh = rng.gen_range(50.0..400.0);
            a.bess_power_max_kw = rng.gen_range(20.0..150.0);
            a.bess_power_min_kw = -rng.gen_range(20.0..150.0);
            a.bess_efficiency = rng.gen_range(0.8..0.99);
            a.bess_init_soc_frac = rng.gen_range(0.2..0.8);
            a.apron_power_max_kw = rng.gen_range(200.0..600.0);
            a.aux_power_kw = if rng.gen_bool(0.3) {
                rng.gen_range(0.0..30.0)
            } else {
                0.0
            };
            a
        })
        .collect();

    let num_aircraft = if two_aircraft { 2 } else { 1 };
    let fleet: Vec<AircraftSpec> = (0..num_aircraft)
        .map(|k| {
            let base = IDS[rng.gen_range(0..num_airports)];
            let mut p = aircraft(&format!("P{}", k + 1), base);
            p.mass_kg = rng.gen_range(5000.0..8000.0);
            p.charge_power_max_kw = rng.gen_range(100.0..300.0);
            p.initial_energy_kwh = rng.gen_range(350.0..800.0);
            if rng.gen_bool(0.3) {
                p.final_energy_min_kwh = Some(rng.gen_range(300.0..700.0));
            }
            p
        })
        .collect();

    let mut flights = Vec::new();
    let pairs: Vec<(usize, usize)> = if num_airports == 2 {
        vec![(0, 1), (1, 0)]
    } else {
        vec![(0, 1), (1, 0), (1, 2)]
    };
    for (o, d) in pairs {
        let tf = if steps >= 4 && rng.gen_bool(0.3) { 2.0 } else { 1.0 };
        let mut f = flight(
            &format!("{}{}", IDS[o], IDS[d]),
            IDS[o],
            IDS[d],
            tf * 120.0,
            u32::from(rng.gen_bool(0.5)),
        );
        f.distance_km = rng.gen_range(40.0..120.0);
        flights.push(f);
    }

    let irradiance = airports
        .iter()
        .map(|a| {
            let series = (0..grid.day_steps)
                .map(|_| {
                    if rng.gen_bool(0.2) {
                        0.0
                    } else {
                        rng.gen_range(0.0..900.0)
                    }
                })
                .collect();
            (a.id.clone(), series)
        })
        .collect();
    let s = Scenario {
        name: Some(format!("random-{seed}")),
        time_grid: grid,
        airports,
        fleet,
        flights,
        irradiance,
        k_max: 1,
        fixed_schedule: None,
    };
    s.validate().expect("random instance is valid");
    s
}

pub fn relative_gap(a: f64, b: f64) -> f64 {
    (a - b).abs() / (1.0 + a.abs().max(b.abs()))
}
