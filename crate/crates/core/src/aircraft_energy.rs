//! Flight energy and aircraft battery bookkeeping.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::scenario::AircraftSpec;

pub const GRAVITY_M_S2: f64 = 9.81;
pub const JOULES_PER_KWH: f64 = 3.6e6;

#[derive(Debug, Error, PartialEq)]
pub enum EnergyError {
    #[error("`{0}` must be strictly positive")]
    NonPositive(&'static str),
    #[error("`{0}` must not exceed 1")]
    EfficiencyAboveOne(&'static str),
    #[error("distance must be non-negative")]
    NegativeDistance,
    #[error("aircraft both charges and flies in the same step")]
    ChargeWhileFlying,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FlightEnergyInputs {
    pub mass_kg: f64,
    pub gravity: f64,
    pub cruise_altitude_m: f64,
    pub eta_takeoff: f64,
    pub eta_cruise: f64,
    pub lift_over_drag: f64,
    pub distance_km: f64,
}

impl FlightEnergyInputs {
    pub fn for_aircraft(aircraft: &AircraftSpec, distance_km: f64) -> Self {
        Self {
            mass_kg: aircraft.mass_kg,
            gravity: GRAVITY_M_S2,
            cruise_altitude_m: aircraft.cruise_altitude_m,
            eta_takeoff: aircraft.eta_takeoff,
            eta_cruise: aircraft.eta_cruise,
            lift_over_drag: aircraft.lift_over_drag,
            distance_km,
        }
    }
}

/// Energy drawn from the pack for one flight, kWh: a climb term
/// `m g h / η_TO` plus a Breguet-style cruise term `m g d / (η_cruise L/D)`.
/// Evaluated in joules and converted once.
pub fn flight_energy(inputs: &FlightEnergyInputs) -> Result<f64, EnergyError> {
    let FlightEnergyInputs {
        mass_kg,
        gravity,
        cruise_altitude_m,
        eta_takeoff,
        eta_cruise,
        lift_over_drag,
        distance_km,
    } = *inputs;
    for (name, v) in [
        ("mass_kg", mass_kg),
        ("gravity", gravity),
        ("eta_takeoff", eta_takeoff),
        ("eta_cruise", eta_cruise),
        ("lift_over_drag", lift_over_drag),
    ] {
        if !(v > 0.0) {
            return Err(EnergyError::NonPositive(name));
        }
    }
    if eta_takeoff > 1.0 {
        return Err(EnergyError::EfficiencyAboveOne("eta_takeoff"));
    }
    if eta_cruise > 1.0 {
        return Err(EnergyError::EfficiencyAboveOne("eta_cruise"));
    }
    if cruise_altitude_m < 0.0 {
        return Err(EnergyError::NonPositive("cruise_altitude_m"));
    }
    if distance_km < 0.0 {
        return Err(EnergyError::NegativeDistance);
    }
    let weight_n = mass_kg * gravity;
    let climb_j = weight_n * cruise_altitude_m / eta_takeoff;
    let cruise_j = weight_n / (eta_cruise * lift_over_drag) * distance_km * 1000.0;
    Ok((climb_j + cruise_j) / JOULES_PER_KWH)
}

/// Change of pack energy over one step, kWh.
///
/// `charging_kw` holds the charging power at every airport during the step
/// and `flight_energies_kwh` the energy of each flight edge departing in it.
/// On a valid path at most one of the two is non-zero.
pub fn soc_delta(
    charging_kw: &[f64],
    flight_energies_kwh: &[f64],
    dt_minutes: u32,
) -> Result<f64, EnergyError> {
    let charged: f64 = charging_kw.iter().sum::<f64>() * f64::from(dt_minutes) / 60.0;
    let spent: f64 = flight_energies_kwh.iter().sum();
    let charging = charging_kw.iter().any(|&p| p != 0.0);
    if charging && !flight_energies_kwh.is_empty() {
        return Err(EnergyError::ChargeWhileFlying);
    }
    Ok(charged - spent)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SocViolation {
    pub layer: usize,
    pub energy_kwh: f64,
    /// How far outside `[0, capacity]` the energy lies.
    pub excess_kwh: f64,
}

/// Pack energy at every time layer, plus the layers where it left
/// `[0, capacity]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SocTrajectory {
    pub energy_kwh: Vec<f64>,
    pub violations: Vec<SocViolation>,
}

impl SocTrajectory {
    pub fn last(&self) -> f64 {
        *self.energy_kwh.last().expect("trajectory has an initial layer")
    }

    pub fn is_within_bounds(&self) -> bool {
        self.violations.is_empty()
    }
}

pub fn propagate_soc(initial_kwh: f64, deltas_kwh: &[f64], capacity_kwh: f64) -> SocTrajectory {
    let mut energy = Vec::with_capacity(deltas_kwh.len() + 1);
    energy.push(initial_kwh);
    let mut current = initial_kwh;
    for d in deltas_kwh {
        current += d;
        energy.push(current);
    }
    let violations = energy
        .iter()
        .enumerate()
        .filter_map(|(layer, &e)| {
            let excess = if e < 0.0 {
                -e
            } else if e > capacity_kwh {
                e - capacity_kwh
            } else {
                return None;
            };
            Some(SocViolation {
                layer,
                energy_kwh: e,
                excess_kwh: excess,
            })
        })
        .collect();
    SocTrajectory {
        energy_kwh: energy,
        violations,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn reference() -> FlightEnergyInputs {
        FlightEnergyInputs {
            mass_kg: 7000.0,
            gravity: GRAVITY_M_S2,
            cruise_altitude_m: 3000.0,
            eta_takeoff: 0.85,
            eta_cruise: 0.9,
            lift_over_drag: 16.0,
            distance_km: 100.0,
        }
    }

    #[test]
    fn reference_flight_energy() {
        // independent evaluation: 7000*9.81*3000/0.85 J + 7000*9.81/(0.9*16)*1e5 J
        let climb: f64 = 7000.0 * 9.81 * 3000.0 / 0.85;
        let cruise: f64 = 7000.0 * 9.81 / 14.4 * 100_000.0;
        assert!((climb - 2.4236e8).abs() < 1e4);
        assert!((cruise - 4.7688e8).abs() < 1e4);
        let e = flight_energy(&reference()).unwrap();
        assert!((e - (climb + cruise) / 3.6e6).abs() < 1e-9);
        assert!((e - 199.8).abs() < 0.05, "{e}");
    }

    #[test]
    fn zero_distance_leaves_climb_term() {
        let inputs = FlightEnergyInputs {
            distance_km: 0.0,
            ..reference()
        };
        let e = flight_energy(&inputs).unwrap();
        assert_eq!(e, 7000.0 * 9.81 * 3000.0 / 0.85 / 3.6e6);
    }

    #[test]
    fn doubling_distance_doubles_cruise_term_only() {
        let climb = flight_energy(&FlightEnergyInputs {
            distance_km: 0.0,
            ..reference()
        })
        .unwrap();
        let e1 = flight_energy(&reference()).unwrap();
        let e2 = flight_energy(&FlightEnergyInputs {
            distance_km: 200.0,
            ..reference()
        })
        .unwrap();
        assert!(((e2 - climb) - 2.0 * (e1 - climb)).abs() < 1e-9);
    }

    #[test]
    fn rejects_bad_efficiencies() {
        let bad = FlightEnergyInputs {
            eta_cruise: 0.0,
            ..reference()
        };
        assert_eq!(flight_energy(&bad), Err(EnergyError::NonPositive("eta_cruise")));
        let bad = FlightEnergyInputs {
            lift_over_drag: -1.0,
            ..reference()
        };
        assert!(flight_energy(&bad).is_err());
        let bad = FlightEnergyInputs {
            eta_takeoff: 1.5,
            ..reference()
        };
        assert!(flight_energy(&bad).is_err());
    }

    #[test]
    fn soc_delta_cases() {
        assert!((soc_delta(&[120.0, 0.0], &[], 10).unwrap() - 20.0).abs() < 1e-12);
        assert_eq!(soc_delta(&[0.0, 0.0], &[199.8], 10).unwrap(), -199.8);
        assert_eq!(soc_delta(&[0.0], &[], 10).unwrap(), 0.0);
        assert_eq!(
            soc_delta(&[5.0], &[10.0], 10),
            Err(EnergyError::ChargeWhileFlying)
        );
    }

    #[test]
    fn propagate_examples() {
        let t = propagate_soc(400.0, &[20.0, -199.8], 800.0);
        assert_eq!(t.energy_kwh.len(), 3);
        assert!((t.energy_kwh[2] - 220.2).abs() < 1e-9);
        assert!(t.is_within_bounds());

        let t = propagate_soc(300.0, &[0.0; 4], 800.0);
        assert!(t.energy_kwh.iter().all(|&e| e == 300.0));

        let t = propagate_soc(0.0, &[-1.0], 800.0);
        assert_eq!(t.violations.len(), 1);
        assert_eq!(t.violations[0].layer, 1);
        assert_eq!(t.violations[0].excess_kwh, 1.0);
    }

    proptest! {
        #[test]
        fn energy_is_linear_in_mass(mass in 500.0f64..20_000.0, d in 0.0f64..500.0) {
            let base = FlightEnergyInputs { mass_kg: mass, distance_km: d, ..reference() };
            let double = FlightEnergyInputs { mass_kg: 2.0 * mass, ..base };
            let (e1, e2) = (flight_energy(&base).unwrap(), flight_energy(&double).unwrap());
            prop_assert!((e2 - 2.0 * e1).abs() <= 1e-12 * e2.abs());
        }

        #[test]
        fn energy_increases_with_distance(d in 0.0f64..500.0, extra in 0.1f64..100.0) {
            let a = flight_energy(&FlightEnergyInputs { distance_km: d, ..reference() }).unwrap();
            let b = flight_energy(&FlightEnergyInputs { distance_km: d + extra, ..reference() }).unwrap();
            prop_assert!(b > a);
        }

        #[test]
        fn propagation_composes(
            init in 0.0f64..800.0,
            d1 in proptest::collection::vec(-50.0f64..50.0, 0..20),
            d2 in proptest::collection::vec(-50.0f64..50.0, 0..20),
        ) {
            let joined: Vec<f64> = d1.iter().chain(&d2).copied().collect();
            let whole = propagate_soc(init, &joined, 800.0);
            let first = propagate_soc(init, &d1, 800.0);
            let second = propagate_soc(first.last(), &d2, 800.0);
            let stitched: Vec<f64> = first.energy_kwh.iter().chain(&second.energy_kwh[1..]).copied().collect();
            prop_assert_eq!(whole.energy_kwh, stitched);
        }

        #[test]
        fn bookkeeping_closes(init in 0.0f64..800.0, d in proptest::collection::vec(-50.0f64..50.0, 1..60)) {
            let t = propagate_soc(init, &d, 800.0);
            let net: f64 = d.iter().sum();
            prop_assert!((t.last() - init - net).abs() <= 1e-9);
        }
    }
}
