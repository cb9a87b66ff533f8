//! Independent feasibility check of a [`Solution`] against its scenario.
//!
//! Nothing here reads the assembled model: every constraint family is
//! re-derived from the scenario data and the physics helpers.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::Serialize;

use crate::aircraft_energy::{flight_energy, soc_delta, FlightEnergyInputs};
use crate::airport_energy::{bess_feasible_step, grid_power, solar_cap};
use crate::graph::{flight_steps, EdgeId, EdgeKind, TimeExpandedGraph};
use crate::model::ConstraintFamily as F;
use crate::scenario::Scenario;
use crate::solution::Solution;

pub const DEFAULT_TOLERANCE: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Violation {
    pub family: F,
    pub location: String,
    pub violation: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FamilySummary {
    pub family: F,
    pub checked: usize,
    pub failed: usize,
    pub max_violation: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ValidationReport {
    pub tolerance: f64,
    pub passed: bool,
    pub objective_reported_kwh: f64,
    pub objective_recomputed_kwh: f64,
    pub families: Vec<FamilySummary>,
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn failed_families(&self) -> Vec<F> {
        self.families
            .iter()
            .filter(|f| f.failed > 0)
            .map(|f| f.family)
            .collect()
    }

    pub fn family(&self, family: F) -> Option<&FamilySummary> {
        self.families.iter().find(|f| f.family == family)
    }

    pub fn max_violation(&self) -> f64 {
        self.families.iter().map(|f| f.max_violation).fold(0.0, f64::max)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let verdict = if self.passed { "PASS" } else { "FAIL" };
        let _ = writeln!(out, "validation {verdict} (tolerance {:e})", self.tolerance);
        let _ = writeln!(
            out,
            "objective reported {:.6} kWh, recomputed {:.6} kWh",
            self.objective_reported_kwh, self.objective_recomputed_kwh
        );
        for f in &self.families {
            let _ = writeln!(
                out,
                "  {:<26} {:>7} checked {:>5} failed  max {:.3e}",
                f.family.tag(),
                f.checked,
                f.failed,
                f.max_violation
            );
        }
        for v in self.violations.iter().take(50) {
            let _ = writeln!(
                out,
                "  ! {} at {}: {:.6e}",
                v.family.tag(),
                v.location,
                v.violation
            );
        }
        if self.violations.len() > 50 {
            let _ = writeln!(out, "  ... {} more", self.violations.len() - 50);
        }
        out
    }
}

struct Recorder {
    tolerance: f64,
    families: BTreeMap<F, FamilySummary>,
    violations: Vec<Violation>,
}

impl Recorder {
    fn record(&mut self, family: F, location: impl FnOnce() -> String, violation: f64) {
        let entry = self.families.entry(family).or_insert(FamilySummary {
            family,
            checked: 0,
            failed: 0,
            max_violation: 0.0,
        });
        entry.checked += 1;
        let violation = if violation.is_nan() {
            f64::INFINITY
        } else {
            violation.max(0.0)
        };
        entry.max_violation = entry.max_violation.max(violation);
        if violation > self.tolerance {
            entry.failed += 1;
            self.violations.push(Violation {
                family,
                location: location(),
                violation,
            });
        }
    }

    fn finish(self, reported: f64, recomputed: f64) -> ValidationReport {
        let passed = self.violations.is_empty();
        ValidationReport {
            tolerance: self.tolerance,
            passed,
            objective_reported_kwh: reported,
            objective_recomputed_kwh: recomputed,
            families: self.families.into_values().collect(),
            violations: self.violations,
        }
    }
}

fn range_violation(value: f64, lower: f64, upper: f64) -> f64 {
    (lower - value).max(value - upper).max(0.0)
}

pub fn validate_solution(
    scenario: &Scenario,
    graph: &TimeExpandedGraph,
    solution: &Solution,
    tolerance: f64,
) -> ValidationReport {
    let mut rec = Recorder {
        tolerance,
        families: BTreeMap::new(),
        violations: Vec::new(),
    };
    let grid = &scenario.time_grid;
    let dt_h = grid.dt_hours();

    if let Err(message) = solution.matches(scenario) {
        rec.record(
            F::FlowContinuity,
            || format!("dimensions: {message}"),
            f64::INFINITY,
        );
        return rec.finish(solution.objective_kwh, f64::NAN);
    }

    let num_steps = grid.ops_steps();
    let num_airports = scenario.airports.len();
    let last_layer = grid.ops_layers() - 1;
    let tf: Vec<usize> = scenario
        .flights
        .iter()
        .map(|f| flight_steps(f.block_time_minutes, grid.dt_minutes))
        .collect();

    let mut flown = vec![0u32; scenario.flights.len()];
    let mut edge_use: BTreeMap<EdgeId, u32> = BTreeMap::new();

    for (sched, spec) in solution.aircraft.iter().zip(&scenario.fleet) {
        let name = &spec.id;
        let origin = scenario.airport_index(&spec.origin_airport).expect("validated");
        let destination = scenario
            .airport_index(&spec.destination_airport)
            .expect("validated");

        // path continuity and endpoints
        let path_ok = sched.edges.len() == num_steps && sched.edges.iter().all(|&e| e < graph.num_edges());
        let mut broken = 0usize;
        if path_ok {
            let mut at = (origin, 0usize);
            for (s, &e) in sched.edges.iter().enumerate() {
                let edge = graph.edge(e);
                if (edge.tail.airport, edge.tail.time) != at || edge.tail.time != s {
                    broken += 1;
                }
                at = (edge.head.airport, edge.head.time);
            }
            if at != (destination, last_layer) {
                broken += 1;
            }
        }
        rec.record(
            F::FlowContinuity,
            || format!("aircraft {name} path"),
            if path_ok { broken as f64 } else { f64::INFINITY },
        );
        if !path_ok {
            continue;
        }

        // per-step status: Some(airport) when parked and free to charge
        let mut parked: Vec<Option<usize>> = vec![None; num_steps];
        let mut departures: Vec<Vec<usize>> = vec![Vec::new(); num_steps];
        let mut s = 0;
        while s < num_steps {
            let edge = graph.edge(sched.edges[s]);
            match edge.kind {
                EdgeKind::Ground => {
                    parked[s] = Some(edge.tail.airport);
                    s += 1;
                }
                EdgeKind::Flight { flight, .. } => {
                    flown[flight] += 1;
                    *edge_use.entry(edge.id).or_default() += 1;
                    departures[s].push(flight);
                    let dest = scenario
                        .airport_index(&scenario.flights[flight].destination)
                        .expect("validated");
                    let mut missing = 0usize;
                    for tau in 1..tf[flight] {
                        let ok = sched.edges.get(s + tau).is_some_and(|&g| {
                            let ge = graph.edge(g);
                            ge.is_ground() && ge.tail.airport == dest && ge.tail.time == s + tau
                        });
                        if !ok {
                            missing += 1;
                        }
                    }
                    rec.record(
                        F::VirtualEdge,
                        || format!("aircraft {name} flight {} step {s}", scenario.flights[flight].id),
                        missing as f64,
                    );
                    s += tf[flight].max(1);
                }
            }
        }

        // charging gate, no charging while flying, limits
        for step in 0..num_steps {
            for a in 0..num_airports {
                let p = sched.charging_kw[step][a];
                rec.record(
                    F::ChargeLimit,
                    || format!("aircraft {name} step {step} airport {}", scenario.airports[a].id),
                    range_violation(p, 0.0, spec.charge_power_max_kw),
                );
                let allowed = parked[step] == Some(a);
                if !allowed {
                    let family = if parked[step].is_none() {
                        F::NoChargeVirtual
                    } else {
                        F::ChargeGate
                    };
                    rec.record(
                        family,
                        || format!("aircraft {name} step {step} airport {}", scenario.airports[a].id),
                        p.abs(),
                    );
                }
            }
        }

        // pack energy
        let e = &sched.energy_kwh;
        rec.record(
            F::AircraftEnergyInitial,
            || format!("aircraft {name}"),
            (e[0] - spec.initial_energy_kwh).abs(),
        );
        for step in 0..num_steps {
            let flights: Vec<f64> = departures[step]
                .iter()
                .map(|&f| {
                    let inputs = FlightEnergyInputs::for_aircraft(spec, scenario.flights[f].distance_km);
                    flight_energy(&inputs).unwrap_or(f64::NAN)
                })
                .collect();
            let delta = soc_delta(&sched.charging_kw[step], &flights, grid.dt_minutes).unwrap_or(f64::NAN);
            rec.record(
                F::AircraftEnergy,
                || format!("aircraft {name} step {step}"),
                (e[step + 1] - e[step] - delta).abs(),
            );
        }
        for (t, &v) in e.iter().enumerate() {
            rec.record(
                F::AircraftEnergyBounds,
                || format!("aircraft {name} layer {t}"),
                range_violation(v, 0.0, spec.battery_capacity_kwh),
            );
        }
        if let Some(min) = spec.final_energy_min_kwh {
            rec.record(
                F::AircraftEnergyFinal,
                || format!("aircraft {name}"),
                min - e[last_layer],
            );
        }
    }

    for (f, flight) in scenario.flights.iter().enumerate() {
        rec.record(
            F::Demand,
            || format!("flight {}", flight.id),
            f64::from(flight.demand_per_day) - f64::from(flown[f]),
        );
    }
    for (&e, &n) in &edge_use {
        rec.record(
            F::DepartureCap,
            || format!("flight edge {e}"),
            f64::from(n) - f64::from(scenario.k_max),
        );
    }

    let mut recomputed = 0.0;
    for (a, (profile, spec)) in solution.airports.iter().zip(&scenario.airports).enumerate() {
        let id = &spec.id;
        let irradiance = scenario.irradiance_for(a).unwrap_or(&[]);
        for t in 0..grid.day_steps {
            let pa = profile.apron_kw[t];
            if grid.is_ops_step(t) {
                let s = t - grid.ops_start_index;
                let sum: f64 = solution.aircraft.iter().map(|k| k.charging_kw[s][a]).sum();
                rec.record(F::ApronSum, || format!("airport {id} t {t}"), (pa - sum).abs());
            } else {
                rec.record(F::ApronOffOps, || format!("airport {id} t {t}"), pa.abs());
            }
            rec.record(
                F::ApronLimit,
                || format!("airport {id} t {t}"),
                range_violation(pa, 0.0, spec.apron_power_max_kw),
            );

            let pgr = profile.grid_kw[t];
            let prnw = profile.renewable_kw[t];
            let pb = profile.bess_kw[t];
            let expected = grid_power(pa, spec.aux_power_kw, prnw, pb);
            rec.record(
                F::PowerSplit,
                || format!("airport {id} t {t}"),
                (pgr - expected).abs(),
            );
            rec.record(F::GridNonNegative, || format!("airport {id} t {t}"), -pgr);

            let cap = irradiance
                .get(t)
                .map(|&i| solar_cap(i, spec.solar_area_m2, spec.solar_efficiency))
                .unwrap_or(f64::NAN);
            rec.record(
                F::SolarCap,
                || format!("airport {id} t {t}"),
                range_violation(prnw, 0.0, cap),
            );

            rec.record(
                F::BessPowerLimit,
                || format!("airport {id} t {t}"),
                range_violation(pb, spec.bess_power_min_kw, spec.bess_power_max_kw),
            );
            let eb = &profile.bess_energy_kwh;
            let check = bess_feasible_step(eb[t], eb[t + 1], pb, spec.bess_efficiency, grid.dt_minutes);
            rec.record(
                F::BessCharge,
                || format!("airport {id} t {t}"),
                eb[t + 1] - check.efficiency_bound_kwh,
            );
            rec.record(
                F::BessDischarge,
                || format!("airport {id} t {t}"),
                eb[t + 1] - check.inverse_bound_kwh,
            );
            recomputed += pgr * dt_h;
        }
        for (t, &v) in profile.bess_energy_kwh.iter().enumerate() {
            rec.record(
                F::BessBounds,
                || format!("airport {id} layer {t}"),
                range_violation(v, spec.bess_min_kwh, spec.bess_capacity_kwh),
            );
        }
        rec.record(
            F::BessPeriodicity,
            || format!("airport {id}"),
            profile.periodicity_residual(),
        );
        rec.record(
            F::BessOpsFloor,
            || format!("airport {id}"),
            profile.ops_floor_shortfall(spec, grid),
        );
    }

    rec.record(
        F::Objective,
        || "objective".to_string(),
        (solution.objective_kwh - recomputed).abs(),
    );
    rec.finish(solution.objective_kwh, recomputed)
}
