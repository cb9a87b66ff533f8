//! Assembly of the grid-energy minimization MILP over a time-expanded graph,
//! the fixed-timetable variant used as a baseline, and solution extraction.
//!
//! Column families, in order: edge binaries `x[k][e]`, charging power
//! `pc[k][s][a]`, aircraft pack energy `ep[k][t]`, then per airport and day
//! step apron power `pa`, grid power `pgr`, renewable power `prnw`, BESS
//! power `pb`, and BESS energy `eb` (one more layer than steps).

use std::ops::Range;

use thiserror::Error;

use crate::airport_energy::{solar_cap, AirportPowerProfile};
use crate::graph::{EdgeId, EdgeKind, TimeExpandedGraph, Vertex};
use crate::model::{ConstraintFamily as F, ModelError, ModelIr, Sense};
use crate::scenario::{FixedMovement, Scenario, ScenarioError};
use crate::solution::{Activity, AircraftSchedule, Solution, StepRecord};

pub const INTEGRALITY_TOLERANCE: f64 = 1e-6;
const NOISE_FLOOR: f64 = 1e-9;

#[derive(Debug, Error)]
pub enum BuildError {
    #[error("scenario and graph disagree: {0}")]
    Mismatch(String),
    #[error("model needs {needed} columns, limit is {limit}")]
    TooManyColumns { needed: usize, limit: usize },
    #[error("flight `{0}` has demand but the fleet is empty")]
    NoFleet(String),
    #[error(transparent)]
    Scenario(#[from] ScenarioError),
    #[error(transparent)]
    Model(#[from] ModelError),
}

#[derive(Debug, Clone)]
pub struct BuildOptions {
    pub max_columns: usize,
    /// Order interchangeable aircraft by number of flights flown. Leaves the
    /// optimal objective unchanged.
    pub symmetry_breaking: bool,
}

impl Default for BuildOptions {
    fn default() -> Self {
        Self {
            max_columns: 5_000_000,
            symmetry_breaking: false,
        }
    }
}

/// Dense column numbering for every variable family.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VariableIndex {
    pub num_aircraft: usize,
    pub num_airports: usize,
    pub num_edges: usize,
    pub num_layers: usize,
    pub day_steps: usize,
    x_start: usize,
    pc_start: usize,
    ep_start: usize,
    pa_start: usize,
    pgr_start: usize,
    prnw_start: usize,
    pb_start: usize,
    eb_start: usize,
    total: usize,
}

impl VariableIndex {
    pub fn new(
        num_aircraft: usize,
        num_airports: usize,
        num_edges: usize,
        num_layers: usize,
        day_steps: usize,
    ) -> Self {
        let num_steps = num_layers - 1;
        let x_start = 0;
        let pc_start = x_start + num_aircraft * num_edges;
        let ep_start = pc_start + num_aircraft * num_steps * num_airports;
        let pa_start = ep_start + num_aircraft * num_layers;
        let pgr_start = pa_start + num_airports * day_steps;
        let prnw_start = pgr_start + num_airports * day_steps;
        let pb_start = prnw_start + num_airports * day_steps;
        let eb_start = pb_start + num_airports * day_steps;
        let total = eb_start + num_airports * (day_steps + 1);
        Self {
            num_aircraft,
            num_airports,
            num_edges,
            num_layers,
            day_steps,
            x_start,
            pc_start,
            ep_start,
            pa_start,
            pgr_start,
            prnw_start,
            pb_start,
            eb_start,
            total,
        }
    }

    pub fn num_steps(&self) -> usize {
        self.num_layers - 1
    }

    pub fn total_columns(&self) -> usize {
        self.total
    }

    pub fn x(&self, aircraft: usize, edge: EdgeId) -> usize {
        self.x_start + aircraft * self.num_edges + edge
    }

    pub fn x_columns(&self) -> Range<usize> {
        self.x_start..self.pc_start
    }

    pub fn pc(&self, aircraft: usize, airport: usize, step: usize) -> usize {
        self.pc_start + (aircraft * self.num_steps() + step) * self.num_airports + airport
    }

    pub fn ep(&self, aircraft: usize, layer: usize) -> usize {
        self.ep_start + aircraft * self.num_layers + layer
    }

    pub fn pa(&self, airport: usize, day_step: usize) -> usize {
        self.pa_start + airport * self.day_steps + day_step
    }

    pub fn pgr(&self, airport: usize, day_step: usize) -> usize {
        self.pgr_start + airport * self.day_steps + day_step
    }

    pub fn prnw(&self, airport: usize, day_step: usize) -> usize {
        self.prnw_start + airport * self.day_steps + day_step
    }

    pub fn pb(&self, airport: usize, day_step: usize) -> usize {
        self.pb_start + airport * self.day_steps + day_step
    }

    pub fn eb(&self, airport: usize, layer: usize) -> usize {
        self.eb_start + airport * (self.day_steps + 1) + layer
    }
}

fn check_consistency(scenario: &Scenario, graph: &TimeExpandedGraph) -> Result<(), BuildError> {
    let grid = &scenario.time_grid;
    if graph.num_airports() != scenario.airports.len() {
        return Err(BuildError::Mismatch(format!(
            "{} airports in graph, {} in scenario",
            graph.num_airports(),
            scenario.airports.len()
        )));
    }
    if graph.num_layers() != grid.ops_layers() {
        return Err(BuildError::Mismatch(format!(
            "{} layers in graph, operations window has {}",
            graph.num_layers(),
            grid.ops_layers()
        )));
    }
    if graph.num_flights() != scenario.flights.len() {
        return Err(BuildError::Mismatch(format!(
            "{} flights in graph, {} in scenario",
            graph.num_flights(),
            scenario.flights.len()
        )));
    }
    Ok(())
}

fn same_aircraft_type(a: &crate::scenario::AircraftSpec, b: &crate::scenario::AircraftSpec) -> bool {
    crate::scenario::AircraftSpec {
        id: String::new(),
        ..a.clone()
    } == crate::scenario::AircraftSpec {
        id: String::new(),
        ..b.clone()
    }
}

pub fn build_model(
    scenario: &Scenario,
    graph: &TimeExpandedGraph,
) -> Result<(ModelIr, VariableIndex), BuildError> {
    build_model_with(scenario, graph, &BuildOptions::default())
}

pub fn build_model_with(
    scenario: &Scenario,
    graph: &TimeExpandedGraph,
    options: &BuildOptions,
) -> Result<(ModelIr, VariableIndex), BuildError> {
    check_consistency(scenario, graph)?;
    let grid = &scenario.time_grid;
    let dt_h = grid.dt_hours();
    let fleet = &scenario.fleet;
    let num_aircraft = fleet.len();
    let num_airports = scenario.airports.len();
    let num_layers = graph.num_layers();
    let num_steps = graph.num_steps();
    let day_steps = grid.day_steps;

    if fleet.is_empty() {
        if let Some(f) = scenario.flights.iter().find(|f| f.demand_per_day > 0) {
            return Err(BuildError::NoFleet(f.id.clone()));
        }
    }

    let idx = VariableIndex::new(
        num_aircraft,
        num_airports,
        graph.num_edges(),
        num_layers,
        day_steps,
    );
    if idx.total_columns() > options.max_columns {
        return Err(BuildError::TooManyColumns {
            needed: idx.total_columns(),
            limit: options.max_columns,
        });
    }

    let mut m = ModelIr::new();
    m.columns.reserve(idx.total_columns());

    for k in 0..num_aircraft {
        for e in 0..graph.num_edges() {
            m.add_column(format!("x_{k}_{e}"), 0.0, 1.0, true, 0.0);
        }
    }
    for (k, spec) in fleet.iter().enumerate() {
        for s in 0..num_steps {
            for a in 0..num_airports {
                m.add_column(
                    format!("pc_{k}_{a}_{s}"),
                    0.0,
                    spec.charge_power_max_kw,
                    false,
                    0.0,
                );
            }
        }
    }
    for (k, spec) in fleet.iter().enumerate() {
        for t in 0..num_layers {
            m.add_column(format!("ep_{k}_{t}"), 0.0, spec.battery_capacity_kwh, false, 0.0);
        }
    }
    for (a, spec) in scenario.airports.iter().enumerate() {
        for t in 0..day_steps {
            m.add_column(format!("pa_{a}_{t}"), 0.0, spec.apron_power_max_kw, false, 0.0);
        }
    }
    for a in 0..num_airports {
        for t in 0..day_steps {
            m.add_column(format!("pgr_{a}_{t}"), 0.0, f64::INFINITY, false, dt_h);
        }
    }
    for (a, spec) in scenario.airports.iter().enumerate() {
        let irradiance = scenario.irradiance_for(a)?;
        for (t, &i_s) in irradiance.iter().enumerate() {
            let cap = solar_cap(i_s, spec.solar_area_m2, spec.solar_efficiency);
            m.add_column(format!("prnw_{a}_{t}"), 0.0, cap, false, 0.0);
        }
    }
    for (a, spec) in scenario.airports.iter().enumerate() {
        for t in 0..day_steps {
            m.add_column(
                format!("pb_{a}_{t}"),
                spec.bess_power_min_kw,
                spec.bess_power_max_kw,
                false,
                0.0,
            );
        }
    }
    for (a, spec) in scenario.airports.iter().enumerate() {
        for t in 0..=day_steps {
            m.add_column(
                format!("eb_{a}_{t}"),
                spec.bess_min_kwh,
                spec.bess_capacity_kwh,
                false,
                0.0,
            );
        }
    }
    debug_assert_eq!(m.num_columns(), idx.total_columns());

    // flight edges grouped by departure step
    let mut departures: Vec<Vec<EdgeId>> = vec![Vec::new(); num_steps];
    for e in graph.all_flight_edges() {
        departures[e.step()].push(e.id);
    }

    for (k, spec) in fleet.iter().enumerate() {
        let origin = Vertex {
            airport: scenario.airport_index(&spec.origin_airport).expect("validated"),
            time: 0,
        };
        let destination = Vertex {
            airport: scenario
                .airport_index(&spec.destination_airport)
                .expect("validated"),
            time: num_layers - 1,
        };
        for v in graph.vertices() {
            let mut terms: Vec<(usize, f64)> =
                graph.in_edges(v).iter().map(|&e| (idx.x(k, e), 1.0)).collect();
            terms.extend(graph.out_edges(v).iter().map(|&e| (idx.x(k, e), -1.0)));
            let rhs = f64::from(u8::from(v == destination)) - f64::from(u8::from(v == origin));
            m.add_row(
                F::FlowContinuity,
                format!("flow_{k}_{}_{}", v.airport, v.time),
                terms,
                Sense::Eq,
                rhs,
            )?;
        }
    }

    if num_aircraft > 0 {
        for (f, flight) in scenario.flights.iter().enumerate() {
            let idx = &idx;
            let terms = (0..num_aircraft)
                .flat_map(|k| graph.flight_edges(f).iter().map(move |&e| (idx.x(k, e), 1.0)))
                .collect();
            m.add_row(
                F::Demand,
                format!("demand_{f}"),
                terms,
                Sense::Ge,
                f64::from(flight.demand_per_day),
            )?;
        }
        for e in graph.all_flight_edges() {
            let terms = (0..num_aircraft).map(|k| (idx.x(k, e.id), 1.0)).collect();
            m.add_row(
                F::DepartureCap,
                format!("kmax_{}", e.id),
                terms,
                Sense::Le,
                f64::from(scenario.k_max),
            )?;
        }
    }

    // flights whose virtual edges include each ground edge; one aircraft can
    // be on at most one of them
    let mut covering: Vec<Vec<EdgeId>> = vec![Vec::new(); graph.num_edges()];
    for e in graph.all_flight_edges() {
        for g in graph.virtual_edges(e.id).expect("flight edge") {
            covering[g].push(e.id);
        }
    }

    for (k, spec) in fleet.iter().enumerate() {
        let big_m = spec.charge_power_max_kw;
        for g in graph.ground_edges() {
            let flights = &covering[g.id];
            let pc = idx.pc(k, g.tail.airport, g.step());
            if flights.is_empty() {
                m.add_row(
                    F::ChargeGate,
                    format!("gate_{k}_{}", g.id),
                    vec![(pc, 1.0), (idx.x(k, g.id), -big_m)],
                    Sense::Le,
                    0.0,
                )?;
                continue;
            }
            let mut terms = vec![(idx.x(k, g.id), 1.0)];
            terms.extend(flights.iter().map(|&e| (idx.x(k, e), -1.0)));
            m.add_row(
                F::VirtualEdge,
                format!("virt_{k}_{}", g.id),
                terms,
                Sense::Ge,
                0.0,
            )?;
            let mut terms = vec![(pc, 1.0), (idx.x(k, g.id), -big_m)];
            terms.extend(flights.iter().map(|&e| (idx.x(k, e), big_m)));
            m.add_row(
                F::NoChargeVirtual,
                format!("nocharge_{k}_{}", g.id),
                terms,
                Sense::Le,
                0.0,
            )?;
        }

        m.add_row(
            F::AircraftEnergyInitial,
            format!("ep0_{k}"),
            vec![(idx.ep(k, 0), 1.0)],
            Sense::Eq,
            spec.initial_energy_kwh,
        )?;
        for s in 0..num_steps {
            let mut terms = vec![(idx.ep(k, s + 1), 1.0), (idx.ep(k, s), -1.0)];
            terms.extend((0..num_airports).map(|a| (idx.pc(k, a, s), -dt_h)));
            for &e in &departures[s] {
                if let EdgeKind::Flight { flight, .. } = graph.edge(e).kind {
                    terms.push((idx.x(k, e), graph.flight_energy_kwh(flight, k)));
                }
            }
            m.add_row(F::AircraftEnergy, format!("ep_{k}_{s}"), terms, Sense::Eq, 0.0)?;
        }
        if let Some(min) = spec.final_energy_min_kwh {
            m.add_row(
                F::AircraftEnergyFinal,
                format!("epf_{k}"),
                vec![(idx.ep(k, num_layers - 1), 1.0)],
                Sense::Ge,
                min,
            )?;
        }
    }

    if options.symmetry_breaking {
        for k in 1..num_aircraft {
            if !same_aircraft_type(&fleet[k - 1], &fleet[k]) {
                continue;
            }
            let mut terms: Vec<(usize, f64)> = graph
                .all_flight_edges()
                .map(|e| (idx.x(k - 1, e.id), 1.0))
                .collect();
            terms.extend(graph.all_flight_edges().map(|e| (idx.x(k, e.id), -1.0)));
            if !terms.is_empty() {
                m.add_row(F::SymmetryBreaking, format!("sym_{k}"), terms, Sense::Ge, 0.0)?;
            }
        }
    }

    for (a, spec) in scenario.airports.iter().enumerate() {
        for t in 0..day_steps {
            if grid.is_ops_step(t) {
                let s = t - grid.ops_start_index;
                let mut terms = vec![(idx.pa(a, t), 1.0)];
                terms.extend((0..num_aircraft).map(|k| (idx.pc(k, a, s), -1.0)));
                m.add_row(F::ApronSum, format!("apron_{a}_{t}"), terms, Sense::Eq, 0.0)?;
            } else {
                m.add_row(
                    F::ApronOffOps,
                    format!("apron_off_{a}_{t}"),
                    vec![(idx.pa(a, t), 1.0)],
                    Sense::Eq,
                    0.0,
                )?;
            }
            m.add_row(
                F::PowerSplit,
                format!("split_{a}_{t}"),
                vec![
                    (idx.pgr(a, t), 1.0),
                    (idx.pa(a, t), -1.0),
                    (idx.prnw(a, t), 1.0),
                    (idx.pb(a, t), 1.0),
                ],
                Sense::Eq,
                spec.aux_power_kw,
            )?;
            m.add_row(
                F::BessCharge,
                format!("bess_eta_{a}_{t}"),
                vec![
                    (idx.eb(a, t + 1), 1.0),
                    (idx.eb(a, t), -1.0),
                    (idx.pb(a, t), spec.bess_efficiency * dt_h),
                ],
                Sense::Le,
                0.0,
            )?;
            m.add_row(
                F::BessDischarge,
                format!("bess_inv_{a}_{t}"),
                vec![
                    (idx.eb(a, t + 1), 1.0),
                    (idx.eb(a, t), -1.0),
                    (idx.pb(a, t), dt_h / spec.bess_efficiency),
                ],
                Sense::Le,
                0.0,
            )?;
        }
        m.add_row(
            F::BessPeriodicity,
            format!("bess_period_{a}"),
            vec![(idx.eb(a, 0), 1.0), (idx.eb(a, day_steps), -1.0)],
            Sense::Eq,
            0.0,
        )?;
        m.add_row(
            F::BessOpsFloor,
            format!("bess_floor_{a}"),
            vec![(idx.eb(a, grid.ops_start_index), 1.0)],
            Sense::Ge,
            spec.bess_init_soc_frac * spec.bess_capacity_kwh,
        )?;
    }

    Ok((m, idx))
}

// ---------------------------------------------------------------------------
// Fixed timetable
// ---------------------------------------------------------------------------

#[derive(Debug, Error, PartialEq)]
pub enum FixError {
    #[error("flight `{flight}` at day step {step} has no flight edge (outside the operations window or too late to complete)")]
    NoEdge { flight: String, step: usize },
    #[error("flight `{flight}` at day step {step}: no aircraft available at `{origin}`")]
    NoAircraftAvailable {
        flight: String,
        step: usize,
        origin: String,
    },
    #[error("flight `{flight}` at day step {step}: aircraft `{aircraft}` is {reason}")]
    AircraftUnavailable {
        flight: String,
        step: usize,
        aircraft: String,
        reason: String,
    },
    #[error("aircraft `{aircraft}` ends at `{location}` instead of `{destination}` after {last}")]
    EndsAway {
        aircraft: String,
        location: String,
        destination: String,
        last: String,
    },
    #[error("model does not match the scenario: {0}")]
    Mismatch(String),
    #[error(transparent)]
    Model(#[from] ModelError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct AssignedMovement {
    pub flight: usize,
    pub departure_step: usize,
    pub edge: EdgeId,
    pub aircraft: Option<usize>,
}

#[derive(Debug, Clone, Copy, Default)]
pub struct FixOptions {
    /// Keep unscheduled flight edges free so the solver may add positioning
    /// flights; otherwise every binary is fixed and only charging and
    /// airport dispatch remain.
    pub allow_repositioning: bool,
}

fn movement_edges(
    scenario: &Scenario,
    graph: &TimeExpandedGraph,
    schedule: &[FixedMovement],
) -> Result<Vec<AssignedMovement>, FixError> {
    let grid = &scenario.time_grid;
    schedule
        .iter()
        .map(|m| {
            let no_edge = || FixError::NoEdge {
                flight: m.flight.clone(),
                step: m.departure_step,
            };
            let flight = scenario.flight_index(&m.flight).ok_or_else(no_edge)?;
            let layer_step = m
                .departure_step
                .checked_sub(grid.ops_start_index)
                .ok_or_else(no_edge)?;
            let edge = graph.flight_edge_at(flight, layer_step).ok_or_else(no_edge)?;
            let aircraft = match &m.aircraft {
                Some(id) => Some(
                    scenario
                        .aircraft_index(id)
                        .ok_or_else(|| FixError::Mismatch(format!("unknown aircraft `{id}`")))?,
                ),
                None => None,
            };
            Ok(AssignedMovement {
                flight,
                departure_step: m.departure_step,
                edge,
                aircraft,
            })
        })
        .collect()
}

/// Resolve a timetable onto flight edges and aircraft. Movements without a
/// tail number go to the first aircraft, in id order, that is parked at the
/// origin when the movement departs.
pub fn assign_movements(
    scenario: &Scenario,
    graph: &TimeExpandedGraph,
    schedule: &[FixedMovement],
) -> Result<Vec<AssignedMovement>, FixError> {
    let mut movements = movement_edges(scenario, graph, schedule)?;
    movements.sort_by_key(|m| m.departure_step);

    struct State {
        airport: usize,
        free_from: usize,
        last: Option<usize>,
    }
    let mut states: Vec<State> = scenario
        .fleet
        .iter()
        .map(|k| State {
            airport: scenario.airport_index(&k.origin_airport).expect("validated"),
            free_from: 0,
            last: None,
        })
        .collect();
    let mut by_id: Vec<usize> = (0..scenario.fleet.len()).collect();
    by_id.sort_by(|&a, &b| scenario.fleet[a].id.cmp(&scenario.fleet[b].id));

    for (i, mv) in movements.iter_mut().enumerate() {
        let edge = *graph.edge(mv.edge);
        let flight = &scenario.flights[mv.flight];
        let depart = edge.tail.time;
        let chosen = match mv.aircraft {
            Some(k) => {
                let st = &states[k];
                if st.airport != edge.tail.airport || st.free_from > depart {
                    let reason = if st.airport != edge.tail.airport {
                        format!("at `{}`", scenario.airports[st.airport].id)
                    } else {
                        "still flying".to_string()
                    };
                    return Err(FixError::AircraftUnavailable {
                        flight: flight.id.clone(),
                        step: mv.departure_step,
                        aircraft: scenario.fleet[k].id.clone(),
                        reason,
                    });
                }
                k
            }
            None => *by_id
                .iter()
                .find(|&&k| states[k].airport == edge.tail.airport && states[k].free_from <= depart)
                .ok_or_else(|| FixError::NoAircraftAvailable {
                    flight: flight.id.clone(),
                    step: mv.departure_step,
                    origin: flight.origin.clone(),
                })?,
        };
        mv.aircraft = Some(chosen);
        states[chosen] = State {
            airport: edge.head.airport,
            free_from: depart + graph.flight_steps(mv.flight),
            last: Some(i),
        };
    }

    for (k, st) in states.iter().enumerate() {
        let spec = &scenario.fleet[k];
        let destination = scenario
            .airport_index(&spec.destination_airport)
            .expect("validated");
        if st.airport != destination {
            let last = st
                .last
                .map(|i| {
                    let mv = &movements[i];
                    format!(
                        "`{}` at day step {}",
                        scenario.flights[mv.flight].id, mv.departure_step
                    )
                })
                .unwrap_or_else(|| "no movements".to_string());
            return Err(FixError::EndsAway {
                aircraft: spec.id.clone(),
                location: scenario.airports[st.airport].id.clone(),
                destination: spec.destination_airport.clone(),
                last,
            });
        }
    }
    Ok(movements)
}

/// Edge sequence of an aircraft flying `movements` (sorted, own movements
/// only) and otherwise staying on the ground.
fn path_from_movements(
    graph: &TimeExpandedGraph,
    start_airport: usize,
    movements: &[AssignedMovement],
) -> Vec<EdgeId> {
    let mut path = Vec::with_capacity(graph.num_steps());
    let mut airport = start_airport;
    let mut step = 0;
    let mut pending = movements.iter().peekable();
    while step < graph.num_steps() {
        match pending.peek() {
            Some(mv) if graph.edge(mv.edge).step() == step => {
                let e = graph.edge(mv.edge);
                path.push(e.id);
                path.extend(graph.virtual_edges(e.id).expect("flight edge"));
                airport = e.head.airport;
                step += graph.flight_steps(mv.flight);
                pending.next();
            }
            _ => {
                path.push(graph.ground_edge(airport, step));
                step += 1;
            }
        }
    }
    path
}

/// Restrict a model to a given timetable.
pub fn fix_flights(
    model: &ModelIr,
    index: &VariableIndex,
    scenario: &Scenario,
    graph: &TimeExpandedGraph,
    schedule: &[FixedMovement],
    options: FixOptions,
) -> Result<ModelIr, FixError> {
    if index.num_aircraft != scenario.fleet.len() || index.num_edges != graph.num_edges() {
        return Err(FixError::Mismatch(
            "variable index built for another instance".into(),
        ));
    }
    let mut fixed = model.clone();
    if schedule.is_empty() {
        return Ok(fixed);
    }

    if options.allow_repositioning {
        for (i, mv) in movement_edges(scenario, graph, schedule)?.into_iter().enumerate() {
            match mv.aircraft {
                Some(k) => fixed.fix_column(index.x(k, mv.edge), 1.0),
                None => {
                    let terms = (0..index.num_aircraft)
                        .map(|k| (index.x(k, mv.edge), 1.0))
                        .collect();
                    fixed.add_row(
                        F::FixedSchedule,
                        format!("fixed_{i}_{}", mv.edge),
                        terms,
                        Sense::Ge,
                        1.0,
                    )?;
                }
            }
        }
        return Ok(fixed);
    }

    let movements = assign_movements(scenario, graph, schedule)?;
    for (k, spec) in scenario.fleet.iter().enumerate() {
        let own: Vec<AssignedMovement> = movements
            .iter()
            .copied()
            .filter(|m| m.aircraft == Some(k))
            .collect();
        let start = scenario.airport_index(&spec.origin_airport).expect("validated");
        let path = path_from_movements(graph, start, &own);
        let mut on_path = vec![false; graph.num_edges()];
        for e in path {
            on_path[e] = true;
        }
        for (e, &selected) in on_path.iter().enumerate() {
            fixed.fix_column(index.x(k, e), if selected { 1.0 } else { 0.0 });
        }
    }
    Ok(fixed)
}

/// Copy of `model` with every integer column fixed to the rounded value in
/// `values`. Re-solving it yields continuous values consistent with the
/// rounded binaries.
pub fn fix_integers(model: &ModelIr, values: &[f64]) -> ModelIr {
    let mut fixed = model.clone();
    for (c, col) in fixed.columns.iter_mut().enumerate() {
        if col.integer {
            let v = values[c].round();
            col.lower = v;
            col.upper = v;
        }
    }
    fixed
}

/// Copy of `model` with the integer columns that are already integral in
/// `values` fixed there; the remaining ones stay free.
pub fn fix_integral(model: &ModelIr, values: &[f64], tolerance: f64) -> ModelIr {
    let mut fixed = model.clone();
    for (c, col) in fixed.columns.iter_mut().enumerate() {
        let v = values[c].round();
        if col.integer && (values[c] - v).abs() <= tolerance {
            col.lower = v;
            col.upper = v;
        }
    }
    fixed
}

// ---------------------------------------------------------------------------
// Extraction
// ---------------------------------------------------------------------------

#[derive(Debug, Error, PartialEq)]
pub enum ExtractError {
    #[error("expected {expected} column values, got {got}")]
    Length { expected: usize, got: usize },
    #[error("column `{column}` = {value} is not integral")]
    Fractional { column: String, value: f64 },
    #[error("selected edges of aircraft `{aircraft}` do not form one origin-destination path: {reason}")]
    BrokenPath { aircraft: String, reason: String },
}

fn clean(v: f64) -> f64 {
    if v.abs() < NOISE_FLOOR {
        0.0
    } else {
        v
    }
}

pub fn extract_solution(
    model: &ModelIr,
    index: &VariableIndex,
    scenario: &Scenario,
    graph: &TimeExpandedGraph,
    values: &[f64],
) -> Result<Solution, ExtractError> {
    if values.len() != model.num_columns() {
        return Err(ExtractError::Length {
            expected: model.num_columns(),
            got: values.len(),
        });
    }
    for (c, col) in model.columns.iter().enumerate() {
        if col.integer && (values[c] - values[c].round()).abs() > INTEGRALITY_TOLERANCE {
            return Err(ExtractError::Fractional {
                column: col.name.clone(),
                value: values[c],
            });
        }
    }

    let grid = &scenario.time_grid;
    let num_steps = graph.num_steps();
    let num_airports = scenario.airports.len();
    let mut aircraft = Vec::with_capacity(scenario.fleet.len());

    for (k, spec) in scenario.fleet.iter().enumerate() {
        let selected: Vec<bool> = (0..graph.num_edges())
            .map(|e| values[index.x(k, e)].round() == 1.0)
            .collect();
        let broken = |reason: String| ExtractError::BrokenPath {
            aircraft: spec.id.clone(),
            reason,
        };
        let mut at = Vertex {
            airport: scenario.airport_index(&spec.origin_airport).expect("validated"),
            time: 0,
        };
        let mut edges = Vec::with_capacity(num_steps);
        for _ in 0..num_steps {
            let next: Vec<EdgeId> = graph
                .out_edges(at)
                .iter()
                .copied()
                .filter(|&e| selected[e])
                .collect();
            match next.as_slice() {
                [e] => {
                    edges.push(*e);
                    at = graph.edge(*e).head;
                }
                [] => return Err(broken(format!("path stops at layer {}", at.time))),
                _ => return Err(broken(format!("path forks at layer {}", at.time))),
            }
        }
        let destination = scenario
            .airport_index(&spec.destination_airport)
            .expect("validated");
        if at.airport != destination {
            return Err(broken(format!(
                "path ends at `{}`",
                scenario.airports[at.airport].id
            )));
        }
        let count = selected.iter().filter(|&&s| s).count();
        if count != edges.len() {
            return Err(broken(format!(
                "{} selected edges off the path",
                count - edges.len()
            )));
        }

        let charging_kw: Vec<Vec<f64>> = (0..num_steps)
            .map(|s| {
                (0..num_airports)
                    .map(|a| clean(values[index.pc(k, a, s)]))
                    .collect()
            })
            .collect();
        let energy_kwh: Vec<f64> = (0..graph.num_layers())
            .map(|t| clean(values[index.ep(k, t)]))
            .collect();

        let mut steps = Vec::with_capacity(num_steps);
        let mut airborne: Option<(usize, usize)> = None; // (flight, last virtual step)
        for (s, &e) in edges.iter().enumerate() {
            let edge = graph.edge(e);
            let (activity, location) = match edge.kind {
                EdgeKind::Flight {
                    flight, steps: tf, ..
                } => {
                    airborne = (tf > 1).then_some((flight, s + tf - 1));
                    (Activity::Flight, scenario.flights[flight].id.clone())
                }
                EdgeKind::Ground => match airborne {
                    Some((flight, until)) if s <= until => {
                        (Activity::Virtual, scenario.flights[flight].id.clone())
                    }
                    _ => {
                        airborne = None;
                        (Activity::Ground, scenario.airports[edge.tail.airport].id.clone())
                    }
                },
            };
            steps.push(StepRecord {
                day_step: grid.day_step(s),
                activity,
                location,
                charging_kw: charging_kw[s].iter().sum(),
                energy_kwh: energy_kwh[s + 1],
            });
        }

        aircraft.push(AircraftSchedule {
            aircraft: spec.id.clone(),
            edges,
            charging_kw,
            energy_kwh,
            steps,
        });
    }

    let airports: Vec<AirportPowerProfile> = scenario
        .airports
        .iter()
        .enumerate()
        .map(|(a, spec)| {
            let series = |col: &dyn Fn(usize) -> usize| -> Vec<f64> {
                (0..grid.day_steps).map(|t| clean(values[col(t)])).collect()
            };
            AirportPowerProfile {
                airport: spec.id.clone(),
                grid_kw: series(&|t| index.pgr(a, t)),
                renewable_kw: series(&|t| index.prnw(a, t)),
                bess_kw: series(&|t| index.pb(a, t)),
                apron_kw: series(&|t| index.pa(a, t)),
                bess_energy_kwh: (0..=grid.day_steps)
                    .map(|t| clean(values[index.eb(a, t)]))
                    .collect(),
            }
        })
        .collect();
    let objective_kwh = airports.iter().map(|p| p.grid_energy_kwh(grid)).sum();

    Ok(Solution {
        objective_kwh,
        aircraft,
        airports,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::build_graph;
    use crate::scenario::TimeGrid;
    use crate::test_support::{aircraft, airport, flight, scenario_with, tiny_round_trip};

    fn one_flight_instance() -> Scenario {
        // 1 aircraft, 2 airports, |T| = 4, one single-step flight
        scenario_with(
            TimeGrid::new(60, 8, 11).unwrap(),
            vec![airport("A"), airport("B")],
            vec![aircraft("P1", "A")],
            vec![flight("AB", "A", "B", 60.0, 1)],
        )
    }

    #[test]
    fn column_and_row_counts() {
        let mut s = one_flight_instance();
        s.fleet[0].destination_airport = "B".into();
        let g = build_graph(&s).unwrap();
        let (m, idx) = build_model(&s, &g).unwrap();
        assert_eq!(m.columns.iter().filter(|c| c.integer).count(), 9);
        assert_eq!(idx.x_columns().len(), 9);
        let counts = m.rows_by_family();
        assert_eq!(counts[&F::FlowContinuity], 8);
        assert_eq!(counts[&F::Demand], 1);
        assert_eq!(counts[&F::DepartureCap], 3);
        assert_eq!(counts[&F::ChargeGate], 6);
        assert_eq!(counts[&F::AircraftEnergy], 3);
        assert_eq!(counts[&F::PowerSplit], 2 * 24);
        assert_eq!(counts[&F::ApronSum], 2 * 3);
        assert_eq!(counts[&F::ApronOffOps], 2 * 21);
        assert_eq!(counts[&F::BessPeriodicity], 2);
        assert!(!counts.contains_key(&F::VirtualEdge));
    }

    #[test]
    fn index_families_are_contiguous_and_disjoint() {
        let idx = VariableIndex::new(2, 3, 10, 6, 24);
        let mut seen = vec![false; idx.total_columns()];
        let mut mark = |c: usize| {
            assert!(!seen[c], "column {c} assigned twice");
            seen[c] = true;
        };
        for k in 0..2 {
            (0..10).for_each(|e| mark(idx.x(k, e)));
            for s in 0..5 {
                (0..3).for_each(|a| mark(idx.pc(k, a, s)));
            }
            (0..6).for_each(|t| mark(idx.ep(k, t)));
        }
        for a in 0..3 {
            for t in 0..24 {
                mark(idx.pa(a, t));
                mark(idx.pgr(a, t));
                mark(idx.prnw(a, t));
                mark(idx.pb(a, t));
            }
            (0..=24).for_each(|t| mark(idx.eb(a, t)));
        }
        assert!(seen.iter().all(|&s| s));
    }

    #[test]
    fn mismatched_graph_is_rejected() {
        let s = one_flight_instance();
        let other = tiny_round_trip();
        let g = build_graph(&other).unwrap();
        assert!(matches!(build_model(&s, &g), Err(BuildError::Mismatch(_))));
    }

    #[test]
    fn column_limit() {
        let s = one_flight_instance();
        let g = build_graph(&s).unwrap();
        let opts = BuildOptions {
            max_columns: 10,
            ..BuildOptions::default()
        };
        assert!(matches!(
            build_model_with(&s, &g, &opts),
            Err(BuildError::TooManyColumns { limit: 10, .. })
        ));
    }

    #[test]
    fn missing_irradiance_is_reported() {
        let mut s = one_flight_instance();
        s.irradiance.remove("B");
        let g = build_graph(&s).unwrap();
        assert!(matches!(build_model(&s, &g), Err(BuildError::Scenario(_))));
    }

    #[test]
    fn every_family_present_in_nontrivial_model() {
        let mut s = scenario_with(
            TimeGrid::new(60, 6, 14).unwrap(),
            vec![airport("A"), airport("B")],
            vec![aircraft("P1", "A"), aircraft("P2", "A")],
            vec![flight("AB", "A", "B", 120.0, 1), flight("BA", "B", "A", 120.0, 1)],
        );
        for k in &mut s.fleet {
            k.final_energy_min_kwh = Some(100.0);
        }
        let g = build_graph(&s).unwrap();
        let opts = BuildOptions {
            symmetry_breaking: true,
            ..BuildOptions::default()
        };
        let (m, _) = build_model_with(&s, &g, &opts).unwrap();
        let counts = m.rows_by_family();
        for family in [
            F::FlowContinuity,
            F::Demand,
            F::VirtualEdge,
            F::DepartureCap,
            F::ChargeGate,
            F::NoChargeVirtual,
            F::AircraftEnergy,
            F::AircraftEnergyInitial,
            F::AircraftEnergyFinal,
            F::ApronSum,
            F::ApronOffOps,
            F::PowerSplit,
            F::BessCharge,
            F::BessDischarge,
            F::BessPeriodicity,
            F::BessOpsFloor,
            F::SymmetryBreaking,
        ] {
            assert!(counts.get(&family).copied().unwrap_or(0) >= 1, "{family} missing");
        }
        assert!(m.rows.iter().all(|r| !r.terms.is_empty()));
    }

    #[test]
    fn empty_fleet_with_demand_is_an_error() {
        let mut s = one_flight_instance();
        s.fleet.clear();
        let g = build_graph(&s).unwrap();
        assert!(matches!(build_model(&s, &g), Err(BuildError::NoFleet(_))));
        s.flights[0].demand_per_day = 0;
        assert!(build_model(&s, &g).is_ok());
    }

    fn movement(flight: &str, step: usize, aircraft: Option<&str>) -> FixedMovement {
        FixedMovement {
            flight: flight.into(),
            departure_step: step,
            aircraft: aircraft.map(str::to_owned),
        }
    }

    #[test]
    fn fixing_a_full_day_leaves_an_lp() {
        let s = tiny_round_trip();
        let g = build_graph(&s).unwrap();
        let (m, idx) = build_model(&s, &g).unwrap();
        let fixed = fix_flights(
            &m,
            &idx,
            &s,
            &g,
            &[movement("AB", 9, None), movement("BA", 10, None)],
            FixOptions::default(),
        )
        .unwrap();
        assert!(fixed.is_pure_lp());
        assert!(!m.is_pure_lp());
        // path: ground A, AB, BA, ground A
        let ab = g.flight_edge_at(0, 1).unwrap();
        let ba = g.flight_edge_at(1, 2).unwrap();
        assert_eq!(fixed.columns[idx.x(0, ab)].lower, 1.0);
        assert_eq!(fixed.columns[idx.x(0, ba)].lower, 1.0);
        assert_eq!(fixed.columns[idx.x(0, g.ground_edge(0, 0))].lower, 1.0);
        assert_eq!(fixed.columns[idx.x(0, g.ground_edge(0, 3))].lower, 1.0);
        assert_eq!(fixed.columns[idx.x(0, g.ground_edge(1, 1))].upper, 0.0);
    }

    #[test]
    fn late_departure_cannot_be_fixed() {
        let s = tiny_round_trip();
        let g = build_graph(&s).unwrap();
        let (m, idx) = build_model(&s, &g).unwrap();
        let err = fix_flights(
            &m,
            &idx,
            &s,
            &g,
            &[movement("AB", 12, None)],
            FixOptions::default(),
        )
        .unwrap_err();
        assert_eq!(
            err,
            FixError::NoEdge {
                flight: "AB".into(),
                step: 12
            }
        );
        let err = fix_flights(
            &m,
            &idx,
            &s,
            &g,
            &[movement("AB", 3, None)],
            FixOptions::default(),
        )
        .unwrap_err();
        assert!(matches!(err, FixError::NoEdge { .. }));
    }

    #[test]
    fn empty_schedule_is_a_no_op() {
        let s = tiny_round_trip();
        let g = build_graph(&s).unwrap();
        let (m, idx) = build_model(&s, &g).unwrap();
        assert_eq!(
            fix_flights(&m, &idx, &s, &g, &[], FixOptions::default()).unwrap(),
            m
        );
    }

    #[test]
    fn greedy_assignment_takes_first_available_by_id() {
        let mut s = tiny_round_trip();
        s.fleet = vec![aircraft("P2", "A"), aircraft("P1", "A")];
        let g = build_graph(&s).unwrap();
        let moves = assign_movements(&s, &g, &[movement("AB", 8, None), movement("BA", 9, None)]).unwrap();
        // P1 sorts first by id even though it is fleet index 1
        assert!(moves.iter().all(|m| m.aircraft == Some(1)));
    }

    #[test]
    fn infeasible_timetable_names_movement() {
        let s = tiny_round_trip();
        let g = build_graph(&s).unwrap();
        let err = assign_movements(&s, &g, &[movement("BA", 8, None)]).unwrap_err();
        assert!(err.to_string().contains("BA"), "{err}");
        let err = assign_movements(&s, &g, &[movement("AB", 8, None)]).unwrap_err();
        assert!(matches!(err, FixError::EndsAway { .. }), "{err}");
        let err = assign_movements(
            &s,
            &g,
            &[movement("AB", 8, Some("P1")), movement("AB", 9, Some("P1"))],
        )
        .unwrap_err();
        assert!(matches!(err, FixError::AircraftUnavailable { .. }), "{err}");
    }

    #[test]
    fn repositioning_mode_keeps_other_binaries_free() {
        let s = tiny_round_trip();
        let g = build_graph(&s).unwrap();
        let (m, idx) = build_model(&s, &g).unwrap();
        let fixed = fix_flights(
            &m,
            &idx,
            &s,
            &g,
            &[movement("AB", 9, Some("P1")), movement("BA", 10, None)],
            FixOptions {
                allow_repositioning: true,
            },
        )
        .unwrap();
        assert!(!fixed.is_pure_lp());
        assert_eq!(fixed.rows_by_family()[&F::FixedSchedule], 1);
    }

    fn path_values(s: &Scenario, g: &TimeExpandedGraph, idx: &VariableIndex, path: &[EdgeId]) -> Vec<f64> {
        let mut v = vec![0.0; idx.total_columns()];
        for &e in path {
            v[idx.x(0, e)] = 1.0;
        }
        for t in 0..g.num_layers() {
            v[idx.ep(0, t)] = s.fleet[0].initial_energy_kwh;
        }
        v
    }

    #[test]
    fn extraction_follows_the_path() {
        let s = tiny_round_trip();
        let g = build_graph(&s).unwrap();
        let (m, idx) = build_model(&s, &g).unwrap();
        let ab = g.flight_edge_at(0, 1).unwrap();
        let ba = g.flight_edge_at(1, 2).unwrap();
        let path = [g.ground_edge(0, 0), ab, ba, g.ground_edge(0, 3)];
        let sol = extract_solution(&m, &idx, &s, &g, &path_values(&s, &g, &idx, &path)).unwrap();
        let acts: Vec<Activity> = sol.aircraft[0].steps.iter().map(|r| r.activity).collect();
        assert_eq!(
            acts,
            vec![
                Activity::Ground,
                Activity::Flight,
                Activity::Flight,
                Activity::Ground
            ]
        );
        assert_eq!(sol.aircraft[0].edges, path.to_vec());
        assert_eq!(sol.aircraft[0].steps[1].location, "AB");
        assert_eq!(sol.aircraft[0].steps[0].day_step, 8);
    }

    #[test]
    fn fractional_binary_is_rejected() {
        let s = tiny_round_trip();
        let g = build_graph(&s).unwrap();
        let (m, idx) = build_model(&s, &g).unwrap();
        let mut v = vec![0.0; idx.total_columns()];
        v[idx.x(0, 0)] = 0.5;
        assert!(matches!(
            extract_solution(&m, &idx, &s, &g, &v),
            Err(ExtractError::Fractional { .. })
        ));
    }

    #[test]
    fn broken_path_is_rejected() {
        let s = tiny_round_trip();
        let g = build_graph(&s).unwrap();
        let (m, idx) = build_model(&s, &g).unwrap();
        let path = [g.ground_edge(0, 0), g.ground_edge(0, 1), g.ground_edge(0, 2)];
        let err = extract_solution(&m, &idx, &s, &g, &path_values(&s, &g, &idx, &path)).unwrap_err();
        assert!(matches!(err, ExtractError::BrokenPath { .. }));

        let mut full: Vec<EdgeId> = (0..4).map(|t| g.ground_edge(0, t)).collect();
        full.push(g.ground_edge(1, 2));
        let err = extract_solution(&m, &idx, &s, &g, &path_values(&s, &g, &idx, &full)).unwrap_err();
        assert!(matches!(err, ExtractError::BrokenPath { .. }));
    }

    #[test]
    fn lp_export_of_real_model_lists_binaries() {
        let s = tiny_round_trip();
        let g = build_graph(&s).unwrap();
        let (m, _) = build_model(&s, &g).unwrap();
        let mut buf = Vec::new();
        m.write_lp(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.contains("\nBinaries\n"));
        assert!(text.contains(" flow_0_0_0:"));
        assert!(text.trim_end().ends_with("End"));
    }
}
