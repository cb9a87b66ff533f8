//! Time-expanded flight network.
//!
//! Vertices are `(airport, layer)` pairs over the operations window. Every
//! edge advances exactly one layer, so layer order is a topological order.
//! Edge ids are assigned step by step: for each step, the ground edges of
//! all airports first, then the flight edges departing in that step in
//! flight order.

use std::io::Write;

use thiserror::Error;

use crate::aircraft_energy::{flight_energy, EnergyError, FlightEnergyInputs};
use crate::scenario::Scenario;

pub type EdgeId = usize;

#[derive(Debug, Error)]
pub enum GraphError {
    #[error("operations window of {layers} layers is too short for flight `{flight}` ({steps} steps)")]
    WindowTooShort {
        flight: String,
        steps: usize,
        layers: usize,
    },
    #[error("edge {0} is not a flight edge")]
    NotAFlightEdge(EdgeId),
    #[error("scenario has no airports")]
    NoAirports,
    #[error("flight `{flight}`: {source}")]
    Energy {
        flight: String,
        #[source]
        source: EnergyError,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Vertex {
    pub airport: usize,
    /// Operations layer, `0..num_layers`.
    pub time: usize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum EdgeKind {
    Ground,
    Flight {
        flight: usize,
        /// Flight duration in steps (t^f).
        steps: usize,
        /// Energy of the flight for the fleet's first aircraft, kWh.
        energy_kwh: f64,
    },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Edge {
    pub id: EdgeId,
    pub tail: Vertex,
    pub head: Vertex,
    pub kind: EdgeKind,
}

impl Edge {
    pub fn is_ground(&self) -> bool {
        matches!(self.kind, EdgeKind::Ground)
    }

    pub fn flight(&self) -> Option<usize> {
        match self.kind {
            EdgeKind::Flight { flight, .. } => Some(flight),
            EdgeKind::Ground => None,
        }
    }

    /// Step (layer transition) the edge spans.
    pub fn step(&self) -> usize {
        self.tail.time
    }
}

/// Flight duration in whole steps: nearest integer to `block / dt`, exact
/// halves rounded up, never less than one.
pub fn flight_steps(block_time_minutes: f64, dt_minutes: u32) -> usize {
    let ratio = block_time_minutes / f64::from(dt_minutes);
    ((ratio + 0.5).floor() as usize).max(1)
}

#[derive(Debug, Clone)]
pub struct TimeExpandedGraph {
    num_airports: usize,
    num_layers: usize,
    edges: Vec<Edge>,
    /// Indexed by `airport * (num_layers - 1) + step`.
    ground: Vec<EdgeId>,
    flight_edges: Vec<Vec<EdgeId>>,
    flight_steps: Vec<usize>,
    /// `[flight][aircraft]`, kWh.
    flight_energy_kwh: Vec<Vec<f64>>,
    out_edges: Vec<Vec<EdgeId>>,
    in_edges: Vec<Vec<EdgeId>>,
}

pub fn build_graph(scenario: &Scenario) -> Result<TimeExpandedGraph, GraphError> {
    let num_airports = scenario.airports.len();
    if num_airports == 0 {
        return Err(GraphError::NoAirports);
    }
    let grid = &scenario.time_grid;
    let num_layers = grid.ops_layers();
    let num_steps = num_layers - 1;

    let mut steps_per_flight = Vec::with_capacity(scenario.flights.len());
    let mut energy_table = Vec::with_capacity(scenario.flights.len());
    for f in &scenario.flights {
        let steps = flight_steps(f.block_time_minutes, grid.dt_minutes);
        if steps > num_steps {
            return Err(GraphError::WindowTooShort {
                flight: f.id.clone(),
                steps,
                layers: num_layers,
            });
        }
        steps_per_flight.push(steps);
        let energies = scenario
            .fleet
            .iter()
            .map(|k| flight_energy(&FlightEnergyInputs::for_aircraft(k, f.distance_km)))
            .collect::<Result<Vec<_>, _>>()
            .map_err(|source| GraphError::Energy {
                flight: f.id.clone(),
                source,
            })?;
        energy_table.push(energies);
    }

    let endpoints: Vec<(usize, usize)> = scenario
        .flights
        .iter()
        .map(|f| {
            (
                scenario.airport_index(&f.origin).expect("validated scenario"),
                scenario
                    .airport_index(&f.destination)
                    .expect("validated scenario"),
            )
        })
        .collect();

    let mut edges = Vec::new();
    let mut ground = vec![0; num_airports * num_steps];
    let mut flight_edges = vec![Vec::new(); scenario.flights.len()];
    for step in 0..num_steps {
        for airport in 0..num_airports {
            let id = edges.len();
            ground[airport * num_steps + step] = id;
            edges.push(Edge {
                id,
                tail: Vertex { airport, time: step },
                head: Vertex {
                    airport,
                    time: step + 1,
                },
                kind: EdgeKind::Ground,
            });
        }
        for (flight, &(origin, destination)) in endpoints.iter().enumerate() {
            let steps = steps_per_flight[flight];
            // the flight edge plus its steps-1 virtual edges must end by the last layer
            if step + steps > num_steps {
                continue;
            }
            let id = edges.len();
            flight_edges[flight].push(id);
            edges.push(Edge {
                id,
                tail: Vertex {
                    airport: origin,
                    time: step,
                },
                head: Vertex {
                    airport: destination,
                    time: step + 1,
                },
                kind: EdgeKind::Flight {
                    flight,
                    steps,
                    energy_kwh: energy_table[flight].first().copied().unwrap_or(0.0),
                },
            });
        }
    }

    let num_vertices = num_airports * num_layers;
    let mut out_edges = vec![Vec::new(); num_vertices];
    let mut in_edges = vec![Vec::new(); num_vertices];
    for e in &edges {
        out_edges[e.tail.airport * num_layers + e.tail.time].push(e.id);
        in_edges[e.head.airport * num_layers + e.head.time].push(e.id);
    }

    Ok(TimeExpandedGraph {
        num_airports,
        num_layers,
        edges,
        ground,
        flight_edges,
        flight_steps: steps_per_flight,
        flight_energy_kwh: energy_table,
        out_edges,
        in_edges,
    })
}

impl TimeExpandedGraph {
    pub fn num_airports(&self) -> usize {
        self.num_airports
    }

    /// |T|.
    pub fn num_layers(&self) -> usize {
        self.num_layers
    }

    pub fn num_steps(&self) -> usize {
        self.num_layers - 1
    }

    pub fn num_vertices(&self) -> usize {
        self.num_airports * self.num_layers
    }

    pub fn vertex_id(&self, v: Vertex) -> usize {
        v.airport * self.num_layers + v.time
    }

    pub fn vertex(&self, id: usize) -> Vertex {
        Vertex {
            airport: id / self.num_layers,
            time: id % self.num_layers,
        }
    }

    pub fn vertices(&self) -> impl Iterator<Item = Vertex> + '_ {
        (0..self.num_vertices()).map(|id| self.vertex(id))
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn edge(&self, id: EdgeId) -> &Edge {
        &self.edges[id]
    }

    pub fn num_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn ground_edge(&self, airport: usize, step: usize) -> EdgeId {
        self.ground[airport * self.num_steps() + step]
    }

    pub fn ground_edges(&self) -> impl Iterator<Item = &Edge> {
        self.edges.iter().filter(|e| e.is_ground())
    }

    pub fn num_ground_edges(&self) -> usize {
        self.ground.len()
    }

    pub fn flight_edges(&self, flight: usize) -> &[EdgeId] {
        &self.flight_edges[flight]
    }

    pub fn all_flight_edges(&self) -> impl Iterator<Item = &Edge> {
        self.edges.iter().filter(|e| !e.is_ground())
    }

    pub fn num_flight_edges(&self) -> usize {
        self.flight_edges.iter().map(Vec::len).sum()
    }

    pub fn num_flights(&self) -> usize {
        self.flight_edges.len()
    }

    pub fn flight_steps(&self, flight: usize) -> usize {
        self.flight_steps[flight]
    }

    pub fn flight_energy_kwh(&self, flight: usize, aircraft: usize) -> f64 {
        self.flight_energy_kwh[flight][aircraft]
    }

    /// Flight edge of `flight` departing at `step`, if it exists.
    pub fn flight_edge_at(&self, flight: usize, step: usize) -> Option<EdgeId> {
        self.flight_edges[flight]
            .iter()
            .copied()
            .find(|&id| self.edges[id].tail.time == step)
    }

    pub fn out_edges(&self, v: Vertex) -> &[EdgeId] {
        &self.out_edges[self.vertex_id(v)]
    }

    pub fn in_edges(&self, v: Vertex) -> &[EdgeId] {
        &self.in_edges[self.vertex_id(v)]
    }

    /// Ground edges at the destination that the aircraft occupies while the
    /// flight is still under way: `t^f - 1` consecutive edges starting at the
    /// flight edge's head.
    pub fn virtual_edges(&self, flight_edge: EdgeId) -> Result<Vec<EdgeId>, GraphError> {
        let edge = self
            .edges
            .get(flight_edge)
            .ok_or(GraphError::NotAFlightEdge(flight_edge))?;
        match edge.kind {
            EdgeKind::Flight { steps, .. } => Ok((0..steps - 1)
                .map(|tau| self.ground_edge(edge.head.airport, edge.head.time + tau))
                .collect()),
            EdgeKind::Ground => Err(GraphError::NotAFlightEdge(flight_edge)),
        }
    }

    /// Debug dump: `tail_airport,tail_t,head_airport,head_t,kind,flight_id`.
    pub fn write_edge_csv(&self, scenario: &Scenario, out: impl Write) -> csv::Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record([
            "tail_airport",
            "tail_t",
            "head_airport",
            "head_t",
            "kind",
            "flight_id",
        ])?;
        for e in &self.edges {
            let (kind, flight) = match e.kind {
                EdgeKind::Ground => ("ground", String::new()),
                EdgeKind::Flight { flight, .. } => ("flight", scenario.flights[flight].id.clone()),
            };
            w.write_record([
                scenario.airports[e.tail.airport].id.clone(),
                e.tail.time.to_string(),
                scenario.airports[e.head.airport].id.clone(),
                e.head.time.to_string(),
                kind.to_string(),
                flight,
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}
