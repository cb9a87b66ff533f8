//! Grid-energy minimizing routing and charging for electric aircraft fleets.

pub mod aircraft_energy;
pub mod airport_energy;
pub mod graph;
pub mod milp;
pub mod model;
pub mod oracle;
pub mod pipeline;
pub mod report;
pub mod scenario;
pub mod solution;
pub mod solver;
pub mod synthetic;
pub mod validate;

#[cfg(test)]
mod test_support;
