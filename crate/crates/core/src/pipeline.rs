//! Build, solve, polish, extract and validate in one call.

use std::time::{Duration, Instant};

use thiserror::Error;

use crate::graph::{build_graph, GraphError, TimeExpandedGraph};
use crate::milp::{
    build_model_with, extract_solution, fix_flights, fix_integers, fix_integral, BuildError, BuildOptions,
    ExtractError, FixError, FixOptions, VariableIndex,
};
use crate::model::ModelIr;
use crate::scenario::{FixedMovement, Scenario};
use crate::solution::Solution;
use crate::solver::{SolveOptions, SolveStatus, Solver, SolverError};
use crate::validate::{validate_solution, ValidationReport, DEFAULT_TOLERANCE};

const INTEGRALITY_TOLERANCE: f64 = 1e-6;
/// Feasibility tolerance of the relaxation that guides the start.
const RELAXATION_TOLERANCE: f64 = 1e-7;

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Build(#[from] BuildError),
    #[error(transparent)]
    Fix(#[from] FixError),
    #[error(transparent)]
    Solver(#[from] SolverError),
    #[error(transparent)]
    Extract(#[from] ExtractError),
}

#[derive(Debug, Clone)]
pub struct PipelineOptions {
    pub build: BuildOptions,
    pub solve: SolveOptions,
    /// Restrict the run to this timetable (baseline mode).
    pub fixed_schedule: Option<Vec<FixedMovement>>,
    pub fix: FixOptions,
    /// Re-solve the LP with the binaries fixed after a MILP solve.
    pub polish: bool,
    /// Seed the MILP search with a solution of the model restricted to the
    /// integer values its LP relaxation already takes.
    pub lp_guided_start: bool,
    pub tolerance: f64,
}

impl Default for PipelineOptions {
    fn default() -> Self {
        Self {
            build: BuildOptions::default(),
            solve: SolveOptions::default(),
            fixed_schedule: None,
            fix: FixOptions::default(),
            polish: true,
            lp_guided_start: true,
            tolerance: DEFAULT_TOLERANCE,
        }
    }
}

#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub status: SolveStatus,
    pub solution: Option<Solution>,
    pub validation: Option<ValidationReport>,
    pub gap: Option<f64>,
    pub build_time: Duration,
    pub solve_time: Duration,
    pub graph: TimeExpandedGraph,
    pub model: ModelIr,
    pub index: VariableIndex,
    /// Final column values, empty without a primal solution.
    pub columns: Vec<f64>,
}

impl RunOutcome {
    pub fn objective_kwh(&self) -> Option<f64> {
        self.solution.as_ref().map(|s| s.objective_kwh)
    }

    pub fn is_valid(&self) -> bool {
        self.validation.as_ref().is_some_and(|v| v.passed)
    }
}

pub fn run(
    scenario: &Scenario,
    options: &PipelineOptions,
    solver: &mut dyn Solver,
) -> Result<RunOutcome, PipelineError> {
    let started = Instant::now();
    let graph = build_graph(scenario)?;
    let (mut model, index) = build_model_with(scenario, &graph, &options.build)?;
    if let Some(schedule) = &options.fixed_schedule {
        model = fix_flights(&model, &index, scenario, &graph, schedule, options.fix)?;
    }
    let build_time = started.elapsed();
    log::info!(
        "model: {} columns ({} integer), {} rows, built in {:.2?}",
        model.num_columns(),
        model.num_free_integers(),
        model.num_rows(),
        build_time
    );

    let started = Instant::now();
    let mut solve_options = options.solve.clone();
    if options.lp_guided_start && !model.is_pure_lp() {
        if let Some(start) = lp_guided_start(&model, &options.solve, solver)? {
            let improves = solve_options
                .start
                .as_ref()
                .is_none_or(|s| model.objective(&start) < model.objective(s));
            if improves {
                solve_options.start = Some(start);
            }
        }
        solve_options.time_limit_s = (options.solve.time_limit_s - started.elapsed().as_secs_f64()).max(0.0);
    }
    let result = solver.solve(&model, &solve_options)?;
    log::info!(
        "{} finished: {:?} in {:.2?}",
        solver.name(),
        result.status,
        result.wall_time
    );
    let mut columns = result.columns;
    if !columns.is_empty() && options.polish && !model.is_pure_lp() {
        let fixed = fix_integers(&model, &columns);
        let polished = solver.solve(&fixed, &options.solve)?;
        if polished.status == SolveStatus::Optimal && polished.has_solution() {
            columns = polished.columns;
        } else {
            log::warn!("polishing LP returned {:?}; keeping MILP values", polished.status);
        }
    }
    let solve_time = started.elapsed();

    let (solution, validation) = if columns.is_empty() {
        (None, None)
    } else {
        let solution = extract_solution(&model, &index, scenario, &graph, &columns)?;
        let report = validate_solution(scenario, &graph, &solution, options.tolerance);
        (Some(solution), Some(report))
    };

    Ok(RunOutcome {
        status: result.status,
        solution,
        validation,
        gap: result.gap,
        build_time,
        solve_time,
        graph,
        model,
        index,
        columns,
    })
}

/// Column values from the MILP restricted to the integral part of its LP
/// relaxation, using at most half of the time limit.
fn lp_guided_start(
    model: &ModelIr,
    options: &SolveOptions,
    solver: &mut dyn Solver,
) -> Result<Option<Vec<f64>>, SolverError> {
    let started = Instant::now();
    let budget = options.time_limit_s / 2.0;
    let mut sub_options = SolveOptions {
        time_limit_s: budget,
        start: None,
        lp_tolerance: RELAXATION_TOLERANCE,
        ..options.clone()
    };
    let relaxation = solver.solve(&model.relaxed(), &sub_options)?;
    if relaxation.status != SolveStatus::Optimal || !relaxation.has_solution() {
        return Ok(None);
    }
    let restricted = fix_integral(model, &relaxation.columns, INTEGRALITY_TOLERANCE);
    sub_options.time_limit_s = (budget - started.elapsed().as_secs_f64()).max(0.0);
    let sub = solver.solve(&restricted, &sub_options)?;
    log::debug!(
        "LP-guided start: {} of {} integers free, {:?}, objective {:?}",
        restricted.num_free_integers(),
        model.num_free_integers(),
        sub.status,
        sub.objective
    );
    Ok(sub.has_solution().then_some(sub.columns))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::solver::HighsBackend;
    use crate::test_support::tiny_round_trip;

    #[test]
    fn tiny_round_trip_solves_and_validates() {
        let s = tiny_round_trip();
        let out = run(&s, &PipelineOptions::default(), &mut HighsBackend::new()).unwrap();
        assert_eq!(out.status, SolveStatus::Optimal);
        assert!(out.is_valid(), "{}", out.validation.unwrap().to_text());
        let sol = out.solution.unwrap();
        let flights: usize = sol.aircraft[0]
            .steps
            .iter()
            .filter(|r| r.activity == crate::solution::Activity::Flight)
            .count();
        assert_eq!(flights, 2);
    }

    #[test]
    fn infeasible_demand_reports_no_solution() {
        let mut s = tiny_round_trip();
        s.flights[0].demand_per_day = 3;
        let out = run(&s, &PipelineOptions::default(), &mut HighsBackend::new()).unwrap();
        assert_eq!(out.status, SolveStatus::Infeasible);
        assert!(out.solution.is_none());
    }

    #[test]
    fn fixed_timetable_never_beats_free_routing() {
        let s = tiny_round_trip();
        let free = run(&s, &PipelineOptions::default(), &mut HighsBackend::new()).unwrap();
        let schedule = vec![
            FixedMovement {
                flight: "AB".into(),
                departure_step: 8,
                aircraft: None,
            },
            FixedMovement {
                flight: "BA".into(),
                departure_step: 9,
                aircraft: None,
            },
        ];
        let opts = PipelineOptions {
            fixed_schedule: Some(schedule),
            ..PipelineOptions::default()
        };
        let fixed = run(&s, &opts, &mut HighsBackend::new()).unwrap();
        assert!(fixed.model.is_pure_lp());
        assert!(fixed.is_valid());
        assert!(free.objective_kwh().unwrap() <= fixed.objective_kwh().unwrap() + 1e-6);
    }
}
