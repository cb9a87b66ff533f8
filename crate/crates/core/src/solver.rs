//! Solver backends for [`ModelIr`] instances.

use std::num::NonZeroU32;
use std::os::raw::{c_char, c_int, c_void};
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::Arc;
use std::time::{Duration, Instant};

use highs::{Col, HighsModelStatus, HighsSolutionStatus, RowProblem, Sense as HighsSense};
use highs_sys::{
    kHighsCallbackIpmInterrupt, kHighsCallbackMipInterrupt, kHighsCallbackSimplexInterrupt,
    HighsCallbackDataIn, HighsCallbackDataOut, Highs_setCallback, Highs_startCallback,
};
use serde::Serialize;
use thiserror::Error;

use crate::model::{ModelError, ModelIr, Sense};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SolveStatus {
    Optimal,
    Infeasible,
    Unbounded,
    /// Time limit reached or stopped through a [`StopFlag`]; an incumbent
    /// may be available.
    TimeLimit,
    Error,
}

impl SolveStatus {
    pub fn as_str(self) -> &'static str {
        match self {
            SolveStatus::Optimal => "optimal",
            SolveStatus::Infeasible => "infeasible",
            SolveStatus::Unbounded => "unbounded",
            SolveStatus::TimeLimit => "time_limit",
            SolveStatus::Error => "error",
        }
    }
}

#[derive(Debug, Clone)]
pub struct SolveOptions {
    pub time_limit_s: f64,
    /// Relative and absolute MIP gap.
    pub gap_tolerance: f64,
    pub threads: Option<NonZeroU32>,
    pub seed: u64,
    /// Feasible column values handed to the MIP search as an incumbent.
    pub start: Option<Vec<f64>>,
    /// Primal and dual feasibility tolerance for pure LPs.
    pub lp_tolerance: f64,
}

impl Default for SolveOptions {
    fn default() -> Self {
        Self {
            time_limit_s: 600.0,
            gap_tolerance: 1e-6,
            threads: None,
            seed: 0,
            start: None,
            lp_tolerance: 1e-9,
        }
    }
}

#[derive(Debug, Clone)]
pub struct SolveResult {
    pub status: SolveStatus,
    pub objective: Option<f64>,
    /// Column values, empty when no primal solution exists.
    pub columns: Vec<f64>,
    /// `(primal - dual) / max(1, |primal|)`; zero for proven-optimal LPs.
    pub gap: Option<f64>,
    pub wall_time: Duration,
}

impl SolveResult {
    pub fn has_solution(&self) -> bool {
        !self.columns.is_empty()
    }
}

#[derive(Debug, Error)]
pub enum SolverError {
    #[error(transparent)]
    InvalidModel(#[from] ModelError),
    #[error("unknown backend `{0}` (available: highs)")]
    UnknownBackend(String),
    #[error("solver backend failed: {0}")]
    Backend(String),
}

/// Cooperative stop request shared with a running solve.
#[derive(Debug, Clone, Default)]
pub struct StopFlag(Arc<AtomicBool>);

impl StopFlag {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn stop(&self) {
        self.0.store(true, Ordering::SeqCst);
    }

    pub fn reset(&self) {
        self.0.store(false, Ordering::SeqCst);
    }

    pub fn is_stopped(&self) -> bool {
        self.0.load(Ordering::SeqCst)
    }
}

pub trait Solver: Send {
    fn name(&self) -> &'static str;
    fn solve(&mut self, model: &ModelIr, options: &SolveOptions) -> Result<SolveResult, SolverError>;
}

pub fn backend_by_name(name: &str) -> Result<Box<dyn Solver>, SolverError> {
    match name.to_ascii_lowercase().as_str() {
        "highs" => Ok(Box::new(HighsBackend::new())),
        other => Err(SolverError::UnknownBackend(other.to_string())),
    }
}

#[derive(Debug, Default)]
pub struct HighsBackend {
    stop: StopFlag,
}

impl HighsBackend {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with_stop_flag(stop: StopFlag) -> Self {
        Self { stop }
    }

    pub fn stop_flag(&self) -> StopFlag {
        self.stop.clone()
    }
}

unsafe extern "C" fn interrupt_callback(
    callback_type: c_int,
    _message: *const c_char,
    _data_out: *const HighsCallbackDataOut,
    data_in: *mut HighsCallbackDataIn,
    user_data: *mut c_void,
) {
    let interrupt = callback_type == kHighsCallbackSimplexInterrupt
        || callback_type == kHighsCallbackIpmInterrupt
        || callback_type == kHighsCallbackMipInterrupt;
    if !interrupt || data_in.is_null() || user_data.is_null() {
        return;
    }
    // SAFETY: user_data points at the AtomicBool owned by the StopFlag that
    // `HighsBackend::solve` keeps alive until the solve returns.
    let flag = unsafe { &*(user_data as *const AtomicBool) };
    if flag.load(Ordering::Relaxed) {
        unsafe { (*data_in).user_interrupt = 1 };
    }
}

impl Solver for HighsBackend {
    fn name(&self) -> &'static str {
        "highs"
    }

    fn solve(&mut self, model: &ModelIr, options: &SolveOptions) -> Result<SolveResult, SolverError> {
        model.check_bounds()?;
        let started = Instant::now();
        let lp = model.is_pure_lp();

        let mut problem = RowProblem::new();
        let cols: Vec<Col> = model
            .columns
            .iter()
            .map(|c| {
                let integer = c.integer && !lp;
                problem.add_column_with_integrality(c.cost, c.lower..=c.upper, integer)
            })
            .collect();
        for row in &model.rows {
            let terms = row.terms.iter().map(|&(c, v)| (cols[c], v));
            match row.sense {
                Sense::Le => problem.add_row(..=row.rhs, terms),
                Sense::Ge => problem.add_row(row.rhs.., terms),
                Sense::Eq => problem.add_row(row.rhs..=row.rhs, terms),
            }
        }

        let mut highs = problem
            .try_optimise(HighsSense::Minimise)
            .map_err(|s| SolverError::Backend(format!("model rejected: {s:?}")))?;
        if log::log_enabled!(log::Level::Debug) {
            highs.set_option("output_flag", true);
            highs.set_option("log_to_console", true);
        } else {
            highs.make_quiet();
        }
        highs.set_option("time_limit", options.time_limit_s.max(0.0));
        highs.set_option("random_seed", (options.seed % i32::MAX as u64) as i32);
        if lp {
            highs.set_option("primal_feasibility_tolerance", options.lp_tolerance);
            highs.set_option("dual_feasibility_tolerance", options.lp_tolerance);
        } else {
            highs.set_option("mip_rel_gap", options.gap_tolerance);
            highs.set_option("mip_abs_gap", options.gap_tolerance);
        }
        if let Some(threads) = options.threads {
            highs.set_threads(threads);
        }
        if let Some(start) = options.start.as_deref().filter(|_| !lp) {
            if start.len() != model.num_columns() {
                return Err(SolverError::Backend(format!(
                    "start has {} values for {} columns",
                    start.len(),
                    model.num_columns()
                )));
            }
            highs
                .try_set_solution(Some(start), None, None, None)
                .map_err(|s| SolverError::Backend(format!("start rejected: {s:?}")))?;
        }

        let stop = self.stop.0.clone();
        // SAFETY: the callback data pointer stays valid while `stop` lives,
        // which outlasts the solve below.
        unsafe {
            let ptr = highs.as_mut_ptr();
            Highs_setCallback(ptr, Some(interrupt_callback), Arc::as_ptr(&stop) as *mut c_void);
            for kind in [
                kHighsCallbackSimplexInterrupt,
                kHighsCallbackIpmInterrupt,
                kHighsCallbackMipInterrupt,
            ] {
                Highs_startCallback(ptr, kind);
            }
        }

        let solved = highs
            .try_solve()
            .map_err(|s| SolverError::Backend(format!("run failed: {s:?}")))?;
        drop(stop);

        let status = match solved.status() {
            HighsModelStatus::Optimal | HighsModelStatus::ModelEmpty => SolveStatus::Optimal,
            HighsModelStatus::Infeasible => SolveStatus::Infeasible,
            HighsModelStatus::Unbounded => SolveStatus::Unbounded,
            // presolve infeasibility with a zero objective cannot be unbounded
            HighsModelStatus::UnboundedOrInfeasible
                if model.columns.iter().all(|c| c.cost >= 0.0 && c.lower.is_finite()) =>
            {
                SolveStatus::Infeasible
            }
            HighsModelStatus::ReachedTimeLimit
            | HighsModelStatus::ReachedInterrupt
            | HighsModelStatus::ReachedIterationLimit => SolveStatus::TimeLimit,
            other => {
                log::warn!("HiGHS finished with status {other:?}");
                SolveStatus::Error
            }
        };
        let feasible = solved.primal_solution_status() == HighsSolutionStatus::Feasible;
        let columns = if feasible && matches!(status, SolveStatus::Optimal | SolveStatus::TimeLimit) {
            solved.get_solution().columns().to_vec()
        } else {
            Vec::new()
        };
        let objective = (!columns.is_empty()).then(|| model.objective(&columns));
        let gap = objective.map(|primal| {
            if lp {
                if status == SolveStatus::Optimal {
                    0.0
                } else {
                    f64::INFINITY
                }
            } else {
                match solved.double_info_value(c"mip_dual_bound") {
                    Ok(dual) if dual.is_finite() => ((primal - dual) / primal.abs().max(1.0)).max(0.0),
                    _ => f64::INFINITY,
                }
            }
        });
        Ok(SolveResult {
            status,
            objective,
            columns,
            gap,
            wall_time: started.elapsed(),
        })
    }
}
