use std::fs;
use std::num::NonZeroU32;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use aerogrid::graph::build_graph;
use aerogrid::milp::BuildOptions;
use aerogrid::pipeline::{run, PipelineOptions, RunOutcome};
use aerogrid::report::{compare, summarize, summary_text, write_run_dir, RunSummary};
use aerogrid::scenario::{load_irradiance_csv, load_scenario, FixedMovement, Scenario, TimeGrid};
use aerogrid::solution::Solution;
use aerogrid::solver::{backend_by_name, SolveOptions, SolveStatus};
use aerogrid::synthetic::{abc_scenario, baseline_timetable, WEEK};
use aerogrid::validate::{validate_solution, DEFAULT_TOLERANCE};
use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand};

/// Exit codes besides 0 (success) and 1 (usage, I/O and model errors).
const EXIT_INFEASIBLE: u8 = 2;
const EXIT_NOT_OPTIMAL: u8 = 3;
const EXIT_INVALID: u8 = 4;

#[derive(Parser)]
#[command(
    name = "aerogrid",
    version,
    about = "Grid-energy minimizing electric aircraft scheduling"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve a scenario and write a run directory.
    Solve(SolveArgs),
    /// Solve the fixed timetable and the free problem and compare grid energy.
    Compare(SolveArgs),
    /// Check a solution file against a scenario.
    Validate {
        #[arg(long)]
        scenario: PathBuf,
        #[arg(long)]
        solution: PathBuf,
        #[arg(long)]
        irradiance: Option<PathBuf>,
        #[arg(long, default_value_t = DEFAULT_TOLERANCE)]
        tolerance: f64,
        /// Print the report as JSON.
        #[arg(long)]
        json: bool,
    },
    /// Write the built-in three-island scenario for one weekday.
    Synth {
        /// mon, tue, ... or 1-7.
        #[arg(long, default_value = "mon")]
        day: String,
        #[arg(long)]
        out: PathBuf,
        /// Embed the airline-style baseline timetable.
        #[arg(long)]
        baseline: bool,
    },
}

#[derive(Args, Clone)]
struct SolveArgs {
    #[arg(long)]
    scenario: PathBuf,
    /// Irradiance CSV (`timestamp,<airport>...`); overrides the scenario's table.
    #[arg(long)]
    irradiance: Option<PathBuf>,
    /// Re-discretize to this step (minutes); needs --irradiance.
    #[arg(long)]
    dt: Option<u32>,
    #[arg(long, default_value = "run")]
    out: PathBuf,
    #[arg(long, default_value = "highs")]
    backend: String,
    /// Seconds.
    #[arg(long, default_value_t = 600.0)]
    time_limit: f64,
    #[arg(long, default_value_t = 1e-6)]
    gap: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    threads: Option<NonZeroU32>,
    /// JSON list of movements; defaults to the scenario's own timetable.
    #[arg(long)]
    fixed_schedule: Option<PathBuf>,
    /// Let the solver add positioning flights around the fixed timetable.
    #[arg(long)]
    allow_repositioning: bool,
    #[arg(long)]
    export_lp: bool,
    /// Exit 0 when stopped at the time limit with a validated incumbent.
    #[arg(long)]
    accept_gap: bool,
    /// Order identical aircraft by flight count to speed up the search.
    #[arg(long)]
    symmetry_breaking: bool,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Solve(args) => cmd_solve(&args),
        Command::Compare(args) => cmd_compare(&args),
        Command::Validate {
            scenario,
            solution,
            irradiance,
            tolerance,
            json,
        } => cmd_validate(&scenario, &solution, irradiance.as_deref(), tolerance, json),
        Command::Synth { day, out, baseline } => cmd_synth(&day, &out, baseline),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

/// Change the step length, keeping the operations window in minutes.
fn rediscretize(scenario: Scenario, dt: u32, irradiance: &Path) -> Result<Scenario> {
    let old = scenario.time_grid;
    let to_new = |index: usize, what: &str| -> Result<usize> {
        let minutes = index as u64 * u64::from(old.dt_minutes);
        if minutes % u64::from(dt) != 0 {
            bail!("{what} at minute {minutes} is not a multiple of --dt {dt}");
        }
        Ok((minutes / u64::from(dt)) as usize)
    };
    let grid = TimeGrid::new(
        dt,
        to_new(old.ops_start_index, "operations start")?,
        to_new(old.ops_end_index, "operations end")?,
    )
    .with_context(|| format!("--dt {dt}"))?;
    let fixed_schedule = scenario
        .fixed_schedule
        .as_ref()
        .map(|moves| {
            moves
                .iter()
                .map(|m| {
                    Ok(FixedMovement {
                        departure_step: to_new(m.departure_step, &format!("departure of `{}`", m.flight))?,
                        ..m.clone()
                    })
                })
                .collect::<Result<Vec<_>>>()
        })
        .transpose()?;
    let series = load_irradiance_csv(irradiance, &grid)
        .with_context(|| format!("reading {}", irradiance.display()))?;
    let rescaled = Scenario {
        time_grid: grid,
        fixed_schedule,
        irradiance: series,
        ..scenario
    };
    rescaled.validate().context("re-discretized scenario")?;
    Ok(rescaled)
}

fn load_inputs(scenario: &Path, irradiance: Option<&Path>, dt: Option<u32>) -> Result<Scenario> {
    let mut s = load_scenario(scenario).with_context(|| format!("loading {}", scenario.display()))?;
    match (dt, irradiance) {
        (Some(dt), Some(csv)) if dt != s.time_grid.dt_minutes => s = rediscretize(s, dt, csv)?,
        (Some(dt), None) if dt != s.time_grid.dt_minutes => {
            bail!("--dt {dt} differs from the scenario's step and needs --irradiance to resample")
        }
        (_, Some(csv)) => {
            let series = load_irradiance_csv(csv, &s.time_grid)
                .with_context(|| format!("reading {}", csv.display()))?;
            s = s.with_irradiance(series).context("irradiance table")?;
        }
        _ => {}
    }
    Ok(s)
}

fn pipeline_options(args: &SolveArgs) -> PipelineOptions {
    PipelineOptions {
        build: BuildOptions {
            symmetry_breaking: args.symmetry_breaking,
            ..BuildOptions::default()
        },
        solve: SolveOptions {
            time_limit_s: args.time_limit,
            gap_tolerance: args.gap,
            threads: args.threads,
            seed: args.seed,
            ..SolveOptions::default()
        },
        fix: aerogrid::milp::FixOptions {
            allow_repositioning: args.allow_repositioning,
        },
        ..PipelineOptions::default()
    }
}

fn solve_once(
    scenario: &Scenario,
    args: &SolveArgs,
    schedule: Option<Vec<FixedMovement>>,
    start: Option<Vec<f64>>,
) -> Result<RunOutcome> {
    let mut solver = backend_by_name(&args.backend)?;
    let mut options = PipelineOptions {
        fixed_schedule: schedule,
        ..pipeline_options(args)
    };
    options.solve.start = start;
    Ok(run(scenario, &options, solver.as_mut())?)
}

fn exit_for(outcome: &RunOutcome, accept_gap: bool) -> ExitCode {
    match outcome.status {
        SolveStatus::Infeasible => {
            eprintln!("scenario is infeasible: the demand cannot be flown with this fleet and energy budget");
            ExitCode::from(EXIT_INFEASIBLE)
        }
        _ if outcome.validation.as_ref().is_some_and(|v| !v.passed) => {
            eprintln!("solution failed validation");
            ExitCode::from(EXIT_INVALID)
        }
        SolveStatus::Optimal => ExitCode::SUCCESS,
        SolveStatus::TimeLimit if accept_gap && outcome.solution.is_some() => ExitCode::SUCCESS,
        other => {
            eprintln!("solver stopped with status {}", other.as_str());
            ExitCode::from(EXIT_NOT_OPTIMAL)
        }
    }
}

fn fixed_schedule(args: &SolveArgs, scenario: &Scenario) -> Result<Option<Vec<FixedMovement>>> {
    match &args.fixed_schedule {
        Some(path) => {
            let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
            let moves = serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))?;
            Ok(Some(moves))
        }
        None => Ok(None),
    }
    .map(|m| m.or_else(|| scenario.fixed_schedule.clone()))
}

fn report(dir: &Path, outcome: &RunOutcome, summary: &RunSummary, export_lp: bool) -> Result<()> {
    write_run_dir(dir, outcome, summary, export_lp).with_context(|| format!("writing {}", dir.display()))?;
    print!("{}", summary_text(summary));
    Ok(())
}

fn cmd_solve(args: &SolveArgs) -> Result<ExitCode> {
    let scenario = load_inputs(&args.scenario, args.irradiance.as_deref(), args.dt)?;
    let schedule = match &args.fixed_schedule {
        Some(_) => fixed_schedule(args, &scenario)?,
        None => None,
    };
    let outcome = solve_once(&scenario, args, schedule, None)?;
    let summary = summarize(&scenario, &outcome);
    report(&args.out, &outcome, &summary, args.export_lp)?;
    Ok(exit_for(&outcome, args.accept_gap))
}

fn cmd_compare(args: &SolveArgs) -> Result<ExitCode> {
    let scenario = load_inputs(&args.scenario, args.irradiance.as_deref(), args.dt)?;
    let schedule = fixed_schedule(args, &scenario)?
        .ok_or_else(|| anyhow!("compare needs --fixed-schedule or a scenario with `fixed_schedule`"))?;

    let baseline = solve_once(&scenario, args, Some(schedule), None).context("baseline timetable")?;
    // the baseline is feasible for the free problem and seeds its search
    let start = (!baseline.columns.is_empty()).then(|| baseline.columns.clone());
    let optimized = solve_once(&scenario, args, None, start).context("free routing")?;
    let base_summary = summarize(&scenario, &baseline);
    let opt_summary = summarize(&scenario, &optimized);
    report(
        &args.out.join("baseline"),
        &baseline,
        &base_summary,
        args.export_lp,
    )?;
    report(
        &args.out.join("optimized"),
        &optimized,
        &opt_summary,
        args.export_lp,
    )?;

    let comparison = compare(base_summary, opt_summary);
    fs::write(
        args.out.join("comparison.json"),
        serde_json::to_string_pretty(&comparison)? + "\n",
    )?;
    match comparison.reduction_percent {
        Some(r) => println!("grid energy reduction: {r:.2} %"),
        None => println!("grid energy reduction: undefined (baseline draws no grid energy)"),
    }

    for outcome in [&baseline, &optimized] {
        let code = exit_for(outcome, args.accept_gap);
        if code != ExitCode::SUCCESS {
            return Ok(code);
        }
    }
    if comparison.optimized_not_worse == Some(false) {
        eprintln!("optimized schedule needs more grid energy than the baseline");
        return Ok(ExitCode::from(EXIT_INVALID));
    }
    Ok(ExitCode::SUCCESS)
}

fn cmd_validate(
    scenario: &Path,
    solution: &Path,
    irradiance: Option<&Path>,
    tolerance: f64,
    json: bool,
) -> Result<ExitCode> {
    let scenario = load_inputs(scenario, irradiance, None)?;
    let solution = Solution::load(solution).with_context(|| format!("loading {}", solution.display()))?;
    solution
        .matches(&scenario)
        .map_err(|m| anyhow!("solution does not fit the scenario: {m}"))?;
    let graph = build_graph(&scenario)?;
    let report = validate_solution(&scenario, &graph, &solution, tolerance);
    if json {
        println!("{}", report.to_json());
    } else {
        print!("{}", report.to_text());
    }
    Ok(if report.passed {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(EXIT_INVALID)
    })
}

fn parse_day(day: &str) -> Result<usize> {
    let lower = day.to_ascii_lowercase();
    if let Ok(n) = lower.parse::<usize>() {
        if (1..=7).contains(&n) {
            return Ok(n - 1);
        }
    }
    WEEK.iter()
        .position(|d| {
            d.to_string()
                .to_ascii_lowercase()
                .starts_with(&lower[..lower.len().min(3)])
                && lower.len() >= 3
        })
        .ok_or_else(|| anyhow!("unknown day `{day}` (use mon..sun or 1-7)"))
}

fn cmd_synth(day: &str, out: &Path, baseline: bool) -> Result<ExitCode> {
    let mut s = abc_scenario(WEEK[parse_day(day)?]);
    if baseline {
        s.fixed_schedule = Some(baseline_timetable(&s));
    }
    fs::write(out, s.to_json() + "\n").with_context(|| format!("writing {}", out.display()))?;
    Ok(ExitCode::SUCCESS)
}
