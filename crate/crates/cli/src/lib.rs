//! Command-line front end for `rangetap`.
//!
//! Exit codes: 0 on success, 2 for bad arguments or an unreadable or
//! invalid scenario, 3 when planning fails or the environment makes the
//! allocation infeasible, 1 when an output file cannot be written.

pub mod args;
pub mod bench;
pub mod output;
pub mod svg;

use args::{AllocateArgs, BenchArgs, Cli, Command, PlanArgs, PlannerKind, SimulateArgs, Suite};
use output::{text_table, write_atomic, write_csv, write_json};
use rangetap_core::auction::{allocate_in, AllocConfig, AllocError, LegModel};
use rangetap_core::geometry::{Aabb, ObstacleSet};
use rangetap_core::oracles::{grid_astar, rasterize, straightline_baseline_in, OracleError, VisibilityGraph};
use rangetap_core::planner::{GosPlanner, PlannedPath};
use rangetap_core::sim::{generate_map, load_scenario, run_mission_with, MissionError, MissionReport, Method, Scenario, CSV_HEADER};
use serde::Serialize;
use std::path::Path;
use std::time::Instant;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Infeasible(String),
    #[error("{0}")]
    Output(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Infeasible(_) => 3,
            CliError::Output(_) => 1,
        }
    }
}

fn out_err(path: &Path) -> impl FnOnce(std::io::Error) -> CliError + '_ {
    move |e| CliError::Output(format!("cannot write {}: {e}", path.display()))
}

// Writes to stdout, ignoring a closed pipe (e.g. `rangetap ... | head`).
fn emit(text: &str) {
    use std::io::Write;
    let _ = std::io::stdout().lock().write_all(text.as_bytes());
}

macro_rules! say {
    ($($arg:tt)*) => {
        emit(&format!("{}\n", format_args!($($arg)*)))
    };
}

fn load(path: &Path) -> Result<Scenario, CliError> {
    load_scenario(path).map_err(|e| CliError::Usage(e.to_string()))
}

pub fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Plan(a) => cmd_plan(&a),
        Command::Allocate(a) => cmd_allocate(&a),
        Command::Simulate(a) => cmd_simulate(&a),
        Command::Bench(a) => cmd_bench(&a),
    }
}

#[derive(Debug, Serialize)]
struct PlanReport<'a> {
    planner: &'a str,
    radius_m: f64,
    path: &'a PlannedPath,
    length_m: f64,
    time_s: f64,
}

pub fn cmd_plan(a: &PlanArgs) -> Result<(), CliError> {
    let map = match (&a.scenario, a.map) {
        (Some(p), _) => load(p)?,
        (None, Some(kind)) => generate_map(kind, a.seed),
        (None, None) => return Err(CliError::Usage("one of --scenario or --map is required".into())),
    };
    if !(a.radius >= 0.0 && a.radius.is_finite()) {
        return Err(CliError::Usage(format!("--radius must be non-negative, got {}", a.radius)));
    }
    let set = ObstacleSet::build(&map.obstacles, a.radius).map_err(|e| CliError::Usage(e.to_string()))?;

    let (path, time_s) = match a.planner {
        PlannerKind::Gos => {
            let t = Instant::now();
            let r = GosPlanner::new(&set).plan(a.from, a.to);
            (r.map_err(|e| CliError::Infeasible(e.to_string()))?, t.elapsed().as_secs_f64())
        }
        PlannerKind::Astar => {
            let window = Aabb::from_points(&[map.bounds.min, map.bounds.max, a.from, a.to]);
            let grid = rasterize(&set, window, a.resolution).map_err(|e| match e {
                OracleError::GridTooLarge { .. } | OracleError::InvalidResolution(_) => CliError::Usage(e.to_string()),
                e => CliError::Infeasible(e.to_string()),
            })?;
            let t = Instant::now();
            let r = grid_astar(&grid, a.from, a.to).map_err(|e| CliError::Infeasible(e.to_string()))?;
            let elapsed = t.elapsed().as_secs_f64();
            let r = r.ok_or_else(|| CliError::Infeasible("no grid path between the endpoints".into()))?;
            (r.path, elapsed)
        }
        PlannerKind::Visgraph => {
            let graph = VisibilityGraph::build(&set);
            let t = Instant::now();
            let r = graph.shortest_path(a.from, a.to);
            (r.map_err(|e| CliError::Infeasible(e.to_string()))?, t.elapsed().as_secs_f64())
        }
    };

    let pts: Vec<String> = path.waypoints().iter().map(ToString::to_string).collect();
    say!("planner: {}", a.planner.as_str());
    say!("waypoints: {}", pts.join(" -> "));
    say!("length_m: {:.6}", path.length());
    say!("time_s: {time_s:.6}");

    if let Some(dir) = &a.out {
        let report = PlanReport { planner: a.planner.as_str(), radius_m: a.radius, path: &path, length_m: path.length(), time_s };
        let p = dir.join("report.json");
        write_json(&p, &report).map_err(out_err(&p))?;
        let p = dir.join("metrics.csv");
        let row = vec![
            a.planner.as_str().to_string(),
            path.length().to_string(),
            time_s.to_string(),
            path.waypoints().len().to_string(),
        ];
        write_csv(&p, &["planner", "length_m", "time_s", "waypoints"], &[row]).map_err(out_err(&p))?;
    }
    if let Some(p) = &a.svg {
        let scene = svg::Scene {
            raw: map.obstacles.clone(),
            inflated: if a.radius > 0.0 { set.obstacles().to_vec() } else { Vec::new() },
            paths: vec![(a.planner.as_str().to_string(), path.waypoints().to_vec())],
            starts: vec![(0, a.from)],
            tasks: vec![(0, a.to)],
        };
        write_atomic(p, svg::render(map.bounds, &scene).as_bytes()).map_err(out_err(p))?;
    }
    Ok(())
}

fn apply_overrides(s: &mut Scenario, range_check: Option<rangetap_core::auction::RangeCheckMode>) {
    if let Some(m) = range_check {
        s.alloc_config.range_check_mode = m;
    }
}

fn infeasible(e: AllocError) -> CliError {
    CliError::Infeasible(e.to_string())
}

pub const ALLOCATE_HEADER: [&str; 12] = [
    "method",
    "range_check",
    "lazy",
    "total_reward",
    "total_distance_m",
    "assigned",
    "unassigned",
    "rounds",
    "compute_bid_calls",
    "planner_calls",
    "diagnostics",
    "wall_time_s",
];

pub fn cmd_allocate(a: &AllocateArgs) -> Result<(), CliError> {
    let mut s = load(&a.scenario)?;
    apply_overrides(&mut s, a.range_check);
    s.alloc_config.lazy = !a.eager;
    let cfg: AllocConfig = s.alloc_config;
    let env = s.environment().map_err(infeasible)?;
    let t = Instant::now();
    let result = match a.mode {
        Method::RangeTap => allocate_in(&s.robots, &s.tasks, &env, &cfg, LegModel::Planned).map_err(infeasible),
        Method::StraightLine => straightline_baseline_in(&s.robots, &s.tasks, &env, &cfg).map_err(|e| match e {
            OracleError::Alloc(e) => infeasible(e),
            e => CliError::Infeasible(e.to_string()),
        }),
    };
    let wall = t.elapsed().as_secs_f64();
    let (alloc, stats) = result?;

    let row = vec![
        a.mode.to_string(),
        cfg.range_check_mode.to_string(),
        cfg.lazy.to_string(),
        format!("{:.6}", alloc.total_reward()),
        format!("{:.6}", alloc.total_distance()),
        alloc.assigned_count().to_string(),
        alloc.unassigned.len().to_string(),
        alloc.rounds.to_string(),
        stats.compute_bid_calls.to_string(),
        stats.planner_calls.to_string(),
        alloc.diagnostics.len().to_string(),
        format!("{wall:.6}"),
    ];
    emit(&text_table(&ALLOCATE_HEADER, std::slice::from_ref(&row)));
    for (id, l) in &alloc.ledgers {
        let tasks: Vec<String> = l.tasks.iter().map(u32::to_string).collect();
        say!("robot {id}: [{}] distance {:.3} m", tasks.join(", "), l.distance);
    }
    if !alloc.unassigned.is_empty() {
        say!("unassigned: {:?}", alloc.unassigned);
    }
    if let Some(dir) = &a.out {
        let p = dir.join("allocation.json");
        write_json(&p, &alloc).map_err(out_err(&p))?;
        let p = dir.join("metrics.csv");
        write_csv(&p, &ALLOCATE_HEADER, &[row]).map_err(out_err(&p))?;
    }
    Ok(())
}

fn mission_scene(s: &Scenario, r: &MissionReport) -> svg::Scene {
    let inflated = s
        .environment()
        .ok()
        .and_then(|env| s.robots.iter().map(|rb| rb.radius).reduce(f64::max).map(|rad| env.for_radius(rad).obstacles().to_vec()))
        .unwrap_or_default();
    svg::Scene {
        raw: s.obstacles.clone(),
        inflated,
        paths: r.robots.iter().map(|rb| (format!("robot {}", rb.id), rb.trajectory.clone())).collect(),
        starts: s.robots.iter().map(|rb| (rb.id, rb.start)).collect(),
        tasks: s.tasks.iter().map(|t| (t.id, t.position)).collect(),
    }
}

fn write_mission(s: &Scenario, r: &MissionReport, a: &SimulateArgs) -> Result<(), CliError> {
    if let Some(dir) = &a.out {
        let p = dir.join("report.json");
        write_json(&p, r).map_err(out_err(&p))?;
        let p = dir.join("metrics.csv");
        write_csv(&p, &CSV_HEADER, &r.csv_records()).map_err(out_err(&p))?;
    }
    if let Some(p) = &a.svg {
        write_atomic(p, svg::render(s.bounds, &mission_scene(s, r)).as_bytes()).map_err(out_err(p))?;
    }
    Ok(())
}

pub fn cmd_simulate(a: &SimulateArgs) -> Result<(), CliError> {
    let mut s = load(&a.scenario)?;
    apply_overrides(&mut s, a.range_check);
    let report = match run_mission_with(&s, a.mode) {
        Ok(r) => r,
        Err(MissionError::AllocationInfeasible { error, partial }) => {
            write_mission(&s, &partial, a)?;
            return Err(CliError::Infeasible(error.to_string()));
        }
    };
    emit(&text_table(&CSV_HEADER, &report.csv_records()));
    say!("allocation_time_s: {:.6}", report.allocation_time_s);
    for d in &report.diagnostics {
        say!("note: {d}");
    }
    write_mission(&s, &report, a)
}

pub fn cmd_bench(a: &BenchArgs) -> Result<(), CliError> {
    if a.repeats == 0 {
        return Err(CliError::Usage("--repeats must be at least 1".into()));
    }
    match a.suite {
        Suite::Table1 => {
            let report = bench::table1(&rangetap_core::sim::MapKind::CLASSES, a.repeats, a.seed);
            emit(&text_table(&bench::TABLE1_HEADER, &report.row_records()));
            let p = a.out.join("table1.csv");
            write_csv(&p, &bench::TABLE1_HEADER, &report.row_records()).map_err(out_err(&p))?;
            let p = a.out.join("table1_instances.csv");
            write_csv(&p, &bench::TABLE1_INSTANCE_HEADER, &report.instance_records()).map_err(out_err(&p))?;
        }
        Suite::Fig6 => {
            let cfg = bench::Fig6Config { repeats: a.repeats, seed: a.seed, ..Default::default() };
            let report = bench::fig6(&cfg).map_err(CliError::Infeasible)?;
            emit(&text_table(&bench::FIG6_HEADER, &report.row_records()));
            let p = a.out.join("fig6.csv");
            write_csv(&p, &bench::FIG6_HEADER, &report.row_records()).map_err(out_err(&p))?;
            let p = a.out.join("fig6_instances.csv");
            write_csv(&p, &bench::FIG6_INSTANCE_HEADER, &report.instance_records()).map_err(out_err(&p))?;
        }
    }
    Ok(())
}
