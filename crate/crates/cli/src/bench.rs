//! Benchmark suites: planner comparison across map classes, and
//! allocation quality and time as the task count grows.
//!
//! Each suite draws per-instance seeds from one generator seeded with the
//! suite seed, in instance order, so results do not depend on how many
//! threads run the instances.

use crate::args::PlannerKind;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rangetap_core::auction::{
    allocate_in, AllocConfig, Environment, LegModel, RangeCheckMode, RobotSpec, TaskSpec,
};
use rangetap_core::geometry::{Aabb, ObstacleSet, Point};
use rangetap_core::oracles::{grid_astar, rasterize, remeasure_with_planner, OccupancyGrid, VisibilityGraph};
use rangetap_core::planner::{GosPlanner, PlannedPath};
use rangetap_core::sim::{generate_map, query_regions, sample_free_point, MapKind, Method, Scenario};
use rayon::prelude::*;
use serde::Serialize;
use std::time::Instant;

pub const THREADS_ENV: &str = "RANGETAP_THREADS";

/// Worker count: `RANGETAP_THREADS` if set and positive, else the number
/// of available cores.
pub fn bench_threads() -> usize {
    std::env::var(THREADS_ENV)
        .ok()
        .and_then(|v| v.parse::<usize>().ok())
        .filter(|n| *n > 0)
        .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()))
}

fn run_parallel<T: Send, R: Send>(items: Vec<T>, f: impl Fn(T) -> R + Sync + Send) -> Vec<R> {
    let pool = rayon::ThreadPoolBuilder::new().num_threads(bench_threads()).build().expect("thread pool");
    pool.install(|| items.into_par_iter().map(f).collect())
}

fn instance_seeds(seed: u64, n: usize) -> Vec<u64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n).map(|_| rng.gen()).collect()
}

/// Grid cell size used for A* on each map class.
pub fn astar_resolution(kind: MapKind) -> f64 {
    match kind {
        MapKind::Small => 0.25,
        MapKind::Medium | MapKind::Large | MapKind::Random => 1.0,
    }
}

/// Robot radius used to inflate obstacles for planner queries.
pub fn query_radius(kind: MapKind) -> f64 {
    match kind {
        MapKind::Small => 0.2,
        MapKind::Medium => 1.0,
        MapKind::Large => 5.0,
        MapKind::Random => 0.5,
    }
}

/// One generated map with everything needed to query all three planners.
pub struct PlanningInstance {
    pub kind: MapKind,
    pub seed: u64,
    pub map: Scenario,
    pub obstacles: ObstacleSet,
    pub grid: OccupancyGrid,
    pub start: Point,
    pub goal: Point,
}

impl PlanningInstance {
    /// Generates the map, inflates it, rasterizes it at `resolution`, and
    /// picks a start in the left strip and a goal in the right strip, both
    /// at free cell centers so every planner sees the same endpoints.
    pub fn generate(kind: MapKind, seed: u64, resolution: f64) -> Result<PlanningInstance, String> {
        let map = generate_map(kind, seed);
        let obstacles = ObstacleSet::build(&map.obstacles, query_radius(kind)).map_err(|e| e.to_string())?;
        let grid = rasterize(&obstacles, map.bounds, resolution).map_err(|e| e.to_string())?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed);
        let (left, right) = query_regions(&map.bounds, 0.1);
        let mut endpoint = |region: &Aabb| -> Result<Point, String> {
            for _ in 0..1000 {
                let p = sample_free_point(&obstacles, region, &mut rng).ok_or("no free point")?;
                let Some((i, j)) = grid.cell_of(p) else { continue };
                let c = grid.cell_center(i, j);
                if !grid.is_blocked(i, j) && obstacles.obstacles().iter().all(|o| !o.contains(c)) {
                    return Ok(c);
                }
            }
            Err("no free cell center in query region".into())
        };
        let start = endpoint(&left)?;
        let goal = endpoint(&right)?;
        Ok(PlanningInstance { kind, seed, map, obstacles, grid, start, goal })
    }

    /// Runs one planner, timing only the query itself.
    pub fn run(&self, planner: PlannerKind, graph: Option<&VisibilityGraph>) -> Result<(PlannedPath, f64), String> {
        let t = Instant::now();
        let out = match planner {
            PlannerKind::Gos => GosPlanner::new(&self.obstacles).plan(self.start, self.goal).map_err(|e| e.to_string()),
            PlannerKind::Astar => match grid_astar(&self.grid, self.start, self.goal) {
                Ok(Some(p)) => Ok(p.path),
                Ok(None) => Err("unreachable".into()),
                Err(e) => Err(e.to_string()),
            },
            PlannerKind::Visgraph => {
                let g = graph.ok_or("visibility graph not built")?;
                g.shortest_path(self.start, self.goal).map_err(|e| e.to_string())
            }
        };
        let elapsed = t.elapsed().as_secs_f64();
        out.map(|p| (p, elapsed))
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct QueryRecord {
    pub class: MapKind,
    pub instance: usize,
    pub seed: u64,
    pub planner: &'static str,
    pub time_s: f64,
    pub length_m: Option<f64>,
    pub ratio_to_optimal: Option<f64>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct Table1Row {
    pub class: MapKind,
    pub planner: &'static str,
    pub repeats: usize,
    pub failures: usize,
    pub mean_time_s: f64,
    pub mean_length_m: f64,
    pub mean_ratio_to_optimal: f64,
}

pub const TABLE1_HEADER: [&str; 7] =
    ["map_class", "planner", "repeats", "failures", "mean_time_s", "mean_length_m", "mean_ratio_to_optimal"];
pub const TABLE1_INSTANCE_HEADER: [&str; 8] =
    ["map_class", "instance", "seed", "planner", "time_s", "length_m", "ratio_to_optimal", "error"];

#[derive(Debug, Clone, Serialize)]
pub struct Table1Report {
    pub records: Vec<QueryRecord>,
    pub rows: Vec<Table1Row>,
}

const PLANNERS: [PlannerKind; 3] = [PlannerKind::Gos, PlannerKind::Astar, PlannerKind::Visgraph];

fn query_instance(kind: MapKind, instance: usize, seed: u64) -> Vec<QueryRecord> {
    let failed = |planner: PlannerKind, error: String| QueryRecord {
        class: kind,
        instance,
        seed,
        planner: planner.as_str(),
        time_s: 0.0,
        length_m: None,
        ratio_to_optimal: None,
        error: Some(error),
    };
    let inst = match PlanningInstance::generate(kind, seed, astar_resolution(kind)) {
        Ok(i) => i,
        Err(e) => return PLANNERS.iter().map(|p| failed(*p, e.clone())).collect(),
    };
    let graph = VisibilityGraph::build(&inst.obstacles);
    let results: Vec<_> = PLANNERS.iter().map(|p| (*p, inst.run(*p, Some(&graph)))).collect();
    let optimal = results
        .iter()
        .find(|(p, _)| *p == PlannerKind::Visgraph)
        .and_then(|(_, r)| r.as_ref().ok())
        .map(|(path, _)| path.length());
    results
        .into_iter()
        .map(|(p, r)| match r {
            Ok((path, t)) => QueryRecord {
                class: kind,
                instance,
                seed,
                planner: p.as_str(),
                time_s: t,
                length_m: Some(path.length()),
                ratio_to_optimal: optimal.filter(|o| *o > 0.0).map(|o| path.length() / o),
                error: None,
            },
            Err(e) => failed(p, e),
        })
        .collect()
}

fn mean(xs: impl Iterator<Item = f64>) -> f64 {
    let (s, n) = xs.fold((0.0, 0usize), |(s, n), x| (s + x, n + 1));
    if n == 0 {
        f64::NAN
    } else {
        s / n as f64
    }
}

/// Planner comparison: `repeats` random maps and queries per class.
pub fn table1(classes: &[MapKind], repeats: usize, seed: u64) -> Table1Report {
    let seeds = instance_seeds(seed, classes.len() * repeats);
    let jobs: Vec<(MapKind, usize, u64)> = classes
        .iter()
        .enumerate()
        .flat_map(|(c, k)| (0..repeats).map(move |i| (*k, i, c * repeats + i)))
        .map(|(k, i, n)| (k, i, seeds[n]))
        .collect();
    let records: Vec<QueryRecord> = run_parallel(jobs, |(k, i, s)| query_instance(k, i, s)).into_iter().flatten().collect();
    let mut rows = Vec::new();
    for k in classes {
        for p in PLANNERS {
            let rs: Vec<&QueryRecord> = records.iter().filter(|r| r.class == *k && r.planner == p.as_str()).collect();
            let ok: Vec<&&QueryRecord> = rs.iter().filter(|r| r.error.is_none()).collect();
            rows.push(Table1Row {
                class: *k,
                planner: p.as_str(),
                repeats: rs.len(),
                failures: rs.len() - ok.len(),
                mean_time_s: mean(ok.iter().map(|r| r.time_s)),
                mean_length_m: mean(ok.iter().filter_map(|r| r.length_m)),
                mean_ratio_to_optimal: mean(ok.iter().filter_map(|r| r.ratio_to_optimal)),
            });
        }
    }
    Table1Report { records, rows }
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

impl Table1Report {
    pub fn row_records(&self) -> Vec<Vec<String>> {
        self.rows
            .iter()
            .map(|r| {
                vec![
                    r.class.to_string(),
                    r.planner.to_string(),
                    r.repeats.to_string(),
                    r.failures.to_string(),
                    format!("{:.6}", r.mean_time_s),
                    format!("{:.3}", r.mean_length_m),
                    format!("{:.4}", r.mean_ratio_to_optimal),
                ]
            })
            .collect()
    }

    pub fn instance_records(&self) -> Vec<Vec<String>> {
        self.records
            .iter()
            .map(|r| {
                vec![
                    r.class.to_string(),
                    r.instance.to_string(),
                    r.seed.to_string(),
                    r.planner.to_string(),
                    r.time_s.to_string(),
                    opt(r.length_m),
                    opt(r.ratio_to_optimal),
                    r.error.clone().unwrap_or_default(),
                ]
            })
            .collect()
    }
}

#[derive(Debug, Clone)]
pub struct Fig6Config {
    pub robots: usize,
    pub task_counts: Vec<usize>,
    pub repeats: usize,
    pub seed: u64,
    pub robot_radius: f64,
    pub capacity: usize,
    /// Budgets for the first and second half of the fleet, in meters.
    pub budgets: (f64, f64),
    pub range_check: RangeCheckMode,
}

impl Default for Fig6Config {
    fn default() -> Self {
        Fig6Config {
            robots: 20,
            task_counts: vec![40, 60, 80, 100],
            repeats: 5,
            seed: 1,
            robot_radius: 5.0,
            capacity: 10,
            budgets: (8000.0, 20000.0),
            range_check: RangeCheckMode::PaperLiteral,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Fig6Record {
    pub tasks: usize,
    pub instance: usize,
    pub seed: u64,
    pub method: Method,
    pub alloc_time_s: f64,
    pub total_distance_m: f64,
    pub assigned: usize,
    pub unassigned: usize,
    pub total_reward: f64,
    pub compute_bid_calls: usize,
    pub error: Option<String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct Fig6Row {
    pub tasks: usize,
    pub method: Method,
    pub repeats: usize,
    pub failures: usize,
    pub mean_alloc_time_s: f64,
    pub mean_total_distance_m: f64,
    pub mean_unassigned: f64,
}

pub const FIG6_HEADER: [&str; 7] =
    ["tasks", "method", "repeats", "failures", "mean_alloc_time_s", "mean_total_distance_m", "mean_unassigned"];
pub const FIG6_INSTANCE_HEADER: [&str; 11] = [
    "tasks",
    "instance",
    "seed",
    "method",
    "alloc_time_s",
    "total_distance_m",
    "assigned",
    "unassigned",
    "total_reward",
    "compute_bid_calls",
    "error",
];

#[derive(Debug, Clone, Serialize)]
pub struct Fig6Report {
    pub map_seed: u64,
    pub records: Vec<Fig6Record>,
    pub rows: Vec<Fig6Row>,
}

/// Robots in the left strip, tasks anywhere free on the map.
pub fn fig6_fleet(map: &Scenario, obstacles: &ObstacleSet, cfg: &Fig6Config, tasks: usize, seed: u64) -> (Vec<RobotSpec>, Vec<TaskSpec>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (left, _) = query_regions(&map.bounds, 0.1);
    let half = cfg.robots / 2;
    let robots = (0..cfg.robots)
        .map(|i| RobotSpec {
            id: i as u32,
            start: sample_free_point(obstacles, &left, &mut rng).expect("start strip is obstacle-free"),
            radius: cfg.robot_radius,
            capacity: cfg.capacity,
            range_budget: if i < half { cfg.budgets.0 } else { cfg.budgets.1 },
        })
        .collect();
    let tasks = (0..tasks)
        .map(|j| TaskSpec {
            id: j as u32,
            position: sample_free_point(obstacles, &map.bounds, &mut rng).expect("map has free space"),
        })
        .collect();
    (robots, tasks)
}

fn fig6_instance(env: &Environment, map: &Scenario, cfg: &Fig6Config, tasks: usize, instance: usize, seed: u64) -> Vec<Fig6Record> {
    let set = env.for_radius(cfg.robot_radius);
    let (robots, task_specs) = fig6_fleet(map, set, cfg, tasks, seed);
    let alloc_cfg = AllocConfig::with_mode(cfg.range_check);
    [Method::RangeTap, Method::StraightLine]
        .into_iter()
        .map(|method| {
            let model = match method {
                Method::RangeTap => LegModel::Planned,
                Method::StraightLine => LegModel::StraightLine,
            };
            let t = Instant::now();
            let result = allocate_in(&robots, &task_specs, env, &alloc_cfg, model);
            let alloc_time_s = t.elapsed().as_secs_f64();
            match result {
                Ok((mut alloc, stats)) => {
                    if method == Method::StraightLine {
                        remeasure_with_planner(&mut alloc, &robots, &task_specs, env, &alloc_cfg);
                    }
                    Fig6Record {
                        tasks,
                        instance,
                        seed,
                        method,
                        alloc_time_s,
                        total_distance_m: alloc.total_distance(),
                        assigned: alloc.assigned_count(),
                        unassigned: alloc.unassigned.len(),
                        total_reward: alloc.total_reward(),
                        compute_bid_calls: stats.compute_bid_calls,
                        error: None,
                    }
                }
                Err(e) => Fig6Record {
                    tasks,
                    instance,
                    seed,
                    method,
                    alloc_time_s,
                    total_distance_m: f64::NAN,
                    assigned: 0,
                    unassigned: tasks,
                    total_reward: 0.0,
                    compute_bid_calls: 0,
                    error: Some(e.to_string()),
                },
            }
        })
        .collect()
}

/// Allocation comparison on one large map as the task count grows.
pub fn fig6(cfg: &Fig6Config) -> Result<Fig6Report, String> {
    let n = cfg.task_counts.len() * cfg.repeats;
    let mut seeds = instance_seeds(cfg.seed, n + 1);
    let map_seed = seeds.pop().expect("one seed for the map");
    let map = generate_map(MapKind::Large, map_seed);
    let env = Environment::build(&map.obstacles, [cfg.robot_radius]).map_err(|e| e.to_string())?;
    let jobs: Vec<(usize, usize, u64)> = cfg
        .task_counts
        .iter()
        .enumerate()
        .flat_map(|(c, m)| (0..cfg.repeats).map(move |i| (*m, i, c * cfg.repeats + i)))
        .map(|(m, i, k)| (m, i, seeds[k]))
        .collect();
    let records: Vec<Fig6Record> =
        run_parallel(jobs, |(m, i, s)| fig6_instance(&env, &map, cfg, m, i, s)).into_iter().flatten().collect();
    let mut rows = Vec::new();
    for m in &cfg.task_counts {
        for method in [Method::RangeTap, Method::StraightLine] {
            let rs: Vec<&Fig6Record> = records.iter().filter(|r| r.tasks == *m && r.method == method).collect();
            let ok: Vec<&&Fig6Record> = rs.iter().filter(|r| r.error.is_none()).collect();
            rows.push(Fig6Row {
                tasks: *m,
                method,
                repeats: rs.len(),
                failures: rs.len() - ok.len(),
                mean_alloc_time_s: mean(ok.iter().map(|r| r.alloc_time_s)),
                mean_total_distance_m: mean(ok.iter().map(|r| r.total_distance_m)),
                mean_unassigned: mean(ok.iter().map(|r| r.unassigned as f64)),
            });
        }
    }
    Ok(Fig6Report { map_seed, records, rows })
}

impl Fig6Report {
    pub fn row(&self, tasks: usize, method: Method) -> Option<&Fig6Row> {
        self.rows.iter().find(|r| r.tasks == tasks && r.method == method)
    }

    pub fn row_records(&self) -> Vec<Vec<String>> {
        self.rows
            .iter()
            .map(|r| {
                vec![
                    r.tasks.to_string(),
                    r.method.to_string(),
                    r.repeats.to_string(),
                    r.failures.to_string(),
                    format!("{:.6}", r.mean_alloc_time_s),
                    format!("{:.3}", r.mean_total_distance_m),
                    format!("{:.2}", r.mean_unassigned),
                ]
            })
            .collect()
    }

    pub fn instance_records(&self) -> Vec<Vec<String>> {
        self.records
            .iter()
            .map(|r| {
                vec![
                    r.tasks.to_string(),
                    r.instance.to_string(),
                    r.seed.to_string(),
                    r.method.to_string(),
                    r.alloc_time_s.to_string(),
                    r.total_distance_m.to_string(),
                    r.assigned.to_string(),
                    r.unassigned.to_string(),
                    r.total_reward.to_string(),
                    r.compute_bid_calls.to_string(),
                    r.error.clone().unwrap_or_default(),
                ]
            })
            .collect()
    }
}

/// Least-squares slope of `ln y` against `ln x`.
pub fn loglog_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let lx: Vec<f64> = xs.iter().map(|x| x.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|y| y.ln()).collect();
    let n = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxy: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = lx.iter().map(|x| (x - mx).powi(2)).sum();
    sxy / sxx
}
