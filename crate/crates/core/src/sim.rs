//! Scenarios, map generation, and distance-accounted mission replay.
//!
//! Robots follow their committed polylines (and the way home, when asked)
//! with no kinematics. Distance is the only unit of account.

use crate::auction::{
    allocate_in, AllocConfig, AllocError, AllocStats, Allocation, Environment, LegModel, RangeCheckMode, RobotSpec,
    TaskSpec,
};
use crate::geometry::{convex_hull, tol, Aabb, ObstacleSet, Point, Polygon};
use crate::oracles::straightline_baseline_in;
use crate::planner::GosPlanner;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::collections::BTreeSet;
use std::fmt;
use std::path::Path;
use std::str::FromStr;
use std::time::Instant;
use thiserror::Error;

pub const SCENARIO_VERSION: u32 = 1;

/// One violated invariant, located by its path in the scenario file.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct FieldError {
    pub path: String,
    pub message: String,
}

impl fmt::Display for FieldError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.path, self.message)
    }
}

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("cannot read {path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("parse error: {0}")]
    Parse(String),
    #[error("invalid scenario ({} problems): {}", .0.len(), join(.0))]
    Validation(Vec<FieldError>),
}

fn join(errs: &[FieldError]) -> String {
    errs.iter().map(ToString::to_string).collect::<Vec<_>>().join("; ")
}

// On-disk layout. Field names carry their units.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ScenarioFile {
    scenario_version: u32,
    name: String,
    bounds_m: BoundsFile,
    #[serde(default)]
    obstacles: Vec<ObstacleFile>,
    robots: Vec<RobotFile>,
    #[serde(default)]
    tasks: Vec<TaskFile>,
    #[serde(default)]
    allocation: AllocationFile,
    #[serde(default)]
    return_to_start: bool,
    #[serde(default)]
    seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    baseline_budget_margin_m: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    notes: Option<String>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct BoundsFile {
    min_x: f64,
    min_y: f64,
    max_x: f64,
    max_y: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ObstacleFile {
    id: u32,
    vertices_m: Vec<Point>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RobotFile {
    id: u32,
    start_m: Point,
    radius_m: f64,
    capacity: usize,
    range_budget_m: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct TaskFile {
    id: u32,
    position_m: Point,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
struct AllocationFile {
    lambda: f64,
    range_check: RangeCheckMode,
    sentinel: f64,
    lazy: bool,
}

impl Default for AllocationFile {
    fn default() -> Self {
        let c = AllocConfig::default();
        AllocationFile { lambda: c.lambda_l, range_check: c.range_check_mode, sentinel: c.sentinel, lazy: c.lazy }
    }
}

/// A validated mission description.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub name: String,
    pub bounds: Aabb,
    pub obstacles: Vec<Polygon>,
    pub robots: Vec<RobotSpec>,
    pub tasks: Vec<TaskSpec>,
    pub alloc_config: AllocConfig,
    pub return_to_start: bool,
    pub seed: u64,
    /// How much the straight-line baseline's budgets are tightened when
    /// demonstrating its failure mode.
    pub baseline_budget_margin: Option<f64>,
    pub notes: Option<String>,
}

impl Scenario {
    pub fn from_json_str(text: &str) -> Result<Scenario, ScenarioError> {
        // A file from another schema version may not parse at all, so the
        // version is checked on its own first.
        #[derive(Deserialize)]
        struct Version {
            scenario_version: Option<serde_json::Value>,
        }
        if let Ok(Version { scenario_version: Some(v) }) = serde_json::from_str::<Version>(text) {
            if v.as_u64() != Some(SCENARIO_VERSION as u64) {
                return Err(ScenarioError::Validation(vec![FieldError {
                    path: "scenario_version".into(),
                    message: format!("unsupported version {v}, expected {SCENARIO_VERSION}"),
                }]));
            }
        }
        let file: ScenarioFile = serde_json::from_str(text).map_err(|e| ScenarioError::Parse(e.to_string()))?;
        Scenario::from_file(file)
    }

    fn from_file(f: ScenarioFile) -> Result<Scenario, ScenarioError> {
        let mut errs = Vec::new();
        let mut err = |path: String, message: String| errs.push(FieldError { path, message });

        if f.scenario_version != SCENARIO_VERSION {
            err(
                "scenario_version".into(),
                format!("unsupported version {}, expected {SCENARIO_VERSION}", f.scenario_version),
            );
        }
        let b = &f.bounds_m;
        let bounds = Aabb { min: Point::new(b.min_x, b.min_y), max: Point::new(b.max_x, b.max_y) };
        let bounds_ok = bounds.min.is_finite() && bounds.max.is_finite() && b.min_x < b.max_x && b.min_y < b.max_y;
        if !bounds_ok {
            err("bounds_m".into(), "bounds must be finite with min < max".into());
        }
        let inside = |p: Point| !bounds_ok || bounds.contains(p, 0.0);

        let mut obstacles = Vec::new();
        let mut ids = BTreeSet::new();
        for (k, o) in f.obstacles.iter().enumerate() {
            if !ids.insert(o.id) {
                err(format!("obstacles[{k}].id"), format!("duplicate obstacle id {}", o.id));
            }
            match Polygon::normalized(o.id, o.vertices_m.clone()) {
                Ok(p) => obstacles.push(p),
                Err(e) => err(format!("obstacles[{k}].vertices_m"), e.to_string()),
            }
        }

        let mut robots = Vec::new();
        let mut ids = BTreeSet::new();
        for (k, r) in f.robots.iter().enumerate() {
            if !ids.insert(r.id) {
                err(format!("robots[{k}].id"), format!("duplicate robot id {}", r.id));
            }
            if !r.start_m.is_finite() || !inside(r.start_m) {
                err(format!("robots[{k}].start_m"), format!("start {} outside bounds", r.start_m));
            }
            if !(r.radius_m > 0.0 && r.radius_m.is_finite()) {
                err(format!("robots[{k}].radius_m"), "radius must be positive".into());
            }
            if !(r.range_budget_m > 0.0 && r.range_budget_m.is_finite()) {
                err(format!("robots[{k}].range_budget_m"), "range budget must be positive".into());
            }
            robots.push(RobotSpec {
                id: r.id,
                start: r.start_m,
                radius: r.radius_m,
                capacity: r.capacity,
                range_budget: r.range_budget_m,
            });
        }

        let mut ids = BTreeSet::new();
        let tasks = f
            .tasks
            .iter()
            .enumerate()
            .map(|(k, t)| {
                if !ids.insert(t.id) {
                    err(format!("tasks[{k}].id"), format!("duplicate task id {}", t.id));
                }
                if !t.position_m.is_finite() || !inside(t.position_m) {
                    err(format!("tasks[{k}].position_m"), format!("position {} outside bounds", t.position_m));
                }
                TaskSpec { id: t.id, position: t.position_m }
            })
            .collect();

        let a = &f.allocation;
        let alloc_config = AllocConfig {
            lambda_l: a.lambda,
            range_check_mode: a.range_check,
            sentinel: a.sentinel,
            lazy: a.lazy,
        };
        if let Err(e) = alloc_config.validate() {
            err("allocation".into(), e.to_string());
        }
        if let Some(m) = f.baseline_budget_margin_m {
            if !(m >= 0.0 && m.is_finite()) {
                err("baseline_budget_margin_m".into(), "margin must be non-negative".into());
            }
        }

        if !errs.is_empty() {
            return Err(ScenarioError::Validation(errs));
        }
        Ok(Scenario {
            name: f.name,
            bounds,
            obstacles,
            robots,
            tasks,
            alloc_config,
            return_to_start: f.return_to_start,
            seed: f.seed,
            baseline_budget_margin: f.baseline_budget_margin_m,
            notes: f.notes,
        })
    }

    fn to_file(&self) -> ScenarioFile {
        let c = &self.alloc_config;
        ScenarioFile {
            scenario_version: SCENARIO_VERSION,
            name: self.name.clone(),
            bounds_m: BoundsFile {
                min_x: self.bounds.min.x,
                min_y: self.bounds.min.y,
                max_x: self.bounds.max.x,
                max_y: self.bounds.max.y,
            },
            obstacles: self
                .obstacles
                .iter()
                .map(|o| ObstacleFile { id: o.id, vertices_m: o.vertices().to_vec() })
                .collect(),
            robots: self
                .robots
                .iter()
                .map(|r| RobotFile {
                    id: r.id,
                    start_m: r.start,
                    radius_m: r.radius,
                    capacity: r.capacity,
                    range_budget_m: r.range_budget,
                })
                .collect(),
            tasks: self.tasks.iter().map(|t| TaskFile { id: t.id, position_m: t.position }).collect(),
            allocation: AllocationFile {
                lambda: c.lambda_l,
                range_check: c.range_check_mode,
                sentinel: c.sentinel,
                lazy: c.lazy,
            },
            return_to_start: self.return_to_start,
            seed: self.seed,
            baseline_budget_margin_m: self.baseline_budget_margin,
            notes: self.notes.clone(),
        }
    }

    pub fn to_json_pretty(&self) -> String {
        serde_json::to_string_pretty(&self.to_file()).expect("scenario serializes")
    }

    /// Obstacles inflated per distinct robot radius.
    pub fn environment(&self) -> Result<Environment, AllocError> {
        Ok(Environment::build(&self.obstacles, self.robots.iter().map(|r| r.radius))?)
    }
}

pub fn load_scenario(path: impl AsRef<Path>) -> Result<Scenario, ScenarioError> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path)
        .map_err(|source| ScenarioError::Io { path: path.display().to_string(), source })?;
    Scenario::from_json_str(&text)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, PartialOrd, Ord)]
#[serde(rename_all = "lowercase")]
pub enum MapKind {
    Small,
    Medium,
    Large,
    Random,
}

impl MapKind {
    pub const CLASSES: [MapKind; 3] = [MapKind::Small, MapKind::Medium, MapKind::Large];

    pub fn as_str(&self) -> &'static str {
        match self {
            MapKind::Small => "small",
            MapKind::Medium => "medium",
            MapKind::Large => "large",
            MapKind::Random => "random",
        }
    }
}

impl fmt::Display for MapKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for MapKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "small" => Ok(MapKind::Small),
            "medium" => Ok(MapKind::Medium),
            "large" => Ok(MapKind::Large),
            "random" => Ok(MapKind::Random),
            _ => Err(format!("unknown map kind '{s}' (small, medium, large, random)")),
        }
    }
}

/// Obstacle placement knobs.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MapParams {
    pub width: f64,
    pub height: f64,
    pub obstacle_count: usize,
    /// Range of obstacle extents.
    pub min_size: f64,
    pub max_size: f64,
    /// Minimum clearance between obstacle bounding boxes.
    pub gap: f64,
    /// Fraction of the width kept free on the left and right edges.
    pub clear_strip: f64,
}

impl MapParams {
    pub fn for_kind(kind: MapKind, rng: &mut impl Rng) -> MapParams {
        let (width, height, obstacle_count, min_size, max_size) = match kind {
            MapKind::Small => (32.0, 32.0, 12, 1.5, 5.0),
            MapKind::Medium => (256.0, 256.0, 24, 10.0, 40.0),
            MapKind::Large => (6000.0, 4000.0, 48, 150.0, 550.0),
            MapKind::Random => {
                let w: f64 = rng.gen_range(32.0..512.0);
                let h: f64 = rng.gen_range(32.0..512.0);
                let s = w.min(h);
                (w, h, rng.gen_range(4..30), s / 30.0, s / 8.0)
            }
        };
        MapParams { width, height, obstacle_count, min_size, max_size, gap: min_size * 0.5, clear_strip: 0.1 }
    }

    pub fn bounds(&self) -> Aabb {
        Aabb { min: Point::new(0.0, 0.0), max: Point::new(self.width, self.height) }
    }
}

/// The left and right strips that generated maps keep obstacle-free, used
/// as start and goal regions.
pub fn query_regions(bounds: &Aabb, clear_strip: f64) -> (Aabb, Aabb) {
    let s = bounds.width() * clear_strip;
    let left = Aabb { min: bounds.min, max: Point::new(bounds.min.x + s, bounds.max.y) };
    let right = Aabb { min: Point::new(bounds.max.x - s, bounds.min.y), max: bounds.max };
    (left, right)
}

fn random_shape(id: u32, rng: &mut ChaCha8Rng, c: Point, size: f64) -> Option<Polygon> {
    let roll: f64 = rng.gen();
    let verts = if roll < 0.4 {
        let hw = size * rng.gen_range(0.25..0.5);
        let hh = size * rng.gen_range(0.25..0.5);
        let th: f64 = if rng.gen_bool(0.5) { 0.0 } else { rng.gen_range(0.0..std::f64::consts::PI) };
        let (s, co) = th.sin_cos();
        [(-hw, -hh), (hw, -hh), (hw, hh), (-hw, hh)]
            .iter()
            .map(|&(x, y)| Point::new(c.x + x * co - y * s, c.y + x * s + y * co))
            .collect()
    } else if roll < 0.85 {
        let n = rng.gen_range(5..9);
        let pts: Vec<Point> = (0..n)
            .map(|_| {
                let a: f64 = rng.gen_range(0.0..std::f64::consts::TAU);
                let r = size * 0.5 * rng.gen_range(0.5..1.0);
                Point::new(c.x + r * a.cos(), c.y + r * a.sin())
            })
            .collect();
        convex_hull(&pts)
    } else {
        // An L: a square with one quadrant removed.
        let h = size * 0.5;
        let t = h * rng.gen_range(0.3..0.6);
        vec![
            Point::new(c.x - h, c.y - h),
            Point::new(c.x + h, c.y - h),
            Point::new(c.x + h, c.y - h + t),
            Point::new(c.x - h + t, c.y - h + t),
            Point::new(c.x - h + t, c.y + h),
            Point::new(c.x - h, c.y + h),
        ]
    };
    Polygon::normalized(id, verts).ok()
}

/// A scenario with bounds and random obstacles but no robots or tasks.
/// Deterministic per `(kind, seed)`.
pub fn generate_map(kind: MapKind, seed: u64) -> Scenario {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let params = MapParams::for_kind(kind, &mut rng);
    generate_map_with(kind, &params, &mut rng, seed)
}

pub fn generate_map_with(kind: MapKind, params: &MapParams, rng: &mut ChaCha8Rng, seed: u64) -> Scenario {
    let bounds = params.bounds();
    let strip = params.width * params.clear_strip;
    let (x0, x1) = (strip + params.gap, params.width - strip - params.gap);
    let (y0, y1) = (params.gap, params.height - params.gap);
    let mut obstacles: Vec<Polygon> = Vec::new();
    let mut attempts = 0;
    while obstacles.len() < params.obstacle_count && attempts < params.obstacle_count * 60 {
        attempts += 1;
        let size = rng.gen_range(params.min_size..=params.max_size);
        let c = Point::new(rng.gen_range(x0..x1), rng.gen_range(y0..y1));
        let Some(poly) = random_shape(obstacles.len() as u32, rng, c, size) else { continue };
        let bb = poly.bbox();
        let fits = bb.min.x >= x0 && bb.max.x <= x1 && bb.min.y >= y0 && bb.max.y <= y1;
        if fits && obstacles.iter().all(|o| !o.bbox().overlaps(&bb, params.gap)) {
            obstacles.push(poly);
        }
    }
    Scenario {
        name: format!("{kind}-{seed}"),
        bounds,
        obstacles,
        robots: Vec::new(),
        tasks: Vec::new(),
        alloc_config: AllocConfig::default(),
        return_to_start: false,
        seed,
        baseline_budget_margin: None,
        notes: None,
    }
}

/// A uniformly drawn point of `region` outside every obstacle of `set`, or
/// `None` after 10 000 rejected draws.
pub fn sample_free_point(set: &ObstacleSet, region: &Aabb, rng: &mut impl Rng) -> Option<Point> {
    (0..10_000).find_map(|_| {
        let p = Point::new(
            rng.gen_range(region.min.x..=region.max.x),
            rng.gen_range(region.min.y..=region.max.y),
        );
        set.obstacles().iter().all(|o| !o.contains(p)).then_some(p)
    })
}

/// Which bid model the allocation phase uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    RangeTap,
    StraightLine,
}

impl Method {
    pub fn as_str(&self) -> &'static str {
        match self {
            Method::RangeTap => "rangetap",
            Method::StraightLine => "straightline",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Method {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "rangetap" => Ok(Method::RangeTap),
            "straightline" => Ok(Method::StraightLine),
            _ => Err(format!("unknown method '{s}' (rangetap, straightline)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RobotReport {
    pub id: u32,
    pub range_budget_m: f64,
    pub traveled_m: f64,
    /// Budget minus distance traveled. Negative when the plan overruns.
    pub remaining_range_m: f64,
    pub tasks_assigned: Vec<u32>,
    pub tasks_completed: Vec<u32>,
    pub completed_return: bool,
    pub trajectory: Vec<Point>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FleetReport {
    pub total_distance_m: f64,
    pub makespan_distance_m: f64,
    pub unassigned_tasks: Vec<u32>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MissionReport {
    pub scenario: String,
    pub method: Method,
    pub range_check: RangeCheckMode,
    pub return_to_start: bool,
    pub robots: Vec<RobotReport>,
    pub fleet: FleetReport,
    pub total_reward: f64,
    pub rounds: usize,
    pub allocation_time_s: f64,
    pub planner_calls: usize,
    pub compute_bid_calls: usize,
    pub diagnostics: Vec<String>,
}

pub const CSV_HEADER: [&str; 8] = [
    "row",
    "range_budget_m",
    "traveled_m",
    "remaining_range_m",
    "tasks_assigned",
    "tasks_completed",
    "completed_return",
    "unassigned_tasks",
];

fn id_list(ids: &[u32]) -> String {
    ids.iter().map(u32::to_string).collect::<Vec<_>>().join(" ")
}

impl MissionReport {
    /// Copy with wall-clock fields zeroed, for reproducibility checks.
    pub fn without_timing(&self) -> MissionReport {
        MissionReport { allocation_time_s: 0.0, ..self.clone() }
    }

    pub fn to_json_pretty(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    /// One record per robot, then a `fleet` record; columns as in
    /// [`CSV_HEADER`]. Id lists are space-separated.
    pub fn csv_records(&self) -> Vec<Vec<String>> {
        let mut rows: Vec<Vec<String>> = self
            .robots
            .iter()
            .map(|r| {
                vec![
                    format!("robot{}", r.id),
                    r.range_budget_m.to_string(),
                    r.traveled_m.to_string(),
                    r.remaining_range_m.to_string(),
                    id_list(&r.tasks_assigned),
                    id_list(&r.tasks_completed),
                    r.completed_return.to_string(),
                    String::new(),
                ]
            })
            .collect();
        let budget: f64 = self.robots.iter().map(|r| r.range_budget_m).fold(0.0, |a, b| a + b);
        let completed: Vec<u32> = self.robots.iter().flat_map(|r| r.tasks_completed.iter().copied()).collect();
        let assigned: Vec<u32> = self.robots.iter().flat_map(|r| r.tasks_assigned.iter().copied()).collect();
        rows.push(vec![
            "fleet".into(),
            budget.to_string(),
            self.fleet.total_distance_m.to_string(),
            (budget - self.fleet.total_distance_m).to_string(),
            id_list(&assigned),
            id_list(&completed),
            self.robots.iter().all(|r| r.completed_return).to_string(),
            id_list(&self.fleet.unassigned_tasks),
        ]);
        rows
    }
}

#[derive(Debug, Error)]
pub enum MissionError {
    #[error("allocation infeasible: {error}")]
    AllocationInfeasible { error: AllocError, partial: Box<MissionReport> },
}

/// Replays `s` with planner-based bids.
pub fn run_mission(s: &Scenario) -> Result<MissionReport, MissionError> {
    run_mission_with(s, Method::RangeTap)
}

pub fn run_mission_with(s: &Scenario, method: Method) -> Result<MissionReport, MissionError> {
    let env = s.environment();
    let started = Instant::now();
    let result = env.and_then(|env| {
        let out = match method {
            Method::RangeTap => allocate_in(&s.robots, &s.tasks, &env, &s.alloc_config, LegModel::Planned),
            Method::StraightLine => straightline_baseline_in(&s.robots, &s.tasks, &env, &s.alloc_config)
                .map_err(|e| match e {
                    crate::oracles::OracleError::Alloc(a) => a,
                    other => AllocError::InfeasibleEnvironment(other.to_string()),
                }),
        };
        out.map(|(a, st)| (a, st, env))
    });
    let elapsed = started.elapsed().as_secs_f64();
    match result {
        Ok((alloc, stats, env)) => Ok(replay(s, method, &alloc, stats, &env, elapsed)),
        Err(error) => {
            let idle = Allocation {
                ledgers: Default::default(),
                unassigned: s.tasks.iter().map(|t| t.id).collect(),
                rounds: 0,
                diagnostics: vec![error.to_string()],
            };
            let env = Environment::build(&[], []).expect("empty environment");
            let partial = replay(s, method, &idle, AllocStats::default(), &env, elapsed);
            Err(MissionError::AllocationInfeasible { error, partial: Box::new(partial) })
        }
    }
}

fn replay(
    s: &Scenario,
    method: Method,
    alloc: &Allocation,
    stats: AllocStats,
    env: &Environment,
    allocation_time_s: f64,
) -> MissionReport {
    let mut planner_calls = stats.planner_calls;
    let mut diagnostics = alloc.diagnostics.clone();
    let mut robots = Vec::with_capacity(s.robots.len());
    let mut sorted = s.robots.clone();
    sorted.sort_by_key(|r| r.id);
    for spec in &sorted {
        let Some(ledger) = alloc.ledgers.get(&spec.id) else {
            robots.push(RobotReport {
                id: spec.id,
                range_budget_m: spec.range_budget,
                traveled_m: 0.0,
                remaining_range_m: spec.range_budget,
                tasks_assigned: Vec::new(),
                tasks_completed: Vec::new(),
                completed_return: true,
                trajectory: vec![spec.start],
            });
            continue;
        };
        let slack = tol(spec.range_budget);
        let mut trajectory = ledger.committed_path.clone();
        let mut traveled = ledger.distance;
        let mut returned = ledger.tasks.is_empty();
        if s.return_to_start && !ledger.tasks.is_empty() {
            planner_calls += 1;
            match GosPlanner::new(env.for_radius(spec.radius)).plan(trajectory.end(), spec.start) {
                Ok(back) => {
                    trajectory.extend(&back);
                    traveled += back.length();
                    returned = traveled <= spec.range_budget + slack;
                }
                Err(e) => diagnostics.push(format!("robot {} return leg: {e}", spec.id)),
            }
        }
        let tasks_completed = ledger
            .tasks
            .iter()
            .zip(&ledger.arrival_distances)
            .filter(|(_, d)| **d <= spec.range_budget + slack)
            .map(|(t, _)| *t)
            .collect();
        robots.push(RobotReport {
            id: spec.id,
            range_budget_m: spec.range_budget,
            traveled_m: traveled,
            remaining_range_m: spec.range_budget - traveled,
            tasks_assigned: ledger.tasks.clone(),
            tasks_completed,
            completed_return: returned,
            trajectory: trajectory.waypoints().to_vec(),
        });
    }
    let total_distance_m = robots.iter().map(|r| r.traveled_m).fold(0.0, |a, b| a + b);
    let makespan_distance_m = robots.iter().map(|r| r.traveled_m).fold(0.0, f64::max);
    MissionReport {
        scenario: s.name.clone(),
        method,
        range_check: s.alloc_config.range_check_mode,
        return_to_start: s.return_to_start,
        robots,
        fleet: FleetReport { total_distance_m, makespan_distance_m, unassigned_tasks: alloc.unassigned.clone() },
        total_reward: alloc.total_reward(),
        rounds: alloc.rounds,
        allocation_time_s,
        planner_calls,
        compute_bid_calls: stats.compute_bid_calls,
        diagnostics,
    }
}

/// Remaining range at each trajectory waypoint, per robot, starting at the
/// full budget.
pub fn remaining_range_series(report: &MissionReport) -> Vec<(u32, Vec<(usize, f64)>)> {
    report
        .robots
        .iter()
        .map(|r| {
            let mut used = 0.0;
            let mut series = vec![(0, r.range_budget_m)];
            for (k, w) in r.trajectory.windows(2).enumerate() {
                used += w[0].dist(w[1]);
                series.push((k + 1, r.range_budget_m - used));
            }
            (r.id, series)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"{
        "scenario_version": 1,
        "name": "minimal",
        "bounds_m": {"min_x": 0, "min_y": 0, "max_x": 10, "max_y": 10},
        "robots": [{"id": 0, "start_m": [1, 1], "radius_m": 0.2, "capacity": 1, "range_budget_m": 10}],
        "tasks": [{"id": 0, "position_m": [4, 1]}],
        "return_to_start": true
    }"#;

    #[test]
    fn minimal_scenario_loads() {
        let s = Scenario::from_json_str(MINIMAL).unwrap();
        assert_eq!((s.robots.len(), s.tasks.len(), s.obstacles.len()), (1, 1, 0));
        assert_eq!(s.alloc_config, AllocConfig::default());
        let again = Scenario::from_json_str(&s.to_json_pretty()).unwrap();
        assert_eq!(again, s);
    }

    #[test]
    fn validation_names_fields() {
        let bad = MINIMAL.replace("[1, 1]", "[11, 1]").replace("\"radius_m\": 0.2", "\"radius_m\": -1");
        let Err(ScenarioError::Validation(errs)) = Scenario::from_json_str(&bad) else {
            panic!("expected validation error");
        };
        let paths: Vec<&str> = errs.iter().map(|e| e.path.as_str()).collect();
        assert_eq!(paths, ["robots[0].start_m", "robots[0].radius_m"]);
        assert!(matches!(Scenario::from_json_str("{"), Err(ScenarioError::Parse(_))));
        let unknown = MINIMAL.replace("\"name\"", "\"color\": 1, \"name\"");
        assert!(matches!(Scenario::from_json_str(&unknown), Err(ScenarioError::Parse(_))));
    }

    #[test]
    fn out_and_back_mission() {
        let s = Scenario::from_json_str(MINIMAL).unwrap();
        let r = run_mission(&s).unwrap();
        let robot = &r.robots[0];
        assert!((robot.traveled_m - 6.0).abs() < 1e-12);
        assert!((robot.remaining_range_m - 4.0).abs() < 1e-12);
        assert!(robot.completed_return);
        assert_eq!(robot.tasks_completed, vec![0]);
        let series = remaining_range_series(&r);
        assert!((series[0].1.last().unwrap().1 - 4.0).abs() < 1e-12);
        assert_eq!(r.csv_records().len(), 2);
    }

    #[test]
    fn with_return_budget_rejects_round_trip() {
        let mut s = Scenario::from_json_str(MINIMAL).unwrap();
        s.robots[0].range_budget = 5.0;
        s.alloc_config.range_check_mode = RangeCheckMode::WithReturn;
        let r = run_mission(&s).unwrap();
        assert_eq!(r.fleet.unassigned_tasks, vec![0]);
        assert_eq!(r.robots[0].traveled_m, 0.0);
        assert_eq!(r.robots[0].remaining_range_m, 5.0);
    }

    #[test]
    fn idle_robot_series_is_flat() {
        let mut s = Scenario::from_json_str(MINIMAL).unwrap();
        s.tasks.clear();
        let r = run_mission(&s).unwrap();
        assert_eq!(remaining_range_series(&r)[0].1, vec![(0, 10.0)]);
        assert_eq!(r.fleet.total_distance_m, 0.0);
    }

    #[test]
    fn generated_maps() {
        let small = generate_map(MapKind::Small, 7);
        assert_eq!((small.bounds.width(), small.bounds.height()), (32.0, 32.0));
        let large = generate_map(MapKind::Large, 7);
        assert_eq!((large.bounds.width(), large.bounds.height()), (6000.0, 4000.0));
        assert!(large.obstacles.len() >= 40, "{}", large.obstacles.len());
        assert_eq!(generate_map(MapKind::Medium, 3), generate_map(MapKind::Medium, 3));
        assert_ne!(generate_map(MapKind::Medium, 3).obstacles, generate_map(MapKind::Medium, 4).obstacles);
        let (left, right) = query_regions(&large.bounds, 0.1);
        for o in &large.obstacles {
            assert!(!o.bbox().overlaps(&left, 0.0) && !o.bbox().overlaps(&right, 0.0));
        }
    }
}
