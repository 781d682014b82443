//! Reference implementations used to check the planner and the allocator:
//! occupancy-grid A*, visibility-graph Dijkstra, exhaustive allocation, and
//! a straight-line-bid allocator.

use crate::auction::{
    allocate_in, reward_of, AllocConfig, AllocError, AllocStats, Allocation, Environment, LegModel,
    RangeCheckMode, RobotLedger, RobotSpec, TaskSpec,
};
use crate::geometry::{convex_vertices, segment_is_free, Aabb, ObstacleSet, Point, Polygon, Segment};
use crate::planner::{GosPlanner, PlannedPath};
use std::cmp::Ordering;
use std::collections::{BTreeMap, BinaryHeap};
use thiserror::Error;

/// Largest grid `rasterize` will allocate.
pub const MAX_GRID_CELLS: u64 = 100_000_000;

pub const BRUTE_FORCE_MAX_ROBOTS: usize = 3;
pub const BRUTE_FORCE_MAX_TASKS: usize = 5;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum OracleError {
    #[error("grid of {cells} cells exceeds the limit of {MAX_GRID_CELLS}")]
    GridTooLarge { cells: u64 },
    #[error("resolution must be positive and finite, got {0}")]
    InvalidResolution(f64),
    #[error("endpoint {0} has no free cell nearby")]
    BlockedEndpoint(Point),
    #[error("endpoint {0} lies inside an obstacle")]
    EndpointInsideObstacle(Point),
    #[error("no path between the endpoints")]
    Unreachable,
    #[error("instance too large for exhaustive search: {robots} robots, {tasks} tasks")]
    InstanceTooLarge { robots: usize, tasks: usize },
    #[error(transparent)]
    Alloc(#[from] AllocError),
}

/// Cell `(i, j)` covers `[origin.x + i·res, origin.x + (i+1)·res)` and
/// likewise in y; row-major storage.
#[derive(Debug, Clone, PartialEq)]
pub struct OccupancyGrid {
    pub resolution: f64,
    pub width: usize,
    pub height: usize,
    pub origin: Point,
    blocked: Vec<bool>,
}

impl OccupancyGrid {
    pub fn cell_center(&self, i: usize, j: usize) -> Point {
        Point::new(
            self.origin.x + (i as f64 + 0.5) * self.resolution,
            self.origin.y + (j as f64 + 0.5) * self.resolution,
        )
    }

    pub fn is_blocked(&self, i: usize, j: usize) -> bool {
        self.blocked[j * self.width + i]
    }

    pub fn blocked_count(&self) -> usize {
        self.blocked.iter().filter(|b| **b).count()
    }

    pub fn cell_count(&self) -> usize {
        self.blocked.len()
    }

    /// Cell containing `p`, if inside the grid.
    pub fn cell_of(&self, p: Point) -> Option<(usize, usize)> {
        let fx = ((p.x - self.origin.x) / self.resolution).floor();
        let fy = ((p.y - self.origin.y) / self.resolution).floor();
        if fx < 0.0 || fy < 0.0 || fx >= self.width as f64 || fy >= self.height as f64 {
            return None;
        }
        Some((fx as usize, fy as usize))
    }

    /// Nearest free cell to `p`, searching square rings of growing radius.
    fn nearest_free(&self, p: Point) -> Option<(usize, usize)> {
        let clamp = |v: f64, n: usize| (v.floor().max(0.0) as usize).min(n - 1);
        let ci = clamp((p.x - self.origin.x) / self.resolution, self.width);
        let cj = clamp((p.y - self.origin.y) / self.resolution, self.height);
        if !self.is_blocked(ci, cj) {
            return Some((ci, cj));
        }
        let max_ring = self.width.max(self.height);
        for ring in 1..=max_ring {
            let mut best: Option<(f64, usize, usize)> = None;
            let (lo_i, hi_i) = (ci.saturating_sub(ring), (ci + ring).min(self.width - 1));
            let (lo_j, hi_j) = (cj.saturating_sub(ring), (cj + ring).min(self.height - 1));
            for j in lo_j..=hi_j {
                for i in lo_i..=hi_i {
                    let on_ring = i.abs_diff(ci) == ring || j.abs_diff(cj) == ring;
                    if !on_ring || self.is_blocked(i, j) {
                        continue;
                    }
                    let d = self.cell_center(i, j).dist(p);
                    if best.is_none_or(|(bd, _, _)| d < bd) {
                        best = Some((d, i, j));
                    }
                }
            }
            if let Some((_, i, j)) = best {
                return Some((i, j));
            }
        }
        None
    }
}

/// Marks each cell whose center lies in the closed region of any obstacle
/// of `obstacles`, over the `window` rectangle.
pub fn rasterize(obstacles: &ObstacleSet, window: Aabb, resolution: f64) -> Result<OccupancyGrid, OracleError> {
    if !(resolution > 0.0 && resolution.is_finite()) {
        return Err(OracleError::InvalidResolution(resolution));
    }
    let w = (window.width() / resolution).ceil().max(1.0);
    let h = (window.height() / resolution).ceil().max(1.0);
    let cells = w * h;
    if !cells.is_finite() || cells > MAX_GRID_CELLS as f64 {
        return Err(OracleError::GridTooLarge { cells: cells.min(u64::MAX as f64) as u64 });
    }
    let (width, height) = (w as usize, h as usize);
    let mut grid = OccupancyGrid {
        resolution,
        width,
        height,
        origin: window.min,
        blocked: vec![false; width * height],
    };
    let mut xs = Vec::new();
    for poly in obstacles.obstacles() {
        let bb = poly.bbox();
        let row = |y: f64| ((y - window.min.y) / resolution - 0.5).ceil().max(0.0) as usize;
        let j0 = row(bb.min.y);
        let j1 = (((bb.max.y - window.min.y) / resolution - 0.5).floor()).min(height as f64 - 1.0);
        if j1 < 0.0 {
            continue;
        }
        for j in j0..=j1 as usize {
            let y = window.min.y + (j as f64 + 0.5) * resolution;
            xs.clear();
            for e in poly.edges() {
                let (a, b) = (e.a, e.b);
                if (a.y <= y) != (b.y <= y) {
                    xs.push(a.x + (y - a.y) / (b.y - a.y) * (b.x - a.x));
                }
            }
            xs.sort_by(f64::total_cmp);
            for pair in xs.chunks_exact(2) {
                let slack = 1e-9 * resolution;
                let i0 = ((pair[0] - slack - window.min.x) / resolution - 0.5).ceil().max(0.0);
                let i1 = ((pair[1] + slack - window.min.x) / resolution - 0.5).floor().min(width as f64 - 1.0);
                if i1 < i0 {
                    continue;
                }
                let base = j * width;
                grid.blocked[base + i0 as usize..=base + i1 as usize].fill(true);
            }
        }
    }
    Ok(grid)
}

/// A grid path plus the distances the endpoints moved onto cell centers.
#[derive(Debug, Clone, PartialEq)]
pub struct GridPath {
    pub path: PlannedPath,
    pub start_snap: f64,
    pub goal_snap: f64,
    pub expanded: usize,
}

#[derive(PartialEq)]
struct Open {
    f: f64,
    g: f64,
    idx: u32,
}

impl Eq for Open {}

impl Ord for Open {
    // Min-heap on f; among equal f prefer the deeper node.
    fn cmp(&self, o: &Self) -> Ordering {
        o.f.total_cmp(&self.f)
            .then_with(|| self.g.total_cmp(&o.g))
            .then_with(|| o.idx.cmp(&self.idx))
    }
}

impl PartialOrd for Open {
    fn partial_cmp(&self, o: &Self) -> Option<Ordering> {
        Some(self.cmp(o))
    }
}

const NO_PARENT: u32 = u32::MAX;

/// 8-connected A* over cell centers with octile heuristic. Diagonal moves
/// may not cut a blocked corner. Returns `Ok(None)` when unreachable.
pub fn grid_astar(grid: &OccupancyGrid, start: Point, goal: Point) -> Result<Option<GridPath>, OracleError> {
    let snap = |p: Point| grid.nearest_free(p).ok_or(OracleError::BlockedEndpoint(p));
    let (si, sj) = snap(start)?;
    let (gi, gj) = snap(goal)?;
    let (w, h) = (grid.width, grid.height);
    let start_snap = grid.cell_center(si, sj).dist(start);
    let goal_snap = grid.cell_center(gi, gj).dist(goal);
    let res = grid.resolution;
    let heuristic = |i: usize, j: usize| {
        let dx = i.abs_diff(gi) as f64;
        let dy = j.abs_diff(gj) as f64;
        res * (dx.max(dy) + (std::f64::consts::SQRT_2 - 1.0) * dx.min(dy))
    };

    let mut g = vec![f64::INFINITY; w * h];
    let mut parent = vec![NO_PARENT; w * h];
    let mut closed = vec![false; w * h];
    let s = sj * w + si;
    let t = gj * w + gi;
    g[s] = 0.0;
    let mut heap = BinaryHeap::new();
    heap.push(Open { f: heuristic(si, sj), g: 0.0, idx: s as u32 });
    let mut expanded = 0;
    const MOVES: [(i64, i64); 8] = [(1, 0), (-1, 0), (0, 1), (0, -1), (1, 1), (1, -1), (-1, 1), (-1, -1)];

    while let Some(Open { g: gc, idx, .. }) = heap.pop() {
        let u = idx as usize;
        if closed[u] {
            continue;
        }
        closed[u] = true;
        expanded += 1;
        if u == t {
            break;
        }
        let (ui, uj) = ((u % w) as i64, (u / w) as i64);
        for (dx, dy) in MOVES {
            let (ni, nj) = (ui + dx, uj + dy);
            if ni < 0 || nj < 0 || ni >= w as i64 || nj >= h as i64 {
                continue;
            }
            let (ni, nj) = (ni as usize, nj as usize);
            let v = nj * w + ni;
            if grid.blocked[v] || closed[v] {
                continue;
            }
            let diagonal = dx != 0 && dy != 0;
            if diagonal
                && (grid.is_blocked(ni, uj as usize) || grid.is_blocked(ui as usize, nj))
            {
                continue;
            }
            let step = if diagonal { res * std::f64::consts::SQRT_2 } else { res };
            let ng = gc + step;
            if ng < g[v] {
                g[v] = ng;
                parent[v] = u as u32;
                heap.push(Open { f: ng + heuristic(ni, nj), g: ng, idx: v as u32 });
            }
        }
    }
    if !closed[t] {
        return Ok(None);
    }

    let mut cells = vec![t];
    while let Some(&c) = cells.last() {
        if c == s {
            break;
        }
        cells.push(parent[c] as usize);
    }
    cells.reverse();
    // Keep only cells where the move direction changes.
    let center = |c: usize| grid.cell_center(c % w, c / w);
    let dir = |a: usize, b: usize| ((b % w) as i64 - (a % w) as i64, (b / w) as i64 - (a / w) as i64);
    let mut pts = vec![center(cells[0])];
    for k in 1..cells.len().saturating_sub(1) {
        if dir(cells[k - 1], cells[k]) != dir(cells[k], cells[k + 1]) {
            pts.push(center(cells[k]));
        }
    }
    if cells.len() > 1 {
        pts.push(center(t));
    }
    let mut path = PlannedPath::new(pts);
    // Rebuilding from compressed waypoints sums fewer terms; use the search cost.
    if (path.length() - g[t]).abs() > 1e-6 * g[t].max(1.0) {
        path = PlannedPath::new(cells.iter().map(|&c| center(c)).collect());
    }
    Ok(Some(GridPath { path, start_snap, goal_snap, expanded }))
}

/// Mutual-visibility graph over the convex vertices of an obstacle set.
/// Reflex vertices never lie on a shortest path, so they are left out.
#[derive(Debug, Clone)]
pub struct VisibilityGraph<'a> {
    obstacles: &'a ObstacleSet,
    nodes: Vec<Point>,
    adj: Vec<Vec<(usize, f64)>>,
}

impl<'a> VisibilityGraph<'a> {
    pub fn build(obstacles: &'a ObstacleSet) -> VisibilityGraph<'a> {
        let nodes: Vec<Point> = obstacles.obstacles().iter().flat_map(convex_vertices).collect();
        let mut adj = vec![Vec::new(); nodes.len()];
        for i in 0..nodes.len() {
            for j in i + 1..nodes.len() {
                if segment_is_free(&Segment::new(nodes[i], nodes[j]), obstacles) {
                    let d = nodes[i].dist(nodes[j]);
                    adj[i].push((j, d));
                    adj[j].push((i, d));
                }
            }
        }
        VisibilityGraph { obstacles, nodes, adj }
    }

    pub fn nodes(&self) -> &[Point] {
        &self.nodes
    }

    pub fn edge_count(&self) -> usize {
        self.adj.iter().map(Vec::len).sum::<usize>() / 2
    }

    pub fn shortest_path(&self, s: Point, e: Point) -> Result<PlannedPath, OracleError> {
        for q in [s, e] {
            if self.obstacles.containing(q).is_some() {
                return Err(OracleError::EndpointInsideObstacle(q));
            }
        }
        if s.approx_eq(e) {
            return Ok(PlannedPath::single(s));
        }
        if segment_is_free(&Segment::new(s, e), self.obstacles) {
            return Ok(PlannedPath::new(vec![s, e]));
        }
        let n = self.nodes.len();
        let (src, dst) = (n, n + 1);
        let visible = |q: Point| -> Vec<(usize, f64)> {
            (0..n)
                .filter(|&i| segment_is_free(&Segment::new(q, self.nodes[i]), self.obstacles))
                .map(|i| (i, q.dist(self.nodes[i])))
                .collect()
        };
        let from_s = visible(s);
        let to_e: BTreeMap<usize, f64> = visible(e).into_iter().collect();

        let mut dist = vec![f64::INFINITY; n + 2];
        let mut prev = vec![usize::MAX; n + 2];
        let mut heap = BinaryHeap::new();
        dist[src] = 0.0;
        heap.push(Open { f: 0.0, g: 0.0, idx: src as u32 });
        while let Some(Open { f: d, idx, .. }) = heap.pop() {
            let u = idx as usize;
            if d > dist[u] {
                continue;
            }
            if u == dst {
                break;
            }
            let mut relax = |v: usize, w: f64, heap: &mut BinaryHeap<Open>| {
                if d + w < dist[v] {
                    dist[v] = d + w;
                    prev[v] = u;
                    heap.push(Open { f: d + w, g: 0.0, idx: v as u32 });
                }
            };
            if u == src {
                for &(v, w) in &from_s {
                    relax(v, w, &mut heap);
                }
                continue;
            }
            for &(v, w) in &self.adj[u] {
                relax(v, w, &mut heap);
            }
            if let Some(&w) = to_e.get(&u) {
                relax(dst, w, &mut heap);
            }
        }
        if !dist[dst].is_finite() {
            return Err(OracleError::Unreachable);
        }
        let mut pts = vec![e];
        let mut u = prev[dst];
        while u != src {
            pts.push(self.nodes[u]);
            u = prev[u];
        }
        pts.push(s);
        pts.reverse();
        Ok(PlannedPath::new(pts))
    }
}

/// Exact shortest obstacle-avoiding path, building a fresh graph.
pub fn visibility_dijkstra(p_s: Point, p_e: Point, obstacles: &ObstacleSet) -> Result<PlannedPath, OracleError> {
    VisibilityGraph::build(obstacles).shortest_path(p_s, p_e)
}

// Planned legs for one robot: index `m` is its start, `0..m` are tasks.
struct LegTable {
    legs: Vec<Vec<Option<PlannedPath>>>,
}

impl LegTable {
    fn build(robot: &RobotSpec, tasks: &[TaskSpec], obstacles: &ObstacleSet) -> LegTable {
        let planner = GosPlanner::new(obstacles);
        let mut pts: Vec<Point> = tasks.iter().map(|t| t.position).collect();
        pts.push(robot.start);
        let legs = pts
            .iter()
            .map(|a| pts.iter().map(|b| planner.plan(*a, *b).ok()).collect())
            .collect();
        LegTable { legs }
    }

    fn get(&self, from: usize, to: usize) -> Option<&PlannedPath> {
        self.legs[from][to].as_ref()
    }
}

#[derive(Debug, Clone)]
struct Route {
    order: Vec<usize>,
    reward: f64,
}

// Best visiting order of `subset` (bitmask over tasks) under the same
// per-append range check the auction applies.
fn best_route(subset: u32, robot: &RobotSpec, legs: &LegTable, m: usize, cfg: &AllocConfig) -> Option<Route> {
    let members: Vec<usize> = (0..m).filter(|i| subset & (1 << i) != 0).collect();
    if members.len() > robot.capacity {
        return None;
    }
    let mut best: Option<Route> = None;
    let mut order = members.clone();
    permute(&mut order, 0, &mut |ord| {
        let mut sigma = 0.0;
        let mut arrivals = Vec::with_capacity(ord.len());
        let mut at = m;
        for &t in ord {
            let Some(leg) = legs.get(at, t) else { return };
            let leg = leg.length();
            let dist_temp = sigma + leg;
            let over = match cfg.range_check_mode {
                RangeCheckMode::PaperLiteral => dist_temp + leg > robot.range_budget,
                RangeCheckMode::NoReturn => dist_temp > robot.range_budget,
                RangeCheckMode::WithReturn => match legs.get(t, m) {
                    Some(back) => dist_temp + back.length() > robot.range_budget,
                    None => true,
                },
            };
            if over {
                return;
            }
            sigma = dist_temp;
            arrivals.push(sigma);
            at = t;
        }
        let reward = reward_of(&arrivals, cfg.lambda_l);
        if best.as_ref().is_none_or(|b| reward > b.reward) {
            best = Some(Route { order: ord.to_vec(), reward });
        }
    });
    best
}

// Visits permutations in lexicographic order.
fn permute(items: &mut Vec<usize>, k: usize, f: &mut impl FnMut(&[usize])) {
    if k == items.len() {
        f(items);
        return;
    }
    for i in k..items.len() {
        items[k..=i].rotate_right(1);
        permute(items, k + 1, f);
        items[k..=i].rotate_left(1);
    }
}

/// Maximum-reward allocation by exhaustive search over task-to-robot
/// assignments and visiting orders. Legs are planned with the global
/// planner against each robot's inflated obstacle set.
pub fn brute_force_allocation(
    robots: &[RobotSpec],
    tasks: &[TaskSpec],
    raw: &[Polygon],
    cfg: &AllocConfig,
) -> Result<Allocation, OracleError> {
    if robots.len() > BRUTE_FORCE_MAX_ROBOTS || tasks.len() > BRUTE_FORCE_MAX_TASKS {
        return Err(OracleError::InstanceTooLarge { robots: robots.len(), tasks: tasks.len() });
    }
    cfg.validate()?;
    let mut robots = robots.to_vec();
    robots.sort_by_key(|r| r.id);
    let mut tasks = tasks.to_vec();
    tasks.sort_by_key(|t| t.id);
    for r in &robots {
        r.validate()?;
    }
    let env = Environment::build(raw, robots.iter().map(|r| r.radius)).map_err(AllocError::from)?;
    let m = tasks.len();
    let tables: Vec<LegTable> = robots
        .iter()
        .map(|r| LegTable::build(r, &tasks, env.for_radius(r.radius)))
        .collect();
    // routes[r][subset]
    let routes: Vec<Vec<Option<Route>>> = robots
        .iter()
        .zip(&tables)
        .map(|(r, legs)| (0..1u32 << m).map(|s| best_route(s, r, legs, m, cfg)).collect())
        .collect();

    // Each task goes to one robot or stays unassigned (digit == robots.len()).
    let base = robots.len() + 1;
    let mut best: Option<(f64, Vec<u32>)> = None;
    for code in 0..base.pow(m as u32) {
        let mut subsets = vec![0u32; robots.len()];
        let mut c = code;
        for t in 0..m {
            let digit = c % base;
            c /= base;
            if digit < robots.len() {
                subsets[digit] |= 1 << t;
            }
        }
        let mut total = 0.0;
        let mut ok = true;
        for (r, &s) in subsets.iter().enumerate() {
            match &routes[r][s as usize] {
                Some(route) => total += route.reward,
                None => {
                    ok = false;
                    break;
                }
            }
        }
        if ok && best.as_ref().is_none_or(|(b, _)| total > *b) {
            best = Some((total, subsets));
        }
    }
    let (_, subsets) = best.expect("the empty assignment is always feasible");

    let mut ledgers = BTreeMap::new();
    let mut assigned = vec![false; m];
    for (r, robot) in robots.iter().enumerate() {
        let route = routes[r][subsets[r] as usize].as_ref().expect("chosen route exists");
        let mut ledger = RobotLedger::new(robot.start);
        ledger.dirty = false;
        let mut at = m;
        for &t in &route.order {
            let leg = tables[r].get(at, t).expect("route legs exist");
            ledger.committed_path.extend(leg);
            ledger.distance += leg.length();
            ledger.arrival_distances.push(ledger.distance);
            ledger.tasks.push(tasks[t].id);
            assigned[t] = true;
            at = t;
        }
        ledger.reward = reward_of(&ledger.arrival_distances, cfg.lambda_l);
        if cfg.range_check_mode == RangeCheckMode::WithReturn && at != m {
            ledger.return_distance = tables[r].get(at, m).map(PlannedPath::length);
        }
        ledgers.insert(robot.id, ledger);
    }
    let rounds = assigned.iter().filter(|a| **a).count();
    Ok(Allocation {
        ledgers,
        unassigned: (0..m).filter(|t| !assigned[*t]).map(|t| tasks[t].id).collect(),
        rounds,
        diagnostics: Vec::new(),
    })
}

/// The greedy auction with bids from straight-line distances. Committed
/// paths are then re-planned around obstacles and re-measured, so the
/// reported distances are what the robots would actually travel.
pub fn straightline_baseline_allocate(
    robots: &[RobotSpec],
    tasks: &[TaskSpec],
    raw: &[Polygon],
    cfg: &AllocConfig,
) -> Result<Allocation, OracleError> {
    let env = Environment::build(raw, robots.iter().map(|r| r.radius)).map_err(AllocError::from)?;
    straightline_baseline_in(robots, tasks, &env, cfg).map(|(a, _)| a)
}

pub fn straightline_baseline_in(
    robots: &[RobotSpec],
    tasks: &[TaskSpec],
    env: &Environment,
    cfg: &AllocConfig,
) -> Result<(Allocation, AllocStats), OracleError> {
    let (mut alloc, mut stats) = allocate_in(robots, tasks, env, cfg, LegModel::StraightLine)?;
    stats.planner_calls += remeasure_with_planner(&mut alloc, robots, tasks, env, cfg);
    Ok((alloc, stats))
}

/// Re-plans every committed path (and return leg, if one was budgeted)
/// around the obstacles and updates distances and rewards to match.
/// Returns the number of planner calls.
pub fn remeasure_with_planner(
    alloc: &mut Allocation,
    robots: &[RobotSpec],
    tasks: &[TaskSpec],
    env: &Environment,
    cfg: &AllocConfig,
) -> usize {
    let mut calls = 0;
    let positions: BTreeMap<u32, Point> = tasks.iter().map(|t| (t.id, t.position)).collect();
    for robot in robots {
        let ledger = alloc.ledgers.get_mut(&robot.id).expect("ledger per robot");
        let planner = GosPlanner::new(env.for_radius(robot.radius));
        let mut path = PlannedPath::single(robot.start);
        let mut arrivals = Vec::with_capacity(ledger.tasks.len());
        for t in &ledger.tasks {
            let goal = positions[t];
            calls += 1;
            let leg = planner.plan(path.end(), goal).unwrap_or_else(|e| {
                alloc.diagnostics.push(format!("robot {} -> task {t}: {e}; straight leg kept", robot.id));
                PlannedPath::new(vec![path.end(), goal])
            });
            path.extend(&leg);
            arrivals.push(path.length());
        }
        ledger.distance = path.length();
        ledger.committed_path = path;
        ledger.reward = reward_of(&arrivals, cfg.lambda_l);
        ledger.arrival_distances = arrivals;
        if ledger.return_distance.is_some() {
            calls += 1;
            ledger.return_distance = planner
                .plan(ledger.committed_path.end(), robot.start)
                .ok()
                .map(|p| p.length());
        }
    }
    calls
}
