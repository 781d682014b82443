//! Range-constrained task allocation.
//!
//! A robot's reward for its ordered task list is `Σ λ^{d_j}` where `d_j` is
//! the travelled distance from its start to the j-th task along the
//! committed path. The bid for appending one more task is the marginal
//! reward `λ^{σ + leg}`, where `σ` is the distance already committed and
//! `leg` is the planned path from the last task (or the start) to the new
//! task. Each round the globally best eligible bid wins; only the winner's
//! bids go stale, so only the winner recomputes (the lazy rule).
//!
//! Bids are ranked by their exponent `(σ + leg) · ln λ` so that very long
//! routes, where `λ^d` underflows to zero, still order correctly.

use crate::geometry::{GeometryError, ObstacleSet, Point, Polygon};
use crate::planner::{path_length, GosPlanner, PlannedPath};
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;
use thiserror::Error;

pub const DEFAULT_LAMBDA: f64 = 0.95;
pub const DEFAULT_SENTINEL: f64 = 0.001;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AllocError {
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("invalid robot {id}: {reason}")]
    InvalidRobot { id: u32, reason: String },
    #[error("duplicate {kind} id {id}")]
    DuplicateId { kind: &'static str, id: u32 },
    #[error("unknown robot {0}")]
    UnknownRobot(u32),
    #[error("infeasible environment: {0}")]
    InfeasibleEnvironment(String),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RobotSpec {
    pub id: u32,
    pub start: Point,
    pub radius: f64,
    pub capacity: usize,
    pub range_budget: f64,
}

impl RobotSpec {
    pub fn validate(&self) -> Result<(), AllocError> {
        let bad = |reason: &str| {
            Err(AllocError::InvalidRobot { id: self.id, reason: reason.to_string() })
        };
        if !self.start.is_finite() {
            return bad("non-finite start");
        }
        if !(self.radius > 0.0 && self.radius.is_finite()) {
            return bad("radius must be positive");
        }
        if self.range_budget.is_nan() || self.range_budget <= 0.0 {
            return bad("range budget must be positive");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TaskSpec {
    pub id: u32,
    pub position: Point,
}

/// How the range budget is checked when a bid is placed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RangeCheckMode {
    /// `σ + 2·leg > D_max` rejects the bid.
    PaperLiteral,
    /// `σ + leg > D_max` rejects the bid.
    NoReturn,
    /// `σ + leg + return leg > D_max` rejects the bid.
    WithReturn,
}

impl RangeCheckMode {
    pub const ALL: [RangeCheckMode; 3] =
        [RangeCheckMode::PaperLiteral, RangeCheckMode::NoReturn, RangeCheckMode::WithReturn];

    pub fn as_str(&self) -> &'static str {
        match self {
            RangeCheckMode::PaperLiteral => "paper-literal",
            RangeCheckMode::NoReturn => "no-return",
            RangeCheckMode::WithReturn => "with-return",
        }
    }
}

impl fmt::Display for RangeCheckMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for RangeCheckMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        RangeCheckMode::ALL
            .into_iter()
            .find(|m| m.as_str() == s)
            .ok_or_else(|| format!("unknown range check mode '{s}'"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AllocConfig {
    pub lambda_l: f64,
    pub range_check_mode: RangeCheckMode,
    pub sentinel: f64,
    pub lazy: bool,
}

impl Default for AllocConfig {
    fn default() -> Self {
        AllocConfig {
            lambda_l: DEFAULT_LAMBDA,
            range_check_mode: RangeCheckMode::PaperLiteral,
            sentinel: DEFAULT_SENTINEL,
            lazy: true,
        }
    }
}

impl AllocConfig {
    pub fn with_mode(mode: RangeCheckMode) -> Self {
        AllocConfig { range_check_mode: mode, ..Default::default() }
    }

    pub fn validate(&self) -> Result<(), AllocError> {
        if !(self.lambda_l > 0.0 && self.lambda_l < 1.0) {
            return Err(AllocError::InvalidConfig(format!(
                "lambda_l must be in (0, 1), got {}",
                self.lambda_l
            )));
        }
        if !(self.sentinel > 0.0 && self.sentinel < 1.0) {
            return Err(AllocError::InvalidConfig(format!(
                "sentinel must be in (0, 1), got {}",
                self.sentinel
            )));
        }
        Ok(())
    }
}

/// Total reward of a task list given the cumulative distance at which each
/// task is reached.
pub fn reward_of(arrival_distances: &[f64], lambda_l: f64) -> f64 {
    arrival_distances.iter().map(|d| lambda_l.powf(*d)).fold(0.0, |a, b| a + b)
}

/// Per-robot allocation state.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RobotLedger {
    pub tasks: Vec<u32>,
    pub committed_path: PlannedPath,
    /// Distance along the committed path.
    pub distance: f64,
    pub reward: f64,
    /// Cumulative distance at which each task in `tasks` is reached.
    pub arrival_distances: Vec<f64>,
    /// Planned length of the way home from the last task, when the range
    /// check budgets for it.
    pub return_distance: Option<f64>,
    #[serde(skip)]
    pub dirty: bool,
}

impl RobotLedger {
    pub fn new(start: Point) -> RobotLedger {
        RobotLedger {
            tasks: Vec::new(),
            committed_path: PlannedPath::single(start),
            distance: 0.0,
            reward: 0.0,
            arrival_distances: Vec::new(),
            return_distance: None,
            dirty: true,
        }
    }
}

/// A robot's offer for one task.
#[derive(Debug, Clone, PartialEq)]
pub struct Bid {
    /// `λ^{dist_temp}`, or the sentinel when infeasible.
    pub value: f64,
    /// `dist_temp · ln λ`; used for ranking.
    pub log_value: f64,
    pub feasible: bool,
    /// Committed distance after appending the task.
    pub dist_temp: f64,
    pub leg: PlannedPath,
    pub return_leg: Option<PlannedPath>,
    pub failure: Option<String>,
}

/// Cached bids keyed by (robot id, task id).
#[derive(Debug, Clone, Default)]
pub struct BidTable {
    bids: BTreeMap<(u32, u32), Bid>,
}

impl BidTable {
    pub fn get(&self, robot: u32, task: u32) -> Option<&Bid> {
        self.bids.get(&(robot, task))
    }

    pub fn insert(&mut self, robot: u32, task: u32, bid: Bid) {
        self.bids.insert((robot, task), bid);
    }

    pub fn remove_task(&mut self, task: u32) {
        self.bids.retain(|&(_, t), _| t != task);
    }

    pub fn len(&self) -> usize {
        self.bids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bids.is_empty()
    }
}

/// How leg lengths are estimated while bidding.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LegModel {
    /// Obstacle-avoiding paths from the global planner.
    Planned,
    /// Straight segments, ignoring obstacles.
    StraightLine,
}

/// Raw obstacles plus one inflated, merged set per distinct robot radius.
#[derive(Debug, Clone)]
pub struct Environment {
    raw: Vec<Polygon>,
    sets: Vec<(f64, ObstacleSet)>,
}

impl Environment {
    pub fn build(raw: &[Polygon], radii: impl IntoIterator<Item = f64>) -> Result<Environment, GeometryError> {
        let mut rs: Vec<f64> = radii.into_iter().collect();
        rs.sort_by(f64::total_cmp);
        rs.dedup();
        let sets = rs
            .into_iter()
            .map(|r| ObstacleSet::build(raw, r).map(|s| (r, s)))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(Environment { raw: raw.to_vec(), sets })
    }

    pub fn raw(&self) -> &[Polygon] {
        &self.raw
    }

    /// Obstacle set inflated by `radius`. Panics if the radius was not
    /// registered at build time.
    pub fn for_radius(&self, radius: f64) -> &ObstacleSet {
        &self
            .sets
            .iter()
            .find(|(r, _)| *r == radius)
            .expect("radius registered in environment")
            .1
    }
}

/// Counters reported alongside an allocation.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct AllocStats {
    pub compute_bid_calls: usize,
    pub planner_calls: usize,
}

/// Result of an allocation run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Allocation {
    pub ledgers: BTreeMap<u32, RobotLedger>,
    pub unassigned: Vec<u32>,
    pub rounds: usize,
    pub diagnostics: Vec<String>,
}

impl Allocation {
    pub fn total_reward(&self) -> f64 {
        self.ledgers.values().map(|l| l.reward).fold(0.0, |a, b| a + b)
    }

    /// Committed distance summed over robots, excluding return legs.
    pub fn total_distance(&self) -> f64 {
        self.ledgers.values().map(|l| l.distance).fold(0.0, |a, b| a + b)
    }

    pub fn assigned_count(&self) -> usize {
        self.ledgers.values().map(|l| l.tasks.len()).sum()
    }

    /// Every violated constraint, as readable strings. Empty means the
    /// allocation respects capacity, single assignment, and range.
    pub fn violations(&self, robots: &[RobotSpec], tasks: &[TaskSpec], cfg: &AllocConfig) -> Vec<String> {
        let mut out = Vec::new();
        let mut seen: BTreeMap<u32, usize> = BTreeMap::new();
        for (rid, l) in &self.ledgers {
            let Some(spec) = robots.iter().find(|r| r.id == *rid) else {
                out.push(format!("ledger for unknown robot {rid}"));
                continue;
            };
            if l.tasks.len() > spec.capacity {
                out.push(format!("robot {rid}: {} tasks exceed capacity {}", l.tasks.len(), spec.capacity));
            }
            let budgeted = match cfg.range_check_mode {
                RangeCheckMode::WithReturn => l.distance + l.return_distance.unwrap_or(0.0),
                _ => l.distance,
            };
            if budgeted > spec.range_budget * (1.0 + 1e-12) {
                out.push(format!(
                    "robot {rid}: distance {budgeted} exceeds budget {}",
                    spec.range_budget
                ));
            }
            for t in &l.tasks {
                *seen.entry(*t).or_default() += 1;
            }
        }
        for t in &self.unassigned {
            *seen.entry(*t).or_default() += 1;
        }
        for task in tasks {
            match seen.get(&task.id).copied().unwrap_or(0) {
                1 => {}
                n => out.push(format!("task {} accounted {n} times", task.id)),
            }
        }
        out
    }
}

/// Computes robot `spec`'s bid for `task` given its current ledger.
///
/// The leg starts at the robot's start when the ledger is empty and at the
/// last assigned task otherwise.
pub fn compute_bid(
    spec: &RobotSpec,
    ledger: &RobotLedger,
    task: &TaskSpec,
    obstacles: &ObstacleSet,
    cfg: &AllocConfig,
) -> Bid {
    compute_bid_with(spec, ledger, task, obstacles, cfg, LegModel::Planned, &mut AllocStats::default())
}

fn leg_between(from: Point, to: Point, obstacles: &ObstacleSet, model: LegModel, stats: &mut AllocStats) -> Result<PlannedPath, String> {
    match model {
        LegModel::StraightLine => Ok(PlannedPath::new(vec![from, to])),
        LegModel::Planned => {
            stats.planner_calls += 1;
            GosPlanner::new(obstacles).plan(from, to).map_err(|e| e.to_string())
        }
    }
}

fn compute_bid_with(
    spec: &RobotSpec,
    ledger: &RobotLedger,
    task: &TaskSpec,
    obstacles: &ObstacleSet,
    cfg: &AllocConfig,
    model: LegModel,
    stats: &mut AllocStats,
) -> Bid {
    stats.compute_bid_calls += 1;
    let from = ledger.committed_path.end();
    let sigma = ledger.distance;
    let infeasible = |leg: PlannedPath, failure: Option<String>| Bid {
        value: cfg.sentinel,
        log_value: f64::NEG_INFINITY,
        feasible: false,
        dist_temp: f64::INFINITY,
        leg,
        return_leg: None,
        failure,
    };
    let leg = match leg_between(from, task.position, obstacles, model, stats) {
        Ok(leg) => leg,
        Err(e) => {
            return infeasible(
                PlannedPath::single(from),
                Some(format!("robot {} -> task {}: {e}", spec.id, task.id)),
            )
        }
    };
    let dist_temp = sigma + leg.length();
    let mut return_leg = None;
    let over = match cfg.range_check_mode {
        RangeCheckMode::PaperLiteral => dist_temp + leg.length() > spec.range_budget,
        RangeCheckMode::NoReturn => dist_temp > spec.range_budget,
        RangeCheckMode::WithReturn => {
            if dist_temp > spec.range_budget {
                true
            } else {
                match leg_between(task.position, spec.start, obstacles, model, stats) {
                    Ok(back) => {
                        let over = dist_temp + back.length() > spec.range_budget;
                        return_leg = Some(back);
                        over
                    }
                    Err(e) => {
                        return infeasible(
                            leg,
                            Some(format!("task {} -> robot {} home: {e}", task.id, spec.id)),
                        )
                    }
                }
            }
        }
    };
    if over {
        return infeasible(leg, None);
    }
    Bid {
        value: cfg.lambda_l.powf(dist_temp),
        log_value: dist_temp * cfg.lambda_l.ln(),
        feasible: true,
        dist_temp,
        leg,
        return_leg,
        failure: None,
    }
}

/// Mutable auction state; one call to [`Auction::step`] is one round.
#[derive(Debug)]
pub struct Auction<'a> {
    robots: Vec<RobotSpec>,
    tasks: BTreeMap<u32, TaskSpec>,
    env: &'a Environment,
    cfg: AllocConfig,
    model: LegModel,
    ledgers: BTreeMap<u32, RobotLedger>,
    bids: BidTable,
    unassigned: BTreeSet<u32>,
    rounds: usize,
    stats: AllocStats,
    // Ordered and deduplicated so eager recomputation logs nothing extra.
    diagnostics: BTreeSet<String>,
}

impl<'a> Auction<'a> {
    pub fn new(
        robots: &[RobotSpec],
        tasks: &[TaskSpec],
        env: &'a Environment,
        cfg: AllocConfig,
        model: LegModel,
    ) -> Result<Auction<'a>, AllocError> {
        cfg.validate()?;
        let mut sorted: Vec<RobotSpec> = robots.to_vec();
        sorted.sort_by_key(|r| r.id);
        for w in sorted.windows(2) {
            if w[0].id == w[1].id {
                return Err(AllocError::DuplicateId { kind: "robot", id: w[0].id });
            }
        }
        let mut task_map = BTreeMap::new();
        for t in tasks {
            if !t.position.is_finite() {
                return Err(AllocError::InfeasibleEnvironment(format!("task {} has a non-finite position", t.id)));
            }
            if task_map.insert(t.id, t.clone()).is_some() {
                return Err(AllocError::DuplicateId { kind: "task", id: t.id });
            }
        }
        for r in &sorted {
            r.validate()?;
            let set = env.for_radius(r.radius);
            if let Some(o) = set.containing(r.start) {
                return Err(AllocError::InfeasibleEnvironment(format!(
                    "robot {} starts inside obstacle {}",
                    r.id, o.id
                )));
            }
            for t in task_map.values() {
                if let Some(o) = set.containing(t.position) {
                    return Err(AllocError::InfeasibleEnvironment(format!(
                        "task {} lies inside obstacle {} (inflated by {})",
                        t.id, o.id, r.radius
                    )));
                }
            }
        }
        let ledgers = sorted.iter().map(|r| (r.id, RobotLedger::new(r.start))).collect();
        let unassigned = task_map.keys().copied().collect();
        Ok(Auction {
            robots: sorted,
            tasks: task_map,
            env,
            cfg,
            model,
            ledgers,
            bids: BidTable::default(),
            unassigned,
            rounds: 0,
            stats: AllocStats::default(),
            diagnostics: BTreeSet::new(),
        })
    }

    /// Invalidates one robot's cached bids.
    pub fn mark_dirty(&mut self, robot: u32) -> Result<(), AllocError> {
        self.ledgers
            .get_mut(&robot)
            .map(|l| l.dirty = true)
            .ok_or(AllocError::UnknownRobot(robot))
    }

    pub fn dirty_robots(&self) -> Vec<u32> {
        self.ledgers.iter().filter(|(_, l)| l.dirty).map(|(id, _)| *id).collect()
    }

    pub fn stats(&self) -> AllocStats {
        self.stats
    }

    pub fn bids(&self) -> &BidTable {
        &self.bids
    }

    pub fn ledger(&self, robot: u32) -> Option<&RobotLedger> {
        self.ledgers.get(&robot)
    }

    fn refresh_bids(&mut self) {
        for spec in &self.robots {
            let ledger = self.ledgers.get_mut(&spec.id).expect("ledger per robot");
            if ledger.tasks.len() >= spec.capacity {
                continue;
            }
            if self.cfg.lazy && !ledger.dirty {
                continue;
            }
            let obstacles = self.env.for_radius(spec.radius);
            for tid in &self.unassigned {
                let bid = compute_bid_with(
                    spec,
                    ledger,
                    &self.tasks[tid],
                    obstacles,
                    &self.cfg,
                    self.model,
                    &mut self.stats,
                );
                if let Some(f) = &bid.failure {
                    self.diagnostics.insert(f.clone());
                }
                self.bids.insert(spec.id, *tid, bid);
            }
            ledger.dirty = false;
        }
    }

    /// Best eligible (robot, task) pair. Ties go to the lower robot id,
    /// then the lower task id.
    fn select_winner(&self) -> Option<(u32, u32)> {
        let mut best: Option<(f64, u32, u32)> = None;
        for spec in &self.robots {
            if self.ledgers[&spec.id].tasks.len() >= spec.capacity {
                continue;
            }
            for tid in &self.unassigned {
                let Some(bid) = self.bids.get(spec.id, *tid) else { continue };
                if !bid.feasible {
                    continue;
                }
                if best.is_none_or(|(v, _, _)| bid.log_value > v) {
                    best = Some((bid.log_value, spec.id, *tid));
                }
            }
        }
        best.map(|(_, r, t)| (r, t))
    }

    fn award(&mut self, robot: u32, task: u32) {
        let bid = self.bids.get(robot, task).expect("winning bid cached").clone();
        let lambda = self.cfg.lambda_l;
        let ledger = self.ledgers.get_mut(&robot).expect("ledger per robot");
        ledger.tasks.push(task);
        ledger.committed_path.extend(&bid.leg);
        ledger.distance += bid.leg.length();
        ledger.arrival_distances.push(ledger.distance);
        ledger.reward += lambda.powf(ledger.distance);
        ledger.return_distance = bid.return_leg.as_ref().map(PlannedPath::length);
        self.unassigned.remove(&task);
        self.bids.remove_task(task);
        self.rounds += 1;
        self.mark_dirty(robot).expect("winner exists");
    }

    /// Runs one round. Returns the awarded pair, or `None` when no
    /// unassigned task has an eligible bid.
    pub fn step(&mut self) -> Option<(u32, u32)> {
        self.refresh_bids();
        let (r, t) = self.select_winner()?;
        self.award(r, t);
        Some((r, t))
    }

    pub fn run(mut self) -> (Allocation, AllocStats) {
        while self.step().is_some() {}
        let alloc = Allocation {
            ledgers: self.ledgers,
            unassigned: self.unassigned.into_iter().collect(),
            rounds: self.rounds,
            diagnostics: self.diagnostics.into_iter().collect(),
        };
        (alloc, self.stats)
    }
}

/// Greedy allocation with planner-based bids.
pub fn allocate(
    robots: &[RobotSpec],
    tasks: &[TaskSpec],
    raw: &[Polygon],
    cfg: &AllocConfig,
) -> Result<Allocation, AllocError> {
    allocate_with_stats(robots, tasks, raw, cfg, LegModel::Planned).map(|(a, _)| a)
}

pub fn allocate_with_stats(
    robots: &[RobotSpec],
    tasks: &[TaskSpec],
    raw: &[Polygon],
    cfg: &AllocConfig,
    model: LegModel,
) -> Result<(Allocation, AllocStats), AllocError> {
    let env = Environment::build(raw, robots.iter().map(|r| r.radius))?;
    allocate_in(robots, tasks, &env, cfg, model)
}

pub fn allocate_in(
    robots: &[RobotSpec],
    tasks: &[TaskSpec],
    env: &Environment,
    cfg: &AllocConfig,
    model: LegModel,
) -> Result<(Allocation, AllocStats), AllocError> {
    Ok(Auction::new(robots, tasks, env, *cfg, model)?.run())
}

/// Recomputes a ledger's distance and reward from its committed path and
/// arrival distances, for checking the incrementally maintained values.
pub fn recomputed_totals(ledger: &RobotLedger, lambda_l: f64) -> (f64, f64) {
    (path_length(&ledger.committed_path), reward_of(&ledger.arrival_distances, lambda_l))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(x: f64, y: f64) -> Point {
        Point::new(x, y)
    }

    fn robot(id: u32, x: f64, y: f64, capacity: usize, budget: f64) -> RobotSpec {
        RobotSpec { id, start: p(x, y), radius: 0.1, capacity, range_budget: budget }
    }

    fn task(id: u32, x: f64, y: f64) -> TaskSpec {
        TaskSpec { id, position: p(x, y) }
    }

    #[test]
    fn reward_examples() {
        assert_eq!(reward_of(&[], 0.95), 0.0);
        assert!((reward_of(&[10.0], 0.95) - 0.598737).abs() < 5e-7);
        assert!((reward_of(&[5.0, 12.0], 0.95) - 1.314141).abs() < 5e-7);
    }

    #[test]
    fn bid_examples() {
        let set = ObstacleSet::empty();
        let cfg = AllocConfig::default();
        let r = robot(0, 0.0, 0.0, 3, 100.0);
        let ledger = RobotLedger::new(r.start);
        let bid = compute_bid(&r, &ledger, &task(0, 10.0, 0.0), &set, &cfg);
        assert!(bid.feasible);
        assert!((bid.value - 0.598737).abs() < 5e-7);

        let tight = RobotSpec { range_budget: 15.0, ..r.clone() };
        let bid = compute_bid(&tight, &ledger, &task(0, 10.0, 0.0), &set, &cfg);
        assert!(!bid.feasible);
        assert_eq!(bid.value, 0.001);

        let mut ledger = RobotLedger::new(p(0.0, 0.0));
        ledger.committed_path = PlannedPath::new(vec![p(0.0, 0.0), p(20.0, 0.0)]);
        ledger.distance = 20.0;
        ledger.reward = 0.95f64.powi(20);
        assert!((ledger.reward - 0.358486).abs() < 5e-7);
        let bid = compute_bid(&r, &ledger, &task(1, 25.0, 0.0), &set, &cfg);
        assert!((bid.value - 0.277390).abs() < 5e-7);
        // Equal to the marginal reward computed by difference.
        let marginal = reward_of(&[20.0, 25.0], 0.95) - reward_of(&[20.0], 0.95);
        assert!((bid.value - marginal).abs() < 1e-12);
    }

    #[test]
    fn range_modes_differ() {
        let set = ObstacleSet::empty();
        let r = robot(0, 0.0, 0.0, 3, 15.0);
        let ledger = RobotLedger::new(r.start);
        let t = task(0, 10.0, 0.0);
        let feasible = |m| compute_bid(&r, &ledger, &t, &set, &AllocConfig::with_mode(m)).feasible;
        assert!(!feasible(RangeCheckMode::PaperLiteral));
        assert!(feasible(RangeCheckMode::NoReturn));
        assert!(!feasible(RangeCheckMode::WithReturn));
    }

    #[test]
    fn single_robot_orders_near_then_far() {
        let robots = [robot(0, 0.0, 0.0, 2, 1000.0)];
        let tasks = [task(0, 7.0, 0.0), task(1, 3.0, 0.0)];
        let a = allocate(&robots, &tasks, &[], &AllocConfig::default()).unwrap();
        let l = &a.ledgers[&0];
        assert_eq!(l.tasks, vec![1, 0]);
        assert!((l.distance - 7.0).abs() < 1e-12);
        assert!(a.unassigned.is_empty());
    }

    #[test]
    fn tie_goes_to_lower_robot_id() {
        let robots = [robot(3, -5.0, 0.0, 1, 100.0), robot(1, 5.0, 0.0, 1, 100.0)];
        let a = allocate(&robots, &[task(0, 0.0, 0.0)], &[], &AllocConfig::default()).unwrap();
        assert_eq!(a.ledgers[&1].tasks, vec![0]);
        assert!(a.ledgers[&3].tasks.is_empty());
    }

    #[test]
    fn out_of_range_task_left_unassigned() {
        let robots = [robot(0, 0.0, 0.0, 1, 10.0)];
        let a = allocate(&robots, &[task(0, 8.0, 0.0)], &[], &AllocConfig::default()).unwrap();
        assert_eq!(a.unassigned, vec![0]);
        assert_eq!(a.rounds, 0);
    }

    #[test]
    fn dirty_flags_follow_wins() {
        let env = Environment::build(&[], [0.1]).unwrap();
        let robots = [robot(1, 0.0, 0.0, 5, 100.0), robot(3, 50.0, 0.0, 5, 100.0)];
        let tasks = [task(0, 1.0, 0.0), task(1, 2.0, 0.0), task(2, 49.0, 0.0)];
        let mut auction = Auction::new(&robots, &tasks, &env, AllocConfig::default(), LegModel::Planned).unwrap();
        assert_eq!(auction.dirty_robots(), vec![1, 3]);
        let (winner, _) = auction.step().unwrap();
        assert_eq!(auction.dirty_robots(), vec![winner]);
        assert_eq!(auction.mark_dirty(9), Err(AllocError::UnknownRobot(9)));
        auction.mark_dirty(3).unwrap();
        assert_eq!(auction.dirty_robots(), vec![1, 3]);
    }

    #[test]
    fn round_without_win_leaves_caches_clean() {
        let env = Environment::build(&[], [0.1]).unwrap();
        let robots = [robot(0, 0.0, 0.0, 5, 5.0), robot(1, 0.0, 1.0, 5, 5.0)];
        let mut auction =
            Auction::new(&robots, &[task(0, 40.0, 0.0)], &env, AllocConfig::default(), LegModel::Planned).unwrap();
        assert!(auction.step().is_none());
        assert!(auction.dirty_robots().is_empty());
    }

    #[test]
    fn task_inside_obstacle_rejected() {
        let sq = Polygon::new(0, vec![p(0.0, 0.0), p(2.0, 0.0), p(2.0, 2.0), p(0.0, 2.0)]).unwrap();
        let err = allocate(&[robot(0, -5.0, 0.0, 1, 100.0)], &[task(0, 1.0, 1.0)], &[sq], &AllocConfig::default());
        assert!(matches!(err, Err(AllocError::InfeasibleEnvironment(_))));
    }

    #[test]
    fn config_validation() {
        let bad = AllocConfig { lambda_l: 1.0, ..Default::default() };
        assert!(bad.validate().is_err());
        assert!("with-return".parse::<RangeCheckMode>().is_ok());
        assert!("sideways".parse::<RangeCheckMode>().is_err());
    }
}
