use rangetap_core::auction::{allocate, AllocConfig, RangeCheckMode};
use rangetap_core::geometry::{ObstacleSet, Point};
use rangetap_core::oracles::{straightline_baseline_allocate, visibility_dijkstra};
use rangetap_core::planner::GosPlanner;
use rangetap_core::sim::{load_scenario, run_mission, run_mission_with, Method, Scenario, CSV_HEADER};
use std::path::PathBuf;

fn fixture(name: &str) -> Scenario {
    load_scenario(PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("scenarios").join(name)).unwrap()
}

#[test]
fn crowded_fixture_shape() {
    let s = fixture("crowded.json");
    assert_eq!(s.robots.len(), 7);
    assert_eq!(s.tasks.len(), 18);
    let budgets: Vec<f64> = s.robots.iter().map(|r| r.range_budget).collect();
    assert_eq!(budgets, [23.1, 23.1, 23.1, 14.7, 14.7, 14.7, 14.7]);
    assert!(s.robots.iter().all(|r| r.capacity == 10));
    assert_eq!(s.alloc_config.range_check_mode, RangeCheckMode::WithReturn);
    assert!(s.return_to_start);
    assert!(s.baseline_budget_margin.unwrap() > 0.0);
}

#[test]
fn crowded_mission_completes_and_returns() {
    let report = run_mission(&fixture("crowded.json")).unwrap();
    assert!(report.fleet.unassigned_tasks.is_empty());
    assert_eq!(report.robots.iter().map(|r| r.tasks_completed.len()).sum::<usize>(), 18);
    for r in &report.robots {
        assert!(r.completed_return, "robot {}", r.id);
        assert!(r.remaining_range_m >= 0.0, "robot {}", r.id);
        assert_eq!(r.trajectory.first(), r.trajectory.last());
    }
    let rows = report.csv_records();
    assert_eq!(rows.len(), 8);
    assert!(rows.iter().all(|r| r.len() == CSV_HEADER.len()));
    assert_eq!(rows[7][0], "fleet");
}

#[test]
fn crowded_baseline_overruns_with_tightened_budgets() {
    let mut s = fixture("crowded.json");
    let margin = s.baseline_budget_margin.unwrap();
    for r in &mut s.robots {
        r.range_budget -= margin;
    }
    let report = run_mission_with(&s, Method::StraightLine).unwrap();
    let over = report.robots.iter().filter(|r| r.remaining_range_m < 0.0 || !r.completed_return).count();
    assert!(over > 0 || !report.fleet.unassigned_tasks.is_empty());
}

#[test]
fn wall_fixture_favors_planned_bids() {
    let s = fixture("wall.json");
    let cfg = AllocConfig::default();
    let ours = allocate(&s.robots, &s.tasks, &s.obstacles, &cfg).unwrap();
    let base = straightline_baseline_allocate(&s.robots, &s.tasks, &s.obstacles, &cfg).unwrap();
    assert!(ours.unassigned.is_empty() && base.unassigned.is_empty());
    assert!(ours.total_distance() <= base.total_distance());
    assert!((ours.total_distance() - 15.0).abs() < 1e-9);
}

#[test]
fn square_fixture_matches_optimum() {
    let s = fixture("square.json");
    let set = ObstacleSet::build(&s.obstacles, 0.0).unwrap();
    let (a, b) = (Point::new(0.0, 0.0), Point::new(10.0, 0.0));
    let gos = GosPlanner::new(&set).plan(a, b).unwrap();
    let best = visibility_dijkstra(a, b, &set).unwrap();
    assert!((gos.length() - best.length()).abs() < 1e-9);
    assert!((gos.length() - (2.0 * 17f64.sqrt() + 2.0)).abs() < 1e-12);
}

#[test]
fn empty_task_list_leaves_robots_idle() {
    let mut s = fixture("crowded.json");
    s.tasks.clear();
    let report = run_mission(&s).unwrap();
    assert_eq!(report.fleet.total_distance_m, 0.0);
    assert!(report.robots.iter().all(|r| r.traveled_m == 0.0 && r.trajectory.len() == 1));
}

#[test]
fn mission_reports_are_deterministic() {
    let s = fixture("crowded.json");
    for method in [Method::RangeTap, Method::StraightLine] {
        let a = run_mission_with(&s, method).unwrap().without_timing().to_json_pretty();
        let b = run_mission_with(&s, method).unwrap().without_timing().to_json_pretty();
        assert_eq!(a, b);
    }
}
