use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rangetap_core::auction::{
    allocate, allocate_with_stats, recomputed_totals, AllocConfig, Allocation, LegModel, RangeCheckMode, RobotSpec,
    TaskSpec,
};
use rangetap_core::geometry::{
    check_intersect, convex_hull, inflate_polygon, merge_overlapping, polygons_touch, ObstacleSet, Point, Polygon,
    Segment,
};
use rangetap_core::oracles::{
    brute_force_allocation, grid_astar, rasterize, straightline_baseline_allocate, visibility_dijkstra,
};
use rangetap_core::planner::GosPlanner;
use rangetap_core::sim::{generate_map, remaining_range_series, run_mission, sample_free_point, MapKind, Scenario};

fn config() -> ProptestConfig {
    ProptestConfig { cases: 48, ..ProptestConfig::default() }
}

fn point(lo: f64, hi: f64) -> impl Strategy<Value = Point> {
    (lo..hi, lo..hi).prop_map(|(x, y)| Point::new(x, y))
}

fn convex_polygon() -> impl Strategy<Value = Polygon> {
    prop::collection::vec(point(-10.0, 10.0), 3..12).prop_filter_map("degenerate hull", |pts| {
        let hull = convex_hull(&pts);
        Polygon::new(0, hull).ok().filter(|p| p.area() > 1e-3)
    })
}

fn mode() -> impl Strategy<Value = RangeCheckMode> {
    prop::sample::select(RangeCheckMode::ALL.to_vec())
}

/// A small map plus robots and tasks placed in free space.
fn small_world(seed: u64, robots: usize, tasks: usize, capacity: usize, budget: f64) -> (Scenario, Vec<RobotSpec>, Vec<TaskSpec>) {
    let map = generate_map(MapKind::Small, seed);
    let set = ObstacleSet::build(&map.obstacles, 0.2).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(1));
    let robots = (0..robots as u32)
        .map(|id| RobotSpec {
            id,
            start: sample_free_point(&set, &map.bounds, &mut rng).unwrap(),
            radius: 0.2,
            capacity,
            range_budget: budget,
        })
        .collect();
    let tasks = (0..tasks as u32)
        .map(|id| TaskSpec { id, position: sample_free_point(&set, &map.bounds, &mut rng).unwrap() })
        .collect();
    (map, robots, tasks)
}

fn json(a: &Allocation) -> String {
    serde_json::to_string(a).unwrap()
}

proptest! {
    #![proptest_config(config())]

    #[test]
    fn inflation_keeps_clearance(poly in convex_polygon(), r in 0.01f64..2.0) {
        let grown = inflate_polygon(&poly, r).unwrap();
        for v in poly.vertices() {
            prop_assert!(grown.contains(*v));
            prop_assert!(grown.boundary_distance(*v) >= r - 1e-9);
        }
    }

    #[test]
    fn merged_obstacles_do_not_touch(polys in prop::collection::vec(convex_polygon(), 1..6), r in 0.0f64..1.5) {
        let inflated: Vec<Polygon> = polys.iter().map(|p| inflate_polygon(p, r).unwrap()).collect();
        let merged = merge_overlapping(inflated.clone());
        for (i, a) in merged.iter().enumerate() {
            for b in &merged[i + 1..] {
                prop_assert!(!polygons_touch(a, b));
            }
        }
        for p in &inflated {
            for v in p.vertices() {
                prop_assert!(merged.iter().any(|m| m.contains(*v)));
            }
        }
    }

    #[test]
    fn gos_paths_are_free_and_no_shorter_than_optimal(seed in any::<u64>()) {
        let map = generate_map(MapKind::Small, seed);
        let set = ObstacleSet::build(&map.obstacles, 0.2).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let a = sample_free_point(&set, &map.bounds, &mut rng).unwrap();
        let b = sample_free_point(&set, &map.bounds, &mut rng).unwrap();
        let path = GosPlanner::new(&set).plan(a, b).unwrap();
        let wp = path.waypoints();
        prop_assert!(wp[0].approx_eq(a) && wp[wp.len() - 1].approx_eq(b));
        for w in wp.windows(2) {
            prop_assert!(check_intersect(&Segment::new(w[0], w[1]), &set).is_empty());
        }
        let best = visibility_dijkstra(a, b, &set).unwrap().length();
        prop_assert!(path.length() >= best - 1e-6);
        prop_assert!(best >= a.dist(b) - 1e-9);
    }

    #[test]
    fn grid_astar_never_beats_visibility_optimum(seed in any::<u64>()) {
        let map = generate_map(MapKind::Small, seed);
        let set = ObstacleSet::build(&map.obstacles, 0.2).unwrap();
        let grid = rasterize(&set, map.bounds, 0.5).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 7);
        let a = sample_free_point(&set, &map.bounds, &mut rng).unwrap();
        let b = sample_free_point(&set, &map.bounds, &mut rng).unwrap();
        if let Some(g) = grid_astar(&grid, a, b).unwrap() {
            let (s, e) = (g.path.start(), g.path.end());
            if set.containing(s).is_none() && set.containing(e).is_none() {
                let best = visibility_dijkstra(s, e, &set).unwrap().length();
                prop_assert!(g.path.length() >= best - 1e-6);
            }
        }
    }

    #[test]
    fn discounted_bid_is_non_increasing_in_sigma(s1 in 0.0f64..5e3, ds in 0.0f64..5e3, d in 0.0f64..5e3, l in 0.01f64..0.999) {
        prop_assert!(l.powf(s1 + ds + d) <= l.powf(s1 + d));
        prop_assert!((s1 + ds + d) * l.ln() <= (s1 + d) * l.ln());
    }

    #[test]
    fn lazy_and_eager_agree(seed in any::<u64>(), n in 1usize..5, m in 0usize..14, cap in 1usize..5, budget in 5.0f64..120.0, mode in mode()) {
        let (map, robots, tasks) = small_world(seed, n, m, cap, budget);
        let lazy = AllocConfig::with_mode(mode);
        let eager = AllocConfig { lazy: false, ..lazy };
        let (a, sa) = allocate_with_stats(&robots, &tasks, &map.obstacles, &lazy, LegModel::Planned).unwrap();
        let (b, sb) = allocate_with_stats(&robots, &tasks, &map.obstacles, &eager, LegModel::Planned).unwrap();
        prop_assert_eq!(json(&a), json(&b));
        prop_assert!(sa.compute_bid_calls <= sb.compute_bid_calls);
    }

    #[test]
    fn allocations_respect_constraints_and_totals(seed in any::<u64>(), n in 1usize..6, m in 0usize..20, cap in 1usize..6, budget in 5.0f64..150.0, mode in mode()) {
        let (map, robots, tasks) = small_world(seed, n, m, cap, budget);
        let cfg = AllocConfig::with_mode(mode);
        let alloc = allocate(&robots, &tasks, &map.obstacles, &cfg).unwrap();
        prop_assert!(alloc.violations(&robots, &tasks, &cfg).is_empty());
        for l in alloc.ledgers.values() {
            let (d, w) = recomputed_totals(l, cfg.lambda_l);
            prop_assert!((d - l.distance).abs() <= 1e-9 * d.max(1.0));
            prop_assert!((w - l.reward).abs() <= 1e-9);
            prop_assert!(l.arrival_distances.windows(2).all(|p| p[0] <= p[1]));
        }
    }

    #[test]
    fn greedy_never_beats_exhaustive(seed in any::<u64>(), n in 1usize..4, m in 1usize..6, cap in 1usize..4, budget in 5.0f64..80.0, mode in mode()) {
        let (map, robots, tasks) = small_world(seed, n, m, cap, budget);
        let cfg = AllocConfig::with_mode(mode);
        let greedy = allocate(&robots, &tasks, &map.obstacles, &cfg).unwrap().total_reward();
        let best = brute_force_allocation(&robots, &tasks, &map.obstacles, &cfg).unwrap().total_reward();
        prop_assert!(best >= greedy - 1e-9);
        prop_assert!(greedy >= 0.5 * best - 1e-12);
    }

    #[test]
    fn straight_line_baseline_matches_auction_without_obstacles(seed in any::<u64>(), n in 1usize..5, m in 0usize..12, cap in 1usize..5, mode in mode()) {
        let (_, robots, tasks) = small_world(seed, n, m, cap, 60.0);
        let cfg = AllocConfig::with_mode(mode);
        let planned = allocate(&robots, &tasks, &[], &cfg).unwrap();
        let straight = straightline_baseline_allocate(&robots, &tasks, &[], &cfg).unwrap();
        prop_assert_eq!(json(&planned), json(&straight));
    }

    #[test]
    fn scenario_json_round_trips(seed in any::<u64>(), n in 0usize..4, m in 0usize..6) {
        let (mut map, robots, tasks) = small_world(seed, n, m, 2, 40.0);
        map.robots = robots;
        map.tasks = tasks;
        let text = map.to_json_pretty();
        let back = Scenario::from_json_str(&text).unwrap();
        prop_assert_eq!(back.to_json_pretty(), text);
    }

    #[test]
    fn scenario_parser_rejects_garbage_without_panicking(text in ".{0,200}") {
        let _ = Scenario::from_json_str(&text);
    }

    #[test]
    fn mission_accounting(seed in any::<u64>(), n in 1usize..4, m in 0usize..10, back in any::<bool>()) {
        let (mut s, robots, tasks) = small_world(seed, n, m, 4, 90.0);
        s.robots = robots;
        s.tasks = tasks;
        s.return_to_start = back;
        let report = run_mission(&s).unwrap();
        let total: f64 = report.robots.iter().map(|r| r.traveled_m).sum();
        prop_assert!((total - report.fleet.total_distance_m).abs() <= 1e-9 * total.max(1.0));
        for r in &report.robots {
            let walked: f64 = r.trajectory.windows(2).map(|w| w[0].dist(w[1])).sum();
            prop_assert!((walked - r.traveled_m).abs() <= 1e-9 * walked.max(1.0));
            prop_assert!((r.range_budget_m - r.traveled_m - r.remaining_range_m).abs() <= 1e-9 * r.range_budget_m);
        }
        for (_, series) in remaining_range_series(&report) {
            prop_assert!(series.windows(2).all(|w| w[1].1 <= w[0].1));
        }
        let again = run_mission(&s).unwrap();
        prop_assert_eq!(report.without_timing().to_json_pretty(), again.without_timing().to_json_pretty());
    }
}
