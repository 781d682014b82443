//! Global guidance-point planner.
//!
//! Each iteration looks at the obstacles blocking the segment from the
//! current path node `p` to the current guidance point `p_g`, picks one
//! candidate vertex per blocking obstacle, and redirects toward the
//! candidate lying farthest from the blocked segment. Nodes are committed
//! to the path only once they are directly reachable.

use crate::geometry::{
    check_intersect, convex_vertices, point_segment_distance, segment_intersects_polygon,
    segment_is_free, signed_side_distance, tol, GeometryError, ObstacleSet, Point, Polygon,
    Segment,
};
use serde::{Deserialize, Serialize};
use std::cmp::Ordering;
use std::ops::Add;
use thiserror::Error;

/// Iteration budget per obstacle vertex.
pub const ITERATION_CAP_FACTOR: usize = 16;

/// Polyline path with its cached length.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlannedPath {
    waypoints: Vec<Point>,
    length: f64,
}

impl PlannedPath {
    pub fn new(waypoints: Vec<Point>) -> PlannedPath {
        let length = polyline_length(&waypoints);
        PlannedPath { waypoints, length }
    }

    pub fn single(p: Point) -> PlannedPath {
        PlannedPath { waypoints: vec![p], length: 0.0 }
    }

    pub fn waypoints(&self) -> &[Point] {
        &self.waypoints
    }

    pub fn length(&self) -> f64 {
        self.length
    }

    pub fn start(&self) -> Point {
        self.waypoints[0]
    }

    pub fn end(&self) -> Point {
        *self.waypoints.last().expect("path has at least one waypoint")
    }

    /// Appends `next`, which must start where `self` ends. The cached
    /// length is extended by `next.length()` rather than re-summed.
    pub fn extend(&mut self, next: &PlannedPath) {
        self.waypoints.extend_from_slice(&next.waypoints[1..]);
        self.length += next.length;
    }
}

fn polyline_length(w: &[Point]) -> f64 {
    w.windows(2).map(|s| s[0].dist(s[1])).fold(0.0, |a, b| a + b)
}

/// Sum of consecutive waypoint distances, recomputed from scratch.
pub fn path_length(path: &PlannedPath) -> f64 {
    polyline_length(&path.waypoints)
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GuidanceError {
    #[error("point {0} is strictly inside obstacle {1}")]
    PointInsideObstacle(Point, u32),
    #[error("no vertex of obstacle {0} is visible")]
    NoVisibleVertex(u32),
    #[error("empty candidate set")]
    EmptyCandidates,
    #[error(transparent)]
    Geometry(#[from] GeometryError),
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PlanError {
    #[error("{which} point {point} lies inside obstacle {obstacle}")]
    StartOrGoalInsideObstacle {
        which: &'static str,
        point: Point,
        obstacle: u32,
    },
    #[error("non-finite endpoint")]
    NonFiniteEndpoint,
    #[error("no guidance point exists after {iterations} iterations")]
    NoGuidancePoint { iterations: usize },
    #[error("iteration cap {cap} exceeded")]
    IterationCapExceeded { cap: usize },
    #[error(transparent)]
    Geometry(#[from] GeometryError),
}

/// Convex vertices of `obstacle` reachable from `p` without crossing that
/// obstacle. Other obstacles are ignored.
pub fn subopt_vertices(p: Point, obstacle: &Polygon) -> Result<Vec<Point>, GuidanceError> {
    if obstacle.contains_strictly(p) {
        return Err(GuidanceError::PointInsideObstacle(p, obstacle.id));
    }
    Ok(convex_vertices(obstacle)
        .into_iter()
        .filter(|v| !v.approx_eq(p))
        .filter(|v| !segment_intersects_polygon(&Segment::new(p, *v), obstacle))
        .collect())
}

/// Picks the largest (or smallest) score; scores equal within tolerance
/// fall back to the lexicographically smaller point.
fn pick(items: impl IntoIterator<Item = (f64, Point)>, largest: bool, scale: f64) -> Option<Point> {
    let t = tol(scale);
    let mut best: Option<(f64, Point)> = None;
    for (d, p) in items {
        best = match best {
            None => Some((d, p)),
            Some((bd, bp)) => {
                let better = if (d - bd).abs() <= t {
                    p.lex_cmp(&bp) == Ordering::Less
                } else if largest {
                    d > bd
                } else {
                    d < bd
                };
                if better { Some((d, p)) } else { Some((bd, bp)) }
            }
        };
    }
    best.map(|(_, p)| p)
}

fn seg_scale(l: &Segment) -> f64 {
    l.a.magnitude().max(l.b.magnitude())
}

/// Leftmost and rightmost candidates relative to the direction of `l`.
pub fn extreme_vertices(l: &Segment, candidates: &[Point]) -> Result<(Point, Point), GuidanceError> {
    if candidates.is_empty() {
        return Err(GuidanceError::EmptyCandidates);
    }
    let scored = candidates
        .iter()
        .map(|c| signed_side_distance(*c, l).map(|d| (d, *c)))
        .collect::<Result<Vec<_>, _>>()?;
    let scale = seg_scale(l);
    let left = pick(scored.iter().copied(), true, scale).unwrap();
    let right = pick(scored, false, scale).unwrap();
    Ok((left, right))
}

/// The extremes from which both `p` and `p_g` can be joined without
/// crossing `obstacle`.
pub fn opt_vertices(p: Point, p_g: Point, obstacle: &Polygon, p_l: Point, p_r: Point) -> Vec<Point> {
    let mut extremes = vec![p_l];
    if !p_r.approx_eq(p_l) {
        extremes.push(p_r);
    }
    extremes
        .into_iter()
        .filter(|v| {
            !segment_intersects_polygon(&Segment::new(p, *v), obstacle)
                && !segment_intersects_polygon(&Segment::new(*v, p_g), obstacle)
        })
        .collect()
}

fn argmin_distance(points: &[Point], l: &Segment) -> Point {
    pick(points.iter().map(|v| (point_segment_distance(*v, l), *v)), false, seg_scale(l))
        .expect("non-empty candidate list")
}

/// Candidate guidance point contributed by one blocking obstacle: the
/// doubly-visible extreme nearest to `l`, or failing that the nearer of the
/// two extremes.
pub fn candidate_guidance_point(p: Point, l: &Segment, obstacle: &Polygon) -> Result<Point, GuidanceError> {
    let visible = subopt_vertices(p, obstacle)?;
    if visible.is_empty() {
        return Err(GuidanceError::NoVisibleVertex(obstacle.id));
    }
    let (p_l, p_r) = extreme_vertices(l, &visible)?;
    let opt = opt_vertices(p, l.b, obstacle, p_l, p_r);
    if opt.is_empty() {
        let extremes = if p_l.approx_eq(p_r) { vec![p_l] } else { vec![p_l, p_r] };
        Ok(argmin_distance(&extremes, l))
    } else {
        Ok(argmin_distance(&opt, l))
    }
}

/// Among the per-obstacle candidates, the one farthest from `l`. `None`
/// if any blocking obstacle yields no candidate.
pub fn optimal_global_guidance_point(p: Point, l: &Segment, o_in: &[&Polygon]) -> Option<Point> {
    let mut scored = Vec::with_capacity(o_in.len());
    for o in o_in {
        let c = candidate_guidance_point(p, l, o).ok()?;
        scored.push((point_segment_distance(c, l), c));
    }
    pick(scored, true, seg_scale(l))
}

/// Search state: the current path node and the guidance point it is
/// heading for. The working segment is always `p -> p_g`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlannerState {
    pub p: Point,
    pub p_g: Point,
    pub iterations: usize,
}

impl PlannerState {
    pub fn segment(&self) -> Segment {
        Segment::new(self.p, self.p_g)
    }
}

/// A successful plan with bookkeeping.
#[derive(Debug, Clone, PartialEq)]
pub struct PlanOutcome {
    pub path: PlannedPath,
    pub iterations: usize,
    pub diagnostics: Vec<String>,
}

/// Guidance-point planner over a prepared obstacle set.
#[derive(Debug, Clone, Copy)]
pub struct GosPlanner<'a> {
    obstacles: &'a ObstacleSet,
    cap: usize,
}

impl<'a> GosPlanner<'a> {
    pub fn new(obstacles: &'a ObstacleSet) -> Self {
        let cap = ITERATION_CAP_FACTOR * (obstacles.vertex_count() + 1);
        GosPlanner { obstacles, cap }
    }

    pub fn iteration_cap(&self) -> usize {
        self.cap
    }

    pub fn obstacles(&self) -> &'a ObstacleSet {
        self.obstacles
    }

    pub fn plan(&self, start: Point, goal: Point) -> Result<PlannedPath, PlanError> {
        self.plan_detailed(start, goal).map(|o| o.path)
    }

    pub fn plan_detailed(&self, start: Point, goal: Point) -> Result<PlanOutcome, PlanError> {
        let mut diagnostics = Vec::new();
        let start = self.admit_endpoint("start", start, &mut diagnostics)?;
        let goal = self.admit_endpoint("goal", goal, &mut diagnostics)?;
        if start.approx_eq(goal) {
            return Ok(PlanOutcome {
                path: PlannedPath::single(start),
                iterations: 0,
                diagnostics,
            });
        }

        let mut path = vec![start];
        let mut state = PlannerState { p: start, p_g: goal, iterations: 0 };
        let mut o_in = check_intersect(&state.segment(), self.obstacles);
        loop {
            state.iterations += 1;
            if state.iterations > self.cap {
                return Err(PlanError::IterationCapExceeded { cap: self.cap });
            }
            let l = state.segment();
            // Nothing blocks the working segment: its far end is the next target.
            let p_opt = if o_in.is_empty() {
                state.p_g
            } else {
                optimal_global_guidance_point(state.p, &l, &o_in).ok_or(
                    PlanError::NoGuidancePoint { iterations: state.iterations },
                )?
            };
            if segment_is_free(&Segment::new(state.p, p_opt), self.obstacles) {
                if p_opt.approx_eq(goal) {
                    path.push(goal);
                    return Ok(PlanOutcome {
                        path: PlannedPath::new(path),
                        iterations: state.iterations,
                        diagnostics,
                    });
                }
                path.push(p_opt);
                state.p = p_opt;
                state.p_g = goal;
            } else {
                state.p_g = p_opt;
            }
            o_in = check_intersect(&state.segment(), self.obstacles);
        }
    }

    // Endpoints inside a raw obstacle are rejected; endpoints that only fall
    // inside the inflated margin are pushed just outside the nearest edge.
    fn admit_endpoint(&self, which: &'static str, q: Point, diags: &mut Vec<String>) -> Result<Point, PlanError> {
        if !q.is_finite() {
            return Err(PlanError::NonFiniteEndpoint);
        }
        if let Some(o) = self.obstacles.raw_containing(q) {
            return Err(PlanError::StartOrGoalInsideObstacle { which, point: q, obstacle: o.id });
        }
        let Some(o) = self.obstacles.containing(q) else {
            return Ok(q);
        };
        let (b, n) = o.nearest_boundary_point(q);
        let moved = b.add(n.scale(4.0 * tol(b.magnitude())));
        if let Some(o2) = self.obstacles.containing(moved) {
            return Err(PlanError::StartOrGoalInsideObstacle { which, point: q, obstacle: o2.id });
        }
        diags.push(format!(
            "{which} {q} inside inflated obstacle {}; projected to {moved}",
            o.id
        ));
        Ok(moved)
    }
}

/// Inflates `raw` by `r`, merges, and plans from `p_s` to `p_e`.
pub fn plan_global_path(p_s: Point, p_e: Point, r: f64, raw: &[Polygon]) -> Result<PlanOutcome, PlanError> {
    let set = ObstacleSet::build(raw, r)?;
    GosPlanner::new(&set).plan_detailed(p_s, p_e)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(x: f64, y: f64) -> Point {
        Point::new(x, y)
    }

    fn poly(id: u32, pts: &[(f64, f64)]) -> Polygon {
        Polygon::new(id, pts.iter().map(|&(x, y)| p(x, y)).collect()).unwrap()
    }

    fn tall_square() -> Polygon {
        poly(0, &[(4.0, -1.0), (6.0, -1.0), (6.0, 2.0), (4.0, 2.0)])
    }

    /// Two obstacles straddling the start-goal segment: an octagon whose
    /// vertex 7 is the winning guidance point and a quad whose only visible
    /// vertices are 0 and 3.
    fn figure_one() -> (Point, Point, Vec<Polygon>) {
        let octagon = poly(
            0,
            &[
                (6.414, -1.114),
                (7.0, 0.3),
                (6.414, 1.714),
                (5.0, 2.3),
                (3.586, 1.714),
                (3.0, 0.3),
                (3.586, -1.114),
                (5.0, -1.7),
            ],
        );
        let quad = poly(1, &[(10.0, -2.0), (13.0, -2.0), (13.0, 1.0), (10.0, 1.0)]);
        (p(0.0, 0.0), p(20.0, 0.0), vec![octagon, quad])
    }

    #[test]
    fn figure_one_first_iteration() {
        let (ps, pe, obs) = figure_one();
        let set = ObstacleSet::build(&obs, 0.0).unwrap();
        let l = Segment::new(ps, pe);
        let o_in = check_intersect(&l, &set);
        assert_eq!(o_in.iter().map(|o| o.id).collect::<Vec<_>>(), vec![0, 1]);

        let quad = o_in[1];
        let v = quad.vertices();
        let sub = subopt_vertices(ps, quad).unwrap();
        assert_eq!(sub, vec![v[0], v[3]]);
        let (pl, pr) = extreme_vertices(&l, &sub).unwrap();
        assert_eq!((pl, pr), (v[3], v[0]));
        assert!(opt_vertices(ps, pe, quad, pl, pr).is_empty());
        assert_eq!(candidate_guidance_point(ps, &l, quad).unwrap(), v[3]);

        let oct = o_in[0];
        let p7 = oct.vertices()[7];
        assert_eq!(candidate_guidance_point(ps, &l, oct).unwrap(), p7);
        assert_eq!(optimal_global_guidance_point(ps, &l, &o_in), Some(p7));
    }

    #[test]
    fn figure_one_terminates_collision_free() {
        let (ps, pe, obs) = figure_one();
        let set = ObstacleSet::build(&obs, 0.0).unwrap();
        let out = GosPlanner::new(&set).plan_detailed(ps, pe).unwrap();
        assert!(out.iterations <= GosPlanner::new(&set).iteration_cap());
        assert_eq!(out.path.start(), ps);
        assert_eq!(out.path.end(), pe);
        for w in out.path.waypoints().windows(2) {
            assert!(check_intersect(&Segment::new(w[0], w[1]), &set).is_empty());
        }
    }

    #[test]
    fn subopt_from_the_left() {
        let sq = poly(0, &[(0.0, 0.0), (1.0, 0.0), (1.0, 1.0), (0.0, 1.0)]);
        assert_eq!(subopt_vertices(p(-2.0, 0.5), &sq).unwrap(), vec![p(0.0, 0.0), p(0.0, 1.0)]);
        assert!(matches!(
            subopt_vertices(p(0.5, 0.5), &sq),
            Err(GuidanceError::PointInsideObstacle(..))
        ));
        let far = subopt_vertices(p(1e4, -3e3), &sq).unwrap();
        assert!(far.len() >= 2);
    }

    #[test]
    fn extremes() {
        let l = Segment::new(p(0.0, 0.0), p(4.0, 0.0));
        assert_eq!(
            extreme_vertices(&l, &[p(1.0, 2.0), p(1.0, -1.0)]).unwrap(),
            (p(1.0, 2.0), p(1.0, -1.0))
        );
        assert_eq!(extreme_vertices(&l, &[p(2.0, 3.0)]).unwrap(), (p(2.0, 3.0), p(2.0, 3.0)));
        assert_eq!(extreme_vertices(&l, &[]), Err(GuidanceError::EmptyCandidates));
    }

    #[test]
    fn opt_both_and_one_sided() {
        // A diamond sitting on L: both side corners see p and p_g.
        let plate = poly(0, &[(4.0, 0.0), (5.0, -1.0), (6.0, 0.0), (5.0, 1.0)]);
        let (ps, pe) = (p(0.0, 0.0), p(10.0, 0.0));
        let sub = subopt_vertices(ps, &plate).unwrap();
        let (pl, pr) = extreme_vertices(&Segment::new(ps, pe), &sub).unwrap();
        assert_eq!((pl, pr), (p(5.0, 1.0), p(5.0, -1.0)));
        assert_eq!(opt_vertices(ps, pe, &plate, pl, pr), vec![pl, pr]);

        // Goal tucked behind the upper side: only the left extreme works.
        let block = poly(0, &[(4.0, -1.0), (6.0, -1.0), (6.0, 1.0), (4.0, 1.0)]);
        let pg = p(8.0, 1.5);
        let l = Segment::new(ps, pg);
        assert!(segment_intersects_polygon(&l, &block));
        let sub = subopt_vertices(ps, &block).unwrap();
        let (pl, pr) = extreme_vertices(&l, &sub).unwrap();
        assert_eq!(opt_vertices(ps, pg, &block, pl, pr), vec![pl]);
        assert_eq!(pl, p(4.0, 1.0));
    }

    #[test]
    fn candidate_prefers_closer_extreme() {
        let l = Segment::new(p(0.0, 0.0), p(10.0, 0.0));
        assert_eq!(candidate_guidance_point(p(0.0, 0.0), &l, &tall_square()).unwrap(), p(4.0, -1.0));
    }

    #[test]
    fn optimal_picks_farther_candidate() {
        // Candidates end up at distances 1.0 and 2.5 from L.
        let a = poly(0, &[(2.0, -1.0), (2.5, -1.0), (2.5, 3.0), (2.0, 3.0)]);
        let b = poly(1, &[(6.0, -2.5), (6.5, -2.5), (6.5, 4.0), (6.0, 4.0)]);
        let set = ObstacleSet::build(&[a, b], 0.0).unwrap();
        let l = Segment::new(p(0.0, 0.0), p(10.0, 0.0));
        let o_in = check_intersect(&l, &set);
        assert_eq!(o_in.len(), 2);
        let ca = candidate_guidance_point(l.a, &l, o_in[0]).unwrap();
        let cb = candidate_guidance_point(l.a, &l, o_in[1]).unwrap();
        assert_eq!(point_segment_distance(ca, &l), 1.0);
        assert_eq!(point_segment_distance(cb, &l), 2.5);
        assert_eq!(optimal_global_guidance_point(l.a, &l, &o_in), Some(cb));
        assert_eq!(optimal_global_guidance_point(l.a, &l, &o_in[..1]), Some(ca));
    }

    #[test]
    fn free_space_and_trivial_queries() {
        let set = ObstacleSet::empty();
        let pl = GosPlanner::new(&set);
        let path = pl.plan(p(0.0, 0.0), p(10.0, 0.0)).unwrap();
        assert_eq!(path.waypoints(), &[p(0.0, 0.0), p(10.0, 0.0)]);
        assert_eq!(path.length(), 10.0);
        let path = pl.plan(p(3.0, 3.0), p(3.0, 3.0)).unwrap();
        assert_eq!(path.waypoints(), &[p(3.0, 3.0)]);
        assert_eq!(path.length(), 0.0);
    }

    #[test]
    fn square_detour() {
        let out = plan_global_path(p(0.0, 0.0), p(10.0, 0.0), 0.0, &[tall_square()]).unwrap();
        assert_eq!(
            out.path.waypoints(),
            &[p(0.0, 0.0), p(4.0, -1.0), p(6.0, -1.0), p(10.0, 0.0)]
        );
        let expect = 17f64.sqrt() * 2.0 + 2.0;
        assert!((out.path.length() - expect).abs() < 1e-12);
        assert!((out.path.length() - 10.2462).abs() < 1e-4);
    }

    #[test]
    fn endpoint_inside_raw_obstacle_rejected() {
        let r = plan_global_path(p(5.0, 0.0), p(10.0, 0.0), 0.0, &[tall_square()]);
        assert!(matches!(r, Err(PlanError::StartOrGoalInsideObstacle { .. })));
    }

    #[test]
    fn endpoint_in_inflated_margin_is_projected() {
        let out = plan_global_path(p(3.8, 0.0), p(10.0, 0.0), 0.5, &[tall_square()]).unwrap();
        assert_eq!(out.diagnostics.len(), 1);
        let s = out.path.start();
        assert!((s.x - 3.5).abs() < 1e-6 && s.y == 0.0);
        assert!(out.path.length() > 6.0);
    }

    #[test]
    fn path_length_examples() {
        assert_eq!(path_length(&PlannedPath::single(p(0.0, 0.0))), 0.0);
        assert_eq!(path_length(&PlannedPath::new(vec![p(0.0, 0.0), p(3.0, 4.0)])), 5.0);
        let l = path_length(&PlannedPath::new(vec![p(0.0, 0.0), p(4.0, -1.0), p(6.0, -1.0), p(10.0, 0.0)]));
        assert!((l - 10.246211251235321).abs() < 1e-12);
    }

    #[test]
    fn start_enclosed_by_merged_walls_is_projected_out() {
        // Four touching walls merge into one hull that swallows the start.
        // The start is not inside any raw wall, so it is moved to the hull
        // boundary instead of failing.
        let walls = vec![
            poly(0, &[(-2.0, -2.0), (2.0, -2.0), (2.0, -1.5), (-2.0, -1.5)]),
            poly(1, &[(1.5, -1.5), (2.0, -1.5), (2.0, 1.5), (1.5, 1.5)]),
            poly(2, &[(-2.0, 1.5), (2.0, 1.5), (2.0, 2.0), (-2.0, 2.0)]),
            poly(3, &[(-2.0, -1.5), (-1.5, -1.5), (-1.5, 1.5), (-2.0, 1.5)]),
        ];
        let out = plan_global_path(p(0.0, 0.0), p(10.0, 0.0), 0.0, &walls).unwrap();
        assert_eq!(out.diagnostics.len(), 1);
        assert!((out.path.start().dist(p(0.0, 0.0)) - 2.0).abs() < 1e-6);
    }
}
