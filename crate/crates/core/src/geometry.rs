//! Planar primitives, obstacle inflation and merging, and the incidence
//! predicates the planner is built on.
//!
//! All incidence tests use [`EPS`] scaled by the magnitude of the
//! coordinates involved, so the same predicates behave sensibly on a 1 m
//! workspace and on a 6 km one.

use serde::{Deserialize, Serialize};
use std::cmp::Ordering;
use std::fmt;
use std::ops::{Add, Sub};
use thiserror::Error;

/// Base geometric tolerance in meters.
pub const EPS: f64 = 1e-9;

/// Miter joins longer than this multiple of the inflation radius are beveled.
pub const MITER_LIMIT: f64 = 4.0;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeometryError {
    #[error("invalid polygon: {0}")]
    InvalidPolygon(String),
    #[error("negative inflation radius {0}")]
    NegativeRadius(f64),
    #[error("degenerate segment")]
    DegenerateSegment,
}

/// A point in the plane, in meters. Serialized as `[x, y]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(from = "[f64; 2]", into = "[f64; 2]")]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl From<[f64; 2]> for Point {
    fn from([x, y]: [f64; 2]) -> Self {
        Point { x, y }
    }
}

impl From<Point> for [f64; 2] {
    fn from(p: Point) -> Self {
        [p.x, p.y]
    }
}

impl fmt::Display for Point {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.x, self.y)
    }
}

impl Point {
    pub const fn new(x: f64, y: f64) -> Self {
        Point { x, y }
    }

    pub fn is_finite(&self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }

    pub fn scale(self, k: f64) -> Point {
        Point::new(self.x * k, self.y * k)
    }

    pub fn dot(self, o: Point) -> f64 {
        self.x * o.x + self.y * o.y
    }

    pub fn cross(self, o: Point) -> f64 {
        self.x * o.y - self.y * o.x
    }

    pub fn norm(self) -> f64 {
        self.x.hypot(self.y)
    }

    pub fn dist(self, o: Point) -> f64 {
        self.sub(o).norm()
    }

    /// Largest absolute coordinate, floored at 1. Used to scale tolerances.
    pub fn magnitude(self) -> f64 {
        self.x.abs().max(self.y.abs()).max(1.0)
    }

    /// Lexicographic (x, then y) total order.
    pub fn lex_cmp(&self, o: &Point) -> Ordering {
        self.x.total_cmp(&o.x).then(self.y.total_cmp(&o.y))
    }

    /// Equal within the scaled tolerance.
    pub fn approx_eq(self, o: Point) -> bool {
        self.dist(o) <= tol(self.magnitude().max(o.magnitude()))
    }
}

impl std::ops::Add for Point {
    type Output = Point;

    fn add(self, o: Point) -> Point {
        Point::new(self.x + o.x, self.y + o.y)
    }
}

impl std::ops::Sub for Point {
    type Output = Point;

    fn sub(self, o: Point) -> Point {
        Point::new(self.x - o.x, self.y - o.y)
    }
}

/// Absolute tolerance for coordinates of the given magnitude.
pub fn tol(magnitude: f64) -> f64 {
    EPS * magnitude.max(1.0)
}

/// A directed segment from `a` to `b`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Segment {
    pub a: Point,
    pub b: Point,
}

impl Segment {
    pub const fn new(a: Point, b: Point) -> Self {
        Segment { a, b }
    }

    pub fn length(&self) -> f64 {
        self.a.dist(self.b)
    }

    pub fn reversed(&self) -> Segment {
        Segment::new(self.b, self.a)
    }

    fn magnitude(&self) -> f64 {
        self.a.magnitude().max(self.b.magnitude())
    }

    pub fn is_degenerate(&self) -> bool {
        self.length() <= tol(self.magnitude())
    }

    pub fn at(&self, t: f64) -> Point {
        self.a.add(self.b.sub(self.a).scale(t))
    }

    pub fn bbox(&self) -> Aabb {
        Aabb::from_points(&[self.a, self.b])
    }
}

/// Axis-aligned bounding box.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Aabb {
    pub min: Point,
    pub max: Point,
}

impl Aabb {
    pub fn from_points(pts: &[Point]) -> Aabb {
        let mut min = Point::new(f64::INFINITY, f64::INFINITY);
        let mut max = Point::new(f64::NEG_INFINITY, f64::NEG_INFINITY);
        for p in pts {
            min.x = min.x.min(p.x);
            min.y = min.y.min(p.y);
            max.x = max.x.max(p.x);
            max.y = max.y.max(p.y);
        }
        Aabb { min, max }
    }

    pub fn overlaps(&self, o: &Aabb, slack: f64) -> bool {
        self.min.x <= o.max.x + slack
            && o.min.x <= self.max.x + slack
            && self.min.y <= o.max.y + slack
            && o.min.y <= self.max.y + slack
    }

    pub fn contains(&self, p: Point, slack: f64) -> bool {
        p.x >= self.min.x - slack
            && p.x <= self.max.x + slack
            && p.y >= self.min.y - slack
            && p.y <= self.max.y + slack
    }

    pub fn width(&self) -> f64 {
        self.max.x - self.min.x
    }

    pub fn height(&self) -> f64 {
        self.max.y - self.min.y
    }

    fn magnitude(&self) -> f64 {
        self.min.magnitude().max(self.max.magnitude())
    }
}

/// A simple, counter-clockwise polygon.
#[derive(Debug, Clone, Serialize)]
pub struct Polygon {
    pub id: u32,
    vertices: Vec<Point>,
    #[serde(skip)]
    bbox: Aabb,
}

impl Polygon {
    /// Builds a polygon, rejecting anything that is not simple and CCW.
    pub fn new(id: u32, vertices: Vec<Point>) -> Result<Polygon, GeometryError> {
        validate_ring(&vertices)?;
        if signed_area(&vertices) <= 0.0 {
            return Err(GeometryError::InvalidPolygon(
                "vertices must be in counter-clockwise order".into(),
            ));
        }
        Ok(Self::from_valid(id, vertices))
    }

    /// Like [`Polygon::new`] but accepts either orientation.
    pub fn normalized(id: u32, mut vertices: Vec<Point>) -> Result<Polygon, GeometryError> {
        validate_ring(&vertices)?;
        if signed_area(&vertices) < 0.0 {
            vertices.reverse();
        }
        Ok(Self::from_valid(id, vertices))
    }

    pub(crate) fn from_valid(id: u32, vertices: Vec<Point>) -> Polygon {
        let bbox = Aabb::from_points(&vertices);
        Polygon { id, vertices, bbox }
    }

    pub fn vertices(&self) -> &[Point] {
        &self.vertices
    }

    pub fn len(&self) -> usize {
        self.vertices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }

    pub fn bbox(&self) -> Aabb {
        self.bbox
    }

    pub fn area(&self) -> f64 {
        signed_area(&self.vertices)
    }

    pub fn edges(&self) -> impl Iterator<Item = Segment> + '_ {
        let n = self.vertices.len();
        (0..n).map(move |i| Segment::new(self.vertices[i], self.vertices[(i + 1) % n]))
    }

    fn magnitude(&self) -> f64 {
        self.bbox().magnitude()
    }

    pub fn is_convex(&self) -> bool {
        let n = self.vertices.len();
        (0..n).all(|i| {
            let prev = self.vertices[(i + n - 1) % n];
            let next = self.vertices[(i + 1) % n];
            orientation(prev, self.vertices[i], next) >= 0
        })
    }

    /// Distance from `p` to the polygon boundary.
    pub fn boundary_distance(&self, p: Point) -> f64 {
        self.edges()
            .map(|e| point_segment_distance(p, &e))
            .fold(f64::INFINITY, f64::min)
    }

    /// Closed containment test (boundary counts as inside).
    pub fn contains(&self, p: Point) -> bool {
        let t = tol(self.magnitude().max(p.magnitude()));
        if !self.bbox().contains(p, t) {
            return false;
        }
        crossing_inside(&self.vertices, p) || self.boundary_distance(p) <= t
    }

    /// True if `p` lies in the open interior, clear of the boundary.
    pub fn contains_strictly(&self, p: Point) -> bool {
        let t = tol(self.magnitude().max(p.magnitude()));
        if !self.bbox().contains(p, t) {
            return false;
        }
        crossing_inside(&self.vertices, p) && self.boundary_distance(p) > t
    }

    /// Nearest point on the boundary together with the outward normal of
    /// the edge it lies on.
    pub fn nearest_boundary_point(&self, p: Point) -> (Point, Point) {
        let mut best = (f64::INFINITY, p, Point::new(0.0, 0.0));
        for e in self.edges() {
            let q = closest_point_on_segment(p, &e);
            let d = p.dist(q);
            if d < best.0 {
                let dir = e.b.sub(e.a);
                let n = Point::new(dir.y, -dir.x).scale(1.0 / dir.norm());
                best = (d, q, n);
            }
        }
        (best.1, best.2)
    }
}

impl PartialEq for Polygon {
    fn eq(&self, other: &Self) -> bool {
        self.id == other.id && self.vertices == other.vertices
    }
}

fn signed_area(v: &[Point]) -> f64 {
    let n = v.len();
    (0..n).map(|i| v[i].cross(v[(i + 1) % n])).sum::<f64>() * 0.5
}

fn crossing_inside(v: &[Point], p: Point) -> bool {
    let n = v.len();
    let mut inside = false;
    let mut j = n - 1;
    for i in 0..n {
        let (a, b) = (v[i], v[j]);
        if (a.y > p.y) != (b.y > p.y) {
            let x = a.x + (p.y - a.y) * (b.x - a.x) / (b.y - a.y);
            if p.x < x {
                inside = !inside;
            }
        }
        j = i;
    }
    inside
}

fn validate_ring(v: &[Point]) -> Result<(), GeometryError> {
    let bad = |m: &str| Err(GeometryError::InvalidPolygon(m.to_string()));
    if v.len() < 3 {
        return bad("fewer than 3 vertices");
    }
    if v.iter().any(|p| !p.is_finite()) {
        return bad("non-finite coordinate");
    }
    let n = v.len();
    for i in 0..n {
        if v[i].approx_eq(v[(i + 1) % n]) {
            return bad("consecutive duplicate vertices");
        }
    }
    let mag = v.iter().map(|p| p.magnitude()).fold(1.0, f64::max);
    if signed_area(v).abs() <= tol(mag) * mag {
        return bad("zero area");
    }
    // Adjacent edges may only share their common vertex; other pairs must
    // be disjoint.
    let edges: Vec<Segment> = (0..n).map(|i| Segment::new(v[i], v[(i + 1) % n])).collect();
    let t = tol(mag);
    for i in 0..n {
        for j in (i + 1)..n {
            let adjacent = j == i + 1 || (i == 0 && j == n - 1);
            if adjacent {
                let (shared, e1, e2) = if j == i + 1 {
                    (v[j], edges[i], edges[j])
                } else {
                    (v[0], edges[j], edges[i])
                };
                let far1 = if e1.a == shared { e1.b } else { e1.a };
                let far2 = if e2.a == shared { e2.b } else { e2.a };
                if point_segment_distance(far1, &e2) <= t || point_segment_distance(far2, &e1) <= t {
                    return bad("self-overlapping edges");
                }
            } else if segment_distance(&edges[i], &edges[j]) <= t {
                return bad("self-intersecting edges");
            }
        }
    }
    Ok(())
}

/// Orientation of `c` relative to the directed line `a -> b`:
/// 1 left, -1 right, 0 collinear within tolerance.
pub fn orientation(a: Point, b: Point, c: Point) -> i8 {
    let u = b.sub(a);
    let w = c.sub(a);
    let cr = u.cross(w);
    let scale = u.norm() * w.norm();
    let t = EPS * scale.max(EPS);
    if cr > t {
        1
    } else if cr < -t {
        -1
    } else {
        0
    }
}

fn closest_point_on_segment(p: Point, l: &Segment) -> Point {
    let d = l.b.sub(l.a);
    let len2 = d.dot(d);
    if len2 == 0.0 {
        return l.a;
    }
    let t = (p.sub(l.a).dot(d) / len2).clamp(0.0, 1.0);
    l.at(t)
}

/// Euclidean distance from `p` to the closed segment `l`. A degenerate
/// segment is treated as the point `l.a`.
pub fn point_segment_distance(p: Point, l: &Segment) -> f64 {
    p.dist(closest_point_on_segment(p, l))
}

/// Signed perpendicular distance of `v` from the infinite line through `l`,
/// positive on the left of `l.a -> l.b`.
pub fn signed_side_distance(v: Point, l: &Segment) -> Result<f64, GeometryError> {
    if l.is_degenerate() {
        return Err(GeometryError::DegenerateSegment);
    }
    let d = l.b.sub(l.a);
    Ok(d.cross(v.sub(l.a)) / d.norm())
}

/// Minimum distance between two closed segments.
pub fn segment_distance(s: &Segment, t: &Segment) -> f64 {
    let o1 = orientation(s.a, s.b, t.a);
    let o2 = orientation(s.a, s.b, t.b);
    let o3 = orientation(t.a, t.b, s.a);
    let o4 = orientation(t.a, t.b, s.b);
    if o1 * o2 < 0 && o3 * o4 < 0 {
        return 0.0;
    }
    point_segment_distance(s.a, t)
        .min(point_segment_distance(s.b, t))
        .min(point_segment_distance(t.a, s))
        .min(point_segment_distance(t.b, s))
}

/// True when the segment passes through the polygon's interior.
///
/// Touching a vertex or sliding along an edge does not count. The segment
/// is split at every boundary contact; it intersects iff some piece has its
/// midpoint strictly inside the polygon.
pub fn segment_intersects_polygon(seg: &Segment, poly: &Polygon) -> bool {
    let mag = seg.magnitude().max(poly.magnitude());
    let t_abs = tol(mag);
    if !seg.bbox().overlaps(&poly.bbox(), t_abs) {
        return false;
    }
    let d = seg.b.sub(seg.a);
    let len = d.norm();
    if len <= t_abs {
        return false;
    }
    let len2 = len * len;
    let mut ts: Vec<f64> = vec![0.0, 1.0];
    let mut push = |t: f64| {
        if t > 0.0 && t < 1.0 {
            ts.push(t);
        }
    };
    for v in poly.vertices() {
        if point_segment_distance(*v, seg) <= t_abs {
            push(v.sub(seg.a).dot(d) / len2);
        }
    }
    for e in poly.edges() {
        let ed = e.b.sub(e.a);
        let denom = d.cross(ed);
        if denom.abs() <= EPS * len * ed.norm() {
            continue;
        }
        let ap = e.a.sub(seg.a);
        let t = ap.cross(ed) / denom;
        let u = ap.cross(d) / denom;
        if (-EPS..=1.0 + EPS).contains(&u) {
            push(t);
        }
    }
    ts.sort_by(f64::total_cmp);
    let min_gap = t_abs / len;
    ts.windows(2).any(|w| {
        w[1] - w[0] > min_gap && poly.contains_strictly(seg.at(0.5 * (w[0] + w[1])))
    })
}

/// Polygons from `obstacles` whose interior the segment passes through,
/// in ascending id order.
pub fn check_intersect<'a>(l: &Segment, obstacles: &'a ObstacleSet) -> Vec<&'a Polygon> {
    let mut hits: Vec<&Polygon> = obstacles
        .obstacles()
        .iter()
        .filter(|o| segment_intersects_polygon(l, o))
        .collect();
    hits.sort_by_key(|o| o.id);
    hits
}

/// True if the segment is clear of every obstacle.
pub fn segment_is_free(l: &Segment, obstacles: &ObstacleSet) -> bool {
    !obstacles
        .obstacles()
        .iter()
        .any(|o| segment_intersects_polygon(l, o))
}

/// Vertices with a strict left turn in CCW order (interior angle < 180°).
pub fn convex_vertices(poly: &Polygon) -> Vec<Point> {
    let v = poly.vertices();
    let n = v.len();
    (0..n)
        .filter(|&i| orientation(v[(i + n - 1) % n], v[i], v[(i + 1) % n]) > 0)
        .map(|i| v[i])
        .collect()
}

/// Andrew's monotone chain. Returns CCW hull starting at the
/// lexicographically smallest point, collinear points dropped.
pub fn convex_hull(points: &[Point]) -> Vec<Point> {
    let mut pts: Vec<Point> = points.to_vec();
    pts.sort_by(|a, b| a.lex_cmp(b));
    pts.dedup_by(|a, b| a.approx_eq(*b));
    if pts.len() < 3 {
        return pts;
    }
    let mut lower: Vec<Point> = Vec::with_capacity(pts.len());
    for &p in &pts {
        while lower.len() >= 2 && orientation(lower[lower.len() - 2], lower[lower.len() - 1], p) <= 0 {
            lower.pop();
        }
        lower.push(p);
    }
    let mut upper: Vec<Point> = Vec::with_capacity(pts.len());
    for &p in pts.iter().rev() {
        while upper.len() >= 2 && orientation(upper[upper.len() - 2], upper[upper.len() - 1], p) <= 0 {
            upper.pop();
        }
        upper.push(p);
    }
    lower.pop();
    upper.pop();
    lower.extend(upper);
    lower
}

/// Whether two polygons overlap or touch.
pub fn polygons_touch(a: &Polygon, b: &Polygon) -> bool {
    let t = tol(a.magnitude().max(b.magnitude()));
    if !a.bbox().overlaps(&b.bbox(), t) {
        return false;
    }
    for ea in a.edges() {
        for eb in b.edges() {
            if segment_distance(&ea, &eb) <= t {
                return true;
            }
        }
    }
    a.contains(b.vertices()[0]) || b.contains(a.vertices()[0])
}

/// Repeatedly replaces any two touching or overlapping polygons by the
/// convex hull of their vertices until all are pairwise disjoint. The
/// merged polygon keeps the smaller id. Output is sorted by id.
pub fn merge_overlapping(obstacles: Vec<Polygon>) -> Vec<Polygon> {
    let mut polys = obstacles;
    'outer: loop {
        for i in 0..polys.len() {
            for j in (i + 1)..polys.len() {
                if polygons_touch(&polys[i], &polys[j]) {
                    let b = polys.swap_remove(j);
                    let a = polys.swap_remove(i);
                    let mut pts = a.vertices.clone();
                    pts.extend_from_slice(&b.vertices);
                    let hull = convex_hull(&pts);
                    polys.push(Polygon::from_valid(a.id.min(b.id), hull));
                    continue 'outer;
                }
            }
        }
        break;
    }
    polys.sort_by_key(|p| p.id);
    polys
}

/// Grows a polygon outward by `r`.
///
/// Convex polygons are offset edge by edge with miter joins (beveled past
/// [`MITER_LIMIT`]). Concave ones are split into convex parts, each part is
/// inflated, and the parts are re-merged into one enclosing polygon.
pub fn inflate_polygon(poly: &Polygon, r: f64) -> Result<Polygon, GeometryError> {
    if r.is_nan() || r < 0.0 {
        return Err(GeometryError::NegativeRadius(r));
    }
    Polygon::new(poly.id, poly.vertices.clone())?;
    if r == 0.0 {
        return Ok(poly.clone());
    }
    if poly.is_convex() {
        return Ok(Polygon::from_valid(poly.id, offset_convex(&poly.vertices, r)));
    }
    let parts: Vec<Polygon> = convex_decomposition(&poly.vertices)
        .into_iter()
        .map(|part| Polygon::from_valid(poly.id, offset_convex(&part, r)))
        .collect();
    let merged = merge_overlapping(parts);
    if merged.len() == 1 {
        return Ok(merged.into_iter().next().unwrap());
    }
    let all: Vec<Point> = merged.iter().flat_map(|p| p.vertices.iter().copied()).collect();
    Ok(Polygon::from_valid(poly.id, convex_hull(&all)))
}

fn offset_convex(v: &[Point], r: f64) -> Vec<Point> {
    let v = drop_collinear(v);
    let n = v.len();
    let normal = |a: Point, b: Point| {
        let d = b.sub(a);
        Point::new(d.y, -d.x).scale(1.0 / d.norm())
    };
    let mut out = Vec::with_capacity(n * 2);
    for i in 0..n {
        let prev = v[(i + n - 1) % n];
        let cur = v[i];
        let next = v[(i + 1) % n];
        let n1 = normal(prev, cur);
        let n2 = normal(cur, next);
        let c = n1.dot(n2);
        // Miter length is r / cos(half turn angle) = r * sqrt(2 / (1 + c)).
        if (1.0 + c) * MITER_LIMIT * MITER_LIMIT >= 2.0 {
            out.push(cur.add(n1.add(n2).scale(r / (1.0 + c))));
        } else {
            // Chord tangent to the rounding disc at the bisector.
            let bis = n1.add(n2);
            let bis = bis.scale(1.0 / bis.norm());
            let d1 = cur.sub(prev);
            let d1 = d1.scale(1.0 / d1.norm());
            let d2 = next.sub(cur);
            let d2 = d2.scale(1.0 / d2.norm());
            let s1 = (r - r * n1.dot(bis)) / d1.dot(bis);
            let s2 = (r - r * n2.dot(bis)) / d2.dot(bis);
            out.push(cur.add(n1.scale(r)).add(d1.scale(s1)));
            out.push(cur.add(n2.scale(r)).add(d2.scale(s2)));
        }
    }
    drop_collinear(&out)
}

fn drop_collinear(v: &[Point]) -> Vec<Point> {
    let mut out: Vec<Point> = Vec::with_capacity(v.len());
    for &p in v {
        if out.last().is_some_and(|q| q.approx_eq(p)) {
            continue;
        }
        out.push(p);
    }
    while out.len() > 1 && out[0].approx_eq(*out.last().unwrap()) {
        out.pop();
    }
    loop {
        let n = out.len();
        if n <= 3 {
            return out;
        }
        let idx = (0..n).find(|&i| orientation(out[(i + n - 1) % n], out[i], out[(i + 1) % n]) == 0);
        match idx {
            Some(i) => {
                out.remove(i);
            }
            None => return out,
        }
    }
}

/// Ear-clipping triangulation followed by Hertel-Mehlhorn diagonal removal.
/// Input is a simple CCW ring; output parts are convex CCW rings.
fn convex_decomposition(v: &[Point]) -> Vec<Vec<Point>> {
    let n = v.len();
    let mut idx: Vec<usize> = (0..n).collect();
    let mut tris: Vec<[usize; 3]> = Vec::with_capacity(n.saturating_sub(2));
    while idx.len() > 3 {
        let m = idx.len();
        let ear = (0..m).find(|&k| {
            let (a, b, c) = (idx[(k + m - 1) % m], idx[k], idx[(k + 1) % m]);
            if orientation(v[a], v[b], v[c]) <= 0 {
                return false;
            }
            idx.iter()
                .filter(|&&q| q != a && q != b && q != c)
                .all(|&q| !in_triangle_closed(v[q], v[a], v[b], v[c]))
        });
        // A simple polygon always has an ear; fall back to the first
        // vertex only if tolerance games hide it.
        let k = ear.unwrap_or(0);
        let (a, b, c) = (idx[(k + m - 1) % m], idx[k], idx[(k + 1) % m]);
        tris.push([a, b, c]);
        idx.remove(k);
    }
    tris.push([idx[0], idx[1], idx[2]]);

    let mut parts: Vec<Vec<usize>> = tris.into_iter().map(|t| t.to_vec()).collect();
    let is_boundary = |a: usize, b: usize| (a + 1) % n == b || (b + 1) % n == a;
    let mut changed = true;
    while changed {
        changed = false;
        'search: for i in 0..parts.len() {
            let m = parts[i].len();
            for k in 0..m {
                let (a, b) = (parts[i][k], parts[i][(k + 1) % m]);
                if is_boundary(a, b) {
                    continue;
                }
                for j in 0..parts.len() {
                    if j == i {
                        continue;
                    }
                    let mj = parts[j].len();
                    let Some(kj) = (0..mj).find(|&q| parts[j][q] == b && parts[j][(q + 1) % mj] == a) else {
                        continue;
                    };
                    // Splice j into i across the shared diagonal a-b.
                    let mut merged = Vec::with_capacity(m + mj - 2);
                    for q in 0..m {
                        merged.push(parts[i][(k + 1 + q) % m]);
                    }
                    // merged = b .. a around part i; continue with part j from after a to before b.
                    for q in 2..mj {
                        merged.push(parts[j][(kj + q) % mj]);
                    }
                    let pts: Vec<Point> = merged.iter().map(|&q| v[q]).collect();
                    let convex = (0..pts.len()).all(|q| {
                        let l = pts.len();
                        orientation(pts[(q + l - 1) % l], pts[q], pts[(q + 1) % l]) >= 0
                    });
                    if convex {
                        let (lo, hi) = (i.min(j), i.max(j));
                        parts.remove(hi);
                        parts.remove(lo);
                        parts.push(merged);
                        changed = true;
                        break 'search;
                    }
                }
            }
        }
    }
    parts
        .into_iter()
        .map(|p| p.into_iter().map(|q| v[q]).collect())
        .collect()
}

fn in_triangle_closed(p: Point, a: Point, b: Point, c: Point) -> bool {
    orientation(a, b, p) >= 0 && orientation(b, c, p) >= 0 && orientation(c, a, p) >= 0
}

/// Obstacles inflated by one radius and merged until pairwise disjoint.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ObstacleSet {
    obstacles: Vec<Polygon>,
    raw: Vec<Polygon>,
    pub inflation_radius: f64,
}

impl ObstacleSet {
    pub fn build(raw: &[Polygon], inflation_radius: f64) -> Result<ObstacleSet, GeometryError> {
        let inflated = raw
            .iter()
            .map(|p| inflate_polygon(p, inflation_radius))
            .collect::<Result<Vec<_>, _>>()?;
        let mut raw = raw.to_vec();
        raw.sort_by_key(|p| p.id);
        Ok(ObstacleSet {
            obstacles: merge_overlapping(inflated),
            raw,
            inflation_radius,
        })
    }

    pub fn empty() -> ObstacleSet {
        ObstacleSet {
            obstacles: Vec::new(),
            raw: Vec::new(),
            inflation_radius: 0.0,
        }
    }

    pub fn obstacles(&self) -> &[Polygon] {
        &self.obstacles
    }

    pub fn raw(&self) -> &[Polygon] {
        &self.raw
    }

    pub fn is_empty(&self) -> bool {
        self.obstacles.is_empty()
    }

    pub fn vertex_count(&self) -> usize {
        self.obstacles.iter().map(Polygon::len).sum()
    }

    /// First obstacle whose open interior contains `p`.
    pub fn containing(&self, p: Point) -> Option<&Polygon> {
        self.obstacles.iter().find(|o| o.contains_strictly(p))
    }

    pub fn raw_containing(&self, p: Point) -> Option<&Polygon> {
        self.raw.iter().find(|o| o.contains_strictly(p))
    }
}
