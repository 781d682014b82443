#![no_main]
use libfuzzer_sys::fuzz_target;

use rangetap_core::geometry::{ObstacleSet, Point, Polygon};
use rangetap_core::planner::GosPlanner;

// First byte picks the inflation radius; the rest is little-endian f64
// pairs, one per vertex.
fuzz_target!(|data: &[u8]| {
    let Some((&r, rest)) = data.split_first() else { return };
    let verts: Vec<Point> = rest
        .chunks_exact(16)
        .map(|c| {
            let x = f64::from_le_bytes(c[..8].try_into().unwrap());
            let y = f64::from_le_bytes(c[8..].try_into().unwrap());
            Point::new(x, y)
        })
        .collect();
    let Ok(poly) = Polygon::normalized(0, verts) else { return };
    let Ok(set) = ObstacleSet::build(&[poly], f64::from(r) / 32.0) else { return };
    let bb = set.obstacles()[0].bbox();
    if !(bb.width().is_finite() && bb.height().is_finite()) || bb.width().max(bb.height()) > 1e6 {
        return;
    }
    let y = 0.5 * (bb.min.y + bb.max.y);
    let a = Point::new(bb.min.x - 1.0, y);
    let b = Point::new(bb.max.x + 1.0, y);
    if let Ok(path) = GosPlanner::new(&set).plan(a, b) {
        assert!(path.length() >= a.dist(b) - 1e-6 * a.dist(b).max(1.0));
    }
});
