//! Static SVG plots. World y points up; SVG y points down, so every
//! coordinate is flipped about the bounds.

use rangetap_core::geometry::{Aabb, Point, Polygon};
use std::fmt::Write;

const PALETTE: [&str; 10] = [
    "#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#17becf", "#bcbd22", "#7f7f7f",
];

#[derive(Debug, Clone, Default)]
pub struct Scene {
    pub raw: Vec<Polygon>,
    pub inflated: Vec<Polygon>,
    /// (label, polyline)
    pub paths: Vec<(String, Vec<Point>)>,
    pub starts: Vec<(u32, Point)>,
    pub tasks: Vec<(u32, Point)>,
}

struct Frame {
    min: Point,
    max: Point,
}

impl Frame {
    fn x(&self, p: Point) -> f64 {
        p.x - self.min.x
    }

    fn y(&self, p: Point) -> f64 {
        self.max.y - p.y
    }

    fn points(&self, pts: &[Point]) -> String {
        pts.iter()
            .map(|p| format!("{:.4},{:.4}", self.x(*p), self.y(*p)))
            .collect::<Vec<_>>()
            .join(" ")
    }
}

/// The smallest box holding `bounds` and everything drawn in `scene`.
fn extent(bounds: Aabb, scene: &Scene) -> Aabb {
    let mut pts = vec![bounds.min, bounds.max];
    pts.extend(scene.inflated.iter().flat_map(|p| p.vertices().iter().copied()));
    pts.extend(scene.paths.iter().flat_map(|(_, p)| p.iter().copied()));
    Aabb::from_points(&pts)
}

pub fn render(bounds: Aabb, scene: &Scene) -> String {
    let ext = extent(bounds, scene);
    let f = Frame { min: ext.min, max: ext.max };
    let (w, h) = (ext.width().max(1e-9), ext.height().max(1e-9));
    let unit = w.max(h) / 400.0;
    let px_w = 800.0;
    let px_h = px_w * h / w;

    let mut s = String::new();
    let _ = writeln!(s, r#"<?xml version="1.0" encoding="UTF-8"?>"#);
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{px_w:.0}" height="{px_h:.0}" viewBox="0 0 {w:.4} {h:.4}">"#
    );
    let _ = writeln!(
        s,
        r##"<rect x="{:.4}" y="{:.4}" width="{:.4}" height="{:.4}" fill="#ffffff" stroke="#000000" stroke-width="{:.4}"/>"##,
        f.x(Point::new(bounds.min.x, bounds.max.y)),
        f.y(Point::new(bounds.min.x, bounds.max.y)),
        bounds.width(),
        bounds.height(),
        unit
    );

    let _ = writeln!(s, r#"<g id="obstacles">"#);
    for p in &scene.inflated {
        let _ = writeln!(
            s,
            r##"<polygon points="{}" fill="#dddddd" stroke="#999999" stroke-width="{:.4}" stroke-dasharray="{:.4}"/>"##,
            f.points(p.vertices()),
            unit * 0.5,
            unit * 2.0
        );
    }
    for p in &scene.raw {
        let _ = writeln!(s, r##"<polygon points="{}" fill="#555555"/>"##, f.points(p.vertices()));
    }
    let _ = writeln!(s, "</g>");

    let _ = writeln!(s, r#"<g id="paths" fill="none">"#);
    for (k, (label, pts)) in scene.paths.iter().enumerate() {
        let _ = writeln!(
            s,
            r#"<polyline data-label="{}" points="{}" stroke="{}" stroke-width="{:.4}" stroke-linejoin="round"/>"#,
            escape(label),
            f.points(pts),
            PALETTE[k % PALETTE.len()],
            unit * 1.5
        );
    }
    let _ = writeln!(s, "</g>");

    let _ = writeln!(s, r#"<g id="markers" font-family="sans-serif" font-size="{:.4}">"#, unit * 8.0);
    let m = unit * 4.0;
    for (id, p) in &scene.starts {
        let _ = writeln!(
            s,
            r##"<rect x="{:.4}" y="{:.4}" width="{:.4}" height="{:.4}" fill="#000000"><title>robot {id}</title></rect>"##,
            f.x(*p) - m,
            f.y(*p) - m,
            2.0 * m,
            2.0 * m
        );
    }
    for (id, p) in &scene.tasks {
        let _ = writeln!(
            s,
            r##"<circle cx="{:.4}" cy="{:.4}" r="{:.4}" fill="#ffcc00" stroke="#000000" stroke-width="{:.4}"/>"##,
            f.x(*p),
            f.y(*p),
            m,
            unit * 0.5
        );
        let _ = writeln!(s, r#"<text x="{:.4}" y="{:.4}">{id}</text>"#, f.x(*p) + m, f.y(*p) - m);
    }
    let _ = writeln!(s, "</g>");
    s.push_str("</svg>\n");
    s
}

fn escape(t: &str) -> String {
    t.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}
