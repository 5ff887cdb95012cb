//! Static SVG pictures of tilings and frozen boundaries.
//!
//! Both use the sheared frame `(x, n) -> (x + n/2, n * sqrt(3)/2)`, where
//! lozenges are rhombi of unit side and the polygon's slanted sides sit at
//! 60 and 120 degrees.

use std::fmt::Write;

use lozenge_core::limit_shape::frozen_boundary_curve;
use lozenge_core::oracle::{array_to_lozenges, ParticleArray};
use lozenge_core::{LimitPolygon, LozengeType, PolygonSpec};

const ROW: f64 = 0.866_025_403_784_438_6;

/// Frozen-boundary stroke width in units of the strip height.
pub const CURVE_WIDTH: f64 = 0.01;

fn plane(u: f64, level: f64) -> (f64, f64) {
    // SVG y grows downwards
    (u, -level * ROW)
}

fn sheared(x: f64, n: f64) -> (f64, f64) {
    plane(x + n / 2.0, n)
}

/// Corners of the lozenge whose white triangle is `(x, n)`, as `(u, level)`.
/// The white triangle points down with its top edge centred at `u = x + n/2`.
pub fn lozenge_corners(x: i64, n: i64, theta: LozengeType) -> [(f64, f64); 4] {
    let c = x as f64 + n as f64 / 2.0;
    let (top, bottom) = (n as f64, n as f64 - 1.0);
    match theta {
        LozengeType::V => [(c, bottom), (c + 0.5, top), (c, top + 1.0), (c - 0.5, top)],
        LozengeType::S => [(c - 1.0, bottom), (c, bottom), (c + 0.5, top), (c - 0.5, top)],
        LozengeType::L => [(c - 0.5, top), (c, bottom), (c + 1.0, bottom), (c + 0.5, top)],
    }
}

fn class(theta: LozengeType) -> &'static str {
    match theta {
        LozengeType::V => "V",
        LozengeType::S => "S",
        LozengeType::L => "L",
    }
}

struct Bounds {
    lo: (f64, f64),
    hi: (f64, f64),
}

impl Bounds {
    fn new() -> Self {
        Bounds { lo: (f64::INFINITY, f64::INFINITY), hi: (f64::NEG_INFINITY, f64::NEG_INFINITY) }
    }

    fn add(&mut self, p: (f64, f64)) {
        self.lo = (self.lo.0.min(p.0), self.lo.1.min(p.1));
        self.hi = (self.hi.0.max(p.0), self.hi.1.max(p.1));
    }

    fn view_box(&self, pad: f64) -> String {
        format!(
            "{:.4} {:.4} {:.4} {:.4}",
            self.lo.0 - pad,
            self.lo.1 - pad,
            self.hi.0 - self.lo.0 + 2.0 * pad,
            self.hi.1 - self.lo.1 + 2.0 * pad
        )
    }
}

fn points_attr(pts: &[(f64, f64)]) -> String {
    pts.iter().map(|(x, y)| format!("{x:.4},{y:.4}")).collect::<Vec<_>>().join(" ")
}

fn document(view_box: &str, style: &str, body: &str) -> String {
    format!(
        "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n\
         <svg xmlns=\"http://www.w3.org/2000/svg\" viewBox=\"{view_box}\">\n\
         <style>{style}</style>\n{body}</svg>\n"
    )
}

/// One polygon per lozenge, classed `V`, `S` or `L`. With `overlay`, the
/// frozen boundary of the limit polygon is drawn at the tiling's scale.
pub fn render_tiling(spec: &PolygonSpec, arr: &ParticleArray, overlay: Option<(&LimitPolygon, usize)>) -> String {
    let mut bounds = Bounds::new();
    let mut body = String::new();
    for ((x, n), theta) in array_to_lozenges(spec, arr) {
        let pts: Vec<(f64, f64)> = lozenge_corners(x, n, theta).iter().map(|&(u, l)| plane(u, l)).collect();
        pts.iter().for_each(|&p| bounds.add(p));
        let _ = writeln!(body, "<polygon class=\"{}\" points=\"{}\"/>", class(theta), points_attr(&pts));
    }
    if let Some((lp, samples)) = overlay {
        let scale = spec.n as f64;
        let pts: Vec<(f64, f64)> =
            frozen_boundary_curve(lp, samples).iter().map(|p| sheared(p.chi * scale, p.eta * scale)).collect();
        let _ = writeln!(body, "<polyline class=\"fb\" points=\"{}\"/>", points_attr(&pts));
    }
    let style = ".V{fill:#e4b363}.S{fill:#5b8e7d}.L{fill:#b0c4de}polygon{stroke:#222;stroke-width:0.04}\
                 .fb{fill:none;stroke:#c0392b;stroke-width:0.15}";
    document(&bounds.view_box(0.5), style, &body)
}

/// The limit polygon outline and a polyline through `samples` frozen-boundary
/// points ordered by the real parameter.
pub fn render_frozen_boundary(lp: &LimitPolygon, samples: usize) -> String {
    let mut bounds = Bounds::new();
    let outline: Vec<(f64, f64)> = lp.outline().iter().map(|&(c, e)| sheared(c, e)).collect();
    outline.iter().for_each(|&p| bounds.add(p));
    let mut body = format!("<polygon class=\"outline\" points=\"{}\"/>\n", points_attr(&outline));
    if samples > 0 {
        let curve: Vec<(f64, f64)> = frozen_boundary_curve(lp, samples).iter().map(|p| sheared(p.chi, p.eta)).collect();
        let _ = writeln!(body, "<polyline class=\"fb\" points=\"{}\"/>", points_attr(&curve));
    }
    let style = format!(
        ".outline{{fill:#f4f1ea;stroke:#222;stroke-width:0.01}}.fb{{fill:none;stroke:#c0392b;stroke-width:{CURVE_WIDTH}}}"
    );
    document(&bounds.view_box(0.05), &style, &body)
}
