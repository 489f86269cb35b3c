//! Hand-rolled SVG output: the dual sphere polygon in the cotangent plane
//! and the primal unit sphere with selected facets highlighted. Coordinates
//! are normalized into a 1000×1000 viewbox.

use crate::curves::Slope;
use crate::geom::{facet_from_table, DualSphere, EnumerationControl, NormTable};
use crate::holonomy::TeichPoint;
use crate::num::Real;
use crate::Result;

const VIEW: f64 = 1000.0;
const MARGIN: f64 = 60.0;

struct Frame {
    min_x: f64,
    min_y: f64,
    scale: f64,
}

impl Frame {
    fn fit(points: &[(f64, f64)]) -> Frame {
        let mut min_x = f64::INFINITY;
        let mut max_x = f64::NEG_INFINITY;
        let mut min_y = f64::INFINITY;
        let mut max_y = f64::NEG_INFINITY;
        for &(x, y) in points {
            min_x = min_x.min(x);
            max_x = max_x.max(x);
            min_y = min_y.min(y);
            max_y = max_y.max(y);
        }
        let span = (max_x - min_x).max(max_y - min_y).max(1e-12);
        Frame { min_x, min_y, scale: (VIEW - 2.0 * MARGIN) / span }
    }

    fn map(&self, x: f64, y: f64) -> (f64, f64) {
        // SVG y grows downward
        (
            MARGIN + (x - self.min_x) * self.scale,
            VIEW - MARGIN - (y - self.min_y) * self.scale,
        )
    }
}

fn polygon_path(frame: &Frame, pts: &[(f64, f64)]) -> String {
    let mut d = String::new();
    for (i, &(x, y)) in pts.iter().enumerate() {
        let (px, py) = frame.map(x, y);
        d.push_str(if i == 0 { "M" } else { "L" });
        d.push_str(&format!("{px:.3},{py:.3} "));
    }
    d.push('Z');
    d
}

fn label_text(frame: &Frame, x: f64, y: f64, text: &str) -> String {
    let (px, py) = frame.map(x, y);
    format!(
        r##"<text x="{px:.1}" y="{py:.1}" font-size="18" font-family="monospace" fill="#333">{text}</text>"##
    )
}

/// SVG of the dual sphere polygon with labels on the shallow vertices.
pub fn svg_dual_sphere(sphere: &DualSphere) -> String {
    let pts: Vec<(f64, f64)> = sphere
        .vertices
        .iter()
        .map(|(_, g)| (g.l.to_f64(), g.t.to_f64()))
        .collect();
    let frame = Frame::fit(&pts);
    let mut out = String::new();
    out.push_str(&format!(
        r##"<svg xmlns="http://www.w3.org/2000/svg" viewBox="0 0 {VIEW} {VIEW}">"##
    ));
    out.push('\n');
    out.push_str(&format!(
        r##"<path d="{}" fill="none" stroke="#1f77b4" stroke-width="1.5"/>"##,
        polygon_path(&frame, &pts)
    ));
    out.push('\n');
    let (ox, oy) = frame.map(0.0, 0.0);
    out.push_str(&format!(r##"<circle cx="{ox:.1}" cy="{oy:.1}" r="4" fill="#d62728"/>"##));
    out.push('\n');
    for (slope, g) in &sphere.vertices {
        if slope.p().abs() + slope.q().abs() <= 3 {
            let (x, y) = (g.l.to_f64(), g.t.to_f64());
            let (px, py) = frame.map(x, y);
            out.push_str(&format!(r##"<circle cx="{px:.1}" cy="{py:.1}" r="3" fill="#1f77b4"/>"##));
            out.push('\n');
            out.push_str(&label_text(&frame, x, y, &slope.token()));
            out.push('\n');
        }
    }
    out.push_str("</svg>\n");
    out
}

/// SVG of the primal unit sphere (the polygon cut out by all support lines
/// at the table depth) with the facets of the given slopes highlighted.
pub fn svg_unit_sphere(
    x: &TeichPoint,
    table: &NormTable,
    highlight: &[Slope],
    ctrl: &EnumerationControl,
) -> Result<String> {
    // polygon vertices: crossings of consecutive support lines in angular order
    let n = table.sorted.len();
    let mut pts: Vec<(f64, f64)> = Vec::with_capacity(n);
    for k in 0..n {
        let a = &table.entries[table.sorted[k]].dlog;
        let b = &table.entries[table.sorted[(k + 1) % n]].dlog;
        let det = (&a.l * &b.t - &a.t * &b.l).to_f64();
        if det.abs() < 1e-30 {
            continue;
        }
        let vx = (&b.t - &a.t).to_f64() / det;
        let vy = (&a.l - &b.l).to_f64() / det;
        pts.push((vx, vy));
    }
    let frame = Frame::fit(&pts);
    let mut out = String::new();
    out.push_str(&format!(
        r##"<svg xmlns="http://www.w3.org/2000/svg" viewBox="0 0 {VIEW} {VIEW}">"##
    ));
    out.push('\n');
    out.push_str(&format!(
        r##"<path d="{}" fill="none" stroke="#555" stroke-width="1"/>"##,
        polygon_path(&frame, &pts)
    ));
    out.push('\n');
    let (ox, oy) = frame.map(0.0, 0.0);
    out.push_str(&format!(r##"<circle cx="{ox:.1}" cy="{oy:.1}" r="4" fill="#d62728"/>"##));
    out.push('\n');
    for slope in highlight {
        let f = facet_from_table(x, table, slope, ctrl)?;
        let (x1, y1) = frame.map(f.v_minus.l.to_f64(), f.v_minus.t.to_f64());
        let (x2, y2) = frame.map(f.v_plus.l.to_f64(), f.v_plus.t.to_f64());
        out.push_str(&format!(
            r##"<line x1="{x1:.2}" y1="{y1:.2}" x2="{x2:.2}" y2="{y2:.2}" stroke="#ff7f0e" stroke-width="4" stroke-linecap="round"/>"##
        ));
        out.push('\n');
        let half = Real::from_f64(f.length.bits(), 0.5);
        let mx = ((&f.v_minus.l + &f.v_plus.l) * &half).to_f64();
        let my = ((&f.v_minus.t + &f.v_plus.t) * &half).to_f64();
        out.push_str(&label_text(&frame, mx, my, &slope.token()));
        out.push('\n');
    }
    out.push_str("</svg>\n");
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geom::dual_sphere;
    use crate::holonomy::{modular_torus, PrecisionContext};

    #[test]
    fn svg_outputs_are_well_formed() {
        let x = modular_torus(&PrecisionContext::default()).unwrap();
        let ctrl = EnumerationControl::with_depth(6);
        let sphere = dual_sphere(&x, &ctrl).unwrap();
        let svg = svg_dual_sphere(&sphere);
        assert!(svg.starts_with("<svg"));
        assert!(svg.ends_with("</svg>\n"));
        assert!(svg.contains("1/0"));
        let table = NormTable::build(&x, 6);
        let svg2 = svg_unit_sphere(&x, &table, &[Slope::infinity()], &ctrl).unwrap();
        assert!(svg2.contains("line"));
        assert!(svg2.matches("<circle").count() >= 1);
    }
}
