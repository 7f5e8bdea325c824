use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};

/// Planar domains. Polygons are convex with counter-clockwise vertices.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "shape", rename_all = "lowercase")]
pub enum Shape {
    Disk {
        cx: f64,
        cy: f64,
        r: f64,
    },
    /// `[x0, x0 + side] × [y0, y0 + side]`
    Square {
        x0: f64,
        y0: f64,
        side: f64,
    },
    /// Axis-aligned ellipse with semi-axes `a` (x) and `b` (y).
    Ellipse {
        cx: f64,
        cy: f64,
        a: f64,
        b: f64,
    },
    Polygon {
        vertices: Vec<[f64; 2]>,
    },
}

impl Shape {
    pub fn unit_disk() -> Self {
        Shape::Disk { cx: 0.0, cy: 0.0, r: 1.0 }
    }

    pub fn unit_square() -> Self {
        Shape::Square { x0: 0.0, y0: 0.0, side: 1.0 }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Shape::Disk { .. } => "disk",
            Shape::Square { .. } => "square",
            Shape::Ellipse { .. } => "ellipse",
            Shape::Polygon { .. } => "polygon",
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(LabError::Argument(format!("{}: {m}", self.name())));
        match self {
            Shape::Disk { r, .. } if !(*r > 0.0) => bad("radius must be positive"),
            Shape::Square { side, .. } if !(*side > 0.0) => bad("side must be positive"),
            Shape::Ellipse { a, b, .. } if !(*a > 0.0 && *b > 0.0) => bad("semi-axes must be positive"),
            Shape::Polygon { vertices } => {
                if vertices.len() < 3 {
                    return bad("need at least three vertices");
                }
                if polygon_area(vertices) <= 0.0 {
                    return bad("vertices must be counter-clockwise");
                }
                Ok(())
            }
            _ => Ok(()),
        }
    }

    /// Implicit function: negative inside, zero on the boundary.
    pub fn level(&self, x: f64, y: f64) -> f64 {
        match self {
            Shape::Disk { cx, cy, r } => ((x - cx).powi(2) + (y - cy).powi(2)).sqrt() - r,
            Shape::Square { x0, y0, side } => {
                let h = 0.5 * side;
                (x - x0 - h).abs().max((y - y0 - h).abs()) - h
            }
            Shape::Ellipse { cx, cy, a, b } => ((x - cx) / a).powi(2) + ((y - cy) / b).powi(2) - 1.0,
            Shape::Polygon { vertices } => {
                polygon_edges(vertices).map(|(p, q)| edge_signed_distance(p, q, x, y)).fold(f64::NEG_INFINITY, f64::max)
            }
        }
    }

    /// Distance from an interior point to the boundary.
    pub fn boundary_distance(&self, x: f64, y: f64) -> f64 {
        match self {
            Shape::Disk { .. } | Shape::Square { .. } | Shape::Polygon { .. } => (-self.level(x, y)).max(0.0),
            Shape::Ellipse { cx, cy, a, b } => ellipse_distance(x - cx, y - cy, *a, *b),
        }
    }

    pub fn area(&self) -> f64 {
        match self {
            Shape::Disk { r, .. } => PI * r * r,
            Shape::Square { side, .. } => side * side,
            Shape::Ellipse { a, b, .. } => PI * a * b,
            Shape::Polygon { vertices } => polygon_area(vertices),
        }
    }

    pub fn perimeter(&self) -> f64 {
        match self {
            Shape::Disk { r, .. } => 2.0 * PI * r,
            Shape::Square { side, .. } => 4.0 * side,
            Shape::Ellipse { a, b, .. } => {
                // Ramanujan's second approximation
                let h = ((a - b) / (a + b)).powi(2);
                PI * (a + b) * (1.0 + 3.0 * h / (10.0 + (4.0 - 3.0 * h).sqrt()))
            }
            Shape::Polygon { vertices } => {
                polygon_edges(vertices).map(|(p, q)| ((q[0] - p[0]).powi(2) + (q[1] - p[1]).powi(2)).sqrt()).sum()
            }
        }
    }

    pub fn is_convex(&self) -> bool {
        match self {
            Shape::Polygon { vertices } => {
                let k = vertices.len();
                (0..k).all(|i| {
                    let (a, b, c) = (vertices[i], vertices[(i + 1) % k], vertices[(i + 2) % k]);
                    (b[0] - a[0]) * (c[1] - b[1]) - (b[1] - a[1]) * (c[0] - b[0]) >= 0.0
                })
            }
            _ => true,
        }
    }

    /// `(xmin, ymin, xmax, ymax)`
    pub fn bbox(&self) -> (f64, f64, f64, f64) {
        match self {
            Shape::Disk { cx, cy, r } => (cx - r, cy - r, cx + r, cy + r),
            Shape::Square { x0, y0, side } => (*x0, *y0, x0 + side, y0 + side),
            Shape::Ellipse { cx, cy, a, b } => (cx - a, cy - b, cx + a, cy + b),
            Shape::Polygon { vertices } => vertices
                .iter()
                .fold((f64::INFINITY, f64::INFINITY, f64::NEG_INFINITY, f64::NEG_INFINITY), |(a, b, c, d), v| {
                    (a.min(v[0]), b.min(v[1]), c.max(v[0]), d.max(v[1]))
                }),
        }
    }

    /// Distance along the segment from an inside point `(x, y)` to the first
    /// boundary crossing towards `(x + dx, y + dy)`, as a fraction of the
    /// segment, by bisection on the sign of [`Shape::level`].
    pub fn crossing_fraction(&self, x: f64, y: f64, dx: f64, dy: f64) -> f64 {
        let (mut lo, mut hi) = (0.0, 1.0);
        for _ in 0..64 {
            let mid = 0.5 * (lo + hi);
            if self.level(x + mid * dx, y + mid * dy) < 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    }
}

fn polygon_edges(v: &[[f64; 2]]) -> impl Iterator<Item = ([f64; 2], [f64; 2])> + '_ {
    (0..v.len()).map(move |i| (v[i], v[(i + 1) % v.len()]))
}

fn polygon_area(v: &[[f64; 2]]) -> f64 {
    0.5 * polygon_edges(v).map(|(p, q)| p[0] * q[1] - q[0] * p[1]).sum::<f64>()
}

/// Signed distance to the line through a CCW edge, positive on the outer side.
fn edge_signed_distance(p: [f64; 2], q: [f64; 2], x: f64, y: f64) -> f64 {
    let (ex, ey) = (q[0] - p[0], q[1] - p[1]);
    let len = (ex * ex + ey * ey).sqrt();
    ((x - p[0]) * ey - (y - p[1]) * ex) / len
}

/// Distance from `(x, y)` to the ellipse `x²/a² + y²/b² = 1`: coarse scan of
/// the boundary parameter followed by golden-section refinement.
fn ellipse_distance(x: f64, y: f64, a: f64, b: f64) -> f64 {
    let d2 = |t: f64| (a * t.cos() - x).powi(2) + (b * t.sin() - y).powi(2);
    let k = 256;
    let step = 2.0 * PI / k as f64;
    let mut best = 0;
    for i in 1..k {
        if d2(i as f64 * step) < d2(best as f64 * step) {
            best = i;
        }
    }
    let (mut lo, mut hi) = ((best as f64 - 1.0) * step, (best as f64 + 1.0) * step);
    let phi = 0.5 * (5f64.sqrt() - 1.0);
    for _ in 0..80 {
        let m1 = hi - phi * (hi - lo);
        let m2 = lo + phi * (hi - lo);
        if d2(m1) < d2(m2) {
            hi = m2;
        } else {
            lo = m1;
        }
    }
    d2(0.5 * (lo + hi)).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn levels_and_distances() {
        let d = Shape::unit_disk();
        assert!(d.level(0.0, 0.0) < 0.0 && d.level(1.0, 1.0) > 0.0);
        assert!((d.boundary_distance(0.5, 0.0) - 0.5).abs() < 1e-15);
        let s = Shape::unit_square();
        assert!((s.boundary_distance(0.25, 0.5) - 0.25).abs() < 1e-15);
        let e = Shape::Ellipse { cx: 0.0, cy: 0.0, a: 2.0, b: 1.0 };
        assert!((e.boundary_distance(0.0, 0.0) - 1.0).abs() < 1e-12);
        assert!((e.boundary_distance(1.5, 0.0) - 0.5).abs() < 1e-12);
        let tri = Shape::Polygon { vertices: vec![[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]] };
        assert!(tri.validate().is_ok() && tri.is_convex());
        assert!((tri.area() - 0.5).abs() < 1e-15);
        assert!((tri.boundary_distance(0.25, 0.25) - 0.25).abs() < 1e-15);
        let cw = Shape::Polygon { vertices: vec![[0.0, 0.0], [0.0, 1.0], [1.0, 0.0]] };
        assert!(cw.validate().is_err());
    }

    #[test]
    fn crossing_on_the_disk() {
        let d = Shape::unit_disk();
        let t = d.crossing_fraction(0.9, 0.0, 0.2, 0.0);
        assert!((t - 0.5).abs() < 1e-12);
    }
}
