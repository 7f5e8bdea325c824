use std::collections::HashMap;

use serde::Serialize;

use crate::error::{LabError, Result};
use crate::planar::ScalarField2D;

/// One closed polyline of a level set, oriented with `{u > s}` on the left.
#[derive(Debug, Clone, Serialize)]
pub struct Component {
    /// Vertices; the first vertex is repeated at the end.
    pub points: Vec<[f64; 2]>,
    /// |∇u| per vertex.
    pub grad: Vec<f64>,
    /// Signed curvature per vertex, positive where `{u > s}` is convex.
    pub curvature: Vec<f64>,
    /// ∂_T |∇u|^{1/2} per vertex.
    pub tangential: Vec<f64>,
    pub closed: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct LevelCurve {
    pub s: f64,
    /// Sorted by descending length.
    pub components: Vec<Component>,
}

impl Component {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    fn segment(&self, i: usize) -> f64 {
        let (a, b) = (self.points[i], self.points[i + 1]);
        (b[0] - a[0]).hypot(b[1] - a[1])
    }

    /// Trapezoid rule for `∫ f dℓ` with per-vertex values.
    pub fn line_integral(&self, f: impl Fn(usize) -> f64) -> f64 {
        (0..self.len().saturating_sub(1)).map(|i| 0.5 * (f(i) + f(i + 1)) * self.segment(i)).sum()
    }

    pub fn length(&self) -> f64 {
        self.line_integral(|_| 1.0)
    }

    /// `∫ κ dℓ`, 2π for a convex closed curve.
    pub fn turning(&self) -> f64 {
        self.line_integral(|i| self.curvature[i])
    }

    pub fn abs_turning(&self) -> f64 {
        self.line_integral(|i| self.curvature[i].abs())
    }
}

/// Vertex jet evaluation: `(|∇u|, κ, ∂_T|∇u|^{1/2})` from the gradient and
/// Hessian `(ux, uy, uxx, uxy, uyy)`.
pub fn vertex_quantities(ux: f64, uy: f64, uxx: f64, uxy: f64, uyy: f64) -> (f64, f64, f64) {
    let g = ux.hypot(uy);
    if g == 0.0 {
        return (0.0, f64::NAN, f64::NAN);
    }
    let kappa = -(uy * uy * uxx - 2.0 * ux * uy * uxy + ux * ux * uyy) / g.powi(3);
    let (nx, ny) = (ux / g, uy / g);
    let (tx, ty) = (-ny, nx);
    let dt_grad = tx * (uxx * nx + uxy * ny) + ty * (uxy * nx + uyy * ny);
    (g, kappa, 0.5 * dt_grad / g.sqrt())
}

/// Marching squares on the extended grid of `u`. Saddle cells join the two
/// corners above `s` when the mean of the four corners exceeds `s`.
pub fn extract_level(u: &ScalarField2D, s: f64) -> Result<LevelCurve> {
    let top = u.max();
    if !(s > 0.0 && s < top) {
        return Err(LabError::Range { value: s, range: format!("(0, {top})") });
    }
    let m = &*u.mask;
    let (nx, ny) = (m.nx, m.ny);
    let v = u.extended();
    // edge ids: 2·node for the edge to the right, 2·node+1 for the edge up
    let corner = |i: usize, j: usize, c: usize| match c {
        0 => (i, j),
        1 => (i + 1, j),
        2 => (i + 1, j + 1),
        _ => (i, j + 1),
    };
    let edge_id = |i: usize, j: usize, e: usize| match e {
        0 => 2 * (j * nx + i),
        1 => 2 * (j * nx + i + 1) + 1,
        2 => 2 * ((j + 1) * nx + i),
        _ => 2 * (j * nx + i) + 1,
    };
    let mut points: HashMap<usize, [f64; 2]> = HashMap::new();
    let mut next: HashMap<usize, usize> = HashMap::new();
    for j in 0..ny - 1 {
        for i in 0..nx - 1 {
            let vals: [f64; 4] = std::array::from_fn(|c| {
                let (a, b) = corner(i, j, c);
                v[b * nx + a]
            });
            let above: [bool; 4] = std::array::from_fn(|c| vals[c] > s);
            let count = above.iter().filter(|&&a| a).count();
            if count == 0 || count == 4 {
                continue;
            }
            let mut exits = Vec::with_capacity(2);
            let mut entries = Vec::with_capacity(2);
            for e in 0..4 {
                let (a, b) = (e, (e + 1) % 4);
                if above[a] == above[b] {
                    continue;
                }
                let id = edge_id(i, j, e);
                points.entry(id).or_insert_with(|| {
                    let (pa, pb) = (corner(i, j, a), corner(i, j, b));
                    let t = (s - vals[a]) / (vals[b] - vals[a]);
                    let (xa, ya) = m.node_xy(pa.0, pa.1);
                    let (xb, yb) = m.node_xy(pb.0, pb.1);
                    [xa + t * (xb - xa), ya + t * (yb - ya)]
                });
                if above[a] {
                    exits.push(e);
                } else {
                    entries.push(e);
                }
            }
            if exits.len() == 1 {
                next.insert(edge_id(i, j, exits[0]), edge_id(i, j, entries[0]));
            } else {
                let center_above = vals.iter().sum::<f64>() * 0.25 > s;
                for &e in &exits {
                    let partner = if center_above { (e + 1) % 4 } else { (e + 3) % 4 };
                    next.insert(edge_id(i, j, e), edge_id(i, j, partner));
                }
            }
        }
    }
    let mut starts: Vec<usize> = next.keys().cloned().collect();
    starts.sort_unstable();
    let mut used: HashMap<usize, bool> = HashMap::new();
    let mut polylines: Vec<(Vec<[f64; 2]>, bool)> = Vec::new();
    for &start in &starts {
        if used.contains_key(&start) {
            continue;
        }
        let mut pts = vec![points[&start]];
        used.insert(start, true);
        let mut cur = start;
        let mut closed = false;
        while let Some(&nxt) = next.get(&cur) {
            if nxt == start {
                closed = true;
                pts.push(points[&start]);
                break;
            }
            if used.contains_key(&nxt) {
                break;
            }
            used.insert(nxt, true);
            let p = points[&nxt];
            let last = *pts.last().unwrap();
            if (p[0] - last[0]).hypot(p[1] - last[1]) > 1e-14 {
                pts.push(p);
            }
            cur = nxt;
        }
        if pts.len() >= 3 {
            polylines.push((pts, closed));
        }
    }
    let mut components: Vec<Component> = polylines
        .into_iter()
        .map(|(pts, closed)| {
            let mut grad = Vec::with_capacity(pts.len());
            let mut curvature = Vec::with_capacity(pts.len());
            let mut tangential = Vec::with_capacity(pts.len());
            for p in &pts {
                let jet = u.jet(p[0], p[1]).unwrap_or([0.0; 6]);
                let (g, k, t) = vertex_quantities(jet[1], jet[2], jet[3], jet[4], jet[5]);
                grad.push(g);
                curvature.push(k);
                tangential.push(t);
            }
            Component { points: pts, grad, curvature, tangential, closed }
        })
        .collect();
    components.sort_by(|a, b| b.length().total_cmp(&a.length()));
    Ok(LevelCurve { s, components })
}

impl LevelCurve {
    pub fn length(&self) -> f64 {
        self.components.iter().map(|c| c.length()).sum()
    }

    pub fn min_grad(&self) -> f64 {
        self.components.iter().flat_map(|c| c.grad.iter().cloned()).fold(f64::INFINITY, f64::min)
    }

    /// `∫ f dℓ` summed over components, `f(component, vertex)`.
    pub fn line_integral(&self, f: impl Fn(&Component, usize) -> f64) -> f64 {
        self.components.iter().map(|c| c.line_integral(|i| f(c, i))).sum()
    }

    /// Polylines as `[[x, y], …]` lists.
    pub fn to_json(&self) -> serde_json::Value {
        serde_json::json!({
            "s": self.s,
            "components": self.components.iter().map(|c| &c.points).collect::<Vec<_>>(),
        })
    }
}
