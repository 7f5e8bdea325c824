use std::fs;
use std::io::{Read, Write};
use std::path::Path;
use std::sync::{Arc, OnceLock};

use serde::{Deserialize, Serialize};

use super::domain::{DomainMask, DIRS, NONE};
use super::shape::Shape;
use crate::error::{LabError, Result};
use crate::par::{self, Exec};

/// Grid function on the unknowns of a mask, zero on the boundary.
#[derive(Debug, Clone)]
pub struct ScalarField2D {
    pub mask: Arc<DomainMask>,
    pub values: Vec<f64>,
    derived: OnceLock<Derived>,
}

/// Test function for the second variation; same storage as a field.
pub type TestFunction2D = ScalarField2D;

/// Full-grid arrays: extended values (ghosts outside), gradient and Hessian.
#[derive(Debug, Clone)]
struct Derived {
    ext: Vec<f64>,
    gx: Vec<f64>,
    gy: Vec<f64>,
    hxx: Vec<f64>,
    hxy: Vec<f64>,
    hyy: Vec<f64>,
}

/// Value, gradient and Hessian `(u, ux, uy, uxx, uxy, uyy)` at a point.
pub type Jet = [f64; 6];

impl ScalarField2D {
    pub fn new(mask: Arc<DomainMask>, values: Vec<f64>) -> Result<Self> {
        if values.len() != mask.len() {
            return Err(LabError::Argument(format!(
                "field has {} values for a mask with {} unknowns",
                values.len(),
                mask.len()
            )));
        }
        if let Some(v) = values.iter().find(|v| !v.is_finite()) {
            return Err(LabError::Argument(format!("non-finite field value {v}")));
        }
        Ok(ScalarField2D { mask, values, derived: OnceLock::new() })
    }

    pub fn zeros(mask: Arc<DomainMask>) -> Self {
        let n = mask.len();
        ScalarField2D { mask, values: vec![0.0; n], derived: OnceLock::new() }
    }

    /// Samples `f` at the unknowns.
    pub fn from_fn(mask: Arc<DomainMask>, f: impl Fn(f64, f64) -> f64 + Sync) -> Self {
        let m = mask.clone();
        let values = par::map(Exec::default(), &m.nodes, |&(i, j)| {
            let (x, y) = m.node_xy(i, j);
            f(x, y)
        });
        ScalarField2D { mask, values, derived: OnceLock::new() }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn max(&self) -> f64 {
        self.values.iter().cloned().fold(0.0, f64::max)
    }

    pub fn argmax(&self) -> usize {
        (0..self.len()).fold(0, |b, k| if self.values[k] > self.values[b] { k } else { b })
    }

    pub fn same_mask(&self, other: &ScalarField2D) -> bool {
        Arc::ptr_eq(&self.mask, &other.mask) || self.mask.same_grid(&other.mask)
    }

    /// `∫ f(k) dx` with the dual cell weights of the mask.
    pub fn integrate(&self, f: impl Fn(usize) -> f64 + Sync) -> f64 {
        let w = self.mask.cell_weights();
        par::sum(Exec::default(), self.len(), |k| w[k] * f(k))
    }

    pub fn l1_norm(&self) -> f64 {
        self.integrate(|k| self.values[k].abs())
    }

    fn derived(&self) -> &Derived {
        self.derived.get_or_init(|| derive(&self.mask, &self.values))
    }

    /// Values on the whole grid; outside nodes carry linear extrapolations
    /// through the boundary crossing.
    pub fn extended(&self) -> &[f64] {
        &self.derived().ext
    }

    pub fn gradient(&self, k: usize) -> (f64, f64) {
        let (i, j) = self.mask.nodes[k];
        let g = self.mask.nx * j + i;
        let d = self.derived();
        (d.gx[g], d.gy[g])
    }

    /// `(uxx, uxy, uyy)` at an unknown.
    pub fn hessian(&self, k: usize) -> (f64, f64, f64) {
        let (i, j) = self.mask.nodes[k];
        let g = self.mask.nx * j + i;
        let d = self.derived();
        (d.hxx[g], d.hxy[g], d.hyy[g])
    }

    pub fn grad_norm(&self, k: usize) -> f64 {
        let (a, b) = self.gradient(k);
        a.hypot(b)
    }

    pub fn max_grad(&self) -> f64 {
        (0..self.len()).map(|k| self.grad_norm(k)).fold(0.0, f64::max)
    }

    /// Bilinear interpolation of value, gradient and Hessian. `None` outside
    /// the grid.
    pub fn jet(&self, x: f64, y: f64) -> Option<Jet> {
        let m = &*self.mask;
        let fx = (x - m.x0) / m.h;
        let fy = (y - m.y0) / m.h;
        if !(fx >= 0.0 && fy >= 0.0) {
            return None;
        }
        let i = (fx.floor() as usize).min(m.nx - 2);
        let j = (fy.floor() as usize).min(m.ny - 2);
        let (a, b) = (fx - i as f64, fy - j as f64);
        if a > 1.0 + 1e-9 || b > 1.0 + 1e-9 {
            return None;
        }
        let d = self.derived();
        let w = [(1.0 - a) * (1.0 - b), a * (1.0 - b), (1.0 - a) * b, a * b];
        let g = [j * m.nx + i, j * m.nx + i + 1, (j + 1) * m.nx + i, (j + 1) * m.nx + i + 1];
        let mix = |arr: &[f64]| (0..4).map(|q| w[q] * arr[g[q]]).sum::<f64>();
        Some([mix(&d.ext), mix(&d.gx), mix(&d.gy), mix(&d.hxx), mix(&d.hxy), mix(&d.hyy)])
    }

    /// Bilinear value at a point, 0 outside the grid.
    pub fn value_at(&self, x: f64, y: f64) -> f64 {
        self.jet(x, y).map_or(0.0, |j| j[0])
    }

    /// Writes `<stem>.bin` (little-endian f64 over the full grid, zero
    /// outside) and `<stem>.json`.
    pub fn save(&self, stem: &Path, lambda: f64, g_id: &str) -> Result<()> {
        let m = &*self.mask;
        let header = FieldHeader { nx: m.nx, ny: m.ny, h: m.h, shape: m.shape.clone(), lambda, g_id: g_id.to_string() };
        let mut grid = vec![0.0; m.nx * m.ny];
        for (k, &(i, j)) in m.nodes.iter().enumerate() {
            grid[j * m.nx + i] = self.values[k];
        }
        let mut buf = Vec::with_capacity(grid.len() * 8);
        for v in grid {
            buf.extend_from_slice(&v.to_le_bytes());
        }
        fs::File::create(stem.with_extension("bin"))?.write_all(&buf)?;
        fs::write(stem.with_extension("json"), serde_json::to_string_pretty(&header)?)?;
        Ok(())
    }

    pub fn load(stem: &Path) -> Result<(Self, FieldHeader)> {
        let header: FieldHeader = serde_json::from_str(&fs::read_to_string(stem.with_extension("json"))?)?;
        let mask = DomainMask::new(header.shape.clone(), header.h)?;
        if (mask.nx, mask.ny) != (header.nx, header.ny) {
            return Err(LabError::CorruptCache {
                path: stem.display().to_string(),
                message: format!("grid {}x{} does not match the rebuilt mask", header.nx, header.ny),
            });
        }
        let mut buf = Vec::new();
        fs::File::open(stem.with_extension("bin"))?.read_to_end(&mut buf)?;
        if buf.len() != 8 * mask.nx * mask.ny {
            return Err(LabError::CorruptCache {
                path: stem.display().to_string(),
                message: format!("expected {} bytes, found {}", 8 * mask.nx * mask.ny, buf.len()),
            });
        }
        let at = |g: usize| f64::from_le_bytes(buf[8 * g..8 * g + 8].try_into().unwrap());
        let values = mask.nodes.iter().map(|&(i, j)| at(j * mask.nx + i)).collect();
        Ok((ScalarField2D::new(Arc::new(mask), values)?, header))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FieldHeader {
    pub nx: usize,
    pub ny: usize,
    pub h: f64,
    pub shape: Shape,
    pub lambda: f64,
    pub g_id: String,
}

fn derive(m: &DomainMask, u: &[f64]) -> Derived {
    let (nx, ny, h) = (m.nx, m.ny, m.h);
    let umax = u.iter().cloned().fold(0.0, f64::max);
    let mut ext = vec![f64::NAN; nx * ny];
    for (k, &(i, j)) in m.nodes.iter().enumerate() {
        ext[j * nx + i] = u[k];
    }
    // ghosts: linear extrapolation through the boundary crossing
    let mut acc = vec![(0.0, 0usize); nx * ny];
    for (k, &(i, j)) in m.nodes.iter().enumerate() {
        for d in 0..4 {
            if m.nbr[k][d] == NONE {
                let (ii, jj) = (i as i64 + DIRS[d].0, j as i64 + DIRS[d].1);
                if ii >= 0 && jj >= 0 && (ii as usize) < nx && (jj as usize) < ny {
                    let t = m.theta[k][d];
                    let a = &mut acc[jj as usize * nx + ii as usize];
                    a.0 += -u[k] * (1.0 - t) / t;
                    a.1 += 1;
                }
            }
        }
    }
    let far = -umax.max(1e-300);
    for g in 0..nx * ny {
        if ext[g].is_nan() {
            ext[g] = if acc[g].1 > 0 { acc[g].0 / acc[g].1 as f64 } else { far };
        }
    }
    let inside = |i: i64, j: i64| m.at(i, j).is_some();
    let e = |i: i64, j: i64| ext[j as usize * nx + i as usize];
    let mut gx = vec![0.0; nx * ny];
    let mut gy = vec![0.0; nx * ny];
    let mut hxx = vec![0.0; nx * ny];
    let mut hxy = vec![0.0; nx * ny];
    let mut hyy = vec![0.0; nx * ny];
    let ih = 1.0 / h;
    let ih2 = ih * ih;
    let first: Vec<(f64, f64)> = par::map(Exec::default(), &m.nodes, |&(i, j)| {
        let (i, j) = (i as i64, j as i64);
        ((e(i + 1, j) - e(i - 1, j)) * 0.5 * ih, (e(i, j + 1) - e(i, j - 1)) * 0.5 * ih)
    });
    for (k, &(i, j)) in m.nodes.iter().enumerate() {
        gx[j * nx + i] = first[k].0;
        gy[j * nx + i] = first[k].1;
    }
    let second: Vec<(f64, f64, f64)> = par::map(Exec::default(), &m.nodes, |&(i, j)| {
        let (i, j) = (i as i64, j as i64);
        let axis = |di: i64, dj: i64| {
            let (p, q) = (inside(i + di, j + dj), inside(i - di, j - dj));
            if p && q {
                (e(i + di, j + dj) - 2.0 * e(i, j) + e(i - di, j - dj)) * ih2
            } else if q && inside(i - 2 * di, j - 2 * dj) {
                (e(i, j) - 2.0 * e(i - di, j - dj) + e(i - 2 * di, j - 2 * dj)) * ih2
            } else if p && inside(i + 2 * di, j + 2 * dj) {
                (e(i + 2 * di, j + 2 * dj) - 2.0 * e(i + di, j + dj) + e(i, j)) * ih2
            } else {
                (e(i + di, j + dj) - 2.0 * e(i, j) + e(i - di, j - dj)) * ih2
            }
        };
        let diag_inside = [(1, 1), (1, -1), (-1, 1), (-1, -1)].iter().all(|&(a, b)| inside(i + a, j + b));
        let xy = if diag_inside {
            (e(i + 1, j + 1) - e(i + 1, j - 1) - e(i - 1, j + 1) + e(i - 1, j - 1)) * 0.25 * ih2
        } else {
            // average of the quadrant stencils whose nodes are all inside
            let mut acc = 0.0;
            let mut cnt = 0.0;
            for (a, b) in [(1, 1), (1, -1), (-1, 1), (-1, -1)] {
                if inside(i + a, j) && inside(i, j + b) && inside(i + a, j + b) {
                    acc += (a * b) as f64 * (e(i + a, j + b) - e(i + a, j) - e(i, j + b) + e(i, j)) * ih2;
                    cnt += 1.0;
                }
            }
            if cnt > 0.0 {
                acc / cnt
            } else {
                (e(i + 1, j + 1) - e(i + 1, j - 1) - e(i - 1, j + 1) + e(i - 1, j - 1)) * 0.25 * ih2
            }
        };
        (axis(1, 0), xy, axis(0, 1))
    });
    for (k, &(i, j)) in m.nodes.iter().enumerate() {
        let g = j * nx + i;
        hxx[g] = second[k].0;
        hxy[g] = second[k].1;
        hyy[g] = second[k].2;
    }
    // outside nodes next to the domain copy the mean of their inside
    // neighbors so bilinear interpolation in boundary cells stays smooth
    for j in 0..ny as i64 {
        for i in 0..nx as i64 {
            if inside(i, j) {
                continue;
            }
            let mut cnt = 0.0;
            let mut s = [0.0; 5];
            for a in -1..=1 {
                for b in -1..=1 {
                    if inside(i + a, j + b) {
                        let g = (j + b) as usize * nx + (i + a) as usize;
                        s[0] += gx[g];
                        s[1] += gy[g];
                        s[2] += hxx[g];
                        s[3] += hxy[g];
                        s[4] += hyy[g];
                        cnt += 1.0;
                    }
                }
            }
            if cnt > 0.0 {
                let g = j as usize * nx + i as usize;
                gx[g] = s[0] / cnt;
                gy[g] = s[1] / cnt;
                hxx[g] = s[2] / cnt;
                hxy[g] = s[3] / cnt;
                hyy[g] = s[4] / cnt;
            }
        }
    }
    Derived { ext, gx, gy, hxx, hxy, hyy }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn disk(h: f64) -> Arc<DomainMask> {
        Arc::new(DomainMask::new(Shape::unit_disk(), h).unwrap())
    }

    #[test]
    fn linear_field_derivatives_are_exact() {
        let m = disk(1.0 / 32.0);
        let u = ScalarField2D::from_fn(m.clone(), |x, y| 2.0 + 0.3 * x - 1.7 * y);
        for k in 0..u.len() {
            let near_edge = m.is_boundary_adjacent(k) || m.nbr[k].iter().any(|&q| m.is_boundary_adjacent(q as usize));
            if near_edge {
                continue;
            }
            let (gx, gy) = u.gradient(k);
            assert!((gx - 0.3).abs() < 1e-12 && (gy + 1.7).abs() < 1e-12);
            let (a, b, c) = u.hessian(k);
            assert!(a.abs() < 1e-9 && b.abs() < 1e-9 && c.abs() < 1e-9);
        }
    }

    #[test]
    fn quadratic_hessian_and_ghosts() {
        let m = disk(1.0 / 64.0);
        let u = ScalarField2D::from_fn(m.clone(), |x, y| 1.0 - x * x - y * y);
        for k in 0..u.len() {
            let (a, b, c) = u.hessian(k);
            assert!((a + 2.0).abs() < 1e-8 && b.abs() < 1e-8 && (c + 2.0).abs() < 1e-8, "{a} {b} {c}");
        }
        // ghosts sit close to the exact extension 1 - r² outside
        let ext = u.extended();
        for j in 0..m.ny {
            for i in 0..m.nx {
                let (x, y) = m.node_xy(i, j);
                let r = x.hypot(y);
                let (ii, jj) = (i as i64, j as i64);
                let touches = [(1, 0), (-1, 0), (0, 1), (0, -1)].iter().any(|&(a, b)| m.at(ii + a, jj + b).is_some());
                if r > 1.0 && touches {
                    let d = (ext[j * m.nx + i] - (1.0 - r * r)).abs();
                    assert!(d < 3.0 * m.h * m.h, "{d:e} at r={r}");
                }
            }
        }
        assert!((u.l1_norm() - std::f64::consts::FRAC_PI_2).abs() < 1e-3);
        let j = u.jet(0.3, -0.2).unwrap();
        assert!((j[0] - (1.0 - 0.13)).abs() < 1e-3);
        assert!((j[1] + 0.6).abs() < 1e-9 && (j[2] - 0.4).abs() < 1e-9);
    }

    #[test]
    fn save_and_load_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let m = Arc::new(DomainMask::new(Shape::Ellipse { cx: 0.0, cy: 0.0, a: 1.0, b: 0.5 }, 1.0 / 16.0).unwrap());
        let u = ScalarField2D::from_fn(m, |x, y| (x * 3.0).sin() + y);
        let stem = dir.path().join("u");
        u.save(&stem, 1.25, "exp").unwrap();
        let (v, head) = ScalarField2D::load(&stem).unwrap();
        assert_eq!(v.values, u.values);
        assert_eq!(head.lambda, 1.25);
        assert_eq!(head.g_id, "exp");
        fs::write(stem.with_extension("bin"), [0u8; 16]).unwrap();
        assert!(matches!(ScalarField2D::load(&stem), Err(LabError::CorruptCache { .. })));
    }
}
