use serde::{Deserialize, Serialize};

use super::shape::Shape;
use crate::error::{LabError, Result};
use crate::par::{self, Exec};

pub const NONE: u32 = u32::MAX;

/// Smallest boundary fraction kept in the boundary rows of the operator.
pub const THETA_MIN: f64 = 1e-4;

/// Directions in neighbor arrays: east, west, north, south.
pub const DIRS: [(i64, i64); 4] = [(1, 0), (-1, 0), (0, 1), (0, -1)];

/// Grid nodes of a bounding box, the nodes strictly inside the domain
/// (the unknowns), and the boundary geometry the operator needs.
#[derive(Debug, Clone)]
pub struct DomainMask {
    pub shape: Shape,
    pub h: f64,
    pub x0: f64,
    pub y0: f64,
    pub nx: usize,
    pub ny: usize,
    /// Unknown index per grid node (`NONE` outside).
    pub index: Vec<u32>,
    /// Grid coordinates of every unknown.
    pub nodes: Vec<(usize, usize)>,
    /// Unknown index of the E/W/N/S neighbor, `NONE` when it is outside.
    pub nbr: Vec<[u32; 4]>,
    /// Fraction of the grid step to the boundary in each direction (1 for
    /// inside neighbors).
    pub theta: Vec<[f64; 4]>,
    /// Distance to the boundary per unknown.
    pub delta: Vec<f64>,
    /// Exact area of the shape.
    pub area: f64,
    pub convex: bool,
    pub coarse: Option<Box<DomainMask>>,
}

/// Minimum grid nodes per direction on the coarsest multigrid level.
const COARSEST_NODES: usize = 9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MaskHeader {
    pub nx: usize,
    pub ny: usize,
    pub h: f64,
    pub x0: f64,
    pub y0: f64,
}

impl DomainMask {
    /// Builds the mask with grid spacing `h`, padded and aligned so that
    /// every coarser level of the multigrid hierarchy shares the fine grid
    /// origin.
    pub fn new(shape: Shape, h: f64) -> Result<Self> {
        shape.validate()?;
        if !(h > 0.0) {
            return Err(LabError::Argument(format!("grid spacing must be positive, got {h}")));
        }
        let (xmin, ymin, xmax, ymax) = shape.bbox();
        let x0 = ((xmin / h).floor() - 2.0) * h;
        let y0 = ((ymin / h).floor() - 2.0) * h;
        let need_x = ((xmax - x0) / h).ceil() as usize + 3;
        let need_y = ((ymax - y0) / h).ceil() as usize + 3;
        let mut levels = 0;
        while (need_x.min(need_y) >> (levels + 1)) >= COARSEST_NODES {
            levels += 1;
        }
        let q = 1usize << levels;
        let nx = q * (need_x - 1).div_ceil(q) + 1;
        let ny = q * (need_y - 1).div_ceil(q) + 1;
        Self::build(shape, h, x0, y0, nx, ny, levels)
    }

    fn build(shape: Shape, h: f64, x0: f64, y0: f64, nx: usize, ny: usize, levels: usize) -> Result<Self> {
        let exec = Exec::default();
        let mut index = vec![NONE; nx * ny];
        let mut nodes = Vec::new();
        for j in 0..ny {
            for i in 0..nx {
                let (x, y) = (x0 + i as f64 * h, y0 + j as f64 * h);
                if shape.level(x, y) < -1e-12 {
                    index[j * nx + i] = nodes.len() as u32;
                    nodes.push((i, j));
                }
            }
        }
        if nodes.is_empty() {
            return Err(LabError::Argument("grid too coarse: no interior nodes".into()));
        }
        let geo: Vec<([u32; 4], [f64; 4])> = par::map(exec, &nodes, |&(i, j)| {
            let (x, y) = (x0 + i as f64 * h, y0 + j as f64 * h);
            let mut nb = [NONE; 4];
            let mut th = [1.0; 4];
            for (d, &(di, dj)) in DIRS.iter().enumerate() {
                let (ii, jj) = (i as i64 + di, j as i64 + dj);
                let k = if ii >= 0 && jj >= 0 && (ii as usize) < nx && (jj as usize) < ny {
                    index[jj as usize * nx + ii as usize]
                } else {
                    NONE
                };
                nb[d] = k;
                if k == NONE {
                    th[d] = shape.crossing_fraction(x, y, di as f64 * h, dj as f64 * h).max(THETA_MIN);
                }
            }
            (nb, th)
        });
        let delta = par::map(exec, &nodes, |&(i, j)| shape.boundary_distance(x0 + i as f64 * h, y0 + j as f64 * h));
        let coarse = if levels > 0 {
            let c = Self::build(shape.clone(), 2.0 * h, x0, y0, (nx - 1) / 2 + 1, (ny - 1) / 2 + 1, levels - 1);
            c.ok().map(Box::new)
        } else {
            None
        };
        Ok(DomainMask {
            area: shape.area(),
            convex: shape.is_convex(),
            nbr: geo.iter().map(|g| g.0).collect(),
            theta: geo.iter().map(|g| g.1).collect(),
            shape,
            h,
            x0,
            y0,
            nx,
            ny,
            index,
            nodes,
            delta,
            coarse,
        })
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn xy(&self, k: usize) -> (f64, f64) {
        let (i, j) = self.nodes[k];
        (self.x0 + i as f64 * self.h, self.y0 + j as f64 * self.h)
    }

    pub fn node_xy(&self, i: usize, j: usize) -> (f64, f64) {
        (self.x0 + i as f64 * self.h, self.y0 + j as f64 * self.h)
    }

    /// Unknown index at grid node `(i, j)`, if inside.
    pub fn at(&self, i: i64, j: i64) -> Option<usize> {
        if i < 0 || j < 0 || i as usize >= self.nx || j as usize >= self.ny {
            return None;
        }
        let k = self.index[j as usize * self.nx + i as usize];
        (k != NONE).then_some(k as usize)
    }

    pub fn is_boundary_adjacent(&self, k: usize) -> bool {
        self.nbr[k].contains(&NONE)
    }

    /// Area of the dual cell of each unknown: half a step towards inside
    /// neighbors, the full distance to the boundary crossing otherwise.
    pub fn cell_weights(&self) -> Vec<f64> {
        let h = self.h;
        (0..self.len())
            .map(|k| {
                let ext = |d: usize| if self.nbr[k][d] == NONE { self.theta[k][d] * h } else { 0.5 * h };
                (ext(0) + ext(1)) * (ext(2) + ext(3))
            })
            .collect()
    }

    /// Sum of the dual cell areas.
    pub fn discrete_area(&self) -> f64 {
        self.cell_weights().iter().sum()
    }

    /// Largest boundary distance over the unknowns.
    pub fn inradius(&self) -> f64 {
        self.delta.iter().cloned().fold(0.0, f64::max)
    }

    pub fn same_grid(&self, other: &DomainMask) -> bool {
        self.shape == other.shape && self.h == other.h && self.nx == other.nx && self.ny == other.ny
    }

    pub fn header(&self) -> MaskHeader {
        MaskHeader { nx: self.nx, ny: self.ny, h: self.h, x0: self.x0, y0: self.y0 }
    }

    /// Diagonal of the discrete `-Δ_h` (boundary rows carry `1/(θ h²)`).
    pub fn laplacian_diagonal(&self) -> Vec<f64> {
        let ih2 = 1.0 / (self.h * self.h);
        self.theta.iter().map(|th| th.iter().map(|t| ih2 / t).sum()).collect()
    }

    /// `y = (-Δ_h + diag(c)) x`.
    ///
    /// Symmetric 5-point operator: inside neighbors couple with `-1/h²`; a
    /// boundary crossing at fraction `θ` adds `1/(θ h²)` to the diagonal with
    /// the Dirichlet value 0.
    pub fn apply(&self, exec: Exec, c: Option<&[f64]>, x: &[f64], y: &mut [f64]) {
        let ih2 = 1.0 / (self.h * self.h);
        par::fill(exec, y, |k| {
            let mut v = 0.0;
            let nb = &self.nbr[k];
            let th = &self.theta[k];
            for d in 0..4 {
                if nb[d] == NONE {
                    v += ih2 / th[d] * x[k];
                } else {
                    v += ih2 * (x[k] - x[nb[d] as usize]);
                }
            }
            if let Some(c) = c {
                v += c[k] * x[k];
            }
            v
        });
    }

    /// Coarse unknown at the same physical location as fine unknown `k`, if
    /// the fine node has even grid coordinates.
    #[cfg(test)]
    pub(crate) fn coarse_twin(&self, coarse: &DomainMask, k: usize) -> Option<usize> {
        let (i, j) = self.nodes[k];
        if i % 2 == 0 && j % 2 == 0 {
            coarse.at((i / 2) as i64, (j / 2) as i64)
        } else {
            None
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn area_converges_under_refinement() {
        for shape in [Shape::unit_disk(), Shape::unit_square(), Shape::Ellipse { cx: 0.0, cy: 0.0, a: 1.5, b: 0.75 }] {
            let a1 = DomainMask::new(shape.clone(), 1.0 / 64.0).unwrap().discrete_area();
            let a2 = DomainMask::new(shape.clone(), 1.0 / 128.0).unwrap().discrete_area();
            assert!((a1 - a2).abs() / a2 < 0.005, "{}: {a1} vs {a2}", shape.name());
            assert!((a2 - shape.area()).abs() / shape.area() < 0.005);
        }
    }

    #[test]
    fn boundary_geometry() {
        let m = DomainMask::new(Shape::unit_disk(), 1.0 / 32.0).unwrap();
        assert!(m.delta.iter().all(|&d| d >= 0.0));
        assert!((m.inradius() - 1.0).abs() < 1e-12);
        for k in 0..m.len() {
            for d in 0..4 {
                let t = m.theta[k][d];
                assert!(t > 0.0 && t <= 1.0);
                if m.nbr[k][d] == NONE {
                    let (x, y) = m.xy(k);
                    let (dx, dy) = DIRS[d];
                    let (bx, by) = (x + t * m.h * dx as f64, y + t * m.h * dy as f64);
                    assert!((bx.hypot(by) - 1.0).abs() < 1e-9);
                }
            }
        }
        assert!((m.area - PI).abs() < 1e-15);
        // square boundary sits on grid lines
        let s = DomainMask::new(Shape::unit_square(), 1.0 / 16.0).unwrap();
        assert_eq!(s.len(), 15 * 15);
        assert!(s.theta.iter().flatten().all(|&t| (t - 1.0).abs() < 1e-12));
    }

    #[test]
    fn operator_is_symmetric() {
        let m = DomainMask::new(Shape::Ellipse { cx: 0.1, cy: 0.0, a: 1.0, b: 0.6 }, 1.0 / 16.0).unwrap();
        let n = m.len();
        let c: Vec<f64> = (0..n).map(|k| (k as f64).sin()).collect();
        let x: Vec<f64> = (0..n).map(|k| ((k * 7) as f64).cos()).collect();
        let z: Vec<f64> = (0..n).map(|k| ((k * 3) as f64).sin()).collect();
        let mut ax = vec![0.0; n];
        let mut az = vec![0.0; n];
        m.apply(Exec::Sequential, Some(&c), &x, &mut ax);
        m.apply(Exec::Sequential, Some(&c), &z, &mut az);
        let zax: f64 = z.iter().zip(&ax).map(|(a, b)| a * b).sum();
        let xaz: f64 = x.iter().zip(&az).map(|(a, b)| a * b).sum();
        assert!((zax - xaz).abs() < 1e-9 * zax.abs().max(1.0));
    }

    #[test]
    fn hierarchy_shares_nodes() {
        let m = DomainMask::new(Shape::unit_disk(), 1.0 / 64.0).unwrap();
        let c = m.coarse.as_ref().unwrap();
        assert_eq!(c.h, 2.0 * m.h);
        assert_eq!((c.x0, c.y0), (m.x0, m.y0));
        for k in 0..m.len() {
            if let Some(kc) = m.coarse_twin(c, k) {
                assert_eq!(m.xy(k), c.xy(kc));
            }
        }
    }
}
