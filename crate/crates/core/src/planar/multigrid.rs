//! Geometric V-cycle for `-Δ_h + diag(c)` on a mask hierarchy, used as a CG
//! preconditioner.

use super::domain::DomainMask;
use crate::error::{LabError, Result};
use crate::linalg::{Preconditioner, SymOperator};
use crate::par::{self, Exec};

/// Matrix-free `-Δ_h + diag(c)` on one mask.
pub struct ShiftedLaplacian<'a> {
    pub mask: &'a DomainMask,
    pub c: Option<&'a [f64]>,
    pub exec: Exec,
}

impl SymOperator for ShiftedLaplacian<'_> {
    fn dim(&self) -> usize {
        self.mask.len()
    }

    fn apply(&self, x: &[f64], y: &mut [f64]) {
        self.mask.apply(self.exec, self.c, x, y);
    }

    fn diagonal(&self) -> Vec<f64> {
        let mut d = self.mask.laplacian_diagonal();
        if let Some(c) = self.c {
            d.iter_mut().zip(c).for_each(|(a, b)| *a += b);
        }
        d
    }
}

/// Unknown count up to which the coarsest level is factored densely.
const DENSE_LIMIT: usize = 2000;
const SMOOTH_WEIGHT: f64 = 0.8;
const SMOOTH_SWEEPS: usize = 2;

struct Level<'a> {
    mask: &'a DomainMask,
    c: Vec<f64>,
    inv_diag: Vec<f64>,
}

pub struct Multigrid<'a> {
    levels: Vec<Level<'a>>,
    chol: Option<Vec<f64>>,
    exec: Exec,
}

impl<'a> Multigrid<'a> {
    /// Builds the hierarchy; the shift `c` is injected onto coarser grids.
    /// Fails when a level is not positive definite.
    pub fn new(mask: &'a DomainMask, c: Option<&[f64]>, exec: Exec) -> Result<Self> {
        let mut levels: Vec<Level<'a>> = Vec::new();
        let mut cur = mask;
        let mut cv: Vec<f64> = c.map(|c| c.to_vec()).unwrap_or_else(|| vec![0.0; mask.len()]);
        loop {
            let diag: Vec<f64> = cur.laplacian_diagonal().iter().zip(&cv).map(|(d, c)| d + c).collect();
            if diag.iter().any(|&d| !(d > 0.0)) {
                return Err(LabError::LinearSolve("multigrid level has a non-positive diagonal".into()));
            }
            let inv_diag = diag.iter().map(|d| 1.0 / d).collect();
            let next = match &cur.coarse {
                Some(coarse) if cur.len() > DENSE_LIMIT / 4 && !coarse.is_empty() => Some(coarse.as_ref()),
                _ => None,
            };
            levels.push(Level { mask: cur, c: cv.clone(), inv_diag });
            match next {
                Some(coarse) => {
                    let fine = cur;
                    cv = par::map(exec, &coarse.nodes, |&(i, j)| {
                        fine.at(2 * i as i64, 2 * j as i64).map_or(0.0, |k| cv[k])
                    });
                    cur = coarse;
                }
                None => break,
            }
        }
        let last = levels.last().unwrap();
        let chol = if last.mask.len() <= DENSE_LIMIT {
            Some(
                cholesky(&dense(last.mask, &last.c))
                    .ok_or_else(|| LabError::LinearSolve("coarsest multigrid level is not positive definite".into()))?,
            )
        } else {
            None
        };
        Ok(Multigrid { levels, chol, exec })
    }

    pub fn depth(&self) -> usize {
        self.levels.len()
    }

    fn vcycle(&self, l: usize, b: &[f64], x: &mut [f64]) {
        let lev = &self.levels[l];
        let n = b.len();
        if l + 1 == self.levels.len() {
            match &self.chol {
                Some(chol) => {
                    x.copy_from_slice(b);
                    cholesky_solve(chol, n, x);
                }
                None => {
                    x.iter_mut().for_each(|v| *v = 0.0);
                    for _ in 0..8 * SMOOTH_SWEEPS {
                        self.smooth(lev, b, x);
                    }
                }
            }
            return;
        }
        x.iter_mut().for_each(|v| *v = 0.0);
        for _ in 0..SMOOTH_SWEEPS {
            self.smooth(lev, b, x);
        }
        let mut r = vec![0.0; n];
        lev.mask.apply(self.exec, Some(&lev.c), x, &mut r);
        for i in 0..n {
            r[i] = b[i] - r[i];
        }
        let coarse = self.levels[l + 1].mask;
        let fine = lev.mask;
        // transpose of bilinear prolongation, scaled by 1/4
        let rc = par::map(self.exec, &coarse.nodes, |&(i, j)| {
            let mut s = 0.0;
            for a in -1i64..=1 {
                for b in -1i64..=1 {
                    if let Some(k) = fine.at(2 * i as i64 + a, 2 * j as i64 + b) {
                        let w = if a == 0 { 1.0 } else { 0.5 } * if b == 0 { 1.0 } else { 0.5 };
                        s += w * r[k];
                    }
                }
            }
            0.25 * s
        });
        let mut ec = vec![0.0; rc.len()];
        self.vcycle(l + 1, &rc, &mut ec);
        let corr = par::map(self.exec, &fine.nodes, |&(i, j)| {
            let (i, j) = (i as i64, j as i64);
            let (i0, i1) = (i.div_euclid(2), (i + 1).div_euclid(2));
            let (j0, j1) = (j.div_euclid(2), (j + 1).div_euclid(2));
            let xs: &[i64] = if i0 == i1 { &[i0] } else { &[i0, i1] };
            let ys: &[i64] = if j0 == j1 { &[j0] } else { &[j0, j1] };
            let w = 1.0 / (xs.len() * ys.len()) as f64;
            let mut s = 0.0;
            for &ci in xs {
                for &cj in ys {
                    if let Some(kc) = coarse.at(ci, cj) {
                        s += w * ec[kc];
                    }
                }
            }
            s
        });
        for i in 0..n {
            x[i] += corr[i];
        }
        for _ in 0..SMOOTH_SWEEPS {
            self.smooth(lev, b, x);
        }
    }

    fn smooth(&self, lev: &Level, b: &[f64], x: &mut [f64]) {
        let mut ax = vec![0.0; x.len()];
        lev.mask.apply(self.exec, Some(&lev.c), x, &mut ax);
        for i in 0..x.len() {
            x[i] += SMOOTH_WEIGHT * lev.inv_diag[i] * (b[i] - ax[i]);
        }
    }
}

impl Preconditioner for Multigrid<'_> {
    fn precondition(&self, r: &[f64], z: &mut [f64]) {
        self.vcycle(0, r, z);
    }
}

fn dense(mask: &DomainMask, c: &[f64]) -> Vec<f64> {
    let n = mask.len();
    let mut a = vec![0.0; n * n];
    let diag = mask.laplacian_diagonal();
    let ih2 = 1.0 / (mask.h * mask.h);
    for k in 0..n {
        a[k * n + k] = diag[k] + c[k];
        for &nb in &mask.nbr[k] {
            if nb != super::domain::NONE {
                a[k * n + nb as usize] = -ih2;
            }
        }
    }
    a
}

/// Lower Cholesky factor stored row-major in the full matrix; `None` when
/// the matrix is not positive definite.
fn cholesky(a: &[f64]) -> Option<Vec<f64>> {
    let n = (a.len() as f64).sqrt() as usize;
    let mut l = a.to_vec();
    for j in 0..n {
        let mut d = l[j * n + j];
        for k in 0..j {
            d -= l[j * n + k] * l[j * n + k];
        }
        if !(d > 0.0) {
            return None;
        }
        let d = d.sqrt();
        l[j * n + j] = d;
        for i in j + 1..n {
            let mut s = l[i * n + j];
            for k in 0..j {
                s -= l[i * n + k] * l[j * n + k];
            }
            l[i * n + j] = s / d;
        }
    }
    Some(l)
}

fn cholesky_solve(l: &[f64], n: usize, x: &mut [f64]) {
    for i in 0..n {
        let mut s = x[i];
        for k in 0..i {
            s -= l[i * n + k] * x[k];
        }
        x[i] = s / l[i * n + i];
    }
    for i in (0..n).rev() {
        let mut s = x[i];
        for k in i + 1..n {
            s -= l[k * n + i] * x[k];
        }
        x[i] = s / l[i * n + i];
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{preconditioned_cg, CgOptions};
    use crate::planar::shape::Shape;

    #[test]
    fn vcycle_is_symmetric() {
        let m = DomainMask::new(Shape::Ellipse { cx: 0.0, cy: 0.0, a: 1.0, b: 0.7 }, 1.0 / 64.0).unwrap();
        let mg = Multigrid::new(&m, None, Exec::Sequential).unwrap();
        assert!(mg.depth() >= 2);
        let n = m.len();
        let x: Vec<f64> = (0..n).map(|k| ((k * 7) as f64).cos()).collect();
        let y: Vec<f64> = (0..n).map(|k| ((k * 3) as f64).sin()).collect();
        let (mut mx, mut my) = (vec![0.0; n], vec![0.0; n]);
        mg.precondition(&x, &mut mx);
        mg.precondition(&y, &mut my);
        let a: f64 = y.iter().zip(&mx).map(|(p, q)| p * q).sum();
        let b: f64 = x.iter().zip(&my).map(|(p, q)| p * q).sum();
        assert!((a - b).abs() < 1e-10 * a.abs().max(1e-3), "{a} vs {b}");
    }

    #[test]
    fn preconditioned_solve_is_fast() {
        let m = DomainMask::new(Shape::unit_disk(), 1.0 / 128.0).unwrap();
        let op = ShiftedLaplacian { mask: &m, c: None, exec: Exec::default() };
        let mg = Multigrid::new(&m, None, Exec::default()).unwrap();
        let b = vec![1.0; m.len()];
        let mut x = vec![0.0; m.len()];
        let it = preconditioned_cg(&op, &mg, &b, &mut x, CgOptions::default()).unwrap();
        assert!(it < 60, "{it} iterations");
        let center = m.at(((0.0 - m.x0) / m.h).round() as i64, ((0.0 - m.y0) / m.h).round() as i64).unwrap();
        assert!((x[center] - 0.25).abs() < 1e-4);
    }
}
