use super::contour::{extract_level, LevelCurve};
use super::profile::LevelProfile;
use super::quadrature::s_integral;
use crate::error::{LabError, Result};
use crate::par::{self, Exec};
use crate::planar::ScalarField2D;

/// Regularity cutoff relative to `max|∇u|`.
pub const EPS_REG: f64 = 0.05;
/// Level sampling margin relative to `max u`.
pub const EPS_S: f64 = 0.01;

/// Volume integral of a per-grid-node integrand `w` over `{lo < u < hi}`:
/// every cell is split into two triangles on which `u` and `w` are linear,
/// each triangle is clipped exactly by the two level lines, and the clipped
/// polygon contributes `area · w(centroid)`.
pub fn band_integral(u: &ScalarField2D, lo: f64, hi: f64, w: &(dyn Fn(usize) -> f64 + Sync), exec: Exec) -> f64 {
    let m = &*u.mask;
    let (nx, ny, h) = (m.nx, m.ny, m.h);
    let v = u.extended();
    let rows: Vec<usize> = (0..ny - 1).collect();
    let parts = par::map(exec, &rows, |&j| {
        let mut acc = 0.0;
        for i in 0..nx - 1 {
            let g = [j * nx + i, j * nx + i + 1, (j + 1) * nx + i + 1, (j + 1) * nx + i];
            let vals = [v[g[0]], v[g[1]], v[g[2]], v[g[3]]];
            let vmin = vals.iter().cloned().fold(f64::INFINITY, f64::min);
            let vmax = vals.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            if vmax <= lo || vmin >= hi {
                continue;
            }
            let local = [[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]];
            for tri in [[0usize, 1, 2], [0, 2, 3]] {
                let poly: Vec<([f64; 2], f64, f64)> = tri.iter().map(|&c| (local[c], vals[c], w(g[c]))).collect();
                let poly = clip(&poly, lo, true);
                let poly = clip(&poly, hi, false);
                acc += polygon_integral(&poly) * h * h;
            }
        }
        acc
    });
    parts.iter().sum()
}

/// Keeps the part of a polygon with `u > level` (`above`) or `u < level`.
/// Vertices carry `(position, u, w)`, all linear along edges.
fn clip(poly: &[([f64; 2], f64, f64)], level: f64, above: bool) -> Vec<([f64; 2], f64, f64)> {
    if !level.is_finite() || poly.is_empty() {
        return poly.to_vec();
    }
    let keep = |u: f64| if above { u > level } else { u < level };
    let mut out = Vec::with_capacity(poly.len() + 2);
    for k in 0..poly.len() {
        let a = poly[k];
        let b = poly[(k + 1) % poly.len()];
        if keep(a.1) {
            out.push(a);
        }
        if keep(a.1) != keep(b.1) {
            let t = (level - a.1) / (b.1 - a.1);
            out.push(([a.0[0] + t * (b.0[0] - a.0[0]), a.0[1] + t * (b.0[1] - a.0[1])], level, a.2 + t * (b.2 - a.2)));
        }
    }
    out
}

/// Exact integral of a linear function over a convex polygon (fan of
/// triangles, each contributing area times the mean vertex value).
fn polygon_integral(poly: &[([f64; 2], f64, f64)]) -> f64 {
    if poly.len() < 3 {
        return 0.0;
    }
    let p0 = poly[0];
    let mut acc = 0.0;
    for k in 1..poly.len() - 1 {
        let (a, b) = (poly[k], poly[k + 1]);
        let area = 0.5 * ((a.0[0] - p0.0[0]) * (b.0[1] - p0.0[1]) - (b.0[0] - p0.0[0]) * (a.0[1] - p0.0[1])).abs();
        acc += area * (p0.2 + a.2 + b.2) / 3.0;
    }
    acc
}

/// Gradient norm on the full grid (ghost nodes included).
fn grid_grad(u: &ScalarField2D) -> Vec<f64> {
    let m = &*u.mask;
    let mut out = vec![0.0; m.nx * m.ny];
    for j in 0..m.ny {
        for i in 0..m.nx {
            let (x, y) = m.node_xy(i, j);
            if let Some(jet) = u.jet(x, y) {
                out[j * m.nx + i] = jet[1].hypot(jet[2]);
            }
        }
    }
    out
}

/// `∫_{lo<u<hi} |∇u|^p dx`.
pub fn grad_power_integral(u: &ScalarField2D, lo: f64, hi: f64, p: i32) -> f64 {
    let g = grid_grad(u);
    band_integral(u, lo, hi, &|k| g[k].powi(p), Exec::default())
}

/// `V(s) = |{u > s}|`.
pub fn superlevel_volume(u: &ScalarField2D, s: f64) -> f64 {
    band_integral(u, s, f64::INFINITY, &|_| 1.0, Exec::default())
}

/// `B_t = t⁻² ∫_{u<t} |∇u|⁴ dx`.
pub fn sublevel_energy(u: &ScalarField2D, t: f64) -> Result<f64> {
    let top = u.max();
    if !(t > 0.0 && t <= top) {
        return Err(LabError::Range { value: t, range: format!("(0, {top}]") });
    }
    Ok(grad_power_integral(u, 0.0, t, 4) / (t * t))
}

/// Profile of one extracted level, with regularity judged against
/// `eps_reg`.
pub fn profile_of(u: &ScalarField2D, curve: &LevelCurve, eps_reg: f64) -> LevelProfile {
    let h2 = curve.line_integral(|c, i| c.grad[i].powi(3));
    let h1 = curve.line_integral(|c, i| 4.0 * c.tangential[i].powi(2) + c.curvature[i].powi(2) * c.grad[i]);
    let min_grad = curve.min_grad();
    LevelProfile {
        s: curve.s,
        length: curve.length(),
        h1,
        h2,
        volume: superlevel_volume(u, curve.s),
        min_grad,
        regular: min_grad > eps_reg && h1.is_finite(),
        inv_grad: curve.line_integral(|c, i| 1.0 / c.grad[i]),
        abs_curvature: curve.line_integral(|c, i| c.curvature[i].abs()),
    }
}

/// Level quantities at `s` with the default regularity cutoff.
pub fn level_quantities(u: &ScalarField2D, s: f64) -> Result<LevelProfile> {
    let curve = extract_level(u, s)?;
    Ok(profile_of(u, &curve, EPS_REG * u.max_grad()))
}

/// Profiles at `n_levels` values spread uniformly over `(ε_s, T - ε_s)`.
#[derive(Debug, Clone)]
pub struct ProfileFamily {
    pub profiles: Vec<LevelProfile>,
    pub top: f64,
    pub eps_reg: f64,
}

impl ProfileFamily {
    pub fn regular(&self) -> Vec<LevelProfile> {
        self.profiles.iter().filter(|p| p.regular).cloned().collect()
    }

    pub fn excluded_fraction(&self) -> f64 {
        let bad = self.profiles.iter().filter(|p| !p.regular).count();
        bad as f64 / self.profiles.len().max(1) as f64
    }
}

pub fn level_grid(top: f64, n_levels: usize) -> Vec<f64> {
    let eps = EPS_S * top;
    (0..n_levels).map(|i| eps + (top - 2.0 * eps) * i as f64 / (n_levels - 1) as f64).collect()
}

pub fn profile_family(u: &ScalarField2D, n_levels: usize, exec: Exec) -> Result<ProfileFamily> {
    if n_levels < 2 {
        return Err(LabError::Argument(format!("need at least 2 levels, got {n_levels}")));
    }
    let top = u.max();
    let eps_reg = EPS_REG * u.max_grad();
    let _ = u.extended();
    let levels = level_grid(top, n_levels);
    let profiles: Result<Vec<LevelProfile>> = par::map(exec, &levels, |&s| {
        let curve = extract_level(u, s)?;
        Ok(profile_of(u, &curve, eps_reg))
    })
    .into_iter()
    .collect();
    Ok(ProfileFamily { profiles: profiles?, top, eps_reg })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CoareaCheck {
    pub lhs: f64,
    pub rhs: f64,
    pub gap: f64,
}

/// `∫₀^T h₂ ds` over regular levels against `∫_Ω |∇u|⁴ dx`.
pub fn coarea_check(u: &ScalarField2D, n_levels: usize) -> Result<CoareaCheck> {
    if n_levels < 16 {
        return Err(LabError::Argument(format!("need at least 16 levels, got {n_levels}")));
    }
    let fam = profile_family(u, n_levels, Exec::default())?;
    coarea_from_profiles(&fam.profiles, fam.top, grad_power_integral(u, 0.0, f64::INFINITY, 4))
}

/// Coarea comparison from precomputed profiles and volume integral.
pub fn coarea_from_profiles(profiles: &[LevelProfile], top: f64, rhs: f64) -> Result<CoareaCheck> {
    let reg: Vec<&LevelProfile> = profiles.iter().filter(|p| p.regular).collect();
    if reg.len() < 4 {
        return Err(LabError::InsufficientData(format!("{} regular levels, need 4", reg.len())));
    }
    let s: Vec<f64> = reg.iter().map(|p| p.s).collect();
    let f: Vec<f64> = reg.iter().map(|p| p.h2).collect();
    let lhs = s_integral(&s, &f, 0.0, top, true);
    Ok(CoareaCheck { lhs, rhs, gap: (lhs - rhs).abs() / rhs })
}
