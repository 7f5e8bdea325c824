use crate::error::{LabError, Result};
use crate::levelgeom::{self, level_grid, ProfileFamily};
use crate::nonlinearity::Nonlinearity;
use crate::par::Exec;
use crate::planar::{quadratic_form, ScalarField2D};
use crate::radial::special::ball_volume;
use crate::radial::{radial_profiles, RadialSolution};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Modes per random test function.
const SAMPLE_MODES: usize = 4;

/// A solution the audits run on: a planar grid field or a radial profile
/// on the unit ball.
#[derive(Debug, Clone)]
pub enum Subject {
    Planar { id: String, field: ScalarField2D, lambda: f64 },
    Radial { id: String, sol: RadialSolution },
}

impl Subject {
    pub fn id(&self) -> &str {
        match self {
            Subject::Planar { id, .. } | Subject::Radial { id, .. } => id,
        }
    }

    pub fn dimension(&self) -> usize {
        match self {
            Subject::Planar { .. } => 2,
            Subject::Radial { sol, .. } => sol.n,
        }
    }

    pub fn lambda(&self) -> f64 {
        match self {
            Subject::Planar { lambda, .. } => *lambda,
            Subject::Radial { sol, .. } => sol.lambda,
        }
    }

    /// |Ω|
    pub fn volume(&self) -> f64 {
        match self {
            Subject::Planar { field, .. } => field.mask.area,
            Subject::Radial { sol, .. } => ball_volume(sol.n),
        }
    }

    pub fn top(&self) -> f64 {
        match self {
            Subject::Planar { field, .. } => field.max(),
            Subject::Radial { sol, .. } => sol.center_value(),
        }
    }

    pub fn convex(&self) -> bool {
        match self {
            Subject::Planar { field, .. } => field.mask.convex,
            Subject::Radial { .. } => true,
        }
    }

    pub fn inradius(&self) -> f64 {
        match self {
            Subject::Planar { field, .. } => field.mask.inradius(),
            Subject::Radial { .. } => 1.0,
        }
    }

    /// `∫_{u<t} |∇u|⁴ dx`
    pub fn sublevel_grad4(&self, t: f64) -> f64 {
        match self {
            Subject::Planar { field, .. } => levelgeom::grad_power_integral(field, 0.0, t, 4),
            Subject::Radial { sol, .. } => match sol.level_radius(t.min(sol.center_value())) {
                Ok(rt) => sol.integrate(rt, 1.0, |_, _, du| du.powi(4)),
                Err(_) => 0.0,
            },
        }
    }

    pub fn l1_norm(&self) -> f64 {
        match self {
            Subject::Planar { field, .. } => field.l1_norm(),
            Subject::Radial { sol, .. } => sol.l1_norm(),
        }
    }

    /// `sup` of `u` over `{dist(x, ∂Ω) < ρ}`. On the grid the nodes in the
    /// strip are complemented by the points where `δ = ρ` is crossed along
    /// grid edges.
    pub fn boundary_sup(&self, rho: f64) -> Result<f64> {
        if !(rho > 0.0 && rho < self.inradius()) {
            return Err(LabError::Argument(format!("ρ = {rho} must lie in (0, inradius = {})", self.inradius())));
        }
        match self {
            Subject::Radial { sol, .. } => Ok(sol.eval(1.0 - rho).0),
            Subject::Planar { field, .. } => {
                let m = &*field.mask;
                let mut best: f64 = 0.0;
                for k in 0..m.len() {
                    if m.delta[k] >= rho {
                        continue;
                    }
                    best = best.max(field.values[k]);
                    for &q in &m.nbr[k] {
                        if q == crate::planar::domain::NONE {
                            continue;
                        }
                        let q = q as usize;
                        if m.delta[q] >= rho {
                            let w = (rho - m.delta[k]) / (m.delta[q] - m.delta[k]);
                            best = best.max(field.values[k] + w * (field.values[q] - field.values[k]));
                        }
                    }
                }
                Ok(best)
            }
        }
    }

    /// `(min u/δ over δ ≥ h, ∫ λ f(u) δ dx)`; `h` is the grid step (radial:
    /// 1/1024).
    pub fn lower_bound_terms(&self, f: &Nonlinearity, lambda: f64) -> Result<(f64, f64)> {
        match self {
            Subject::Planar { field, .. } => {
                let m = &*field.mask;
                let mut lo = f64::INFINITY;
                for k in 0..m.len() {
                    if m.delta[k] >= m.h {
                        lo = lo.min(field.values[k] / m.delta[k]);
                    }
                }
                let fu: Vec<f64> = field.values.iter().map(|&v| f.eval(v)).collect::<Result<_>>()?;
                let rhs = field.integrate(|k| lambda * fu[k] * m.delta[k]);
                Ok((lo, rhs))
            }
            Subject::Radial { sol, .. } => {
                let steps = 1024;
                let mut lo = f64::INFINITY;
                for i in 0..steps {
                    let r = i as f64 / steps as f64;
                    lo = lo.min(sol.eval(r).0 / (1.0 - r));
                }
                f.eval(sol.center_value())?;
                let rhs = sol.integrate(0.0, 1.0, |r, u, _| lambda * f.eval(u).unwrap_or(f64::NAN) * (1.0 - r));
                Ok((lo, rhs))
            }
        }
    }

    /// Level profiles at `n_levels` values over `(ε_s, T - ε_s)`.
    pub fn profiles(&self, n_levels: usize, exec: Exec) -> Result<ProfileFamily> {
        match self {
            Subject::Planar { field, .. } => levelgeom::profile_family(field, n_levels, exec),
            Subject::Radial { sol, .. } => {
                if n_levels < 2 {
                    return Err(LabError::Argument(format!("need at least 2 levels, got {n_levels}")));
                }
                let top = sol.center_value();
                // Radial level quantities are exact, so every level with
                // u' < 0 is kept; a cutoff relative to max |u'| would drop
                // almost all levels of a near-singular profile.
                let profiles = radial_profiles(sol, &level_grid(top, n_levels), 0.0)?;
                Ok(ProfileFamily { profiles, top, eps_reg: 0.0 })
            }
        }
    }

    /// `(Q_u(ξ), ∫|∇ξ|²)` for `samples` random test functions drawn from a
    /// seeded generator: sums of a few low-frequency cosine modes, vanishing
    /// on the boundary (planar: multiplied by the boundary distance; radial:
    /// `cos((j - 1/2)πr)`).
    pub fn sampled_quadratic_forms(&self, g: &Nonlinearity, samples: usize, seed: u64) -> Result<Vec<(f64, f64)>> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut out = Vec::with_capacity(samples);
        for _ in 0..samples {
            let amp: Vec<f64> = (0..SAMPLE_MODES).map(|_| rng.gen_range(-1.0..1.0)).collect();
            match self {
                Subject::Planar { field, lambda, .. } => {
                    let m = &field.mask;
                    let (wx, wy) = ((m.nx - 1) as f64 * m.h, (m.ny - 1) as f64 * m.h);
                    let modes: Vec<[f64; 4]> = (0..SAMPLE_MODES)
                        .map(|_| {
                            [
                                rng.gen_range(0.0..3.0) * std::f64::consts::PI / wx,
                                rng.gen_range(0.0..std::f64::consts::TAU),
                                rng.gen_range(0.0..3.0) * std::f64::consts::PI / wy,
                                rng.gen_range(0.0..std::f64::consts::TAU),
                            ]
                        })
                        .collect();
                    let mut xi = ScalarField2D::from_fn(m.clone(), |x, y| {
                        amp.iter().zip(&modes).map(|(a, w)| a * (w[0] * x + w[1]).cos() * (w[2] * y + w[3]).cos()).sum()
                    });
                    for (v, d) in xi.values.iter_mut().zip(&m.delta) {
                        *v *= d;
                    }
                    let q = quadratic_form(field, g, *lambda, &xi)?;
                    let e = quadratic_form(field, &Nonlinearity::Constant { c: 0.0 }, 0.0, &xi)?;
                    out.push((q, e));
                }
                Subject::Radial { sol, .. } => {
                    let xi = |r: f64| -> (f64, f64) {
                        amp.iter().enumerate().fold((0.0, 0.0), |(v, d), (j, a)| {
                            let k = (j as f64 + 0.5) * std::f64::consts::PI;
                            (v + a * (k * r).cos(), d - a * k * (k * r).sin())
                        })
                    };
                    g.deriv(sol.center_value())?;
                    let q = sol.integrate(0.0, 1.0, |r, u, _| {
                        let (v, d) = xi(r);
                        d * d - sol.lambda * g.deriv(u).unwrap_or(f64::NAN) * v * v
                    });
                    let e = sol.integrate(0.0, 1.0, |r, _, _| xi(r).1.powi(2));
                    out.push((q, e));
                }
            }
        }
        Ok(out)
    }
}
